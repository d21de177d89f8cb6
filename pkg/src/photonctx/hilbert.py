"""Linear algebra on the 4-dimensional path x polarization space.

Amplitudes are stored in the canonical order ``(u.H, u.V, d.H, d.V)``: the
path index is the slow axis, polarization the fast one.  A state or operator
also carries the frame its indices refer to:

* path frame ``"ud"`` (arms before a balanced splitter) or ``"ud'"`` (after);
* polarization frame ``"rect"`` ({H, V}) or ``"diag"`` ({P, M} = {+45, -45}).

Tolerances: exact-algebra checks use ``ATOL`` (1e-12); anything off by more
than ``RAISE_TOL`` (1e-9) is treated as an internal error.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, FrameMismatchError, NormalizationError

ATOL = 1e-12
RAISE_TOL = 1e-9

SQRT1_2 = 1.0 / np.sqrt(2.0)

PATH_FRAMES = ("ud", "ud'")
POL_FRAMES = ("rect", "diag")

# Maps diagonal-frame amplitudes (P, M) to rectilinear ones (H, V) and back.
# |P> = (|H> + |V>)/sqrt2, |M> = (|H> - |V>)/sqrt2; the matrix is its own inverse.
HADAMARD = SQRT1_2 * np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex)

# Balanced splitter acting on path amplitudes: u -> (u' + d')/sqrt2, d -> (u' - d')/sqrt2.
BALANCED_BS = HADAMARD

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class PathBasis(enum.Enum):
    u = 0
    d = 1


class PolBasis(enum.Enum):
    H = ("rect", 0)
    V = ("rect", 1)
    P = ("diag", 0)
    M = ("diag", 1)

    @property
    def frame(self) -> str:
        return self.value[0]

    @property
    def index(self) -> int:
        return self.value[1]


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("amplitudes must be finite")
    arr.setflags(write=False)
    return arr


def _check_frames(path_frame: str, pol_frame: str) -> None:
    if path_frame not in PATH_FRAMES:
        raise ValueError(f"unknown path frame {path_frame!r}")
    if pol_frame not in POL_FRAMES:
        raise ValueError(f"unknown polarization frame {pol_frame!r}")


@dataclass(frozen=True, eq=False)
class PhotonState:
    """A single-photon state over the canonical 4-dim basis."""

    amps: np.ndarray
    path_frame: str = "ud"
    pol_frame: str = "rect"

    def __post_init__(self):
        amps = _frozen(self.amps)
        if amps.shape != (4,):
            raise ValueError(f"expected 4 amplitudes, got shape {amps.shape}")
        _check_frames(self.path_frame, self.pol_frame)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps, path_frame="ud", pol_frame="rect", normalize=False):
        amps = np.asarray(amps, dtype=complex)
        if normalize:
            nrm = np.linalg.norm(amps)
            if nrm == 0:
                raise NormalizationError("cannot normalize the zero vector")
            amps = amps / nrm
        return cls(amps, path_frame, pol_frame)

    @property
    def frame(self) -> tuple[str, str]:
        return (self.path_frame, self.pol_frame)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def is_normalized(self, tol: float = ATOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def inner(self, other: "PhotonState") -> complex:
        """<self|other>; both states must share a frame."""
        if self.frame != other.frame:
            raise FrameMismatchError(f"{self.frame} vs {other.frame}")
        return complex(np.vdot(self.amps, other.amps))

    def as_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to ``[path, pol]``."""
        return self.amps.reshape(2, 2)

    def __repr__(self):
        amps = ", ".join(f"{a:.6g}" for a in self.amps)
        return f"PhotonState([{amps}], frame={self.frame})"


@dataclass(frozen=True, eq=False)
class Operator4:
    """A 4x4 complex matrix acting in a given frame."""

    matrix: np.ndarray
    path_frame: str = "ud"
    pol_frame: str = "rect"

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        _check_frames(self.path_frame, self.pol_frame)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, path_frame="ud", pol_frame="rect"):
        return cls(np.eye(4), path_frame, pol_frame)

    @classmethod
    def kron(cls, path_op, pol_op, path_frame="ud", pol_frame="rect"):
        return cls(np.kron(path_op, pol_op), path_frame, pol_frame)

    @property
    def frame(self) -> tuple[str, str]:
        return (self.path_frame, self.pol_frame)

    @property
    def dagger(self) -> "Operator4":
        return Operator4(self.matrix.conj().T, *self.frame)

    def is_hermitian(self, tol: float = ATOL) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, rtol=0, atol=tol))

    def is_unitary(self, tol: float = ATOL) -> bool:
        return bool(np.allclose(self.matrix.conj().T @ self.matrix, np.eye(4), rtol=0, atol=tol))

    def __matmul__(self, other):
        if isinstance(other, Operator4):
            if other.frame != self.frame:
                raise FrameMismatchError(f"{self.frame} vs {other.frame}")
            return Operator4(self.matrix @ other.matrix, *self.frame)
        if isinstance(other, PhotonState):
            return apply(self, other)
        return NotImplemented

    def __neg__(self):
        return Operator4(-self.matrix, *self.frame)

    def __add__(self, other: "Operator4") -> "Operator4":
        if other.frame != self.frame:
            raise FrameMismatchError(f"{self.frame} vs {other.frame}")
        return Operator4(self.matrix + other.matrix, *self.frame)

    def __sub__(self, other: "Operator4") -> "Operator4":
        return self + (-other)


def tensor(path, pol) -> PhotonState:
    """Kronecker product of a path 2-vector and a polarization 2-vector.

    Both factors must already be normalized; the result is in the
    ``("ud", "rect")`` frame unless the factors are meant otherwise, in which
    case relabel with :func:`dataclasses.replace`.
    """
    path = np.asarray(path, dtype=complex)
    pol = np.asarray(pol, dtype=complex)
    for name, v in (("path", path), ("polarization", pol)):
        if v.shape != (2,):
            raise ValueError(f"{name} factor must have 2 components")
        if abs(np.vdot(v, v).real - 1.0) > ATOL:
            raise NormalizationError(f"{name} factor is not normalized (|v|^2={np.vdot(v, v).real!r})")
    return PhotonState(np.kron(path, pol))


def polarization_basis_change(state: PhotonState, target_frame: str) -> PhotonState:
    """Re-express ``state`` in the other polarization frame."""
    if target_frame not in POL_FRAMES:
        raise ValueError(f"unknown polarization frame {target_frame!r}")
    if target_frame == state.pol_frame:
        raise FrameMismatchError(f"state is already in the {target_frame!r} frame")
    # HADAMARD is real symmetric and involutive, so it converts both ways.
    amps = (state.as_matrix() @ HADAMARD.T).reshape(4)
    return PhotonState(amps, state.path_frame, target_frame)


def path_basis_change(state: PhotonState, target_frame: str) -> PhotonState:
    """Re-express ``state`` in the arm frame before/after a balanced splitter."""
    if target_frame not in PATH_FRAMES:
        raise ValueError(f"unknown path frame {target_frame!r}")
    if target_frame == state.path_frame:
        raise FrameMismatchError(f"state is already in the {target_frame!r} frame")
    amps = (BALANCED_BS @ state.as_matrix()).reshape(4)
    return PhotonState(amps, target_frame, state.pol_frame)


def to_frame(state: PhotonState, path_frame: str, pol_frame: str) -> PhotonState:
    if state.path_frame != path_frame:
        state = path_basis_change(state, path_frame)
    if state.pol_frame != pol_frame:
        state = polarization_basis_change(state, pol_frame)
    return state


def apply(op: Operator4, state: PhotonState) -> PhotonState:
    if op.frame != state.frame:
        raise FrameMismatchError(f"operator frame {op.frame} does not match state frame {state.frame}")
    return PhotonState(op.matrix @ state.amps, *state.frame)


def expectation(op: Operator4, state: PhotonState) -> float:
    """<state|op|state> for a Hermitian ``op``, returned as a real number."""
    if not op.is_hermitian():
        raise ConsistencyError("expectation requires a Hermitian operator")
    if not state.is_normalized():
        raise NormalizationError("expectation requires a normalized state")
    if op.frame != state.frame:
        raise FrameMismatchError(f"operator frame {op.frame} does not match state frame {state.frame}")
    val = complex(np.vdot(state.amps, op.matrix @ state.amps))
    if abs(val.imag) > RAISE_TOL:
        raise ConsistencyError(f"imaginary residue {val.imag:.3e} in a Hermitian expectation")
    return val.real


def same_ray(a: PhotonState, b: PhotonState, tol: float = ATOL) -> bool:
    """True when ``a`` and ``b`` agree up to a global phase."""
    b = to_frame(b, *a.frame)
    return abs(abs(a.inner(b)) - a.norm() * b.norm()) <= tol and abs(a.norm() - b.norm()) <= tol


def random_state(rng: np.random.Generator, path_frame="ud", pol_frame="rect") -> PhotonState:
    """Haar-random normalized state (complex Gaussian, normalized)."""
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    return PhotonState(v / np.linalg.norm(v), path_frame, pol_frame)


# Named single-photon basis states used throughout.
KET_H = np.array([1, 0], dtype=complex)
KET_V = np.array([0, 1], dtype=complex)
KET_P = SQRT1_2 * np.array([1, 1], dtype=complex)
KET_M = SQRT1_2 * np.array([1, -1], dtype=complex)
KET_U = np.array([1, 0], dtype=complex)
KET_D = np.array([0, 1], dtype=complex)


def psi1() -> PhotonState:
    """(|u>|H> + |d>|V>)/sqrt2, the state right after the first polarizing splitter."""
    return PhotonState(SQRT1_2 * np.array([1, 0, 0, 1], dtype=complex))


def polarization(angle: float) -> np.ndarray:
    """Linear polarization at ``angle`` radians from horizontal."""
    return np.array([np.cos(angle), np.sin(angle)], dtype=complex)
