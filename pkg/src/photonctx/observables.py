"""The four two-valued observables, their products, and the two measurement contexts.

All operators live in the canonical ``("ud", "rect")`` frame.  X1 is defined
on the arms *after* a balanced splitter; pulling it back through the
splitter makes it the path-exchange operator, so every observable can be
multiplied and commuted in one frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hilbert import (
    ATOL,
    BALANCED_BS,
    HADAMARD,
    I2,
    PAULI_Z,
    SQRT1_2,
    Operator4,
    PhotonState,
    apply,
    psi1,
    same_ray,
)
from .optics import DETECTORS

NAMES = ("Z1", "X1", "Z2", "X2", "Z1Z2", "X1X2", "Z1X2", "X1Z2", "Z1X2*X1Z2")

# Detector -> (Z1X2, X1Z2, Z1X2*X1Z2), read off the readout of each detector.
DETECTOR_VALUES = {
    "D1": (-1, +1, -1),
    "D2": (-1, -1, +1),
    "D3": (-1, -1, +1),
    "D4": (-1, +1, -1),
    "D5": (+1, +1, +1),
    "D6": (+1, -1, -1),
    "D7": (+1, -1, -1),
    "D8": (+1, +1, +1),
}

# Joint outcomes of the second context, in reporting order.
CONTEXT_B_OUTCOMES = ((+1, +1), (+1, -1), (-1, +1), (-1, -1))


@dataclass(frozen=True, eq=False)
class NamedObservable:
    name: str
    op: Operator4

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix


def _snap(m: np.ndarray) -> np.ndarray:
    """Round a conjugated +-1/0 matrix back onto exact entries."""
    exact = np.round(m.real)
    if not np.allclose(m, exact, rtol=0, atol=ATOL):
        raise AssertionError("basis-change conjugation left a non-integer matrix")
    return exact.astype(complex) + 0.0


def _base(name: str) -> np.ndarray:
    if name == "Z1":
        return np.kron(PAULI_Z, I2)
    if name == "Z2":
        return np.kron(I2, PAULI_Z)
    if name == "X1":
        # |u'><u'| - |d'><d'| expressed on pre-splitter arms
        return np.kron(_snap(BALANCED_BS.conj().T @ PAULI_Z @ BALANCED_BS), I2)
    if name == "X2":
        # |P><P| - |M><M| in the rectilinear frame
        return np.kron(I2, _snap(HADAMARD @ PAULI_Z @ HADAMARD.conj().T))
    raise KeyError(name)


@lru_cache(maxsize=None)
def make_observable(name: str) -> NamedObservable:
    if name not in NAMES:
        raise KeyError(f"unknown observable {name!r}; expected one of {NAMES}")
    if name == "Z1X2*X1Z2":
        m = make_observable("Z1X2").matrix @ make_observable("X1Z2").matrix
    elif len(name) == 4:
        m = _base(name[:2]) @ _base(name[2:])
    else:
        m = _base(name)
    return NamedObservable(name, Operator4(m))


def combination_operator() -> Operator4:
    """C = I + Z1Z2 + X1X2 - Z1X2*X1Z2."""
    return (
        Operator4.identity()
        + make_observable("Z1Z2").op
        + make_observable("X1X2").op
        - make_observable("Z1X2*X1Z2").op
    )


def commutator_norm(a: Operator4, b: Operator4) -> float:
    return float(np.linalg.norm(a.matrix @ b.matrix - b.matrix @ a.matrix))


def anticommutator_norm(a: Operator4, b: Operator4) -> float:
    return float(np.linalg.norm(a.matrix @ b.matrix + b.matrix @ a.matrix))


@dataclass(frozen=True)
class EigenCheck:
    label: str
    residual: float
    passed: bool


def verify_eigenstate_relations(state: PhotonState, tol: float = ATOL) -> list[EigenCheck]:
    """Residual norms of Z1Z2|s> = |s>, X1X2|s> = |s>, Z1X2|s> = -X1Z2|s>."""
    amps = state.amps
    zz = apply(make_observable("Z1Z2").op, state).amps
    xx = apply(make_observable("X1X2").op, state).amps
    zx = apply(make_observable("Z1X2").op, state).amps
    xz = apply(make_observable("X1Z2").op, state).amps
    out = []
    for label, res in (
        ("Z1Z2|s> = |s>", np.linalg.norm(zz - amps)),
        ("X1X2|s> = |s>", np.linalg.norm(xx - amps)),
        ("Z1X2|s> = -X1Z2|s>", np.linalg.norm(zx + xz)),
    ):
        out.append(EigenCheck(label, float(res), bool(res < tol)))
    return out


def detector_values(d: str) -> tuple[int, int, int]:
    """(Z1X2, X1Z2, product) revealed by a click at detector ``d``."""
    try:
        return DETECTOR_VALUES[d]
    except KeyError:
        raise KeyError(f"unknown detector {d!r}") from None


def product_values() -> np.ndarray:
    """Z1X2*X1Z2 value per detector, in D1..D8 order."""
    return np.array([DETECTOR_VALUES[d][2] for d in DETECTORS], dtype=float)


@dataclass(frozen=True, eq=False)
class MeasurementContext:
    name: str
    observables: tuple[str, str]
    outcomes: tuple[tuple[int, int], ...]
    projectors: tuple[np.ndarray, ...]

    def probabilities(self, state: PhotonState) -> np.ndarray:
        v = state.amps
        return np.array([np.vdot(v, p @ v).real for p in self.projectors])

    def probabilities_rho(self, rho: np.ndarray) -> np.ndarray:
        return np.array([np.trace(p @ rho).real for p in self.projectors])


def _joint_projectors(a: str, b: str, outcomes) -> tuple[np.ndarray, ...]:
    ma, mb = make_observable(a).matrix, make_observable(b).matrix
    eye = np.eye(4)
    return tuple(((eye + va * ma) / 2) @ ((eye + vb * mb) / 2) for va, vb in outcomes)


@lru_cache(maxsize=None)
def context(name: str) -> MeasurementContext:
    """``"A"``: joint Z1X2 and X1Z2 (the interferometer).  ``"B"``: joint Z1Z2 and X1X2."""
    if name == "A":
        obs = ("Z1X2", "X1Z2")
    elif name == "B":
        obs = ("Z1Z2", "X1X2")
    else:
        raise KeyError(f"unknown context {name!r}")
    projs = _joint_projectors(*obs, CONTEXT_B_OUTCOMES)
    return MeasurementContext(name, obs, CONTEXT_B_OUTCOMES, projs)


def bell_basis() -> dict[tuple[int, int], PhotonState]:
    """Common eigenvectors of Z1Z2 and X1X2, keyed by (z1z2, x1x2)."""
    s = SQRT1_2
    return {
        (+1, +1): PhotonState([s, 0, 0, s]),
        (+1, -1): PhotonState([s, 0, 0, -s]),
        (-1, +1): PhotonState([0, s, s, 0]),
        (-1, -1): PhotonState([0, s, -s, 0]),
    }


def context_b_measure(state: PhotonState) -> dict[tuple[int, int], float]:
    """Born probabilities of the four (z1z2, x1x2) outcomes."""
    probs = context("B").probabilities(state)
    return dict(zip(CONTEXT_B_OUTCOMES, probs.tolist()))


@dataclass(frozen=True)
class Bounds:
    nchv_max: float
    qm_max: float
    qm_eigenvector: PhotonState
    eigenvector_is_psi1: bool


def observable_bounds() -> Bounds:
    """Largest value of the combination C under each theory."""
    from .nchv import enumerate_assignments, c_value

    nchv_max = max(abs(c_value(a)) for a in enumerate_assignments())
    w, v = np.linalg.eigh(combination_operator().matrix)
    top = PhotonState(v[:, -1])
    return Bounds(float(nchv_max), float(w[-1]), top, same_ray(top, psi1(), tol=1e-10))
