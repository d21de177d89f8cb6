"""Noncontextual hidden-variable model for the four observables.

A hidden state fixes a value +1 or -1 for each of Z1, X1, Z2, X2
regardless of what is measured alongside.  Products of observables take
the product of the predefined values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._sampling import categorical
from .hilbert import ATOL


@dataclass(frozen=True, order=True)
class ValueAssignment:
    vZ1: int
    vX1: int
    vZ2: int
    vX2: int

    def __post_init__(self):
        for name in ("vZ1", "vX1", "vZ2", "vX2"):
            if getattr(self, name) not in (1, -1):
                raise ValueError(f"{name} must be +1 or -1, got {getattr(self, name)!r}")

    @property
    def z1z2(self) -> int:
        return self.vZ1 * self.vZ2

    @property
    def x1x2(self) -> int:
        return self.vX1 * self.vX2

    @property
    def z1x2(self) -> int:
        return self.vZ1 * self.vX2

    @property
    def x1z2(self) -> int:
        return self.vX1 * self.vZ2

    def label(self) -> str:
        return "(" + ",".join(f"{v:+d}" for v in (self.vZ1, self.vX1, self.vZ2, self.vX2)) + ")"


def enumerate_assignments() -> list[ValueAssignment]:
    """All 16 assignments, ordered with +1 before -1 and vZ1 slowest."""
    return [ValueAssignment(*vals) for vals in itertools.product((1, -1), repeat=4)]


ASSIGNMENTS = tuple(enumerate_assignments())


def c_value(a: ValueAssignment) -> int:
    return 1 + a.vZ1 * a.vZ2 + a.vX1 * a.vX2 - a.vZ1 * a.vX2 * a.vX1 * a.vZ2


def check_constraints(a: ValueAssignment) -> tuple[bool, bool, bool]:
    """Whether ``a`` satisfies Z1Z2 = +1, X1X2 = +1 and Z1X2 = -X1Z2."""
    return (a.z1z2 == 1, a.x1x2 == 1, a.z1x2 == -a.x1z2)


@dataclass(frozen=True)
class ContradictionProof:
    satisfying: tuple[ValueAssignment, ...]
    satisfying_2a_2b: tuple[ValueAssignment, ...]
    satisfying_2c: tuple[ValueAssignment, ...]
    lhs_product: int
    rhs_product: int

    def explain(self) -> str:
        return (
            "Write the constraints as v(Z1)v(Z2) = +1, v(X1)v(X2) = +1, v(Z1)v(X2)v(X1)v(Z2) = -1. "
            "Every value appears exactly twice on the left, so the left sides multiply to "
            f"{self.lhs_product:+d}, while the right sides multiply to {self.rhs_product:+d}. "
            f"Exhaustive check: {len(self.satisfying)} of 16 assignments satisfy all three."
        )


def contradiction_proof() -> ContradictionProof:
    flags = [(a, check_constraints(a)) for a in ASSIGNMENTS]
    sat = tuple(a for a, f in flags if all(f))
    ab = tuple(a for a, f in flags if f[0] and f[1])
    c = tuple(a for a, f in flags if f[2])
    lhs = {a.z1z2 * a.x1x2 * a.z1x2 * a.x1z2 for a in ASSIGNMENTS}
    assert len(lhs) == 1
    return ContradictionProof(sat, ab, c, lhs.pop(), (+1) * (+1) * (-1))


def assignment_to_detector(a: ValueAssignment) -> str:
    """Detector an NCHV photon with values ``a`` must reach.

    Z1X2 = -1 sends it to the S1 group (D1-D4), +1 to S2 (D5-D8); X1 picks
    the u' (+1) or d' (-1) splitter output and Z2 the H (+1) or V (-1)
    polarizer output.
    """
    base = 0 if a.z1x2 == -1 else 4
    base += 0 if a.vX1 == 1 else 2
    base += 0 if a.vZ2 == 1 else 1
    return f"D{base + 1}"


def assignment_to_context_b(a: ValueAssignment) -> tuple[int, int]:
    return (a.z1z2, a.x1x2)


@dataclass(frozen=True, eq=False)
class AssignmentDistribution:
    """Weights over :data:`ASSIGNMENTS` (same order)."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (16,):
            raise ValueError("need 16 weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > ATOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform_over(cls, assignments) -> "AssignmentDistribution":
        chosen = set(assignments)
        if not chosen:
            raise ValueError("empty support")
        return cls(np.array([1.0 / len(chosen) if a in chosen else 0.0 for a in ASSIGNMENTS]))

    @classmethod
    def constrained(cls) -> "AssignmentDistribution":
        """Uniform over the four assignments with v(Z1Z2) = v(X1X2) = +1."""
        return cls.uniform_over(a for a in ASSIGNMENTS if a.z1z2 == 1 and a.x1x2 == 1)

    @classmethod
    def uniform(cls) -> "AssignmentDistribution":
        return cls(np.full(16, 1.0 / 16))

    @classmethod
    def point(cls, a: ValueAssignment) -> "AssignmentDistribution":
        return cls.uniform_over([a])

    def support(self) -> list[ValueAssignment]:
        return [a for a, w in zip(ASSIGNMENTS, self.weights) if w > 0]


def sample_assignment(dist: AssignmentDistribution, rng: np.random.Generator) -> ValueAssignment:
    return ASSIGNMENTS[sample_indices(dist, rng.random(1))[0]]


def sample_indices(dist: AssignmentDistribution, u: np.ndarray) -> np.ndarray:
    """Assignment indices drawn from uniforms ``u`` in [0, 1)."""
    return categorical(dist.weights, u)
