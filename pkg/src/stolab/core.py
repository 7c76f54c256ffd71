"""Problem instances, hidden inputs, oracle evaluation and cost accounting.

Items are labelled 1..N throughout the public API, matching the usual
``[N] = {1, ..., N}`` convention.  Arrays used by the simulators are
0-based internally; the conversion happens at the array boundary only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np


class STOError(ValueError):
    """Base class for rejected inputs anywhere in the package."""


class DimensionMismatch(STOError):
    pass


def as_fraction(value) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float.

    Floats go through their shortest repr, so ``0.05`` becomes ``1/20``
    rather than the nearest binary fraction.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, (float, np.floating)):
        return Fraction(repr(float(value)))
    return Fraction(str(value).strip())


@dataclass(frozen=True)
class ProblemInstance:
    """One search-with-two-oracles problem: sizes, oracle costs, error."""

    N: int
    M: int
    c_star: Fraction
    c_s: Fraction
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "c_star", as_fraction(self.c_star))
        object.__setattr__(self, "c_s", as_fraction(self.c_s))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if int(self.N) != self.N or int(self.M) != self.M:
            raise STOError("N and M must be integers")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", int(self.M))
        if not 1 <= self.M <= self.N:
            raise STOError(f"need 1 <= M <= N, got N={self.N}, M={self.M}")
        if not self.c_s > 0:
            raise STOError("c_s must be positive")
        if self.c_star < self.c_s:
            raise STOError("need c_star >= c_s")
        if not 0.0 <= self.epsilon < 1.0:
            raise STOError("epsilon must lie in [0, 1)")

    @property
    def ratio(self) -> Fraction:
        return self.c_star / self.c_s

    def scaled(self, K) -> "ProblemInstance":
        """Same instance with both costs multiplied by K."""
        K = as_fraction(K)
        return ProblemInstance(self.N, self.M, self.c_star * K, self.c_s * K, self.epsilon)


@dataclass(frozen=True)
class OracleAssignment:
    """A concrete hidden input: the set S and (optionally) the marked item."""

    N: int
    S: frozenset
    i_star: int | None = None

    def __post_init__(self):
        S = frozenset(int(i) for i in self.S)
        object.__setattr__(self, "S", S)
        if any(not 1 <= i <= self.N for i in S):
            raise STOError("elements of S must lie in 1..N")
        if self.i_star is not None:
            object.__setattr__(self, "i_star", int(self.i_star))
            if self.i_star not in S:
                raise STOError("marked item must belong to S")

    def check_promise(self, M: int) -> None:
        """Raise unless the marked-item promise |S| = M holds (when marked)."""
        if self.i_star is not None and len(self.S) != M:
            raise STOError(f"marked input needs |S| = M = {M}, got {len(self.S)}")

    @property
    def marked(self) -> bool:
        return self.i_star is not None

    def set_mask(self) -> np.ndarray:
        """Boolean array over 0-based positions, True on S."""
        mask = np.zeros(self.N, dtype=bool)
        if self.S:
            mask[np.fromiter(self.S, dtype=np.int64) - 1] = True
        return mask


class Oracle(enum.Enum):
    STAR = "star"
    SET = "set"


def query(assignment: OracleAssignment, kind: Oracle, i: int) -> int:
    """Evaluate f_* (kind=STAR) or f_S (kind=SET) on item i."""
    if not 1 <= i <= assignment.N:
        raise STOError(f"index {i} outside 1..{assignment.N}")
    if kind is Oracle.STAR:
        return int(assignment.i_star == i)
    return int(i in assignment.S)


def sto_value(assignment: OracleAssignment) -> int:
    return int(assignment.i_star is not None)


def random_instance(N: int, M: int, marked: bool, seed: int, *, set_size: int | None = None) -> OracleAssignment:
    """Uniformly random assignment, deterministic in ``seed``.

    Unmarked inputs default to ``|S| = M``; pass ``set_size=M - 1`` for the
    other no-marked family.
    """
    if not 1 <= M <= N:
        raise STOError(f"need 1 <= M <= N, got N={N}, M={M}")
    rng = np.random.default_rng(seed)
    size = M if (marked or set_size is None) else set_size
    if not 0 <= size <= N:
        raise STOError("set_size out of range")
    S = rng.choice(N, size=size, replace=False) + 1
    i_star = int(rng.choice(S)) if marked else None
    return OracleAssignment(N, frozenset(int(i) for i in S), i_star)


@dataclass(frozen=True)
class CostLedger:
    """Query counts for both oracles, priced exactly."""

    q_star: int = 0
    q_s: int = 0
    c_star: Fraction = field(default=Fraction(1))
    c_s: Fraction = field(default=Fraction(1))

    @classmethod
    def for_instance(cls, instance: ProblemInstance, q_star: int = 0, q_s: int = 0) -> "CostLedger":
        return cls(q_star, q_s, instance.c_star, instance.c_s)

    @property
    def total(self) -> Fraction:
        return self.q_star * self.c_star + self.q_s * self.c_s

    def charge(self, kind: Oracle, count: int = 1) -> "CostLedger":
        if kind is Oracle.STAR:
            return CostLedger(self.q_star + count, self.q_s, self.c_star, self.c_s)
        return CostLedger(self.q_star, self.q_s + count, self.c_star, self.c_s)
