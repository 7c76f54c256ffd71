"""Exact N-dimensional simulation of Grover-like schedules.

Only three unitaries exist here: the diffusion ``G = I - 2|N><N|`` and the
two phase oracles ``O_S`` and ``O_*``.  All three are real involutions, so
the state is never renormalised; norm drift is a bug signal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import CostLedger, DimensionMismatch, OracleAssignment, ProblemInstance, STOError, as_fraction


class Primitive(enum.Enum):
    DIFFUSION = "G"
    ORACLE_S = "OS"
    ORACLE_STAR = "O*"

    @classmethod
    def from_mnemonic(cls, text: str) -> "Primitive":
        for p in cls:
            if p.value == text:
                return p
        raise STOError(f"unknown primitive mnemonic {text!r}")


G = Primitive.DIFFUSION
OS = Primitive.ORACLE_S
OSTAR = Primitive.ORACLE_STAR


@dataclass(frozen=True)
class Schedule:
    """Flat left-to-right sequence of primitives."""

    steps: tuple = ()

    def __post_init__(self):
        steps = tuple(self.steps)
        if any(not isinstance(s, Primitive) for s in steps):
            raise STOError("schedules may only contain Primitive values")
        object.__setattr__(self, "steps", steps)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __add__(self, other: "Schedule") -> "Schedule":
        return Schedule(self.steps + tuple(other))

    def __mul__(self, times: int) -> "Schedule":
        return Schedule(self.steps * times)

    def reversed(self) -> "Schedule":
        return Schedule(self.steps[::-1])

    @property
    def q_star(self) -> int:
        return self.steps.count(OSTAR)

    @property
    def q_s(self) -> int:
        return self.steps.count(OS)

    def ledger(self, instance: ProblemInstance) -> CostLedger:
        return CostLedger.for_instance(instance, self.q_star, self.q_s)


def uniform_state(N: int) -> np.ndarray:
    if N < 1:
        raise STOError("N must be at least 1")
    return np.full(N, 1.0 / np.sqrt(N), dtype=np.complex128)



def apply_primitive(state: np.ndarray, op: Primitive, assignment: OracleAssignment, *, _mask=None) -> np.ndarray:
    """Return ``op`` applied to ``state``; the input array is not modified."""
    if len(state) != assignment.N:
        raise DimensionMismatch(f"state has length {len(state)}, assignment N={assignment.N}")
    out = np.array(state, copy=True)
    _apply_inplace(out, op, assignment, _mask if _mask is not None else assignment.set_mask())
    return out


def _apply_inplace(psi: np.ndarray, op: Primitive, assignment: OracleAssignment, mask: np.ndarray) -> None:
    if op is G:
        # I - 2|N><N| acts as psi - 2*mean(psi)
        psi -= 2.0 * psi.mean()
    elif op is OS:
        psi[mask] *= -1.0
    elif op is OSTAR:
        if assignment.i_star is not None:
            psi[assignment.i_star - 1] *= -1.0
    else:
        raise STOError(f"unknown primitive {op!r}")


def run_schedule(instance: ProblemInstance, assignment: OracleAssignment, schedule: Iterable[Primitive]):
    """Apply ``schedule`` to the uniform state; return (state, ledger)."""
    if instance.N != assignment.N:
        raise DimensionMismatch(f"instance N={instance.N} but assignment N={assignment.N}")
    psi = uniform_state(instance.N)
    mask = assignment.set_mask()
    q_star = q_s = 0
    for op in schedule:
        _apply_inplace(psi, op, assignment, mask)
        if op is OSTAR:
            q_star += 1
        elif op is OS:
            q_s += 1
    return psi, CostLedger.for_instance(instance, q_star, q_s)


def success_probability(state: np.ndarray, assignment: OracleAssignment) -> float:
    """Probability that a standard-basis measurement returns the marked item."""
    if assignment.i_star is None:
        raise STOError("success probability is undefined without a marked item")
    if len(state) != assignment.N:
        raise DimensionMismatch("state length does not match assignment")
    return float(abs(state[assignment.i_star - 1]) ** 2)


# --- line-based plan format -------------------------------------------------
#
#   N M c_star c_s epsilon
#   G | OS | O*      (one per line)


def format_schedule(instance: ProblemInstance, schedule: Sequence[Primitive]) -> str:
    head = f"{instance.N} {instance.M} {instance.c_star} {instance.c_s} {instance.epsilon!r}"
    return "\n".join([head, *(p.value for p in schedule)]) + "\n"


def parse_schedule(text: str):
    """Inverse of :func:`format_schedule`; returns (instance, schedule)."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise STOError("empty plan text")
    fields = lines[0].split()
    if len(fields) != 5:
        raise STOError("plan header must be 'N M c_star c_s epsilon'")
    N, M = int(fields[0]), int(fields[1])
    instance = ProblemInstance(N, M, as_fraction(fields[2]), as_fraction(fields[3]), float(fields[4]))
    schedule = Schedule(Primitive.from_mnemonic(ln) for ln in lines[1:])
    return instance, schedule


