"""Amplitude-amplification arithmetic and schedule compilers.

Every plan is compiled to a flat list of the three Grover-like primitives.
Reflection about a prepared state ``B|N>`` is realised as ``B G B^-1``; as
each primitive is its own inverse, ``B^-1`` is just ``B`` reversed.  One
amplification iterate is ``[O_*] + B_rev + [G] + B`` (mark first, then
reflect), which makes the N=4 single-iteration Grover exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from scipy.optimize import bisect

from .core import ProblemInstance, STOError, as_fraction
from .statevec import OS, OSTAR, G, Schedule, format_schedule


class OvershootError(STOError):
    """Inner rotation pushed past the first crossing of pi/2."""


# Ceilings of arcsin ratios that are integers in exact arithmetic (e.g.
# (pi/2 - pi/6)/(pi/3) = 1) can land a few ulps above the integer.
_CEIL_SNAP = 1e-9


def snapped_ceil(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _CEIL_SNAP:
        return int(r)
    return math.ceil(x)


def aa_iterations(p: float, alpha: float) -> int:
    """Iterations needed to lift overlap ``p`` to success ``1 - alpha``."""
    if not 0.0 < p <= 1.0 + 1e-15:
        raise STOError("overlap p must lie in (0, 1]")
    if not 0.0 <= alpha < 1.0:
        raise STOError("alpha must lie in [0, 1)")
    a = math.asin(min(p, 1.0))
    tau = snapped_ceil((math.asin(math.sqrt(1.0 - alpha)) - a) / (2.0 * a))
    return max(tau, 0)


def aa_cost(tau: int, c_T, c_A) -> Fraction:
    if tau < 0:
        raise STOError("tau must be non-negative")
    return tau * (as_fraction(c_T) + 2 * as_fraction(c_A))


def amplified_success(p: float, tau: int) -> float:
    """sin^2((2 tau + 1) arcsin p): exact success of plain amplification."""
    return math.sin((2 * tau + 1) * math.asin(min(p, 1.0))) ** 2


def amplify(prepare: Schedule, tau: int) -> Schedule:
    """``prepare`` followed by ``tau`` marked-reflection iterates."""
    iterate = Schedule((OSTAR,)) + prepare.reversed() + Schedule((G,)) + prepare
    return prepare + iterate * tau


@dataclass(frozen=True)
class Plan:
    instance: ProblemInstance
    schedule: Schedule
    predicted_q_star: int
    predicted_q_s: int
    predicted_cost: Fraction
    predicted_success: float
    nominal_cost: Fraction
    label: str = ""

    def to_text(self) -> str:
        return format_schedule(self.instance, self.schedule)


@dataclass(frozen=True)
class HybridPlan:
    t_inner: int
    tau_outer: int
    alpha: float
    plan: Plan

    @property
    def cost(self) -> Fraction:
        return self.plan.predicted_cost


def _phi0(instance: ProblemInstance) -> float:
    return math.asin(math.sqrt(instance.M / instance.N))


def inner_limit(instance: ProblemInstance) -> int:
    """Inner rotation count that first reaches |S>: the top of the search window."""
    return aa_iterations(math.sqrt(instance.M / instance.N), 0.0)


def build_alg1(instance: ProblemInstance) -> Plan:
    """Plain Grover search with O_* alone."""
    if instance.N < 2:
        raise STOError("need N >= 2")
    p = 1.0 / math.sqrt(instance.N)
    tau = aa_iterations(p, instance.epsilon)
    schedule = amplify(Schedule(), tau)
    cost = aa_cost(tau, instance.c_star, 0)
    return Plan(instance, schedule, tau, 0, cost, amplified_success(p, tau), cost, "alg1")


def hybrid_outer(instance: ProblemInstance, t_inner: int):
    """(alpha, overlap with |i*>, tau) after ``t_inner`` inner rotations."""
    if t_inner < 0:
        raise STOError("t_inner must be non-negative")
    limit = inner_limit(instance)
    if t_inner > limit:
        raise OvershootError(f"t_inner={t_inner} rotates past |S> (limit {limit})")
    phi0 = _phi0(instance)
    amp_s = math.sin((2 * t_inner + 1) * phi0)
    if amp_s < math.sin(phi0) - 1e-12:
        # small N/M: the last rotation can swing past |S> and lose overlap
        raise OvershootError(f"t_inner={t_inner} leaves less overlap with |S> than the start")
    alpha = max(0.0, 1.0 - amp_s**2)
    p = amp_s / math.sqrt(instance.M)
    tau = aa_iterations(p, instance.epsilon)
    return alpha, p, tau


def hybrid_costs(instance: ProblemInstance, t_inner: int, tau: int):
    """(nominal, total) cost of the hybrid with the given stage counts.

    ``nominal`` is the displayed outer-stage formula tau*(c_* + 2 t c_S);
    ``total`` adds the one-time inner preparation t*c_S, which is what a
    simulation actually spends.
    """
    nominal = aa_cost(tau, instance.c_star, t_inner * instance.c_s)
    return nominal, nominal + t_inner * instance.c_s


def hybrid_cost_formula(instance: ProblemInstance, alpha: float) -> Fraction:
    """Two-ceiling hybrid cost written in terms of the inner residual alpha.

    Both iteration counts are recovered from alpha alone, so this is an
    independent check on :func:`hybrid_costs` (it excludes the one-time
    inner preparation, like the nominal cost).
    """
    amp = math.sqrt(1.0 - alpha)
    phi0 = _phi0(instance)
    tau = aa_iterations(amp / math.sqrt(instance.M), instance.epsilon)
    inner = max(snapped_ceil((math.asin(min(amp, 1.0)) - phi0) / (2.0 * phi0)), 0)
    return tau * (instance.c_star + 2 * instance.c_s * inner)


def build_hybrid(instance: ProblemInstance, t_inner: int) -> HybridPlan:
    alpha, p, tau = hybrid_outer(instance, t_inner)
    inner = Schedule((OS, G)) * t_inner
    schedule = amplify(inner, tau)
    nominal, total = hybrid_costs(instance, t_inner, tau)
    plan = Plan(
        instance,
        schedule,
        predicted_q_star=tau,
        predicted_q_s=t_inner * (2 * tau + 1),
        predicted_cost=total,
        predicted_success=amplified_success(p, tau),
        nominal_cost=nominal,
        label=f"hybrid(t={t_inner})",
    )
    return HybridPlan(t_inner, tau, alpha, plan)


def build_alg2(instance: ProblemInstance) -> Plan:
    """Rotate fully to |S> with O_S, then amplify towards |i*>."""
    if not instance.N > instance.M:
        raise STOError("need N > M")
    hp = build_hybrid(instance, inner_limit(instance))
    return replace(hp.plan, label="alg2")


def alg2_displayed_cost(instance: ProblemInstance) -> Fraction:
    """Two-stage cost with the outer overlap taken as exactly 1/sqrt(M)."""
    t0 = inner_limit(instance)
    tau = aa_iterations(1.0 / math.sqrt(instance.M), instance.epsilon)
    return t0 * instance.c_s + aa_cost(tau, instance.c_star, t0 * instance.c_s)


def alg2_cost_asymptotic(instance: ProblemInstance) -> float:
    """Zeroth-order two-stage cost (2 c_* sqrt(M) + pi c_S sqrt(N)) asin(sqrt(1-eps))/4."""
    a = math.asin(math.sqrt(1.0 - instance.epsilon))
    return a / 4.0 * (2 * float(instance.c_star) * math.sqrt(instance.M) + math.pi * float(instance.c_s) * math.sqrt(instance.N))


def solve_phi_opt(ratio: float, shift: float) -> float:
    """Positive root of tan(phi + shift) = phi + ratio*shift, else 0.

    Solved in the equivalent form phi + shift = atan(phi + ratio*shift),
    whose left-minus-right side is strictly increasing, so the root (when
    it exists) is unique and bisection on [0, pi/2 - shift] is safe.
    """
    if not 0 < shift <= math.pi / 2:
        raise STOError("shift must lie in (0, pi/2]")

    def h(phi):
        return phi + shift - math.atan(phi + ratio * shift)

    lo, hi = 0.0, math.pi / 2 - shift
    if hi <= lo or h(lo) >= 0.0:
        return 0.0
    return bisect(h, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def phi_opt(instance: ProblemInstance, shift: float | None = None) -> float:
    """Optimal inner rotation angle; ``shift`` defaults to sqrt(M/N)."""
    if shift is None:
        shift = math.sqrt(instance.M / instance.N)
    return solve_phi_opt(float(instance.ratio), shift)


def phi_opt_residual(phi: float, ratio: float, shift: float) -> float:
    """|phi + shift - atan(phi + ratio*shift)|, zero at a root."""
    return abs(phi + shift - math.atan(phi + ratio * shift))


def hybrid_cost_asymptotic(instance: ProblemInstance) -> float:
    s = math.sqrt(instance.M / instance.N)
    a = math.asin(math.sqrt(1.0 - instance.epsilon))
    return float(instance.c_s) * math.sqrt(instance.N) * a / 2.0 / math.cos(phi_opt(instance) + s)


def optimize_hybrid(instance: ProblemInstance) -> HybridPlan:
    """Cheapest hybrid over every integer inner count in the window.

    Costs are compared exactly; ties go to the smaller inner count.
    """
    return build_hybrid(instance, optimal_hybrid_cost(instance)[0])


def optimal_hybrid_cost(instance: ProblemInstance) -> tuple[int, Fraction]:
    """Formula-only version of :func:`optimize_hybrid` (no schedule built)."""
    best_t, best_cost = None, None
    for t in range(inner_limit(instance) + 1):
        try:
            _, _, tau = hybrid_outer(instance, t)
        except OvershootError:
            continue
        _, total = hybrid_costs(instance, t, tau)
        if best_cost is None or total < best_cost:
            best_t, best_cost = t, total
    return best_t, best_cost


@dataclass(frozen=True)
class CostEnvelope:
    alg1_cost: Fraction
    alg2_cost: Fraction | None
    hybrid_cost: Fraction
    qcc_big_o: float


def cost_envelope(instance: ProblemInstance) -> CostEnvelope:
    alg1 = build_alg1(instance).predicted_cost
    alg2 = build_alg2(instance).predicted_cost if instance.N > instance.M else None
    _, hybrid = optimal_hybrid_cost(instance)
    big_o = max(float(instance.c_star) * math.sqrt(instance.M), float(instance.c_s) * math.sqrt(instance.N))
    return CostEnvelope(alg1, alg2, hybrid, big_o)
