"""Three-dimensional invariant subspace, polar coordinates and progress audits.

Any Grover-like schedule keeps the state in span{|i*>, |S->, |S_perp>}.
We work in the shifted orthonormal frame

    |x> = cos t0 |i*> - sin t0 |S->
    |y> = cos p0 sin t0 |i*> + cos p0 cos t0 |S-> - sin p0 |S_perp>
    |z> = sin p0 sin t0 |i*> + sin p0 cos t0 |S-> + cos p0 |S_perp>  (= |N>)

with t0 = asin(1/sqrt M), p0 = asin(sqrt(M/N)), and polar coordinates
x = sin(theta), y = cos(theta) sin(phi), z = cos(theta) cos(phi).
Primitive actions are computed exactly in this 3D space; the familiar
first-order angle updates are only used as test targets.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import OracleAssignment, ProblemInstance, STOError
from .schedules import solve_phi_opt
from .statevec import OS, OSTAR, G, Primitive


class DegenerateFrame(STOError):
    pass


class NotInSubspace(STOError):
    pass


class UndefinedProgress(STOError):
    pass


@dataclass(frozen=True)
class PolarFrame:
    theta0: float
    phi0: float
    phi_opt: float
    k: float
    N: int
    M: int

    @property
    def basis(self) -> np.ndarray:
        """Rows are |x>, |y>, |z> in (|i*>, |S->, |S_perp>) coordinates."""
        st, ct = math.sin(self.theta0), math.cos(self.theta0)
        sp, cp = math.sin(self.phi0), math.cos(self.phi0)
        return np.array(
            [
                [ct, -st, 0.0],
                [cp * st, cp * ct, -sp],
                [sp * st, sp * ct, cp],
            ]
        )


def frame(instance: ProblemInstance) -> PolarFrame:
    N, M = instance.N, instance.M
    if M < 2 or N <= M:
        raise DegenerateFrame(f"polar frame needs M >= 2 and N > M (N={N}, M={M})")
    theta0 = math.asin(math.sqrt(1.0 / M))
    phi0 = math.asin(math.sqrt(M / N))
    popt = solve_phi_opt(float(instance.ratio), phi0)
    return PolarFrame(theta0, phi0, popt, theta0 * math.cos(popt + phi0), N, M)


@dataclass(frozen=True)
class PolarPoint:
    theta: float
    phi: float

    def xyz(self) -> np.ndarray:
        c = math.cos(self.theta)
        return np.array([math.sin(self.theta), c * math.sin(self.phi), c * math.cos(self.phi)])


def _wrap(phi: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    phi = math.remainder(phi, 2 * math.pi)
    return math.pi if phi == -math.pi else phi


def point_from_xyz(v) -> PolarPoint:
    x, y, z = (float(c) for c in v)
    if x < 0:
        # global phase -1 maps (theta, phi) to (-theta, phi + pi)
        x, y, z = -x, -y, -z
    theta = math.atan2(x, math.hypot(y, z))
    phi = math.atan2(y, z) if (y or z) else 0.0
    return PolarPoint(theta, _wrap(phi))


def _class_amplitudes(state: np.ndarray, assignment: OracleAssignment):
    N = assignment.N
    M = len(assignment.S)
    istar = assignment.i_star - 1
    mask = assignment.set_mask()
    rest = mask.copy()
    rest[istar] = False
    a = state[istar]
    b = state[rest].sum() / math.sqrt(M - 1)
    c = state[~mask].sum() / math.sqrt(N - M)
    resid = np.array(state, dtype=np.complex128, copy=True)
    resid[istar] -= a
    resid[rest] -= b / math.sqrt(M - 1)
    resid[~mask] -= c / math.sqrt(N - M)
    return np.array([a, b, c]), float(np.linalg.norm(resid))


def embed(state: np.ndarray, assignment: OracleAssignment, fr: PolarFrame, *, tol: float = 1e-9) -> PolarPoint:
    """Polar coordinates of an N-dimensional state lying in the 3D subspace."""
    if assignment.i_star is None:
        raise STOError("embedding needs a marked item")
    if assignment.N != fr.N or len(assignment.S) != fr.M:
        raise STOError("assignment does not match the frame's N and M")
    abc, resid = _class_amplitudes(state, assignment)
    # a common complex phase is irrelevant; rotate it away before going real
    pivot = abc[np.argmax(np.abs(abc))]
    if abs(pivot) > 0:
        abc = abc * (abs(pivot) / pivot)
    resid = math.hypot(resid, float(np.linalg.norm(abc.imag)))
    if resid > tol:
        raise NotInSubspace(f"state has weight {resid:.3e} outside the invariant subspace")
    return point_from_xyz(fr.basis @ abc.real)


_REFLECT = {
    G: None,
    OS: np.array([-1.0, -1.0, 1.0]),
    OSTAR: np.array([-1.0, 1.0, 1.0]),
}


def _apply_xyz(v: np.ndarray, op: Primitive, basis: np.ndarray) -> np.ndarray:
    if op is G:
        return v * np.array([1.0, 1.0, -1.0])
    abc = basis.T @ v
    return basis @ (abc * _REFLECT[op])


def apply_polar(point: PolarPoint, op: Primitive, geometry) -> PolarPoint:
    """Exact action of a primitive on a polar point, re-gauged to theta >= 0.

    ``geometry`` is a PolarFrame or a ProblemInstance.
    """
    fr = geometry if isinstance(geometry, PolarFrame) else frame(geometry)
    return point_from_xyz(_apply_xyz(point.xyz(), op, fr.basis))


def marked_amplitude(point: PolarPoint, fr: PolarFrame) -> float:
    """<i*|chi> for the state at ``point`` (up to global sign)."""
    return float((fr.basis.T @ point.xyz())[0])


def polar_success(point: PolarPoint, fr: PolarFrame) -> float:
    return marked_amplitude(point, fr) ** 2


def polar_trajectory(fr: PolarFrame, schedule: Iterable[Primitive]) -> list[PolarPoint]:
    """Points visited from the uniform state, starting point included."""
    pts = [PolarPoint(0.0, 0.0)]
    for op in schedule:
        pts.append(apply_polar(pts[-1], op, fr))
    return pts


def _angular_distance(phi: float, target: float) -> float:
    return abs(math.remainder(phi - target, 2 * math.pi))


def progress(point: PolarPoint, fr: PolarFrame) -> float:
    """theta minus k times the angular distance of phi from pi/2."""
    if not point.theta > 0:
        raise UndefinedProgress("progress is only defined for theta > 0")
    return point.theta - fr.k * _angular_distance(point.phi, math.pi / 2)


def p_star(phi, fr: PolarFrame):
    """First-order progress gained by one O_* applied at angle phi."""
    return 2.0 * (fr.theta0 * np.sin(np.asarray(phi) + fr.phi0) - fr.k * np.asarray(phi))


def per_cost_bound(fr: PolarFrame, c_s) -> float:
    """Largest first-order progress per unit cost: 2 phi0 k / c_S."""
    return 2.0 * fr.phi0 * fr.k / float(c_s)


# --- schedule auditor ---------------------------------------------------------

TRACE_COLUMNS = ["step", "primitive", "cost", "theta", "phi", "H", "dH", "dH_per_cost"]


@dataclass(frozen=True)
class TraceStep:
    step: int
    primitive: Primitive
    cost: float
    theta: float
    phi: float
    H_before: float
    H: float

    @property
    def dH(self) -> float:
        return self.H - self.H_before

    @property
    def dH_per_cost(self) -> float:
        return self.dH / self.cost if self.cost else 0.0


@dataclass
class ProgressTrace:
    steps: list[TraceStep]
    start_index: int | None
    bound_per_cost: float
    tolerance: float
    epsilon_used: float
    epsilon_substituted: bool
    corrections: dict = field(default_factory=dict)
    flagged: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.flagged

    @property
    def max_ratio(self) -> float:
        """max over costed steps of (dH/cost) / bound; 0 for an empty trace."""
        vals = [s.dH_per_cost / self.bound_per_cost for s in self.steps if s.cost]
        return max(vals, default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for s in self.steps:
            w.writerow([s.step, s.primitive.value, repr(s.cost), repr(s.theta), repr(s.phi), repr(s.H), repr(s.dH), repr(s.dH_per_cost)])
        return buf.getvalue()


def find_start(points: list[PolarPoint], theta0: float) -> int | None:
    """Index where progress tracking begins, or None.

    Take the last upward crossing of theta through 2*theta0; tracking starts
    at the first point from there on with theta >= 2*theta0 and phi >= 0.
    """
    thr = 2.0 * theta0
    crossing = None
    for i in range(1, len(points)):
        if points[i - 1].theta < thr <= points[i].theta:
            crossing = i
    if crossing is None:
        return None
    for i in range(crossing, len(points)):
        if points[i].theta >= thr and points[i].phi >= 0:
            return i
    return None


def audit_schedule(instance: ProblemInstance, assignment: OracleAssignment | None, schedule, *, tol: float = 0.05) -> ProgressTrace:
    """Track the progress function along ``schedule`` and flag fast steps.

    A costed step is flagged when its progress per unit cost exceeds
    ``2 phi0 k / c_S * (1 + tol)``; a free step (diffusion) is flagged if it
    moves the progress function at all.
    """
    if assignment is not None:
        if assignment.i_star is None:
            raise STOError("the auditor needs a marked assignment")
        assignment.check_promise(instance.M)
    fr = frame(instance)
    steps = list(schedule)
    points = polar_trajectory(fr, steps)
    eps = instance.epsilon
    substituted = eps == 0.0
    if substituted:
        eps = 1e-6
    bound = per_cost_bound(fr, instance.c_s)
    corrections = {
        "theta0^2/sqrt(eps)": fr.theta0**2 / math.sqrt(eps),
        "M^-1/2": instance.M**-0.5,
        "(M/N)^1/2": math.sqrt(instance.M / instance.N),
    }
    start = find_start(points, fr.theta0)
    trace = ProgressTrace([], start, bound, tol, eps, substituted, corrections)
    if start is None:
        return trace
    cost_of = {G: 0.0, OS: float(instance.c_s), OSTAR: float(instance.c_star)}
    for i in range(start, len(steps)):
        before, after = points[i], points[i + 1]
        rec = TraceStep(i + 1, steps[i], cost_of[steps[i]], after.theta, after.phi, progress(before, fr), progress(after, fr))
        trace.steps.append(rec)
        if rec.cost:
            if rec.dH_per_cost > bound * (1.0 + tol):
                trace.flagged.append(rec.step)
        elif abs(rec.dH) > 1e-12:
            trace.flagged.append(rec.step)
    return trace


# --- marking at negative phi ---------------------------------------------------


@dataclass(frozen=True)
class NegativePhaseReport:
    checked: dict
    violations: dict
    worst_margin: dict

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())


def check_negative_phase_bounds(fr: PolarFrame, n: int = 200, *, atol: float = 1e-12) -> NegativePhaseReport:
    """Check the three O_*-at-negative-phi inequalities on an n x n grid.

    I:   p*(a) + p*(b) <= 2 p*(phi_opt)                 when a + b >= 0
    II:  4 t0 sin((a+b)/2 + p0) cos((a-b)/2) < 4 t0 sin p0   when -pi/4 < (a+b)/2 < 0
    III: 2 t0 sin(b + p0) <= 2 t0 sin(w + p0)            for w in [0, 2 p0)

    with a in (0, pi/2), b in (-pi/2, 0).
    """
    if n < 1:
        raise STOError("empty grid")
    a = np.linspace(0.0, math.pi / 2, n + 2)[1:-1]
    b = np.linspace(-math.pi / 2, 0.0, n + 2)[1:-1]
    w = np.linspace(0.0, 2 * fr.phi0, n + 1)[:-1]
    A, B = np.meshgrid(a, b, indexing="ij")
    t0, p0 = fr.theta0, fr.phi0

    sel1 = A + B >= 0
    margin1 = 2 * p_star(fr.phi_opt, fr) - (p_star(A, fr) + p_star(B, fr))
    m = (A + B) / 2
    sel2 = (m > -math.pi / 4) & (m < 0)
    margin2 = 4 * t0 * math.sin(p0) - 4 * t0 * np.sin(m + p0) * np.cos((A - B) / 2)
    Bw, W = np.meshgrid(b, w, indexing="ij")
    margin3 = 2 * t0 * np.sin(W + p0) - 2 * t0 * np.sin(Bw + p0)

    checked = {"I": int(sel1.sum()), "II": int(sel2.sum()), "III": int(margin3.size)}
    violations = {
        "I": int((margin1[sel1] < -atol).sum()),
        "II": int((margin2[sel2] <= 0).sum()),
        "III": int((margin3 < -atol).sum()),
    }
    worst = {
        "I": float(margin1[sel1].min()) if checked["I"] else math.inf,
        "II": float(margin2[sel2].min()) if checked["II"] else math.inf,
        "III": float(margin3.min()),
    }
    return NegativePhaseReport(checked, violations, worst)
