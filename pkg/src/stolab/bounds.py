"""Quantum lower bounds: adversary matrices, closed-form bounds, W^t audit."""

from __future__ import annotations

import csv
import enum
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .core import ProblemInstance, STOError, as_fraction
from .schedules import hybrid_cost_asymptotic, phi_opt
from .statevec import OS, OSTAR, G, Primitive


class BruteForceLimit(STOError):
    pass


class InfeasibleCosts(STOError):
    pass


class Construction(enum.Enum):
    PAIRED_REMOVAL = "PairedRemoval"
    SAME_SET = "SameSet"


@dataclass(frozen=True)
class AdversaryReport:
    construction: Construction
    gamma_norm: float
    max_d_star_norm: float
    max_d_s_norm: float
    n_rows: int
    n_cols: int


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    mode: str
    provenance: str
    diagnostic_C: float | None = None
    regime: str | None = None


BOUND_COLUMNS = ["name", "value", "mode", "provenance", "diagnostic_C", "regime"]


def bounds_to_csv(reports: Iterable[BoundReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUND_COLUMNS)
    for r in reports:
        C = "" if r.diagnostic_C is None else repr(float(r.diagnostic_C))
        w.writerow([r.name, repr(float(r.value)), r.mode, r.provenance, C, r.regime or ""])
    return buf.getvalue()


# --- explicit adversary matrices ---------------------------------------------


@dataclass(frozen=True)
class _Family:
    """Enumerated inputs with their oracle tables (0-based item indices)."""

    ones: list  # (S, i_star)
    zeros: list  # S
    A: np.ndarray  # |ones| x |zeros|, the bipartite block of Gamma
    N: int

    def star_table(self) -> np.ndarray:
        """f_* values, shape (inputs, N), rows = ones then zeros."""
        t = np.zeros((len(self.ones) + len(self.zeros), self.N))
        for r, (_, i) in enumerate(self.ones):
            t[r, i] = 1.0
        return t

    def set_table(self) -> np.ndarray:
        t = np.zeros((len(self.ones) + len(self.zeros), self.N))
        for r, (S, _) in enumerate(self.ones):
            t[r, list(S)] = 1.0
        for c, S in enumerate(self.zeros):
            t[len(self.ones) + c, list(S)] = 1.0
        return t

    def gamma(self) -> np.ndarray:
        n1, n0 = self.A.shape
        g = np.zeros((n1 + n0, n1 + n0))
        g[:n1, n1:] = self.A
        g[n1:, :n1] = self.A.T
        return g


def _check_regime(N: int, M: int, limit: int) -> None:
    if N > limit:
        raise BruteForceLimit(f"brute-force enumeration is limited to N <= {limit}")
    if not 2 <= M <= N - 1:
        raise STOError("need 2 <= M <= N - 1")


def _family(N: int, M: int, construction: Construction) -> _Family:
    ones = [(frozenset(S), i) for S in itertools.combinations(range(N), M) for i in S]
    if construction is Construction.PAIRED_REMOVAL:
        zeros = [frozenset(S) for S in itertools.combinations(range(N), M - 1)]
        partner = lambda S, i: S - {i}
    elif construction is Construction.SAME_SET:
        zeros = [frozenset(S) for S in itertools.combinations(range(N), M)]
        partner = lambda S, i: S
    else:
        raise STOError(f"unknown construction {construction!r}")
    col = {S: c for c, S in enumerate(zeros)}
    A = np.zeros((len(ones), len(zeros)))
    for r, (S, i) in enumerate(ones):
        A[r, col[partner(S, i)]] = 1.0
    return _Family(ones, zeros, A, N)


def _norm(sym: np.ndarray) -> float:
    if not sym.any():
        return 0.0
    return float(np.abs(np.linalg.eigvalsh(sym)).max())


def _filtered_norms(gamma: np.ndarray, table: np.ndarray) -> list[float]:
    """||Gamma o D_i|| for each item i, D_i[x, y] = [table[x, i] != table[y, i]]."""
    out = []
    for i in range(table.shape[1]):
        col = table[:, i]
        D = col[:, None] != col[None, :]
        out.append(_norm(gamma * D))
    return out


def adversary_matrices(N: int, M: int, construction: Construction | str) -> AdversaryReport:
    construction = Construction(construction)
    _check_regime(N, M, 8)
    fam = _family(N, M, construction)
    gamma = fam.gamma()
    return AdversaryReport(
        construction,
        _norm(gamma),
        max(_filtered_norms(gamma, fam.star_table())),
        max(_filtered_norms(gamma, fam.set_table())),
        fam.A.shape[0],
        fam.A.shape[1],
    )


# --- closed-form bounds --------------------------------------------------------


def _distinguish_factor(eps: float) -> float:
    return 1.0 - 2.0 * math.sqrt(eps * (1.0 - eps))


def basic_adversary_bound(mu: float, mu_prime: float, l: float, l_prime: float, epsilon: float) -> float:
    """((1 - 2 sqrt(eps(1-eps)))/2) sqrt(mu mu' / (l l'))."""
    if min(mu, mu_prime, l, l_prime) <= 0:
        raise STOError("relation parameters must be positive")
    if not 0.0 <= epsilon <= 0.5:
        raise STOError("epsilon must lie in [0, 1/2]")
    return _distinguish_factor(epsilon) / 2.0 * math.sqrt(mu * mu_prime / (l * l_prime))


def _g(eps: float) -> float:
    return max(0.0, (1.0 - (2.0 * math.sqrt(eps * (1.0 - eps)) + 2.0 * eps)) / 2.0)


def qcc_lower_bound(instance: ProblemInstance) -> BoundReport:
    g = _g(instance.epsilon)
    N, M = instance.N, instance.M
    value = max(float(instance.c_s) * g * math.sqrt(N - M + 1), float(instance.c_star) * g * math.sqrt(M))
    return BoundReport("qcc_adversary", value, "exact", "weighted adversary, paired-removal and same-set matrices")


@dataclass(frozen=True)
class EstoParams:
    m_star: int
    m_s: int
    scale: Fraction


def _block_size(budget: Fraction) -> int:
    """Largest i >= 1 with ceil((pi/4) sqrt(i)) + 1 <= budget."""
    L = math.floor(budget) - 1  # ceil(...) <= L  <=>  (pi/4) sqrt(i) <= L
    if L < 1:
        raise InfeasibleCosts(f"scaled cost {budget} < 2 admits no block size; raise K")

    def ok(i: int) -> bool:
        return math.ceil(math.pi / 4 * math.sqrt(i)) + 1 <= budget

    m = int((4 * L / math.pi) ** 2)
    while m > 1 and not ok(m):
        m -= 1
    while ok(m + 1):
        m += 1
    return max(m, 1)


def esto_params(c_star, c_s, K=1) -> EstoParams:
    K = as_fraction(K)
    if K <= 0:
        raise STOError("K must be positive")
    return EstoParams(_block_size(K * as_fraction(c_star)), _block_size(K * as_fraction(c_s)), K)


def conqcc_lower_bound(instance: ProblemInstance, mode: str = "asymptotic", K=1000) -> BoundReport:
    """Controlled-oracle cost bound via the expanded single-oracle problem.

    ``exact_integer`` evaluates the bound with integer block sizes at costs
    scaled by K; ``asymptotic`` is its K -> infinity limit, using
    m(K c) / K^2 -> (4c/pi)^2.
    """
    f = _distinguish_factor(instance.epsilon)
    N, M = instance.N, instance.M
    if mode == "exact_integer":
        p = esto_params(instance.c_star, instance.c_s, K)
        value = f / 4.0 * max(math.sqrt(M * p.m_star), math.sqrt((N - M + 1) * p.m_s)) / float(p.scale)
        prov = f"expanded search, integer block sizes at K={p.scale}"
    elif mode == "asymptotic":
        value = f / math.pi * max(float(instance.c_star) * math.sqrt(M), float(instance.c_s) * math.sqrt(N - M + 1))
        prov = "expanded search, K->infinity limit m(Kc)/K^2 -> (4c/pi)^2"
    else:
        raise STOError(f"unknown mode {mode!r}")
    return BoundReport("conqcc", max(value, 0.0), mode, prov)


def exact_lower_bound(instance: ProblemInstance, *, regime_threshold: float = 0.1) -> BoundReport:
    """Grover-like cost lower bound with its finite-size diagnostic C."""
    N, M = instance.N, instance.M
    if not N > M >= 2:
        raise STOError("need N > M >= 2")
    value = hybrid_cost_asymptotic(instance)
    cosv = math.cos(phi_opt(instance) + math.sqrt(M / N))
    if instance.epsilon > 0:
        C = float(instance.c_s) * math.sqrt(N) / (float(instance.c_star) * math.sqrt(instance.epsilon) * 2 * M * cosv)
        regime = "in-regime" if C <= regime_threshold else "asymptotic-regime"
    else:
        C, regime = None, "unavailable"
    return BoundReport("grover_like_exact", value, "asymptotic", "progress-function bound for Grover-like algorithms", C, regime)


# --- adversary progress W^t ----------------------------------------------------


@dataclass(frozen=True)
class WTrace:
    values: np.ndarray
    kinds: tuple  # primitive per step ("verify" for the ancilla check)
    gamma_norm: float
    max_d_star_norm: float
    max_d_s_norm: float

    def step_bound(self, kind) -> float:
        if kind is OS:
            return 2.0 * self.max_d_s_norm
        if kind is G:
            return 0.0
        return 2.0 * self.max_d_star_norm

    def step_violations(self, atol: float = 1e-9) -> list[int]:
        d = np.abs(np.diff(self.values))
        return [t + 1 for t, k in enumerate(self.kinds) if d[t] > self.step_bound(k) + atol]


def _principal_vector(gamma: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(gamma)
    top = V[:, np.isclose(w, w.max(), rtol=0, atol=1e-9)]
    # a degenerate top eigenspace has no canonical basis; project a
    # nonnegative probe into it for a deterministic unit vector
    v = top @ (top.T @ np.ones(len(gamma)))
    if np.linalg.norm(v) < 1e-12:
        v = top[:, 0]
    return v / np.linalg.norm(v)


def w_progress_trace(schedule: Iterable[Primitive], N: int, M: int, construction: Construction | str = Construction.PAIRED_REMOVAL, *, verify: bool = False) -> WTrace:
    """W^t = sum_xy Gamma[x,y] v_x v_y <psi_x^t|psi_y^t> along ``schedule``.

    With ``verify=True`` a final coherent f_* query writes f_*(i) into an
    ancilla, modelling the check that turns a measured item into a decision.
    """
    construction = Construction(construction)
    _check_regime(N, M, 6)
    fam = _family(N, M, construction)
    gamma = fam.gamma()
    star, sset = fam.star_table(), fam.set_table()
    v = _principal_vector(gamma)
    weight = gamma * np.outer(v, v)

    def W(psi: np.ndarray) -> float:
        return float(np.real(np.sum(weight * (psi.conj() @ psi.T))))

    n_inputs = gamma.shape[0]
    psi = np.full((n_inputs, N), 1.0 / math.sqrt(N), dtype=np.complex128)
    sign_s, sign_star = 1.0 - 2.0 * sset, 1.0 - 2.0 * star
    values = [W(psi)]
    kinds = []
    for op in schedule:
        if op is G:
            psi = psi - 2.0 * psi.mean(axis=1, keepdims=True)
        elif op is OS:
            psi = psi * sign_s
        elif op is OSTAR:
            psi = psi * sign_star
        else:
            raise STOError(f"unknown primitive {op!r}")
        values.append(W(psi))
        kinds.append(op)
    if verify:
        psi = np.concatenate([psi * (1.0 - star), psi * star], axis=1)
        values.append(W(psi))
        kinds.append("verify")
    return WTrace(
        np.array(values),
        tuple(kinds),
        _norm(gamma),
        max(_filtered_norms(gamma, star)),
        max(_filtered_norms(gamma, sset)),
    )


def final_w_bound(epsilon: float, gamma_norm: float) -> float:
    return (2.0 * math.sqrt(epsilon * (1.0 - epsilon)) + 2.0 * epsilon) * gamma_norm
