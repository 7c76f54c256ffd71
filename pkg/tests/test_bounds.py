import csv
import io
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stolab.bounds import (
    BOUND_COLUMNS,
    BruteForceLimit,
    Construction,
    InfeasibleCosts,
    adversary_matrices,
    basic_adversary_bound,
    bounds_to_csv,
    conqcc_lower_bound,
    esto_params,
    exact_lower_bound,
    final_w_bound,
    qcc_lower_bound,
    w_progress_trace,
)
from stolab.core import ProblemInstance, STOError, random_instance
from stolab.schedules import OvershootError, build_alg1, build_hybrid, cost_envelope, hybrid_cost_asymptotic, inner_limit, optimal_hybrid_cost, solve_phi_opt
from stolab.statevec import Schedule, run_schedule, success_probability

GRID = [(N, M) for N in range(4, 9) for M in range(2, N)]


def test_adversary_examples():
    r = adversary_matrices(4, 2, "PairedRemoval")
    assert r.gamma_norm == pytest.approx(math.sqrt(3), abs=1e-9)
    assert (r.n_rows, r.n_cols) == (12, 4)
    r = adversary_matrices(4, 2, Construction.SAME_SET)
    assert r.gamma_norm == pytest.approx(math.sqrt(2), abs=1e-9)
    assert r.max_d_s_norm == 0.0
    r = adversary_matrices(6, 3, "PairedRemoval")
    assert r.max_d_star_norm == pytest.approx(1.0, abs=1e-9)
    assert r.max_d_s_norm == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("N,M", GRID)
def test_adversary_norm_grid(N, M):
    pr = adversary_matrices(N, M, "PairedRemoval")
    assert pr.gamma_norm == pytest.approx(math.sqrt(N - M + 1), abs=1e-9)
    assert pr.max_d_star_norm == pytest.approx(1.0, abs=1e-9)
    assert pr.max_d_s_norm == pytest.approx(1.0, abs=1e-9)
    ss = adversary_matrices(N, M, "SameSet")
    assert ss.gamma_norm == pytest.approx(math.sqrt(M), abs=1e-9)
    assert ss.max_d_s_norm == 0.0
    assert ss.n_rows == math.comb(N, M) * M


def test_adversary_norm_against_svd():
    # independent oracle: largest singular value of the explicit bipartite block
    N, M = 6, 3
    ones = [(S, i) for S in itertools.combinations(range(N), M) for i in S]
    zeros = list(itertools.combinations(range(N), M - 1))
    A = np.array([[float(tuple(x for x in S if x != i) == z) for z in zeros] for S, i in ones])
    assert adversary_matrices(N, M, "PairedRemoval").gamma_norm == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], abs=1e-10)


def test_adversary_rejects_large_or_degenerate():
    with pytest.raises(BruteForceLimit):
        adversary_matrices(9, 3, "SameSet")
    with pytest.raises(STOError):
        adversary_matrices(6, 6, "SameSet")
    with pytest.raises(STOError):
        adversary_matrices(6, 1, "PairedRemoval")


def test_basic_adversary_bound_examples():
    assert basic_adversary_bound(1, 1, 1, 1, 0.0) == 0.5
    assert basic_adversary_bound(1, 1, 1, 1, 0.5) == pytest.approx(0.0, abs=1e-15)
    N, M, ms, mst = 100, 10, 7, 9
    direct = (1 - 2 * math.sqrt(0.1 * 0.9)) / 2 * math.sqrt((N - M + 1) * ms * mst / mst)
    assert basic_adversary_bound(1, (N - M + 1) * ms * mst, 1, mst, 0.1) == pytest.approx(direct)
    with pytest.raises(STOError):
        basic_adversary_bound(0, 1, 1, 1, 0.1)


def test_qcc_lower_bound_examples():
    r = qcc_lower_bound(ProblemInstance(100, 10, 3, 1, 0.0))
    assert r.value == pytest.approx(max(math.sqrt(91), 3 * math.sqrt(10)) / 2)
    r = qcc_lower_bound(ProblemInstance(100, 100, 3, 1, 0.01))
    g = (1 - 2 * math.sqrt(0.01 * 0.99) - 0.02) / 2
    assert r.value == pytest.approx(3 * 10 * g)
    assert qcc_lower_bound(ProblemInstance(100, 10, 3, 1, 0.4)).value == 0.0


def test_esto_examples():
    assert esto_params(10, 2).m_star == 131
    assert math.ceil(math.pi / 4 * math.sqrt(131)) == 9 and math.ceil(math.pi / 4 * math.sqrt(132)) == 10
    assert esto_params(2, 2).m_star == 1
    with pytest.raises(InfeasibleCosts):
        esto_params(2, 1)
    with pytest.raises(InfeasibleCosts):
        esto_params(2, "1.9")


@given(st.fractions(min_value=2, max_value=400))
def test_esto_maximality_against_scan(c):
    m = esto_params(c, c).m_star
    ok = lambda i: math.ceil(math.pi / 4 * math.sqrt(i)) + 1 <= c
    assert ok(m) and not ok(m + 1)
    # direct scan oracle on the small end
    if c <= 40:
        assert m == max(i for i in range(1, 2000) if ok(i))


def test_esto_scaling_limit():
    errs = [abs(esto_params(1, 1, K).m_star / K**2 - (4 / math.pi) ** 2) for K in (10, 100, 1000, 10**4)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3


def test_conqcc_examples():
    for j in (1, 5, 50, 100):
        cs = Fraction(j, 100)
        inst = ProblemInstance(10**4, 400, 1, cs, 0.0)
        assert conqcc_lower_bound(inst, "asymptotic").value == pytest.approx(max(20, float(cs) * math.sqrt(9601)) / math.pi)
        exact = conqcc_lower_bound(inst, "exact_integer", 1000).value
        assert exact == pytest.approx(conqcc_lower_bound(inst, "asymptotic").value, rel=0.01)
    with pytest.raises(STOError):
        conqcc_lower_bound(inst, "bogus")
    with pytest.raises(InfeasibleCosts):
        conqcc_lower_bound(ProblemInstance(100, 10, 1, Fraction(1, 100)), "exact_integer", 1)


def test_exact_lower_bound():
    inst = ProblemInstance(10**8, 10**4, 10, 1, 0.1)
    r = exact_lower_bound(inst)
    assert r.value == pytest.approx(hybrid_cost_asymptotic(inst), abs=1e-12)
    phi = solve_phi_opt(10.0, 0.01)
    assert r.diagnostic_C == pytest.approx(1e4 / (10 * math.sqrt(0.1) * 2e4 * math.cos(phi + 0.01)), rel=1e-12)
    assert 0.1 < r.diagnostic_C < 0.2 and r.regime == "asymptotic-regime"
    deep = exact_lower_bound(ProblemInstance(10**8, 10**4, 100, 1, 0.1))
    assert deep.diagnostic_C < 0.05 and deep.regime == "in-regime"
    eq = exact_lower_bound(ProblemInstance(10**4, 100, 2, 2, 0.1))
    assert eq.value == pytest.approx(2 * 100 * math.asin(math.sqrt(0.9)) / 2 / math.cos(0.1))
    zero = exact_lower_bound(ProblemInstance(10**4, 100, 2, 1, 0.0))
    assert zero.diagnostic_C is None and zero.regime == "unavailable" and zero.value > 0
    assert exact_lower_bound(ProblemInstance(10**4, 100, 1, 1, 0.1)).regime == "asymptotic-regime"
    with pytest.raises(STOError):
        exact_lower_bound(ProblemInstance(100, 1, 2, 1, 0.1))


def test_ordering_chain():
    for N in (1024, 4096, 10**4, 10**6):
        for M in (4, 16, 100):
            for r in (1, 4, 20, 100):
                for eps in (0.0, 0.1):
                    inst = ProblemInstance(N, M, r, 1, eps)
                    _, cost = optimal_hybrid_cost(inst)
                    assert conqcc_lower_bound(inst).value <= cost
                    assert qcc_lower_bound(inst).value <= cost
                    ex = exact_lower_bound(inst)
                    if ex.regime == "in-regime":
                        assert ex.value <= cost


def test_qcc_below_hybrid_on_envelope_grid():
    for j in range(1, 101, 7):
        inst = ProblemInstance(10**4, 400, 1, Fraction(j, 100))
        assert qcc_lower_bound(inst).value <= cost_envelope(inst).hybrid_cost


def test_bounds_csv():
    inst = ProblemInstance(10**4, 400, 1, Fraction(1, 20), 0.1)
    text = bounds_to_csv([qcc_lower_bound(inst), conqcc_lower_bound(inst), exact_lower_bound(inst)])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == BOUND_COLUMNS and len(rows) == 4
    assert all(float(r[1]) >= 0 for r in rows[1:])
    assert rows[1][4:] == ["", ""]
    assert float(rows[3][4]) > 0 and rows[3][5] in ("in-regime", "asymptotic-regime")


# --- W^t ----------------------------------------------------------------------


def test_w_trace_empty_schedule():
    w = w_progress_trace(Schedule(), 4, 2)
    assert w.values[0] == pytest.approx(math.sqrt(3), abs=1e-9)
    assert len(w.values) == 1


def test_w_trace_grover_n4():
    plan = build_alg1(ProblemInstance(4, 2, 1, 1, 0.0))
    w = w_progress_trace(plan.schedule, 4, 2, verify=True)
    assert w.step_violations() == []
    assert np.all(np.abs(np.diff(w.values)) <= 2 + 1e-9)
    assert w.values[-1] <= final_w_bound(0.0, w.gamma_norm) + 1e-6


def test_w_trace_without_verification_keeps_overlap():
    plan = build_alg1(ProblemInstance(4, 2, 1, 1, 0.0))
    w = w_progress_trace(plan.schedule, 4, 2)
    assert w.values[-1] > 0.1


@pytest.mark.parametrize("N", [4, 5, 6])
@pytest.mark.parametrize("construction", ["PairedRemoval", "SameSet"])
def test_w_trace_properties(N, construction):
    for M in range(2, N):
        for eps in (0.0, 0.1, 0.3):
            inst = ProblemInstance(N, M, 3, 1, eps)
            plans = [build_alg1(inst)]
            for t in range(inner_limit(inst) + 1):
                try:
                    plans.append(build_hybrid(inst, t).plan)
                except OvershootError:
                    pass
            for plan in plans:
                w = w_progress_trace(plan.schedule, N, M, construction, verify=True)
                assert w.values[0] == pytest.approx(w.gamma_norm, abs=1e-9)
                assert w.step_violations() == []
                a = random_instance(N, M, True, 0)
                success = success_probability(run_schedule(inst, a, plan.schedule)[0], a)
                if success >= 1 - eps:
                    assert w.values[-1] <= final_w_bound(eps, w.gamma_norm) + 1e-6


def test_w_trace_random_schedules_respect_step_bound():
    rng = np.random.default_rng(4)
    from stolab.statevec import Primitive

    prims = list(Primitive)
    for _ in range(20):
        steps = [prims[i] for i in rng.integers(0, 3, size=30)]
        for construction in Construction:
            assert w_progress_trace(steps, 6, 3, construction).step_violations() == []


def test_w_trace_limit():
    with pytest.raises(BruteForceLimit):
        w_progress_trace(Schedule(), 7, 3)
