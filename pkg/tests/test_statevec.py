import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stolab.core import DimensionMismatch, OracleAssignment, ProblemInstance, STOError, random_instance
from stolab.statevec import (
    OS,
    OSTAR,
    G,
    Primitive,
    Schedule,
    apply_primitive,
    format_schedule,
    parse_schedule,
    run_schedule,
    success_probability,
    uniform_state,
)

primitives = st.sampled_from(list(Primitive))


def dense(op, a):
    """Explicit N x N matrix for a primitive, used as an oracle."""
    N = a.N
    if op is G:
        return np.eye(N) - 2.0 * np.full((N, N), 1.0 / N)
    d = np.ones(N)
    if op is OS:
        d[a.set_mask()] = -1
    elif a.i_star is not None:
        d[a.i_star - 1] = -1
    return np.diag(d)


def test_uniform_state():
    assert uniform_state(4) == pytest.approx([0.5] * 4)
    assert uniform_state(1) == pytest.approx([1.0])
    assert np.linalg.norm(uniform_state(1000)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(STOError):
        uniform_state(0)


def test_set_oracle_flips_signs():
    a = OracleAssignment(4, {1, 2})
    out = apply_primitive(uniform_state(4), OS, a)
    assert out.real == pytest.approx([-0.5, -0.5, 0.5, 0.5])


def test_four_item_grover_step():
    a = OracleAssignment(4, {1, 2}, 1)
    psi = apply_primitive(apply_primitive(uniform_state(4), OSTAR, a), G, a)
    # G = I - 2|N><N| leaves the target with amplitude -1
    assert abs(psi[0]) == pytest.approx(1.0, abs=1e-12)
    assert success_probability(psi, a) == pytest.approx(1.0, abs=1e-9)


def test_run_schedule_examples():
    inst = ProblemInstance(4, 2, 3, 1)
    a = OracleAssignment(4, {1, 2}, 1)
    psi, led = run_schedule(inst, a, Schedule())
    assert psi.real == pytest.approx([0.5] * 4) and led.total == 0
    psi, led = run_schedule(inst, a, Schedule((OSTAR, G)))
    assert (led.q_star, led.q_s, led.total) == (1, 0, 3)
    assert success_probability(psi, a) == pytest.approx(1.0, abs=1e-9)


def test_success_probability_examples():
    a = OracleAssignment(4, {1, 2}, 2)
    assert success_probability(uniform_state(4), a) == pytest.approx(0.25)
    basis = np.zeros(4, dtype=complex)
    basis[1] = 1
    assert success_probability(basis, a) == 1.0
    with pytest.raises(STOError):
        success_probability(basis, OracleAssignment(4, {1, 2}))


def test_dimension_mismatch():
    a = OracleAssignment(4, {1, 2}, 1)
    with pytest.raises(DimensionMismatch):
        apply_primitive(uniform_state(5), G, a)
    with pytest.raises(DimensionMismatch):
        run_schedule(ProblemInstance(5, 2, 1, 1), a, Schedule())


def test_star_oracle_is_identity_without_marked_item():
    a = OracleAssignment(6, {1, 2, 3})
    psi = uniform_state(6)
    assert np.array_equal(apply_primitive(psi, OSTAR, a), psi)


def test_apply_does_not_mutate_input():
    a = OracleAssignment(4, {1, 2}, 1)
    psi = uniform_state(4)
    apply_primitive(psi, G, a)
    assert psi.real == pytest.approx([0.5] * 4)


@settings(max_examples=60)
@given(st.integers(2, 12), st.data())
def test_primitives_match_dense_matrices(N, data):
    M = data.draw(st.integers(1, N))
    a = random_instance(N, M, data.draw(st.booleans()), data.draw(st.integers(0, 10**6)))
    op = data.draw(primitives)
    psi = np.random.default_rng(N).normal(size=N) + 0j
    assert apply_primitive(psi, op, a) == pytest.approx(dense(op, a) @ psi, abs=1e-12)


@settings(max_examples=60)
@given(st.integers(2, 64), st.data())
def test_involution(N, data):
    M = data.draw(st.integers(1, N))
    a = random_instance(N, M, True, data.draw(st.integers(0, 10**6)))
    op = data.draw(primitives)
    psi = np.random.default_rng(1).normal(size=N) + 1j * np.random.default_rng(2).normal(size=N)
    twice = apply_primitive(apply_primitive(psi, op, a), op, a)
    assert np.max(np.abs(twice - psi)) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 256), st.data())
def test_norm_and_subspace_closure(N, data):
    M = data.draw(st.integers(2, N - 1))
    a = random_instance(N, M, True, data.draw(st.integers(0, 10**6)))
    steps = data.draw(st.lists(primitives, max_size=400))
    psi, led = run_schedule(ProblemInstance(N, M, 2, 1), a, Schedule(steps))
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-9)
    assert led.q_star == steps.count(OSTAR) and led.q_s == steps.count(OS)
    mask = a.set_mask()
    rest = mask.copy()
    rest[a.i_star - 1] = False
    resid = psi.copy()
    resid[rest] -= psi[rest].mean()
    resid[~mask] -= psi[~mask].mean()
    resid[a.i_star - 1] = 0
    assert np.linalg.norm(resid) <= 1e-9


def test_long_schedule_keeps_norm():
    a = random_instance(512, 8, True, 3)
    steps = Schedule((OS, G, OSTAR, G)) * 2500
    psi, _ = run_schedule(ProblemInstance(512, 8, 1, 1), a, steps)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-9)


@given(st.lists(primitives, max_size=30))
def test_plan_text_round_trip(steps):
    inst = ProblemInstance(100, 7, "5/2", "0.5", 0.1)
    text = format_schedule(inst, steps)
    inst2, sched = parse_schedule(text)
    assert inst2 == inst and list(sched) == steps


def test_parse_rejects_bad_text():
    with pytest.raises(STOError):
        parse_schedule("")
    with pytest.raises(STOError):
        parse_schedule("4 2 1 1\nG\n")
    with pytest.raises(STOError):
        parse_schedule("4 2 1 1 0\nX\n")
