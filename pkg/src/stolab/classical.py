"""Classical strategies, the zero-error adversary game and Monte Carlo tools.

A strategy is a factory ``(N, M, rng) -> generator``.  The generator yields
actions (``QueryStar(i)``, ``QueryS(i)`` or ``Halt(b)``) and receives each
query's answer through ``send``, so its next action depends only on the
answers seen so far and on its seeded RNG.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Generator

import numpy as np

from .core import CostLedger, Oracle, OracleAssignment, ProblemInstance, STOError, query, random_instance, sto_value
from .bounds import BoundReport


class StepLimitExceeded(STOError):
    pass


@dataclass(frozen=True)
class QueryStar:
    i: int


@dataclass(frozen=True)
class QueryS:
    i: int


@dataclass(frozen=True)
class Halt:
    answer: int


Action = QueryStar | QueryS | Halt
Factory = Callable[[int, int, np.random.Generator], Generator]


@dataclass(frozen=True)
class Strategy:
    name: str
    factory: Factory
    randomized: bool = False

    def session(self, N: int, M: int, seed=None) -> Generator:
        return self.factory(N, M, np.random.default_rng(seed))


def rcc0(instance: ProblemInstance) -> Fraction:
    N, M = instance.N, instance.M
    return min(N * instance.c_star, (N - 1) * instance.c_s + M * instance.c_star)


# --- strategies ---------------------------------------------------------------


def _alg4(order=None, early_stop=False) -> Factory:
    def plan(N, M, rng):
        hit = 0
        for i in order(N) if order else range(1, N + 1):
            if (yield QueryStar(i)):
                hit = 1
                if early_stop:
                    break
        yield Halt(hit)

    return plan


def _alg5(N, M, rng):
    found = []
    for i in range(1, N):
        if (yield QueryS(i)):
            found.append(i)
    if len(found) == M:
        candidates = found
    elif len(found) == M - 1:
        candidates = found + [N]
    else:
        yield Halt(0)
        return
    for i in candidates:
        if (yield QueryStar(i)):
            yield Halt(1)
            return
    yield Halt(0)


def _threshold(q: int) -> Factory:
    """f_S on the first q items, then f_* on everything not ruled out."""

    def plan(N, M, rng):
        found = []
        for i in range(1, min(q, N) + 1):
            if (yield QueryS(i)):
                found.append(i)
        if len(found) > M:
            yield Halt(0)
            return
        for i in found + list(range(min(q, N) + 1, N + 1)):
            if (yield QueryStar(i)):
                yield Halt(1)
                return
        yield Halt(0)

    return plan


def _interleaved(N, M, rng):
    """f_S on each item, following up with f_* whenever it is in S."""
    in_s = 0
    for i in range(1, N + 1):
        if (yield QueryS(i)):
            in_s += 1
            if in_s > M:
                yield Halt(0)
                return
            if (yield QueryStar(i)):
                yield Halt(1)
                return
    yield Halt(0)


def _flipping(base: Factory, p_flip: float) -> Factory:
    """Run ``base`` and flip its final answer with probability ``p_flip``."""

    def plan(N, M, rng):
        gen = base(N, M, rng)
        action = next(gen)
        while not isinstance(action, Halt):
            action = gen.send((yield action))
        flip = rng.random() < p_flip
        yield Halt(action.answer ^ int(flip))

    return plan


def classical_strategy(kind: str, instance: ProblemInstance | None = None) -> Strategy:
    """The two exact algorithms: ``"Alg4"`` (f_* everywhere) or ``"Alg5"``."""
    if kind == "Alg4":
        return Strategy("Alg4", _alg4())
    if kind == "Alg5":
        return Strategy("Alg5", _alg5)
    raise STOError(f"unknown classical algorithm {kind!r}")


def three_quarter_strategy() -> Strategy:
    """Alg5 whose answer is flipped with probability 1/4: succeeds w.p. 3/4."""
    return Strategy("Alg5-flip1/4", _flipping(_alg5, 0.25), randomized=True)


def heuristic_corpus(instance: ProblemInstance) -> list[Strategy]:
    """Zero-error strategies used to exercise the adversary game."""
    N, M = instance.N, instance.M
    corpus = [
        Strategy("Alg4", _alg4()),
        Strategy("Alg4-early", _alg4(early_stop=True)),
        Strategy("Alg4-reversed", _alg4(order=lambda n: range(n, 0, -1), early_stop=True)),
        Strategy("Alg5", _alg5),
        Strategy("interleaved", _interleaved),
    ]
    for q in sorted({1, max(M - 1, 1), M, N // 2, N - 1, N}):
        corpus.append(Strategy(f"threshold({q})", _threshold(q)))
    return corpus


# --- running strategies -------------------------------------------------------


@dataclass(frozen=True)
class TranscriptRow:
    step: int
    kind: str
    index: int | None
    answer: int
    cumulative_cost: Fraction


TRANSCRIPT_COLUMNS = ["step", "kind", "index", "answer", "cumulative_cost"]


def transcript_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRANSCRIPT_COLUMNS)
    for r in rows:
        w.writerow([r.step, r.kind, "" if r.index is None else r.index, r.answer, str(r.cumulative_cost)])
    return buf.getvalue()


def _drive(strategy: Strategy, instance: ProblemInstance, answer: Callable[[Oracle, int], int], seed=None, *, record: bool = True):
    """Run a strategy against an answering function; returns (answer, ledger, transcript)."""
    N, M = instance.N, instance.M
    gen = strategy.session(N, M, seed)
    counts = {Oracle.STAR: 0, Oracle.SET: 0}
    rows = []
    limit = 2 * N
    steps = 0
    action = next(gen)
    while not isinstance(action, Halt):
        if steps >= limit:
            raise StepLimitExceeded(f"{strategy.name} made more than {limit} queries")
        if isinstance(action, QueryStar):
            kind = Oracle.STAR
        elif isinstance(action, QueryS):
            kind = Oracle.SET
        else:
            raise STOError(f"{strategy.name} produced an invalid action {action!r}")
        if not 1 <= action.i <= N:
            raise STOError(f"{strategy.name} queried index {action.i} outside 1..{N}")
        a = int(answer(kind, action.i))
        counts[kind] += 1
        steps += 1
        if record:
            cost = counts[Oracle.STAR] * instance.c_star + counts[Oracle.SET] * instance.c_s
            rows.append(TranscriptRow(steps, kind.value, action.i, a, cost))
        action = gen.send(a)
    ledger = CostLedger.for_instance(instance, counts[Oracle.STAR], counts[Oracle.SET])
    if record:
        rows.append(TranscriptRow(steps + 1, "halt", None, int(action.answer), ledger.total))
    return int(action.answer), ledger, rows


def run_strategy(strategy: Strategy, instance: ProblemInstance, assignment: OracleAssignment, seed=None, *, record: bool = True):
    assignment.check_promise(instance.M)
    return _drive(strategy, instance, lambda k, i: query(assignment, k, i), seed, record=record)


# --- zero-error adversary -----------------------------------------------------


class _Consistent:
    """All inputs still consistent with the answers given so far."""

    def __init__(self, N: int, M: int):
        sets, stars = [], []
        for S in itertools.combinations(range(N), M):
            m = sum(1 << j for j in S)
            for j in S:
                sets.append(m)
                stars.append(j)
        for m in range(1 << N):
            sets.append(m)
            stars.append(-1)
        self.sets = np.array(sets, dtype=np.int64)
        self.stars = np.array(stars, dtype=np.int64)

    def _values(self, kind: Oracle, j: int) -> np.ndarray:
        if kind is Oracle.STAR:
            return (self.stars == j).astype(np.int64)
        return (self.sets >> j) & 1

    def admits(self, kind: Oracle, j: int, a: int) -> bool:
        return bool((self._values(kind, j) == a).any())

    def restrict(self, kind: Oracle, j: int, a: int) -> None:
        keep = self._values(kind, j) == a
        self.sets, self.stars = self.sets[keep], self.stars[keep]

    def outcomes(self) -> set:
        return set((self.stars >= 0).astype(int).tolist())


@dataclass
class AdversaryState:
    committed: set
    queried: set
    complete: set
    s_ones: int


@dataclass(frozen=True)
class GameResult:
    forced_cost: Fraction
    transcript: list
    certified: bool
    answer: int
    ledger: CostLedger


def adversary_game(strategy: Strategy, instance: ProblemInstance, seed=None, *, max_n: int = 12) -> GameResult:
    """Play the zero-error adversary against a deterministic strategy.

    The adversary answers the first M-1 distinct f_S queries with 1, places
    the last never-queried item in S, and makes the last item to be
    completely queried the marked one.  Whenever a preferred answer would
    contradict every remaining input, the other answer is given.  A halt is
    certified when every input consistent with the transcript has the
    announced value.
    """
    N, M = instance.N, instance.M
    if N > max_n:
        raise STOError(f"adversary game enumerates inputs; N <= {max_n} required")
    pool = _Consistent(N, M)
    st = AdversaryState(set(), set(), set(), 0)

    def answer(kind: Oracle, i: int) -> int:
        if kind is Oracle.SET:
            if i in st.committed:
                pref = 1
            else:
                pref = int(st.s_ones < M - 1)
        else:
            others = set(range(1, N + 1)) - {i}
            pref = int(others <= st.complete)
        a = pref if pool.admits(kind, i - 1, pref) else 1 - pref
        pool.restrict(kind, i - 1, a)
        if kind is Oracle.SET and a == 1 and i not in st.committed:
            st.committed.add(i)
            st.s_ones += 1
        if kind is Oracle.STAR or a == 0:
            st.complete.add(i)
        st.queried.add(i)
        if len(st.queried) == N - 1:
            st.committed |= set(range(1, N + 1)) - st.queried
        return a

    b, ledger, rows = _drive(strategy, instance, answer, seed)
    certified = pool.outcomes() == {b}
    return GameResult(ledger.total, rows, certified, b, ledger)


def worst_case_game(strategy: Strategy, instance: ProblemInstance, seeds) -> GameResult:
    """Derandomise by seed and keep the most expensive game."""
    results = [adversary_game(strategy, instance, s) for s in seeds]
    if not results:
        raise STOError("need at least one seed")
    return max(results, key=lambda r: r.forced_cost)


# --- simulated set oracle -----------------------------------------------------


def simulate_with_fake_fs(strategy: Strategy, instance: ProblemInstance, assignment: OracleAssignment, seed, *, record: bool = False, T=None):
    """Run ``strategy`` with f_S replaced by f_T OR f_*, T random of size M-1.

    Only f_* is consulted; every simulated f_S call is charged as one f_*
    query.  Returns (answer, ledger, valid) where ``valid`` is 0 exactly when
    the marked item falls inside T (the simulated set then has M-1 items).
    Passing ``T`` fixes the simulated set instead of drawing it.
    """
    N, M = instance.N, instance.M
    rng = np.random.default_rng(seed)
    drawn = frozenset(int(i) for i in rng.choice(N, size=M - 1, replace=False) + 1)
    if T is None:
        T = drawn
    else:
        T = frozenset(T)
        if len(T) != M - 1 or not T <= set(range(1, N + 1)):
            raise STOError("T must hold M-1 items from 1..N")
    star = lambda i: query(assignment, Oracle.STAR, i)

    def answer(kind: Oracle, i: int) -> int:
        if kind is Oracle.STAR:
            return star(i)
        return int(i in T) | star(i)

    # the strategy's own randomness is independent of T
    b, ledger, _ = _drive(strategy, instance, answer, rng.integers(2**63), record=record)
    charged = CostLedger.for_instance(instance, ledger.q_star + ledger.q_s, 0)
    valid = int(not (assignment.i_star is not None and assignment.i_star in T))
    return b, charged, valid


def _stderr(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def monte_carlo_success(strategy: Strategy, instance: ProblemInstance, trials: int, seed: int, *, fake_fs: bool = False):
    """(estimate, stderr) of the success rate; even trials carry a marked item."""
    if trials < 1:
        raise STOError("trials must be at least 1")
    wins = 0
    for t in range(trials):
        a = random_instance(instance.N, instance.M, t % 2 == 0, seed=[seed, t, 0])
        if fake_fs:
            b, _, _ = simulate_with_fake_fs(strategy, instance, a, [seed, t, 1])
        else:
            b, _, _ = run_strategy(strategy, instance, a, [seed, t, 1], record=False)
        wins += b == sto_value(a)
    p = wins / trials
    return p, _stderr(p, trials)


def fake_fs_validity(instance: ProblemInstance, trials: int, seed: int):
    """(rate, stderr) of valid simulations over random marked inputs."""
    if trials < 1:
        raise STOError("trials must be at least 1")
    probe = Strategy("halt", lambda N, M, rng: iter([Halt(0)]))
    ok = 0
    for t in range(trials):
        a = random_instance(instance.N, instance.M, True, seed=[seed, t, 0])
        ok += simulate_with_fake_fs(probe, instance, a, [seed, t, 1])[2]
    p = ok / trials
    return p, _stderr(p, trials)


def rcc_bounded_bound(instance: ProblemInstance, gamma1: float = 1.0, gamma2: float = 1.0) -> BoundReport:
    """Optimum of min q_* c_* + q_S c_S s.t. q_* >= g1 M, q_* + q_S >= g2 N."""
    if gamma1 <= 0 or gamma2 <= 0:
        raise STOError("gamma1 and gamma2 must be positive")
    N, M = instance.N, instance.M
    cs, cst = float(instance.c_s), float(instance.c_star)
    if M / N > 1 / 9:
        return BoundReport("rcc_bounded", gamma1 * M * cst, "asymptotic", "set-membership-free branch: g1 M c_*")
    qs_min = gamma1 * M
    split = qs_min * cst + max(0.0, gamma2 * N - qs_min) * cs
    star_only = max(qs_min, gamma2 * N) * cst
    return BoundReport("rcc_bounded", min(split, star_only), "asymptotic", "two-constraint linear program, vertex comparison")
