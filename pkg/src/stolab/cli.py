"""Command-line entry point: ``stolab <subcommand> [flags]``; all output is CSV."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .bounds import bounds_to_csv, conqcc_lower_bound, exact_lower_bound, qcc_lower_bound
from .classical import (
    adversary_game,
    classical_strategy,
    fake_fs_validity,
    heuristic_corpus,
    monte_carlo_success,
    rcc0,
    rcc_bounded_bound,
    three_quarter_strategy,
    transcript_to_csv,
)
from .core import ProblemInstance, STOError, as_fraction, random_instance
from .schedules import (
    build_alg1,
    build_alg2,
    hybrid_cost_asymptotic,
    optimal_hybrid_cost,
    optimize_hybrid,
    phi_opt,
)
from .statevec import parse_schedule, run_schedule, success_probability
from .subspace import audit_schedule


class UsageError(STOError):
    pass


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, int, str)):
        return str(x)
    return repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, newline="")
    else:
        sys.stdout.write(text)


def _instance(args) -> ProblemInstance:
    if args.n is None or args.m is None:
        raise UsageError("--n and --m are required")
    return ProblemInstance(args.n, args.m, as_fraction(args.c_star), as_fraction(args.c_s), args.epsilon)


# --- quantities available to sweeps ------------------------------------------


def _simulated_success(inst: ProblemInstance, seed: int) -> float:
    plan = optimize_hybrid(inst).plan
    a = random_instance(inst.N, inst.M, True, seed)
    psi, _ = run_schedule(inst, a, plan.schedule)
    return success_probability(psi, a)


QUANTITIES = {
    "alg1_cost": lambda inst, cfg: build_alg1(inst).predicted_cost,
    "alg2_cost": lambda inst, cfg: build_alg2(inst).predicted_cost,
    "hybrid_cost": lambda inst, cfg: optimal_hybrid_cost(inst)[1],
    "t_inner": lambda inst, cfg: optimal_hybrid_cost(inst)[0],
    "phi_opt": lambda inst, cfg: phi_opt(inst),
    "hybrid_asymptotic": lambda inst, cfg: hybrid_cost_asymptotic(inst),
    "qcc_adversary": lambda inst, cfg: qcc_lower_bound(inst).value,
    "conqcc_asymptotic": lambda inst, cfg: conqcc_lower_bound(inst, "asymptotic").value,
    "conqcc_exact": lambda inst, cfg: conqcc_lower_bound(inst, "exact_integer", cfg.k).value,
    "exact_lower_bound": lambda inst, cfg: exact_lower_bound(inst).value,
    "rcc0": lambda inst, cfg: rcc0(inst),
    "rcc_bounded": lambda inst, cfg: rcc_bounded_bound(inst).value,
    "simulated_success": lambda inst, cfg: _simulated_success(inst, cfg.seed),
    "audit_max_ratio": lambda inst, cfg: audit_schedule(inst, None, optimize_hybrid(inst).plan.schedule).max_ratio,
}

GRID_KEYS = ("N", "M", "c_star", "c_s", "epsilon")


@dataclass
class SweepConfig:
    grid: dict
    quantities: list
    out: str | None = None
    seed: int = 0
    k: Fraction = Fraction(1000)

    def points(self):
        for N in self.grid["N"]:
            for M in self.grid["M"]:
                for cst in self.grid["c_star"]:
                    for cs in self.grid["c_s"]:
                        for eps in self.grid["epsilon"]:
                            yield (N, M, cst, cs, eps)


def _parse_values(key: str, text: str) -> list:
    """Comma list of values, or ``lo:hi:step`` (inclusive, exact decimal steps)."""
    text = text.strip()
    if text.count(":") == 2:
        lo, hi, step = (Fraction(p.strip()) for p in text.split(":"))
        if step <= 0:
            raise UsageError(f"{key}: range step must be positive")
        vals = []
        while lo <= hi:
            vals.append(lo)
            lo += step
    else:
        vals = [as_fraction(v) for v in text.split(",") if v.strip()]
    if key in ("N", "M"):
        if any(v.denominator != 1 for v in vals):
            raise UsageError(f"{key} must be integers")
        return [int(v) for v in vals]
    if key == "epsilon":
        return [float(v) for v in vals]
    return vals


def parse_config(text: str) -> SweepConfig:
    raw = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {n}: expected 'key = value'")
        k, v = (p.strip() for p in line.split("=", 1))
        raw[k] = v
    unknown = set(raw) - set(GRID_KEYS) - {"quantities", "out", "seed", "k"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    grid = {}
    for key in GRID_KEYS:
        default = "0" if key == "epsilon" else None
        if key not in raw and default is None:
            raise UsageError(f"config is missing {key}")
        try:
            grid[key] = _parse_values(key, raw.get(key, default))
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"{key}: {exc}") from exc
        if not grid[key]:
            raise UsageError(f"{key}: empty grid")
    quantities = [q.strip() for q in raw.get("quantities", "hybrid_cost, conqcc_asymptotic").split(",") if q.strip()]
    bad = [q for q in quantities if q not in QUANTITIES]
    if bad or not quantities:
        raise UsageError(f"unknown quantities {bad}; choose from {sorted(QUANTITIES)}")
    return SweepConfig(grid, quantities, raw.get("out"), int(raw.get("seed", 0)), as_fraction(raw.get("k", 1000)))


def _label(point) -> str:
    return " ".join(f"{k}={v}" for k, v in zip(GRID_KEYS, point))


def run_sweep(config: SweepConfig, err=None) -> tuple[str, int]:
    """Evaluate every grid point; returns (csv text, number of failed points)."""
    err = err or sys.stderr
    points = list(config.points())
    instances = []
    for p in points:
        try:
            instances.append(ProblemInstance(*p))
        except STOError as exc:
            raise UsageError(f"invalid grid point {_label(p)}: {exc}") from exc
    rows, failures = [], 0
    for p, inst in zip(points, instances):
        row = list(p)
        for q in config.quantities:
            try:
                row.append(QUANTITIES[q](inst, config))
            except STOError as exc:
                failures += 1
                print(f"failed: {_label(p)} {q}: {exc}", file=err)
                row.append(None)
        rows.append(row)
    return _csv(list(GRID_KEYS) + config.quantities, rows), failures


# --- subcommands ----------------------------------------------------------------


FIG2_COLUMNS = ["c_s", "hybrid_asymptotic", "hybrid_exact_optimized", "alg1_cost", "alg2_cost", "conqcc_asymptotic", "qcc_adversary"]


def fig2_rows():
    for j in range(1, 101):
        cs = Fraction(j, 100)
        inst = ProblemInstance(10_000, 400, 1, cs, 0.0)
        yield [
            cs,
            hybrid_cost_asymptotic(inst),
            optimal_hybrid_cost(inst)[1],
            build_alg1(inst).predicted_cost,
            build_alg2(inst).predicted_cost,
            conqcc_lower_bound(inst, "asymptotic").value,
            qcc_lower_bound(inst).value,
        ]


def cmd_fig2(args) -> int:
    _emit(_csv(FIG2_COLUMNS, fig2_rows()), args.out)
    return 0


def cmd_optimize(args) -> int:
    inst = _instance(args)
    hp = optimize_hybrid(inst)
    p = hp.plan
    header = ["t_inner", "tau_outer", "alpha", "phi_opt", "q_star", "q_s", "cost", "nominal_cost", "predicted_success", "length"]
    _emit(_csv(header, [[hp.t_inner, hp.tau_outer, hp.alpha, phi_opt(inst), p.predicted_q_star, p.predicted_q_s, p.predicted_cost, p.nominal_cost, p.predicted_success, len(p.schedule)]]), args.out)
    if args.plan:
        Path(args.plan).write_text(p.to_text(), newline="")
    return 0


def cmd_simulate(args) -> int:
    if not args.plan:
        raise UsageError("simulate needs --plan FILE")
    inst, schedule = parse_schedule(Path(args.plan).read_text())
    a = random_instance(inst.N, inst.M, True, args.seed)
    psi, ledger = run_schedule(inst, a, schedule)
    header = ["N", "M", "i_star", "q_star", "q_s", "cost", "success"]
    _emit(_csv(header, [[inst.N, inst.M, a.i_star, ledger.q_star, ledger.q_s, ledger.total, success_probability(psi, a)]]), args.out)
    return 0


def cmd_bounds(args) -> int:
    inst = _instance(args)
    reports = []
    if args.mode in ("all", "asymptotic"):
        reports.append(conqcc_lower_bound(inst, "asymptotic"))
    if args.mode in ("all", "exact_integer"):
        reports.append(conqcc_lower_bound(inst, "exact_integer", args.k))
    reports.append(qcc_lower_bound(inst))
    if inst.N > inst.M >= 2:
        reports.append(exact_lower_bound(inst))
    reports.append(rcc_bounded_bound(inst))
    _emit(bounds_to_csv(reports), args.out)
    return 0


def cmd_classical(args) -> int:
    inst = _instance(args)
    if args.mode == "game":
        if args.transcript:
            strat = {s.name: s for s in heuristic_corpus(inst)}.get(args.transcript)
            if strat is None:
                raise UsageError(f"unknown strategy {args.transcript!r}")
            _emit(transcript_to_csv(adversary_game(strat, inst).transcript), args.out)
            return 0
        rows = []
        for s in heuristic_corpus(inst):
            g = adversary_game(s, inst)
            rows.append([s.name, g.forced_cost, g.certified, rcc0(inst)])
        _emit(_csv(["strategy", "forced_cost", "certified", "rcc0"], rows), args.out)
    elif args.mode == "montecarlo":
        rows = []
        for s in (classical_strategy("Alg4"), classical_strategy("Alg5")):
            rows.append([s.name, "direct", *monte_carlo_success(s, inst, args.trials, args.seed)])
        rows.append([three_quarter_strategy().name, "simulated_set", *monte_carlo_success(three_quarter_strategy(), inst, args.trials, args.seed, fake_fs=True)])
        rows.append(["validity", "simulated_set", *fake_fs_validity(inst, args.trials, args.seed)])
        _emit(_csv(["strategy", "oracle", "estimate", "stderr"], rows), args.out)
    else:
        raise UsageError("classical --mode must be game or montecarlo")
    return 0


def cmd_sweep(args) -> int:
    if not args.config:
        raise UsageError("sweep needs --config FILE")
    cfg = parse_config(Path(args.config).read_text())
    if args.seed is not None:
        cfg.seed = args.seed
    text, failures = run_sweep(cfg)
    _emit(text, args.out or cfg.out)
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stolab", description="Search with a cheap set oracle and an expensive marked-item oracle.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, instance=True):
        if instance:
            p.add_argument("--n", type=int)
            p.add_argument("--m", type=int)
            p.add_argument("--c-star", default="1")
            p.add_argument("--c-s", default="1")
            p.add_argument("--epsilon", type=float, default=0.0)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("simulate", help="replay a serialized plan on a random marked input")
    common(p, instance=False)
    p.add_argument("--plan", help="plan file written by 'optimize --plan'")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="cheapest hybrid plan for an instance")
    common(p)
    p.add_argument("--plan", help="also write the compiled schedule here")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bounds", help="all lower bounds for an instance")
    common(p)
    p.add_argument("--mode", choices=["all", "asymptotic", "exact_integer"], default="all")
    p.add_argument("--k", default="1000", help="cost scale for exact_integer mode")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("classical", help="adversary games or Monte Carlo runs")
    common(p)
    p.add_argument("--mode", choices=["game", "montecarlo"], default="game")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--transcript", help="print the game transcript of one strategy")
    p.set_defaults(func=cmd_classical)

    p = sub.add_parser("sweep", help="evaluate quantities over a grid from a key = value config")
    common(p, instance=False)
    p.add_argument("--config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fig2", help="cost curves over c_s in [0.01, 1] at N=10^4, M=400")
    common(p, instance=False)
    p.set_defaults(func=cmd_fig2)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and args.command != "sweep":
        args.seed = 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stolab {args.command}: {exc}", file=sys.stderr)
        return 2
    except (STOError, OSError) as exc:
        print(f"stolab {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
