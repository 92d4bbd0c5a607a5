"""Command-line interface: ``greenadopt <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data or format error, 3 internal
bound violation (a contradiction that indicates a bug).
"""
from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .dynamics import BoundViolationError, SubsidySchedule, run
from .graph_core import (
    GraphFormatError,
    complete_graph,
    derive_thresholds,
    format_fraction,
    gen_class1,
    gen_class2,
    gen_rewired_clusters,
    gen_star,
    graph_text,
    metrics,
    path_graph,
    read_graph,
    to_fraction,
    write_graph,
)
from .ip_gen import (
    ConstraintViolationError,
    LpFormatError,
    build_model,
    decode_and_verify,
    export_lp,
    parse_solution,
    read_lp,
)
from .optimize import (
    VARIANTS,
    InfeasibleError,
    PlanningProblem,
    SolveTimeout,
    greedy,
    random_baseline,
    solve_exact,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BOUND = 0, 1, 2, 3

CSV_HEADER = [
    "seed", "p", "alpha", "C", "L", "variant", "k", "opt_size_or_adoption",
    "random_mean", "random_min", "random_max", "solve_ms",
]


class UsageError(Exception):
    pass


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"{message} at line {line}")
        self.line = line


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _frac(s: str) -> Fraction:
    try:
        return to_fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None


def _nodes(s: str) -> list[int]:
    try:
        return [int(t) for t in s.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad node list: {s!r}") from None


def _ratio(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _num(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{float(x):.6g}"


# -- commands ------------------------------------------------------------------


def cmd_gen(args, out) -> int:
    fam = args.family
    alpha = args.alpha
    if fam == "class1":
        graph, th = gen_class1(args.n)
    elif fam == "class2":
        graph, th = gen_class2(args.n)
    elif fam == "star":
        graph, th = gen_star(args.leaves, alpha if alpha is not None else Fraction(1, 2))
    elif fam == "rewired":
        if args.seed is None:
            raise UsageError("gen rewired needs --seed")
        graph = gen_rewired_clusters(args.clusters, args.size, args.p, args.seed)
        th = derive_thresholds(graph, alpha if alpha is not None else Fraction(1, 2))
    elif fam == "path":
        graph = path_graph(args.n)
        th = derive_thresholds(graph, alpha if alpha is not None else Fraction(1, 2))
    else:
        graph = complete_graph(args.n)
        th = derive_thresholds(graph, alpha if alpha is not None else Fraction(1, 2))
    if args.out:
        write_graph(graph, th, args.out)
    else:
        out.write(graph_text(graph, th))
    return EXIT_OK


def _schedule(args, nodes):
    if args.fd is not None:
        return SubsidySchedule.fixed_duration(nodes, args.fd)
    if args.indefinite:
        return SubsidySchedule.indefinite(nodes)
    return SubsidySchedule.temporary(nodes)


def cmd_simulate(args, out) -> int:
    graph, th = read_graph(args.graph)
    traj, report = run(graph, th, _schedule(args, args.subsidize), audit=args.audit)
    out.write(traj.dump(report) + "\n")
    return EXIT_OK


def _problem(args, graph, th) -> PlanningProblem:
    if args.variant.startswith("fd") and args.d is None:
        raise UsageError("--d is required for fixed-duration variants")
    if args.variant.endswith("BMC") and args.k is None:
        raise UsageError("--k is required for budgeted variants")
    return PlanningProblem(args.variant, graph, th, d=args.d, k=args.k)


def cmd_optimize(args, out) -> int:
    graph, th = read_graph(args.graph)
    problem = _problem(args, graph, th)
    if args.method == "random":
        size = problem.k if not problem.is_mcc else args.size
        if size is None:
            raise UsageError("--size is required for random MCC baselines")
        summary = random_baseline(problem, min(size, graph.node_count), args.trials, args.seed)
        out.write(f"variant={problem.variant} method=random trials={args.trials} size={size}\n")
        out.write(f"mean={_ratio(summary.mean)} min={_ratio(summary.min)} max={_ratio(summary.max)}\n")
        return EXIT_OK
    try:
        if args.method == "greedy":
            result = greedy(problem)
        else:
            result = solve_exact(problem, node_cap=args.node_cap, time_budget=args.time_budget)
    except SolveTimeout as exc:
        out.write(f"variant={problem.variant} method={args.method}\nobjective=timeout\n")
        if exc.incumbent is not None:
            out.write("incumbent=" + ",".join(map(str, exc.incumbent)) + "\n")
        return EXIT_OK
    rep = result.certificate
    out.write(f"variant={problem.variant} method={args.method}\n")
    out.write("subsidy_set=" + ",".join(map(str, result.subsidy_set)) + "\n")
    out.write(f"objective={format_fraction(result.objective)}\n")
    out.write(f"adoption={_ratio(rep.longterm_adoption)} cycle={rep.cycle_length} transient={rep.transient}\n")
    out.write(f"optimal={'yes' if result.optimal else 'no'} nodes_explored={result.nodes_explored}\n")
    return EXIT_OK


def cmd_export_ip(args, out) -> int:
    graph, th = read_graph(args.graph)
    problem = _problem(args, graph, th)
    model = build_model(problem.variant, graph, th, d=args.d, k=args.k)
    export_lp(model, args.out, scaled=not args.decimal)
    out.write(f"wrote {args.out}: {len(model.variables)} variables, {len(model.constraints)} constraints\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    graph, th = read_graph(args.graph)
    problem = _problem(args, graph, th)
    model = build_model(problem.variant, graph, th, d=args.d, k=args.k)
    if args.model:
        parsed = read_lp(args.model)
        parsed.variant, parsed.d = model.variant, model.d
        parsed.node_count, parsed.horizon = model.node_count, model.horizon
        model = parsed
    with open(args.solution, encoding="utf-8") as fh:
        solution = parse_solution(fh.read())
    report = decode_and_verify(model, solution, graph, th)
    out.write(report.text())
    return EXIT_OK if report.lag_audit else EXIT_BOUND


# -- experiments ---------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    clusters: int
    size: int
    p_grid: tuple[Fraction, ...]
    seeds: tuple[int, ...]
    alpha_grid: tuple[Fraction, ...]
    variant: str
    d: int | None
    k_grid: tuple[int, ...]
    trials: int
    base_seed: int
    time_budget: float | None
    workers: int
    out: str | None


_LIST_KEYS = {"p", "seeds", "alpha", "k"}
_KNOWN = {"family", "clusters", "size", "p", "seeds", "alpha", "variant", "d", "k",
          "trials", "base_seed", "time_budget", "workers", "out"}


def parse_config(text: str) -> ExperimentConfig:
    """``key value`` lines; list keys take comma or space separated values."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        key = parts[0]
        if key not in _KNOWN:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        raw[key] = (parts[1].strip() if len(parts) > 1 else "", lineno)

    def get(key, conv, default=None, required=False):
        if key not in raw:
            if required:
                raise ConfigError(f"missing key {key!r}")
            return default
        val, ln = raw[key]
        try:
            if key in _LIST_KEYS:
                items = tuple(conv(t) for t in val.replace(",", " ").split())
                if not items:
                    raise ConfigError(f"empty grid for {key!r}", ln)
                return items
            return conv(val)
        except ConfigError:
            raise
        except (ValueError, ZeroDivisionError, argparse.ArgumentTypeError):
            raise ConfigError(f"bad value for {key!r}: {val!r}", ln) from None

    family = get("family", str, "rewired")
    if family != "rewired":
        raise ConfigError(f"unsupported family {family!r}", raw["family"][1])
    variant = get("variant", str, required=True)
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}", raw["variant"][1])
    d = get("d", int)
    if variant.startswith("fd") and (d is None or d < 1):
        raise ConfigError("fixed-duration variants need d >= 1")
    k_grid = get("k", int, ())
    if variant.endswith("BMC") and not k_grid:
        raise ConfigError("budgeted variants need a k grid")
    cfg = ExperimentConfig(
        family=family,
        clusters=get("clusters", int, 5),
        size=get("size", int, 6),
        p_grid=get("p", _frac, required=True),
        seeds=get("seeds", int, required=True),
        alpha_grid=get("alpha", _frac, required=True),
        variant=variant,
        d=d,
        k_grid=k_grid if variant.endswith("BMC") else (),
        trials=get("trials", int, 10),
        base_seed=get("base_seed", int, 0),
        time_budget=get("time_budget", float),
        workers=get("workers", int, 1),
        out=get("out", str),
    )
    if cfg.trials < 1 or cfg.workers < 1:
        raise ConfigError("trials and workers must be >= 1")
    for a in cfg.alpha_grid:
        if not 0 <= a <= 1:
            raise ConfigError(f"alpha {a} outside [0, 1]")
    return cfg


@dataclass(frozen=True)
class Cell:
    seed: int
    p: Fraction
    alpha: Fraction
    k: int | None

    @property
    def key(self):
        return (self.seed, self.p, self.alpha, -1 if self.k is None else self.k)


def cells(cfg: ExperimentConfig) -> list[Cell]:
    ks = cfg.k_grid or (None,)
    out = [Cell(s, p, a, k) for s in cfg.seeds for p in cfg.p_grid for a in cfg.alpha_grid for k in ks]
    return sorted(out, key=lambda c: c.key)


def cell_rng_seed(cfg: ExperimentConfig, cell: Cell) -> str:
    return f"{cfg.base_seed}:{cell.seed}:{format_fraction(cell.p)}:{format_fraction(cell.alpha)}:{cell.k}"


def run_cell(cfg: ExperimentConfig, cell: Cell) -> list[str]:
    """One CSV row; depends only on ``cfg`` and ``cell``."""
    graph = gen_rewired_clusters(cfg.clusters, cfg.size, cell.p, cell.seed)
    th = derive_thresholds(graph, cell.alpha)
    met = metrics(graph)
    problem = PlanningProblem(cfg.variant, graph, th, d=cfg.d, k=cell.k)
    n = graph.node_count
    t0 = time.perf_counter()
    try:
        result = solve_exact(problem, node_cap=None, time_budget=cfg.time_budget)
    except SolveTimeout:
        result = None
    ms = round((time.perf_counter() - t0) * 1000)
    row = [
        str(cell.seed), format_fraction(cell.p), format_fraction(cell.alpha),
        f"{met.clustering_coefficient:.4f}",
        "" if met.avg_path_length is None else f"{met.avg_path_length:.4f}",
        cfg.variant, "" if cell.k is None else str(cell.k),
    ]
    if result is None:
        return row + ["opt=timeout", "", "", "", str(ms)]
    if problem.is_mcc:
        size = len(result.subsidy_set)
        headline = str(size)
    else:
        size = len(result.subsidy_set)
        headline = _num(result.objective * n)
    base = random_baseline(problem, size, cfg.trials, cell_rng_seed(cfg, cell))
    return row + [headline, _num(base.mean * n), _num(base.min * n), _num(base.max * n), str(ms)]


def _run_cell_args(job):
    return run_cell(*job)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> list[list[str]]:
    jobs = [(cfg, c) for c in cells(cfg)]
    workers = cfg.workers if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [run_cell(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, which is the sorted cell order
        return list(pool.map(_run_cell_args, jobs))


def write_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)


def cmd_experiment(args, out) -> int:
    with open(args.config, encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    if args.seed is not None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "base_seed": args.seed})
    rows = run_experiment(cfg, args.workers)
    target = args.out or cfg.out
    if target:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, out)
    return EXIT_OK


# -- wiring --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="greenadopt", description="Threshold adoption with subsidies.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="explicit random seed")

    g = sub.add_parser("gen", help="write a graph file")
    g.add_argument("family", choices=["class1", "class2", "star", "rewired", "path", "complete"])
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--leaves", type=int, default=4)
    g.add_argument("--clusters", type=int, default=5)
    g.add_argument("--size", type=int, default=6)
    g.add_argument("--p", type=_frac, default=Fraction(0))
    g.add_argument("--alpha", type=_frac, default=None)
    g.add_argument("--out", default=None)
    common(g)

    def planning(p):
        p.add_argument("graph")
        p.add_argument("--variant", choices=VARIANTS, required=True)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--d", type=int, default=None)
        common(p)

    s = sub.add_parser("simulate", help="print a trajectory and its limit cycle")
    s.add_argument("graph")
    s.add_argument("--subsidize", type=_nodes, default=[])
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--fd", type=int, default=None, metavar="D")
    mode.add_argument("--temp", action="store_true")
    mode.add_argument("--indefinite", action="store_true")
    s.add_argument("--audit", action="store_true")
    common(s)

    o = sub.add_parser("optimize", help="find a subsidy set")
    planning(o)
    o.add_argument("--method", choices=["exact", "greedy", "random"], default="exact")
    o.add_argument("--trials", type=int, default=10)
    o.add_argument("--size", type=int, default=None, help="set size for random MCC baselines")
    o.add_argument("--time-budget", type=float, default=None)
    o.add_argument("--node-cap", type=int, default=32)

    e = sub.add_parser("export-ip", help="write the integer program as LP text")
    planning(e)
    e.add_argument("--out", required=True)
    e.add_argument("--decimal", action="store_true", help="decimal coefficients instead of scaled rows")

    v = sub.add_parser("verify", help="check a solver solution against the simulator")
    planning(v)
    v.add_argument("solution")
    v.add_argument("--model", default=None, help="LP file the solver consumed")

    x = sub.add_parser("experiment", help="run a parameter sweep and write CSV")
    x.add_argument("config")
    x.add_argument("--out", default=None)
    x.add_argument("--workers", type=int, default=None)
    common(x)
    return parser


COMMANDS = {
    "gen": cmd_gen,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "export-ip": cmd_export_ip,
    "verify": cmd_verify,
    "experiment": cmd_experiment,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("greenadopt: a command is required")
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except BoundViolationError as exc:
        err.write(f"bound violation: {exc}\n")
        return EXIT_BOUND
    except ConstraintViolationError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DATA
    except (GraphFormatError, LpFormatError, ConfigError, InfeasibleError, OSError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
