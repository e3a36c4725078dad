"""Command-line front end.

Modes:
  solve     solve the instance, write mapping and report
  evaluate  report for a given mapping
  metrics   like evaluate, plus cut and communication-volume metrics
  sweep     re-solve for every F in --sweep-F, one report per value

Exit codes: 0 success, 2 usage, 3 malformed input, 4 infeasible, 5 missing route.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import (
    BadFactor,
    Infeasible,
    InfeasibleMapping,
    InconsistentRoute,
    InvalidPath,
    MissingRoute,
    ParseError,
    TopologyError,
)
from .metrics import BaselineMetrics, baseline_metrics
from .objective import MakespanReport, evaluate
from .solvers import SolveConfig, SolveResult, solve
from .topology import ROUTED, TableOracle, make_oracle, parse_factor, read_route_table, read_topology
from .workload import read_graph

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INFEASIBLE = 4
EXIT_MISSING_ROUTE = 5

MODES = ("solve", "evaluate", "metrics", "sweep")


class UsageError(Exception):
    pass


@dataclass
class RunSpec:
    mode: str
    topology: Path
    graph: Path
    routes: Path | None = None
    mapping: Path | None = None
    F: Fraction | None = None
    seed: int = 0
    restarts: int = 2
    max_passes: int = 30
    workers: int = 1
    time_budget: float | None = None
    out_mapping: Path | None = None
    out_report: Path | None = None
    sweep_F: list[Fraction] = field(default_factory=list)

    def validate(self):
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.mode in ("evaluate", "metrics") and self.mapping is None:
            raise UsageError(f"mode {self.mode} needs --mapping")
        if self.mode == "sweep" and not self.sweep_F:
            raise UsageError("mode sweep needs --sweep-F")


def fmt_value(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def format_report(report: MakespanReport, extra: dict | None = None,
                  metrics: BaselineMetrics | None = None) -> str:
    """Flat ``key=value`` report, one entry per line."""
    lines = [f"{k}={fmt_value(v)}" for k, v in (extra or {}).items()]
    kind, ident = report.bottleneck
    lines.append(f"makespan={fmt_value(report.makespan)}")
    lines.append(f"bottleneck={kind}:{ident}")
    lines += [f"comp.{b}={c}" for b, c in enumerate(report.comp)]
    lines += [f"comm.{l}={fmt_value(c)}" for l, c in enumerate(report.comm)]
    lines += [f"scaled_comm.{l}={fmt_value(c)}" for l, c in enumerate(report.scaled_comm)]
    if metrics is not None:
        lines.append(f"cut.total={metrics.total_cut}")
        lines.append(f"cut.max={metrics.max_cut}")
        lines.append(f"cvol.total={metrics.cvol_total}")
        lines.append(f"cvol.max={metrics.cvol_max}")
        lines += [f"cvol.{b}={c}" for b, c in metrics.cvol_per_block.items()]
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key] = value
    return out


def format_mapping(mapping) -> str:
    return "".join(f"{b}\n" for b in mapping)


def parse_mapping(text: str, n: int | None = None) -> tuple[int, ...]:
    """One 0-based bin id per line; line i belongs to vertex i."""
    out = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise ParseError(f"expected a bin id, got {line!r}", no) from None
    if n is not None and len(out) != n:
        raise ParseError(f"mapping lists {len(out)} vertices, graph has {n}")
    return tuple(out)


def read_mapping(path, n=None):
    try:
        return parse_mapping(Path(path).read_text(), n)
    except ParseError as e:
        raise e.with_source(path) from None


def _sweep_path(path: Path, f: Fraction) -> Path:
    tag = fmt_value(f).replace("/", "_")
    return path.with_name(f"{path.stem}.F{tag}{path.suffix}")


def _load(spec: RunSpec):
    topology = read_topology(spec.topology)
    if spec.F is not None:
        topology = topology.with_global_factor(spec.F)
    graph = read_graph(spec.graph)
    if spec.routes is not None:
        oracle = read_route_table(spec.routes, topology)
    elif topology.kind == ROUTED:
        raise UsageError("routed topologies need --routes")
    else:
        oracle = make_oracle(topology)
    return topology, graph, oracle


def _check_routes(oracle):
    if isinstance(oracle, TableOracle):
        missing = oracle.missing_pairs()
        if missing:
            a, b = missing[0]
            raise MissingRoute(f"route table has no entry for compute bins ({a},{b}) "
                               f"({len(missing)} pairs missing)")


def _solve_once(spec, graph, topology, oracle) -> SolveResult:
    config = SolveConfig(seed=spec.seed, restarts=spec.restarts, max_passes=spec.max_passes,
                         time_budget=spec.time_budget, workers=spec.workers)
    return solve(graph, topology, oracle, config)


def _emit(text: str, path: Path | None, stdout):
    if path is None:
        stdout.write(text)
    else:
        path.write_text(text)


def run(spec: RunSpec, stdout=None) -> int:
    """Execute one run. Raises on errors; see :func:`main` for exit codes."""
    stdout = stdout or sys.stdout
    spec.validate()
    topology, graph, oracle = _load(spec)

    if spec.mode in ("evaluate", "metrics"):
        mapping = read_mapping(spec.mapping, graph.n)
        report = evaluate(graph, mapping, topology, oracle)
        metrics = baseline_metrics(graph, mapping) if spec.mode == "metrics" else None
        extra = {"mode": spec.mode, "F": topology.global_factor}
        _emit(format_report(report, extra, metrics), spec.out_report, stdout)
        return EXIT_OK

    _check_routes(oracle)
    if spec.mode == "solve":
        res = _solve_once(spec, graph, topology, oracle)
        extra = {"mode": "solve", "F": topology.global_factor, "seed": spec.seed,
                 "proven_optimal": res.proven_optimal}
        if spec.out_mapping is not None:
            spec.out_mapping.write_text(format_mapping(res.mapping))
        _emit(format_report(res.report, extra), spec.out_report, stdout)
        return EXIT_OK

    # sweep
    for f in spec.sweep_F:
        top_f = topology.with_global_factor(f)
        res = _solve_once(spec, graph, top_f, oracle)
        extra = {"mode": "sweep", "F": f, "seed": spec.seed, "proven_optimal": res.proven_optimal}
        text = format_report(res.report, extra)
        if spec.out_mapping is not None:
            _sweep_path(spec.out_mapping, f).write_text(format_mapping(res.mapping))
        if spec.out_report is None:
            stdout.write(text + "\n")
        else:
            _sweep_path(spec.out_report, f).write_text(text)
    return EXIT_OK


def _factor_arg(text):
    try:
        return parse_factor(text)
    except BadFactor as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _factor_list(text):
    return [_factor_arg(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="procmap", description="Makespan-minimizing process mapping.")
    p.add_argument("--mode", choices=MODES, default="solve")
    p.add_argument("--topology", type=Path, required=True)
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--routes", type=Path)
    p.add_argument("--mapping", type=Path)
    p.add_argument("--F", type=_factor_arg, help="global communication factor (overrides the topology file)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=2)
    p.add_argument("--max-passes", type=int, default=30)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--time-budget", type=float, help="seconds; results may then depend on machine speed")
    p.add_argument("--out-mapping", type=Path)
    p.add_argument("--out-report", type=Path)
    p.add_argument("--sweep-F", type=_factor_list, default=[])
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    spec = RunSpec(
        mode=args.mode, topology=args.topology, graph=args.graph, routes=args.routes,
        mapping=args.mapping, F=args.F, seed=args.seed, restarts=args.restarts,
        max_passes=args.max_passes, workers=args.workers, time_budget=args.time_budget,
        out_mapping=args.out_mapping, out_report=args.out_report, sweep_F=args.sweep_F,
    )
    try:
        return run(spec)
    except UsageError as e:
        print(f"procmap: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MissingRoute as e:
        print(f"procmap: MissingRoute: {e}", file=sys.stderr)
        return EXIT_MISSING_ROUTE
    except (InfeasibleMapping, Infeasible) as e:
        print(f"procmap: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ParseError, TopologyError, InvalidPath, InconsistentRoute) as e:
        print(f"procmap: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as e:
        print(f"procmap: {e}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
