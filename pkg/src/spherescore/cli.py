"""Command line entry point: ``spherescore {analyze,simulate-null,simulate-example2,verify}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .analysis import DESIGNS, METHODS, PROCEDURES, AnalysisConfig, read_matrix, run_analysis
from .design import Design
from .errors import ConfigError, DesignError, InvalidData, NumericalError, ParseError, SphereScoreError
from .mc_verify import SimConfig, default_workers, simulate_example2, simulate_null_level

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_USAGE = 2  # argparse
EXIT_PARSE = 3
EXIT_DESIGN = 4
EXIT_NUMERICAL = 5
EXIT_CONFIG = 6


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ParseError, InvalidData)):
        return EXIT_PARSE
    if isinstance(exc, DesignError):
        return EXIT_DESIGN
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_CONFIG


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _add_procedure_flags(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--procedure", choices=PROCEDURES, default="simple")
    p.add_argument("--k", type=int, default=1, help="stop after k non-significant results (hommel-kropf)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spherescore", description="Exact beta tests of data-driven scores.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="test scores of a CSV/TSV data file")
    a.add_argument("input")
    a.add_argument("--design", choices=DESIGNS, default="one-group")
    a.add_argument("--labels", metavar="COL", help="two-group label column")
    a.add_argument("--target", metavar="COL", help="correlation target column")
    a.add_argument("--q-matrix", metavar="FILE", help="general design: Q")
    a.add_argument("--qh-matrix", metavar="FILE", help="general design: Q_H")
    a.add_argument("--method", choices=METHODS, default="pca")
    a.add_argument("--response", metavar="COL", help="regression method: variable regressed on the rest")
    a.add_argument("--max-scores", type=int, help="test at most this many scores")
    a.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_procedure_flags(a)

    s = sub.add_parser("simulate-null", help="Monte Carlo level / FWE check under spherical null data")
    s.add_argument("--design", choices=DESIGNS, default="one-group")
    s.add_argument("--n", type=int, default=10, help="individuals (one-group, correlation)")
    s.add_argument("--sizes", type=int, nargs=2, metavar=("N1", "N2"), help="group sizes (two-group)")
    s.add_argument("--p", type=int, default=5)
    s.add_argument("--q-matrix", metavar="FILE")
    s.add_argument("--qh-matrix", metavar="FILE")
    s.add_argument("--method", choices=METHODS[:-1], default="pca")
    s.add_argument("--runs", type=int, default=10_000)
    s.add_argument("--workers", type=int, help="worker processes (default from SPHERESCORE_WORKERS)")
    s.add_argument("--format", choices=("json", "table"), default="table")
    _add_procedure_flags(s)

    e = sub.add_parser("simulate-example2", help="10 x 3 normal data with mean (0, 0, 3), column-sum ordering")
    e.add_argument("--runs", type=int, default=1_000_000)
    e.add_argument("--alpha", type=float, default=0.05)
    e.add_argument("--ordering", choices=("column-sum", "diagonal"), default="column-sum")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--workers", type=int)
    e.add_argument("--format", choices=("json", "table"), default="table")
    e.add_argument("--out")

    v = sub.add_parser("verify", help="run the quick invariant checks")
    v.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_analyze(args) -> int:
    cfg = AnalysisConfig(
        input=args.input,
        design=args.design,
        labels=args.labels,
        target=args.target,
        q_matrix=args.q_matrix,
        qh_matrix=args.qh_matrix,
        method=args.method,
        response=args.response,
        alpha=args.alpha,
        procedure=args.procedure,
        k=args.k,
        max_scores=args.max_scores,
        seed=args.seed,
        format=args.format,
    )
    result = run_analysis(cfg)
    _emit(result.render(cfg.format), args.out)
    return EXIT_OK


def _null_design(args) -> tuple[Design, int]:
    if args.design == "two-group":
        if not args.sizes:
            raise ConfigError("two-group simulation needs --sizes N1 N2")
        n1, n2 = args.sizes
        return Design.two_group((n1, n2)), n1 + n2
    if args.design == "correlation":
        # fixed, evenly spaced target
        return Design.correlation(range(args.n)), args.n
    if args.design == "general":
        if not (args.q_matrix and args.qh_matrix):
            raise ConfigError("general simulation needs --q-matrix and --qh-matrix")
        d = Design.general(read_matrix(args.q_matrix), read_matrix(args.qh_matrix))
        return d, d.projections.n
    return Design.one_group(), args.n


def _cmd_simulate_null(args) -> int:
    if args.procedure == "hommel-kropf" and args.k < 1:
        raise ConfigError("k must be >= 1")
    design, n = _null_design(args)
    k = args.k if args.procedure == "hommel-kropf" else 1
    cfg = SimConfig(
        n=n,
        p=args.p,
        runs=args.runs,
        alpha=args.alpha,
        seed=args.seed,
        design=design,
        method=args.method,
        procedures=((args.procedure, k),),
    )
    workers = args.workers if args.workers is not None else default_workers()
    report = simulate_null_level(cfg, workers)
    _emit((report.to_json() if args.format == "json" else report.to_table()) + "\n", args.out)
    return EXIT_OK


def _cmd_example2(args) -> int:
    if args.runs < 1 or not 0 < args.alpha < 1:
        raise ConfigError("runs must be >= 1 and alpha in (0, 1)")
    report = simulate_example2(
        runs=args.runs, seed=args.seed, alpha=args.alpha, ordering=args.ordering, workers=args.workers
    )
    _emit((report.to_json() if args.format == "json" else report.to_table()) + "\n", args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_all

    ok = True
    for res in run_all(args.seed):
        print(res.line(), flush=True)
        ok &= res.passed
    return EXIT_OK if ok else EXIT_FAILED_CHECK


COMMANDS = {
    "analyze": _cmd_analyze,
    "simulate-null": _cmd_simulate_null,
    "simulate-example2": _cmd_example2,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SphereScoreError as exc:
        print(f"spherescore: error: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
