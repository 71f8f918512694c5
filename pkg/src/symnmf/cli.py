"""Command-line front end.

Subcommands::

    symnmf synth      generate a synthetic low-rank nonnegative target
    symnmf factorize  run a solver on a matrix, emit trace + certificate
    symnmf cluster    similarity construction + factorization + labels
    symnmf report     render figures from previously written traces

`factorize` and `cluster` write, into the output directory, the iteration
trace as CSV, the final factors in MatrixMarket form, and a machine-readable
``certificate.json`` holding the termination reason, final first-order
residual, factor gap, the penalty weight used and its certified threshold.

Exit codes: 0 success, 1 usage or input error, 2 stopped at the iteration
cap, 3 numeric failure.  Wall-clock timing in trace files is opt-in
(``--timing``); without it the elapsed column is written as zero so that
repeated runs with the same seed produce byte-identical files.

The ``SYMNMF_LOG`` environment variable (``off``, ``info`` or ``debug``)
controls diagnostic logging on stderr.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io as matio
from .cluster import assign_labels, clustering_accuracy
from .graph import DEFAULT_NEIGHBOR_COUNT, build_similarity
from .nnls import NumericalError
from .objective import fitting_error
from .report import render_report
from .solvers import SOLVER_NAMES, SolverConfig, run_solver

log = logging.getLogger("symnmf")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MAX_ITERS = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; 2 means "iteration cap
    # reached" here, so remap.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _setup_logging():
    level_name = os.environ.get("SYMNMF_LOG", "off").lower()
    levels = {"off": logging.CRITICAL + 10, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        raise ValueError(f"SYMNMF_LOG must be one of off, info, debug; got {level_name!r}")
    logging.basicConfig(stream=sys.stderr, format="%(name)s %(levelname)s %(message)s")
    log.setLevel(levels[level_name])


def _add_solver_flags(p):
    p.add_argument("--solver", choices=SOLVER_NAMES, default="symanls")
    p.add_argument("--rank", type=int, required=True, help="number of factor columns")
    p.add_argument(
        "--lambda-mult",
        type=float,
        default=1.01,
        dest="lambda_mult",
        help="penalty weight as a multiple of the certified threshold",
    )
    p.add_argument(
        "--lambda",
        type=float,
        default=None,
        dest="lambda_abs",
        help="absolute penalty weight (overrides --lambda-mult)",
    )
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tol-step", type=float, default=1e-9)
    p.add_argument("--tol-kkt", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument(
        "--pgd-step",
        choices=("backtracking", "lipschitz"),
        default="backtracking",
        dest="pgd_step",
        help="step policy for the gradient methods",
    )
    p.add_argument(
        "--pgd-step-size",
        type=float,
        default=None,
        dest="pgd_step_size",
        help="fixed gradient step, overriding --pgd-step",
    )
    p.add_argument(
        "--timing",
        action="store_true",
        help="record wall time in the trace (makes output files run-dependent)",
    )
    p.add_argument("--out", type=Path, required=True, help="output directory")


def _config_from_args(args):
    return SolverConfig(
        lambda_multiplier=args.lambda_mult,
        max_iterations=args.max_iters,
        tol_step=args.tol_step,
        tol_kkt=args.tol_kkt,
        seed=args.seed,
        threads=args.threads,
        pgd_step=args.pgd_step,
        pgd_step_size=args.pgd_step_size,
    )


def _synth_factors(n, rank, seed):
    rng = np.random.default_rng(seed)
    u_star = np.abs(rng.standard_normal((n, rank)))
    x = u_star @ u_star.T
    return (x + x.T) / 2.0, u_star

def synth_target(n, rank, seed):
    """Seeded synthetic instance: X = U* U*^T with |N(0,1)| factor entries."""
    return _synth_factors(n, rank, seed)


def _strip_timing(trace):
    return [dataclasses.replace(r, elapsed_seconds=0.0) for r in trace]


def _write_run_outputs(out_dir, result, x, args, extra=None):
    out_dir.mkdir(parents=True, exist_ok=True)
    trace = result.trace if args.timing else _strip_timing(result.trace)
    matio.write_trace(out_dir / "trace.csv", trace)
    matio.write_matrix(out_dir / "u.mtx", result.u_final)
    matio.write_matrix(out_dir / "v.mtx", result.v_final)

    x_norm_sq = float(np.sum(x * x))
    fit = fitting_error(x, result.u_final) if x_norm_sq > 0 else 0.0
    certificate = {
        "solver": result.solver,
        "termination": result.termination,
        "iterations": result.trace[-1].k,
        "kkt_residual": result.kkt_residual_final,
        "symmetry_gap": result.symmetry_gap_final,
        "lambda": result.lambda_used,
        "lambda_threshold": result.lambda_threshold,
        "fitting_error": fit,
        "f_final": result.trace[-1].f_value,
        "n": int(x.shape[0]),
        "rank": args.rank,
        "seed": args.seed,
    }
    if extra:
        certificate.update(extra)
    with open(out_dir / "certificate.json", "w", encoding="ascii") as fh:
        json.dump(certificate, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return certificate


def _finish_run(result, certificate, out_dir):
    print(
        f"{result.solver}: termination={result.termination} "
        f"iterations={certificate['iterations']} "
        f"fitting_error={certificate['fitting_error']:.6e} "
        f"symmetry_gap={certificate['symmetry_gap']:.6e}"
    )
    print(f"outputs written to {out_dir}")
    if result.termination == "max_iters":
        return EXIT_MAX_ITERS
    if result.termination == "diverged":
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_synth(args):
    if args.rank < 1 or args.n < args.rank:
        raise ValueError(f"need n >= rank >= 1, got n={args.n}, rank={args.rank}")
    x, u_star = _synth_factors(args.n, args.rank, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    matio.write_matrix(args.out / "x.mtx", x)
    matio.write_matrix(args.out / "u_star.mtx", u_star)
    log.info("synthetic target: n=%d rank=%d seed=%d", args.n, args.rank, args.seed)
    print(f"wrote {args.out / 'x.mtx'} and {args.out / 'u_star.mtx'}")
    return EXIT_OK


def cmd_factorize(args):
    if (args.input is None) == (args.synth_n is None):
        raise ValueError("exactly one of --input or --synth-n is required")
    if args.input is not None:
        x = matio.read_matrix(args.input)
    else:
        x, _ = _synth_factors(args.synth_n, args.rank, args.seed)

    config = _config_from_args(args)
    result = run_solver(x, args.rank, args.solver, config, lam=args.lambda_abs)
    certificate = _write_run_outputs(args.out, result, x, args)
    return _finish_run(result, certificate, args.out)


def _read_labels(path):
    tokens = Path(path).read_text(encoding="ascii").replace(",", " ").split()
    if not tokens:
        raise ValueError(f"{path}: no labels found")
    try:
        return np.array([int(t) for t in tokens])
    except ValueError:
        raise ValueError(f"{path}: labels must be integers")


def cmd_cluster(args):
    if (args.points is None) == (args.similarity is None):
        raise ValueError("exactly one of --points or --similarity is required")
    if args.points is not None:
        points = matio.read_matrix(args.points)
        x = build_similarity(points, neighbor_count=args.neighbor_count)
    else:
        x = matio.read_matrix(args.similarity)

    config = _config_from_args(args)
    result = run_solver(x, args.rank, args.solver, config, lam=args.lambda_abs)
    labels = assign_labels(np.maximum(result.u_final, 0.0))

    extra = {}
    if args.truth is not None:
        truth = _read_labels(args.truth)
        extra["accuracy"] = clustering_accuracy(labels, truth)

    certificate = _write_run_outputs(args.out, result, x, args, extra=extra)
    with open(args.out / "labels.csv", "w", encoding="ascii") as fh:
        fh.write("\n".join(str(int(v)) for v in labels))
        fh.write("\n")
    if "accuracy" in extra:
        print(f"clustering accuracy: {extra['accuracy']:.4f}")
    return _finish_run(result, certificate, args.out)


def cmd_report(args):
    labels = args.labels.split(",") if args.labels else None
    if labels is not None and len(labels) != len(args.traces):
        raise ValueError(
            f"got {len(labels)} labels for {len(args.traces)} traces"
        )
    traces = {}
    for idx, path in enumerate(args.traces):
        label = labels[idx] if labels else Path(path).stem
        if label in traces:
            raise ValueError(f"duplicate trace label {label!r}")
        traces[label] = matio.read_trace(path)
    written = render_report(traces, args.out, stem=args.stem)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="symnmf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_synth = sub.add_parser("synth", help="generate a synthetic low-rank target")
    p_synth.add_argument("--n", type=int, required=True, help="matrix dimension")
    p_synth.add_argument("--rank", type=int, required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", type=Path, required=True)
    p_synth.set_defaults(func=cmd_synth)

    p_fact = sub.add_parser("factorize", help="factorize a symmetric matrix")
    p_fact.add_argument("--input", type=Path, help="matrix file (MatrixMarket or CSV)")
    p_fact.add_argument("--synth-n", type=int, dest="synth_n",
                        help="generate the target instead of reading one")
    _add_solver_flags(p_fact)
    p_fact.set_defaults(func=cmd_factorize)

    p_clu = sub.add_parser("cluster", help="cluster points or a similarity matrix")
    p_clu.add_argument("--points", type=Path, help="raw data points, one sample per row")
    p_clu.add_argument("--similarity", type=Path, help="precomputed similarity matrix")
    p_clu.add_argument("--truth", type=Path, help="ground-truth labels for scoring")
    p_clu.add_argument("--neighbor-count", type=int, default=DEFAULT_NEIGHBOR_COUNT,
                       dest="neighbor_count")
    _add_solver_flags(p_clu)
    p_clu.set_defaults(func=cmd_cluster)

    p_rep = sub.add_parser("report", help="render figures from trace files")
    p_rep.add_argument("traces", nargs="+", type=Path)
    p_rep.add_argument("--labels", help="comma-separated labels, one per trace")
    p_rep.add_argument("--stem", default="report", help="output file name prefix")
    p_rep.add_argument("--out", type=Path, required=True)
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    try:
        _setup_logging()
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:  # argparse usage errors and --help
            return int(exc.code or 0)
        return args.func(args)
    except NumericalError as exc:
        sys.stderr.write(f"symnmf: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"symnmf: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
