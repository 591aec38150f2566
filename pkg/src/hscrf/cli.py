"""Command-line entry points.

Verbs cover the full benchmark pipeline: ``simulate`` labeled datasets,
``train`` weights on them, ``infer-exact`` / ``infer-rbgs`` to export
marginal tables, ``eval`` to score an estimate against a reference, and
the ``convergence`` / ``scaling`` studies.  Set ``HSCRF_LOG_LEVEL`` to
control verbosity; everything else is a flag.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .exact import (
    SLICE_STATE_CAP,
    exact_marginals,
    read_marginals,
    write_marginals,
)
from .experiments import (
    ExperimentPlan,
    run_convergence_study,
    run_scaling_study,
)
from .metrics import (
    compare_marginals,
    write_comparison_csv,
    write_comparison_summary,
)
from .model import read_params, write_params
from .sampler import run_rbgs
from .simulator import (
    generative_params_to_dict,
    make_dataset,
    random_generative_params,
    read_dataset,
    write_dataset,
)
from .topology import read_topology
from .training import TrainConfig, fit

logger = logging.getLogger(__name__)


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        print(f"error: missing input file: {p}", file=sys.stderr)
        raise SystemExit(2)
    return p


def _sequence_stem(index: int) -> str:
    return f"seq_{index:03d}"


def _write_sequence_marginals(out_dir: Path, index: int, marginals, meta: dict) -> None:
    stem = _sequence_stem(index)
    write_marginals(
        marginals,
        out_dir / f"{stem}_state.csv",
        out_dir / f"{stem}_transition.csv",
    )
    with open(out_dir / f"{stem}_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def _cmd_simulate(args: argparse.Namespace) -> int:
    topo = read_topology(_require_file(args.topology))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    gp = random_generative_params(topo, args.alphabet, rng, args.concentration)
    train = make_dataset(gp, topo, args.train, args.length, rng)
    test = make_dataset(gp, topo, args.test, args.length, rng)
    write_dataset(train, out_dir / "train.jsonl")
    write_dataset(test, out_dir / "test.jsonl")
    with open(out_dir / "generative_params.json", "w", encoding="utf-8") as fh:
        json.dump(generative_params_to_dict(gp), fh)
        fh.write("\n")
    manifest = {
        "version": __version__,
        "topology_ref": str(args.topology),
        "alphabet_size": args.alphabet,
        "length": args.length,
        "count": {"train": args.train, "test": args.test},
        "seed": args.seed,
        "concentration": args.concentration,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    logger.info("wrote %d train and %d test sequences", args.train, args.test)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    topo = read_topology(_require_file(args.topology))
    dataset = read_dataset(_require_file(args.data), args.alphabet)
    config = TrainConfig(
        learning_rate=args.lr,
        l2_strength=args.l2,
        max_epochs=args.epochs,
        gradient_tolerance=args.tol,
        seed=args.seed,
    )
    params, trace = fit(
        topo, dataset, config, slice_cap=args.cap, log_path=args.log
    )
    write_params(params, args.out)
    last = trace[-1]
    logger.info(
        "trained %d epochs, final log-likelihood %.4f", last["epoch"], last["log_likelihood"]
    )
    return 0


def _cmd_infer_exact(args: argparse.Namespace) -> int:
    topo = read_topology(_require_file(args.topology))
    params = read_params(_require_file(args.params))
    dataset = read_dataset(_require_file(args.data), params.alphabet_size)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, record in enumerate(dataset):
        marginals = exact_marginals(params, topo, record.observations, args.cap)
        _write_sequence_marginals(
            out_dir,
            index,
            marginals,
            {"engine": "exact", "log_partition": marginals.log_partition},
        )
    logger.info("wrote exact marginals for %d sequences", len(dataset))
    return 0


def _cmd_infer_rbgs(args: argparse.Namespace) -> int:
    topo = read_topology(_require_file(args.topology))
    params = read_params(_require_file(args.params))
    dataset = read_dataset(_require_file(args.data), params.alphabet_size)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, record in enumerate(dataset):
        report = run_rbgs(
            params,
            topo,
            record.observations,
            n_iters=args.iters,
            burn_in_fraction=args.burn_in,
            seed=args.seed + index,
            slice_cap=args.cap,
            n_chains=args.chains,
        )
        _write_sequence_marginals(
            out_dir,
            index,
            report.marginals,
            {
                "engine": "rbgs",
                "log_partition": None,
                "seed": report.seed,
                "n_iters": report.n_iters,
                "burn_in": report.burn_in,
                "samples_kept": report.samples_kept,
                "seconds_per_sweep": report.seconds_per_sweep,
            },
        )
    logger.info("wrote sampled marginals for %d sequences", len(dataset))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    exact_dir = _require_file(args.exact)
    estimate_dir = _require_file(args.estimate)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stems = sorted(
        p.name.removesuffix("_state.csv")
        for p in Path(exact_dir).glob("*_state.csv")
    )
    if not stems:
        print(f"error: no marginal tables found in {exact_dir}", file=sys.stderr)
        return 2
    reports = []
    for stem in stems:
        exact = read_marginals(
            exact_dir / f"{stem}_state.csv", exact_dir / f"{stem}_transition.csv"
        )
        estimate = read_marginals(
            _require_file(estimate_dir / f"{stem}_state.csv"),
            estimate_dir / f"{stem}_transition.csv",
        )
        reports.append(compare_marginals(exact, estimate))
    write_comparison_csv(reports, out_dir / "comparison.csv")
    write_comparison_summary(reports, out_dir / "summary.json")
    logger.info("compared %d sequences", len(reports))
    return 0


def _cmd_convergence(args: argparse.Namespace) -> int:
    topo = read_topology(_require_file(args.topology))
    params = read_params(_require_file(args.params))
    dataset = read_dataset(_require_file(args.data), params.alphabet_size)
    plan = ExperimentPlan(
        seed=args.seed,
        burn_in_fraction=args.burn_in,
        n_iters=args.iters,
        slice_cap=args.cap,
    )
    run_convergence_study(
        plan, params, topo, [r.observations for r in dataset], args.out
    )
    return 0


def _cmd_scaling(args: argparse.Namespace) -> int:
    topo = read_topology(_require_file(args.topology))
    params = read_params(_require_file(args.params))
    dataset = read_dataset(_require_file(args.data), params.alphabet_size)
    plan = ExperimentPlan(
        seed=args.seed,
        burn_in_fraction=args.burn_in,
        lengths=tuple(args.lengths),
        budgets=tuple(args.budget),
        fixed_iters=args.fixed_iters,
        timing_repeats=args.repeats,
        slice_cap=args.cap,
    )
    run_scaling_study(
        plan, params, topo, [r.observations for r in dataset], args.out
    )
    return 0


def _add_cap(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--cap",
        type=int,
        default=SLICE_STATE_CAP,
        help="slice-state cap for the collapsed chain",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hscrf",
        description="Hierarchical semi-Markov CRF inference and benchmarks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate labeled datasets")
    p.add_argument("--topology", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length", type=int, default=30)
    p.add_argument("--alphabet", type=int, default=3)
    p.add_argument("--train", type=int, default=50)
    p.add_argument("--test", type=int, default=50)
    p.add_argument("--concentration", type=float, default=1.0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("train", help="fit weights to a labeled dataset")
    p.add_argument("--topology", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alphabet", type=int, default=None)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", default=None, help="optional training log CSV")
    _add_cap(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer-exact", help="export exact marginal tables")
    p.add_argument("--topology", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_cap(p)
    p.set_defaults(func=_cmd_infer_exact)

    p = sub.add_parser("infer-rbgs", help="export sampled marginal estimates")
    p.add_argument("--topology", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--burn-in", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=1)
    _add_cap(p)
    p.set_defaults(func=_cmd_infer_rbgs)

    p = sub.add_parser("eval", help="score an estimate against a reference")
    p.add_argument("--exact", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("convergence", help="checkpointed accuracy study")
    p.add_argument("--topology", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--burn-in", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    _add_cap(p)
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("scaling", help="length-scaling benchmark")
    p.add_argument("--topology", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--budget",
        nargs="+",
        choices=["fixed", "linear", "quadratic"],
        default=["fixed", "linear", "quadratic"],
    )
    p.add_argument(
        "--lengths", nargs="+", type=int, default=[20, 40, 60, 80, 100]
    )
    p.add_argument("--fixed-iters", type=int, default=100)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--burn-in", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    _add_cap(p)
    p.set_defaults(func=_cmd_scaling)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("HSCRF_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
