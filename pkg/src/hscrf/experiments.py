"""Benchmark drivers: estimator convergence and sequence-length scaling.

The convergence study grows one chain per sequence and snapshots the
running Rao-Blackwellised average at fixed checkpoints, discarding the
first tenth of each checkpoint's budget as burn-in.  The scaling study
stretches base sequences by concatenation and compares three iteration
budgets: a constant count, one linear in length, and one quadratic in
length.  The budgets are calibrated to coincide at length 20.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._version import __version__
from .exact import SLICE_STATE_CAP, MarginalSet, exact_marginals
from .metrics import avg_kl, compare_marginals
from .model import ModelParams, ObservationSequence
from .sampler import GibbsChain, run_rbgs, sweep_incremental
from .topology import Topology

__all__ = [
    "ExperimentPlan",
    "CONVERGENCE_CHECKPOINTS",
    "budget_iterations",
    "run_convergence_study",
    "run_scaling_study",
]

logger = logging.getLogger(__name__)

CONVERGENCE_CHECKPOINTS = (10, 50, 100, 500, 1000, 2000, 5000)

_BUDGET_RULES = ("fixed", "linear", "quadratic")


@dataclass
class ExperimentPlan:
    seed: int = 0
    burn_in_fraction: float = 0.1
    n_iters: int = 5000
    lengths: tuple[int, ...] = (20, 40, 60, 80, 100)
    budgets: tuple[str, ...] = _BUDGET_RULES
    fixed_iters: int = 100
    timing_repeats: int = 3
    slice_cap: int = SLICE_STATE_CAP

    def validate(self) -> None:
        if not self.lengths or list(self.lengths) != sorted(set(self.lengths)):
            raise ValueError("lengths must be non-empty and strictly increasing")
        if not self.budgets or any(b not in _BUDGET_RULES for b in self.budgets):
            raise ValueError(f"budgets must come from {_BUDGET_RULES}")
        if self.n_iters < 1 or self.fixed_iters < 1 or self.timing_repeats < 1:
            raise ValueError("iteration and repeat counts must be positive")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must lie in [0, 1)")


def budget_iterations(rule: str, length: int, fixed_iters: int = 100) -> int:
    """Sweep budget for one sequence length; all rules give 100 at length 20."""
    if rule == "fixed":
        return fixed_iters
    if rule == "linear":
        return 5 * length
    if rule == "quadratic":
        return (length * length) // 4
    raise ValueError(f"unknown budget rule {rule!r}")


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _write_manifest(path: Path, plan: ExperimentPlan, extra: dict) -> None:
    payload = {"version": __version__, "plan": asdict(plan)}
    payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, default=list)
        fh.write("\n")


def run_convergence_study(
    plan: ExperimentPlan,
    params: ModelParams,
    topo: Topology,
    observations: list[ObservationSequence],
    out_dir: str | Path,
) -> list[dict]:
    """Track estimator accuracy at fixed checkpoints of one growing chain.

    Each sequence gets its own chain; at checkpoint ``c`` the estimate
    averages the conditional tables of sweeps ``ceil(0.1 c) + 1 .. c``.
    Metrics are averaged across sequences and written as one CSV row per
    checkpoint.
    """
    plan.validate()
    if not observations:
        raise ValueError("the convergence study needs at least one sequence")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoints = [c for c in CONVERGENCE_CHECKPOINTS if c <= plan.n_iters]
    if not checkpoints:
        raise ValueError(
            f"n_iters={plan.n_iters} is below the first checkpoint "
            f"{CONVERGENCE_CHECKPOINTS[0]}"
        )
    burn_at = {c: math.ceil(plan.burn_in_fraction * c) for c in checkpoints}
    per_checkpoint: dict[int, list] = {c: [] for c in checkpoints}
    for index, obs in enumerate(observations):
        exact = exact_marginals(params, topo, obs, plan.slice_cap)
        chain = GibbsChain(
            params,
            topo,
            obs,
            seed=_derived_seed(plan.seed, index),
            slice_cap=plan.slice_cap,
        )
        depth = topo.depth
        cum = [np.zeros((obs.length, topo.sizes[lev])) for lev in range(depth)]
        snapshots = {0: [a.copy() for a in cum]}
        for sweep in range(1, checkpoints[-1] + 1):
            sweep_incremental(chain)
            for acc, table in zip(cum, chain.current_state_marginals()):
                acc += table
            if sweep in burn_at.values():
                snapshots[sweep] = [a.copy() for a in cum]
            if sweep in per_checkpoint:
                burn = burn_at[sweep]
                kept = sweep - burn
                state = [
                    (a - s) / kept for a, s in zip(cum, snapshots[burn])
                ]
                estimate = MarginalSet(
                    state, np.zeros((obs.length - 1, depth)), None
                )
                per_checkpoint[sweep].append(compare_marginals(exact, estimate))
        logger.info("convergence: finished sequence %d/%d", index + 1, len(observations))
    rows = []
    for checkpoint in checkpoints:
        reports = per_checkpoint[checkpoint]
        rows.append(
            {
                "iteration": checkpoint,
                "avg_kl": statistics.fmean(r.avg_kl for r in reports),
                "avg_l1": statistics.fmean(r.avg_l1 for r in reports),
                "decode_match": statistics.fmean(r.decode_match for r in reports),
            }
        )
    csv_path = out_dir / "convergence.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "avg_kl", "avg_l1", "decode_match"])
        for row in rows:
            writer.writerow(
                [
                    row["iteration"],
                    repr(row["avg_kl"]),
                    repr(row["avg_l1"]),
                    repr(row["decode_match"]),
                ]
            )
    _write_manifest(
        out_dir / "convergence_manifest.json",
        plan,
        {"sequences": len(observations), "checkpoints": checkpoints},
    )
    return rows


def _concatenated(
    base: list[ObservationSequence], target_length: int
) -> list[ObservationSequence]:
    out = []
    for obs in base:
        if target_length % obs.length != 0:
            raise ValueError(
                f"target length {target_length} is not a multiple of the base "
                f"length {obs.length}"
            )
        copies = target_length // obs.length
        out.append(
            ObservationSequence(
                np.tile(obs.symbols, copies), obs.alphabet_size
            )
        )
    return out


def run_scaling_study(
    plan: ExperimentPlan,
    params: ModelParams,
    topo: Topology,
    base_observations: list[ObservationSequence],
    out_dir: str | Path,
) -> list[dict]:
    """Wall-clock and accuracy against sequence length under three budgets.

    Sequences are stretched by tiling the base observations.  Exact
    inference and the sampler share one timing protocol: the median of
    ``timing_repeats`` identical runs.  The same chain seed serves every
    budget rule at a given (length, sequence) cell, so rules with equal
    iteration counts produce identical estimates.
    """
    plan.validate()
    if not base_observations:
        raise ValueError("the scaling study needs at least one base sequence")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for length in plan.lengths:
        sequences = _concatenated(base_observations, length)
        exact_sets, exact_seconds = [], []
        for obs in sequences:
            times = []
            for _ in range(plan.timing_repeats):
                tic = time.perf_counter()
                marginals = exact_marginals(params, topo, obs, plan.slice_cap)
                times.append(time.perf_counter() - tic)
            exact_sets.append(marginals)
            exact_seconds.append(statistics.median(times))
        for rule in plan.budgets:
            iterations = budget_iterations(rule, length, plan.fixed_iters)
            kls, totals, per_sweep = [], [], []
            for index, obs in enumerate(sequences):
                seed = _derived_seed(plan.seed, length, index)
                times = []
                for _ in range(plan.timing_repeats):
                    tic = time.perf_counter()
                    report = run_rbgs(
                        params,
                        topo,
                        obs,
                        n_iters=iterations,
                        burn_in_fraction=plan.burn_in_fraction,
                        seed=seed,
                        slice_cap=plan.slice_cap,
                    )
                    times.append(time.perf_counter() - tic)
                kls.append(avg_kl(exact_sets[index], report.marginals))
                totals.append(statistics.median(times))
                per_sweep.append(report.seconds_per_sweep)
            rows.append(
                {
                    "length": length,
                    "budget": rule,
                    "iterations": iterations,
                    "wall_clock_exact": statistics.fmean(exact_seconds),
                    "wall_clock_rbgs": statistics.fmean(totals),
                    "seconds_per_sweep_rbgs": statistics.fmean(per_sweep),
                    "avg_kl": statistics.fmean(kls),
                }
            )
            logger.info(
                "scaling: length=%d budget=%s iterations=%d", length, rule, iterations
            )
    csv_path = out_dir / "scaling.csv"
    fields = [
        "length",
        "budget",
        "iterations",
        "wall_clock_exact",
        "wall_clock_rbgs",
        "seconds_per_sweep_rbgs",
        "avg_kl",
    ]
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow(
                [
                    row["length"],
                    row["budget"],
                    row["iterations"],
                    repr(row["wall_clock_exact"]),
                    repr(row["wall_clock_rbgs"]),
                    repr(row["seconds_per_sweep_rbgs"]),
                    repr(row["avg_kl"]),
                ]
            )
    _write_manifest(
        out_dir / "scaling_manifest.json",
        plan,
        {"sequences": len(base_observations)},
    )
    return rows
