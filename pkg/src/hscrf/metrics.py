"""Accuracy measures between exact and estimated marginal sets."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exact import MarginalSet
from .sampler import decode

__all__ = [
    "ComparisonReport",
    "avg_kl",
    "avg_l1",
    "decode_match",
    "compare_marginals",
    "write_comparison_csv",
    "write_comparison_summary",
]

PROBABILITY_FLOOR = 1e-10


def _check_compatible(exact: MarginalSet, estimate: MarginalSet) -> None:
    if exact.depth != estimate.depth:
        raise ValueError("marginal sets have different depths")
    for a, b in zip(exact.state, estimate.state):
        if a.shape != b.shape:
            raise ValueError("marginal sets have mismatched state tables")


def _smoothed(rows: np.ndarray) -> np.ndarray:
    """Floor each probability then renormalise rows, keeping KL finite."""
    clipped = np.maximum(rows, PROBABILITY_FLOOR)
    return clipped / clipped.sum(axis=1, keepdims=True)


def _kl_rows(exact_rows: np.ndarray, estimate_rows: np.ndarray) -> np.ndarray:
    smoothed = _smoothed(estimate_rows)
    ratio = np.zeros_like(exact_rows)
    positive = exact_rows > 0.0
    ratio[positive] = exact_rows[positive] * (
        np.log(exact_rows[positive]) - np.log(smoothed[positive])
    )
    return ratio.sum(axis=1)


def avg_kl(exact: MarginalSet, estimate: MarginalSet) -> float:
    """Mean over all (level, time) cells of KL(exact row, estimated row)."""
    _check_compatible(exact, estimate)
    cells = [
        _kl_rows(a, b) for a, b in zip(exact.state, estimate.state)
    ]
    return float(np.concatenate(cells).mean())


def avg_l1(exact: MarginalSet, estimate: MarginalSet) -> float:
    """Mean over cells of the L1 distance between rows; ranges over [0, 2]."""
    _check_compatible(exact, estimate)
    cells = [
        np.abs(a - b).sum(axis=1) for a, b in zip(exact.state, estimate.state)
    ]
    return float(np.concatenate(cells).mean())


def decode_match(exact: MarginalSet, estimate: MarginalSet) -> float:
    """Fraction of cells whose maximum-probability states agree."""
    _check_compatible(exact, estimate)
    return float((decode(exact) == decode(estimate)).mean())


@dataclass
class ComparisonReport:
    avg_kl: float
    avg_l1: float
    decode_match: float
    kl_per_level: tuple[float, ...]
    l1_per_level: tuple[float, ...]
    match_per_level: tuple[float, ...]


def compare_marginals(exact: MarginalSet, estimate: MarginalSet) -> ComparisonReport:
    _check_compatible(exact, estimate)
    kl_levels, l1_levels, match_levels = [], [], []
    for a, b in zip(exact.state, estimate.state):
        kl_levels.append(float(_kl_rows(a, b).mean()))
        l1_levels.append(float(np.abs(a - b).sum(axis=1).mean()))
        match_levels.append(
            float((np.argmax(a, axis=1) == np.argmax(b, axis=1)).mean())
        )
    return ComparisonReport(
        avg_kl=avg_kl(exact, estimate),
        avg_l1=avg_l1(exact, estimate),
        decode_match=decode_match(exact, estimate),
        kl_per_level=tuple(kl_levels),
        l1_per_level=tuple(l1_levels),
        match_per_level=tuple(match_levels),
    )


def write_comparison_csv(
    reports: list[ComparisonReport], path: str | Path
) -> None:
    """One row per (sequence, metric); sequences are indexed by position."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sequence", "metric", "value"])
        for index, report in enumerate(reports):
            for metric in ("avg_kl", "avg_l1", "decode_match"):
                writer.writerow([index, metric, repr(getattr(report, metric))])


def write_comparison_summary(
    reports: list[ComparisonReport], path: str | Path
) -> None:
    """Aggregate means and across-sequence standard deviations as JSON."""
    summary = {}
    for metric in ("avg_kl", "avg_l1", "decode_match"):
        values = np.array([getattr(r, metric) for r in reports])
        summary[metric] = {
            "mean": float(values.mean()),
            "std": float(values.std(ddof=1)) if values.size > 1 else 0.0,
        }
    summary["sequences"] = len(reports)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
