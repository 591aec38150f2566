"""Supervised conditional maximum-likelihood training.

The objective is the summed conditional log-likelihood of labeled
configurations minus an optional quadratic penalty.  Its gradient is the
classic difference of empirical and expected event counts; expectations
come from the collapsed slice chain, so training never samples.
Optimisation is full-batch gradient ascent with a fixed step size.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exact import SLICE_STATE_CAP, SliceChain
from .model import ModelParams, feature_counts
from .simulator import LabeledSequence
from .topology import Topology

__all__ = ["TrainConfig", "log_likelihood", "gradient", "fit", "write_training_log"]


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    l2_strength: float = 1e-3
    max_epochs: int = 200
    gradient_tolerance: float = 1e-3
    seed: int = 0


def _feature_matrix(
    topo: Topology, dataset: list[LabeledSequence]
) -> np.ndarray:
    """Packed empirical count vectors, one row per record; validates labels."""
    if not dataset:
        raise ValueError("training requires a non-empty dataset")
    alphabet_size = dataset[0].observations.alphabet_size
    rows = []
    for record in dataset:
        if record.config is None:
            raise ValueError("unlabeled record in a supervised dataset")
        if record.observations.alphabet_size != alphabet_size:
            raise ValueError("records disagree on the alphabet size")
        rows.append(
            feature_counts(record.config, record.observations, topo).pack()
        )
    return np.stack(rows)


def _expected_counts(
    params: ModelParams,
    topo: Topology,
    dataset: list[LabeledSequence],
    slice_cap: int,
) -> tuple[ModelParams, float]:
    """Summed expected event counts under the model, plus the summed log-partition."""
    chain = SliceChain.from_model(params, topo, slice_cap)
    tuples = chain.tuples
    kk = chain.num_tuples
    depth = topo.depth
    xi = np.zeros((depth, kk, kk))
    start_vec = np.zeros(kk)
    end_vec = np.zeros(kk)
    obs_expect = np.zeros_like(params.obs)
    bottom_proj = chain.projectors[depth - 1]
    log_z_total = 0.0
    for record in dataset:
        obs = record.observations
        em, alphas, betas, log_z = chain.posterior_bundle(obs)
        log_z_total += log_z
        posterior = np.exp(alphas + betas - log_z)
        start_vec += posterior[0]
        end_vec += posterior[-1]
        bottom = posterior @ bottom_proj
        for symbol in range(obs.alphabet_size):
            picked = obs.symbols == symbol
            if picked.any():
                obs_expect[:, symbol] += bottom[picked].sum(axis=0)
        for t in range(obs.length - 1):
            outer = em[t + 1] + betas[t + 1]
            xi += np.exp(
                alphas[t][None, :, None]
                + chain.log_trans
                + outer[None, None, :]
                - log_z
            )
    expected = ModelParams.zeros(topo, params.alphabet_size)
    expected.obs += obs_expect
    # a root-level move ends one full cascade and initialises another
    if not topo.root_persists:
        end_vec = end_vec + xi[0].sum(axis=1)
        start_vec = start_vec + xi[0].sum(axis=0)
    np.add.at(expected.root_init, tuples[:, 0], start_vec)
    np.add.at(expected.root_end, tuples[:, 0], end_vec)
    for lev in range(1, depth):
        pair = (tuples[:, lev - 1], tuples[:, lev])
        np.add.at(expected.init[lev - 1], pair, start_vec)
        np.add.at(expected.end[lev - 1], pair, end_vec)
    for v in range(1, depth):
        row_mass = xi[v].sum(axis=1)
        col_mass = xi[v].sum(axis=0)
        for lev in range(v + 1, depth):
            pair = (tuples[:, lev - 1], tuples[:, lev])
            np.add.at(expected.end[lev - 1], pair, row_mass)
            np.add.at(expected.init[lev - 1], pair, col_mass)
        left_parent = np.broadcast_to(tuples[:, v - 1][:, None], (kk, kk))
        left_state = np.broadcast_to(tuples[:, v][:, None], (kk, kk))
        right_state = np.broadcast_to(tuples[:, v][None, :], (kk, kk))
        np.add.at(
            expected.trans[v - 1], (left_parent, left_state, right_state), xi[v]
        )
    return expected, log_z_total


def _objective_and_gradient(
    params: ModelParams,
    topo: Topology,
    dataset: list[LabeledSequence],
    l2_strength: float,
    slice_cap: int,
    features: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    if features is None:
        features = _feature_matrix(topo, dataset)
    packed = params.pack()
    expected, log_z_total = _expected_counts(params, topo, dataset, slice_cap)
    value = float((features @ packed).sum()) - log_z_total
    value -= 0.5 * l2_strength * float(packed @ packed)
    grad = features.sum(axis=0) - expected.pack() - l2_strength * packed
    return value, grad


def log_likelihood(
    params: ModelParams,
    topo: Topology,
    dataset: list[LabeledSequence],
    l2_strength: float = 0.0,
    slice_cap: int = SLICE_STATE_CAP,
) -> float:
    """Penalised conditional log-likelihood of labeled records."""
    value, _ = _objective_and_gradient(
        params, topo, dataset, l2_strength, slice_cap
    )
    return value


def gradient(
    params: ModelParams,
    topo: Topology,
    dataset: list[LabeledSequence],
    l2_strength: float = 0.0,
    slice_cap: int = SLICE_STATE_CAP,
) -> ModelParams:
    """Gradient of the penalised objective, shaped like the parameters."""
    _, grad = _objective_and_gradient(
        params, topo, dataset, l2_strength, slice_cap
    )
    return ModelParams.unpack(topo, params.alphabet_size, grad)


def fit(
    topo: Topology,
    dataset: list[LabeledSequence],
    config: TrainConfig | None = None,
    slice_cap: int = SLICE_STATE_CAP,
    log_path: str | Path | None = None,
) -> tuple[ModelParams, list[dict]]:
    """Train from zero-initialised weights; returns final params and a trace.

    One trace row per epoch: the objective and gradient norm before the
    update, and the epoch wall-clock.  Stops at ``max_epochs`` or when the
    gradient norm falls under the configured tolerance; a non-finite
    objective aborts with an error naming the epoch.
    """
    config = config or TrainConfig()
    features = _feature_matrix(topo, dataset)
    alphabet_size = dataset[0].observations.alphabet_size
    params = ModelParams.zeros(topo, alphabet_size)
    trace: list[dict] = []
    for epoch in range(1, config.max_epochs + 1):
        tic = time.perf_counter()
        value, grad = _objective_and_gradient(
            params, topo, dataset, config.l2_strength, slice_cap, features
        )
        grad_norm = float(np.linalg.norm(grad))
        seconds = time.perf_counter() - tic
        trace.append(
            {
                "epoch": epoch,
                "log_likelihood": value,
                "gradient_norm": grad_norm,
                "seconds": seconds,
            }
        )
        if not np.isfinite(value) or not np.isfinite(grad_norm):
            raise ValueError(f"training diverged at epoch {epoch}")
        if grad_norm <= config.gradient_tolerance:
            break
        params = ModelParams.unpack(
            topo, alphabet_size, params.pack() + config.learning_rate * grad
        )
    if log_path is not None:
        write_training_log(trace, log_path)
    return params, trace


def write_training_log(trace: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "log_likelihood", "gradient_norm", "seconds"])
        for row in trace:
            writer.writerow(
                [
                    row["epoch"],
                    repr(float(row["log_likelihood"])),
                    repr(float(row["gradient_norm"])),
                    repr(float(row["seconds"])),
                ]
            )
