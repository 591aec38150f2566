"""Exact inference engines.

Three independent routes compute quantities of the same joint model:

* ``brute_force_posterior`` enumerates every configuration and is the
  reference oracle for tiny instances.
* ``SliceChain`` collapses each time step into one joint variable over
  admissible cross-level state tuples plus the incoming transition
  level.  Message passing over this chain is exponential in depth but
  linear in sequence length, and yields the partition function, state
  marginals per (level, time), and transition-level marginals.
* ``TreeEngine`` works conditionally on a fixed transition-level
  sequence: one upward pass over the segmentation tree gives the summed
  potential over all state grids, an added downward pass gives exact
  per-segment state posteriors, and a backward-sampling pass draws grids
  from that conditional.

All message passing happens in log space with max-shifted sums.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .configurations import (
    Configuration,
    SegmentationTree,
    check_transition_levels,
    enumerate_configurations,
    segmentation_from_e,
)
from .model import ModelParams, ObservationSequence, log_joint_potential
from .topology import Topology

__all__ = [
    "MarginalSet",
    "SliceChain",
    "TreeEngine",
    "BrutePosterior",
    "brute_force_posterior",
    "exact_marginals",
    "tree_log_sum",
    "tree_state_marginals",
    "sample_states_given_e",
    "draw_categorical",
    "write_marginals",
    "read_marginals",
]

SLICE_STATE_CAP = 10_000

NEG_INF = -np.inf


@dataclass
class MarginalSet:
    """Per-level state marginals, transition-level marginals, and the log-partition.

    ``state[d]`` has shape (T, sizes[d]) and each row is a distribution over
    the level-``d`` states at one position.  ``transition`` has shape
    (T - 1, depth); row ``t`` is the distribution of the transition level at
    the boundary between ``t`` and ``t + 1``.  ``log_partition`` is ``None``
    for sampled estimates.
    """

    state: list[np.ndarray]
    transition: np.ndarray
    log_partition: float | None = None

    @property
    def depth(self) -> int:
        return len(self.state)

    @property
    def length(self) -> int:
        return self.state[0].shape[0]


def _finite_max(a: np.ndarray) -> float:
    m = float(np.max(a))
    return m if np.isfinite(m) else 0.0


def _softmax_from_log(logv: np.ndarray) -> np.ndarray:
    shift = np.max(logv)
    if not np.isfinite(shift):
        raise ValueError("no admissible support for this distribution")
    p = np.exp(logv - shift)
    return p / p.sum()


def draw_categorical(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from a probability vector; deterministic given the stream."""
    cdf = np.cumsum(p)
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), p.size - 1))


# ---------------------------------------------------------------------------
# Collapsed per-slice chain


class SliceChain:
    """Joint chain over admissible cross-level tuples and transition levels.

    A slice at position ``t`` ranges over the ``K`` admissible state tuples;
    boundary factors carry, per candidate transition level ``v``, the end
    weights of the levels below ``v`` on the left tuple, the lateral
    transition weight at ``v``, and the init weights of the levels below
    ``v`` on the right tuple.  Level persistence above ``v`` is enforced
    structurally with minus-infinity entries.
    """

    def __init__(
        self,
        topo: Topology,
        tuples: np.ndarray,
        log_start: np.ndarray,
        log_end: np.ndarray,
        log_trans: np.ndarray,
        obs_weights: np.ndarray,
    ) -> None:
        self.topo = topo
        self.tuples = tuples
        self.log_start = log_start
        self.log_end = log_end
        self.log_trans = log_trans
        self.obs_weights = obs_weights
        self.num_tuples = tuples.shape[0]
        # one indicator matrix per level, for projecting tuple posteriors
        self.projectors = []
        for lev in range(topo.depth):
            proj = np.zeros((self.num_tuples, topo.sizes[lev]))
            proj[np.arange(self.num_tuples), tuples[:, lev]] = 1.0
            self.projectors.append(proj)
        self.log_any = logsumexp(log_trans, axis=0)
        # scaled exponentials of the fixed transition tables; each message
        # step is then one max-shifted matvec instead of a full logsumexp
        self._trans_shift = np.array([_finite_max(m) for m in log_trans])
        self._exp_trans = np.exp(log_trans - self._trans_shift[:, None, None])
        self._any_shift = _finite_max(self.log_any)
        self._exp_any = np.exp(self.log_any - self._any_shift)

    @classmethod
    def from_model(
        cls,
        params: ModelParams,
        topo: Topology,
        slice_cap: int = SLICE_STATE_CAP,
    ) -> "SliceChain":
        params.validate_shapes(topo)
        tuples = _admissible_tuples(topo)
        num_states = tuples.shape[0] * topo.depth
        if num_states > slice_cap:
            raise ValueError(
                f"depth too large for collapsed exact inference: "
                f"{num_states} slice states exceed the cap of {slice_cap}"
            )
        depth = topo.depth
        kk = tuples.shape[0]
        # per-tuple cascade terms at each child level
        init_term = np.zeros((kk, depth))
        end_term = np.zeros((kk, depth))
        for lev in range(1, depth):
            init_term[:, lev] = params.init[lev - 1][tuples[:, lev - 1], tuples[:, lev]]
            end_term[:, lev] = params.end[lev - 1][tuples[:, lev - 1], tuples[:, lev]]
        # cascade below level v: suffix sums over child levels v+1..depth-1
        init_casc = np.zeros((kk, depth + 1))
        end_casc = np.zeros((kk, depth + 1))
        for v in range(depth - 1, -1, -1):
            init_casc[:, v] = init_casc[:, v + 1] + (init_term[:, v + 1] if v + 1 < depth else 0.0)
            end_casc[:, v] = end_casc[:, v + 1] + (end_term[:, v + 1] if v + 1 < depth else 0.0)
        log_start = params.root_init[tuples[:, 0]] + init_casc[:, 0]
        log_end = params.root_end[tuples[:, 0]] + end_casc[:, 0]
        log_trans = np.full((depth, kk, kk), NEG_INF)
        if not topo.root_persists:
            log_trans[0] = log_end[:, None] + log_start[None, :]
        for v in range(1, depth):
            _, gid = np.unique(tuples[:, :v], axis=0, return_inverse=True)
            same_prefix = gid[:, None] == gid[None, :]
            lateral = params.trans[v - 1][tuples[:, v - 1], tuples[:, v]]
            pair = lateral[:, tuples[:, v]]
            weights = end_casc[:, v][:, None] + init_casc[:, v][None, :] + pair
            log_trans[v] = np.where(same_prefix, weights, NEG_INF)
        return cls(topo, tuples, log_start, log_end, log_trans, params.obs)

    # -- message steps (shared verbatim by every consumer so that repeated
    #    computations reproduce the same floats)

    def emissions(self, obs: ObservationSequence) -> np.ndarray:
        """Per-slice emission log-weights, shape (T, K)."""
        bottom = self.tuples[:, -1]
        return self.obs_weights[bottom][:, obs.symbols].T.copy()

    def start_alpha(self, emissions: np.ndarray) -> np.ndarray:
        return self.log_start + emissions[0]

    def forward_step(
        self, alpha: np.ndarray, level: int, em_next: np.ndarray
    ) -> np.ndarray:
        shift = np.max(alpha)
        if shift == NEG_INF:
            return np.full_like(alpha, NEG_INF)
        with np.errstate(divide="ignore"):
            mass = np.log(np.exp(alpha - shift) @ self._exp_trans[level])
        return mass + (shift + self._trans_shift[level]) + em_next

    def backward_step(
        self, level: int, em_next: np.ndarray, beta_next: np.ndarray
    ) -> np.ndarray:
        outer = em_next + beta_next
        shift = np.max(outer)
        if shift == NEG_INF:
            return np.full_like(outer, NEG_INF)
        with np.errstate(divide="ignore"):
            mass = np.log(self._exp_trans[level] @ np.exp(outer - shift))
        return mass + (shift + self._trans_shift[level])

    def forward_step_any(self, alpha: np.ndarray, em_next: np.ndarray) -> np.ndarray:
        shift = np.max(alpha)
        if shift == NEG_INF:
            return np.full_like(alpha, NEG_INF)
        with np.errstate(divide="ignore"):
            mass = np.log(np.exp(alpha - shift) @ self._exp_any)
        return mass + (shift + self._any_shift) + em_next

    def backward_step_any(
        self, em_next: np.ndarray, beta_next: np.ndarray
    ) -> np.ndarray:
        outer = em_next + beta_next
        shift = np.max(outer)
        if shift == NEG_INF:
            return np.full_like(outer, NEG_INF)
        with np.errstate(divide="ignore"):
            mass = np.log(self._exp_any @ np.exp(outer - shift))
        return mass + (shift + self._any_shift)

    def boundary_level_logmass(
        self, alpha_t: np.ndarray, em_next: np.ndarray, beta_next: np.ndarray
    ) -> np.ndarray:
        """Unnormalised log-mass per candidate transition level at one boundary."""
        outer = em_next + beta_next
        sa = np.max(alpha_t)
        sb = np.max(outer)
        if sa == NEG_INF or sb == NEG_INF:
            return np.full(self.topo.depth, NEG_INF)
        right = self._exp_trans @ np.exp(outer - sb)
        with np.errstate(divide="ignore"):
            mass = np.log(right @ np.exp(alpha_t - sa))
        return mass + (sa + sb) + self._trans_shift

    # -- whole-sequence passes

    def posterior_bundle(
        self, obs: ObservationSequence
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        """Emissions, forward and backward tables, and the log-partition."""
        em = self.emissions(obs)
        length = obs.length
        alphas = np.empty((length, self.num_tuples))
        betas = np.empty((length, self.num_tuples))
        alphas[0] = self.start_alpha(em)
        for t in range(length - 1):
            alphas[t + 1] = self.forward_step_any(alphas[t], em[t + 1])
        betas[length - 1] = self.log_end
        for t in range(length - 2, -1, -1):
            betas[t] = self.backward_step_any(em[t + 1], betas[t + 1])
        log_z = float(logsumexp(alphas[length - 1] + self.log_end))
        return em, alphas, betas, log_z

    def log_partition(self, obs: ObservationSequence) -> float:
        return self.posterior_bundle(obs)[3]

    def restricted_log_mass(self, obs: ObservationSequence, e: np.ndarray) -> float:
        """log-sum over state grids consistent with a fixed transition-level row."""
        e = check_transition_levels(
            e, self.topo.depth, self.topo.root_persists, obs.length
        )
        em = self.emissions(obs)
        alpha = self.start_alpha(em)
        for t in range(obs.length - 1):
            alpha = self.forward_step(alpha, int(e[t]), em[t + 1])
        return float(logsumexp(alpha + self.log_end))

    def restricted_state_posterior(
        self, em: np.ndarray, e: np.ndarray
    ) -> np.ndarray:
        """Per-slice tuple posterior P(tuple_t | e, o), shape (T, K).

        With the transition levels fixed, the slice variables form a plain
        chain whose time marginals are exactly the conditional state
        posteriors; projecting rows through ``projectors`` recovers the
        same per-level tables as the segmentation-tree passes.
        """
        length = em.shape[0]
        alphas = np.empty((length, self.num_tuples))
        betas = np.empty((length, self.num_tuples))
        alphas[0] = self.start_alpha(em)
        for t in range(length - 1):
            alphas[t + 1] = self.forward_step(alphas[t], int(e[t]), em[t + 1])
        betas[length - 1] = self.log_end
        for t in range(length - 2, -1, -1):
            betas[t] = self.backward_step(int(e[t]), em[t + 1], betas[t + 1])
        logp = alphas + betas
        shift = logp.max(axis=1, keepdims=True)
        if not np.all(np.isfinite(shift)):
            raise ValueError("conditioning row has no admissible completion")
        p = np.exp(logp - shift)
        p /= p.sum(axis=1, keepdims=True)
        return p

    def marginals(self, obs: ObservationSequence) -> MarginalSet:
        em, alphas, betas, log_z = self.posterior_bundle(obs)
        posterior = np.exp(alphas + betas - log_z)
        state = [posterior @ proj for proj in self.projectors]
        length = obs.length
        transition = np.zeros((length - 1, self.topo.depth))
        for t in range(length - 1):
            logmass = self.boundary_level_logmass(
                alphas[t], em[t + 1], betas[t + 1]
            )
            transition[t] = np.exp(logmass - log_z)
        return MarginalSet(state, transition, log_z)


def _admissible_tuples(topo: Topology) -> np.ndarray:
    """All cross-level state tuples allowed by the topology, lexicographically."""
    rows: list[list[int]] = []

    def descend(prefix: list[int]) -> None:
        lev = len(prefix)
        if lev == topo.depth:
            rows.append(prefix.copy())
            return
        if lev == 0:
            options = range(topo.sizes[0])
        else:
            options = sorted(topo.children[lev - 1][prefix[-1]])
        for state in options:
            prefix.append(state)
            descend(prefix)
            prefix.pop()

    descend([])
    return np.array(rows, dtype=np.int64)


def exact_marginals(
    params: ModelParams,
    topo: Topology,
    obs: ObservationSequence,
    slice_cap: int = SLICE_STATE_CAP,
) -> MarginalSet:
    """Exact posterior marginals and log-partition via the collapsed slice chain."""
    chain = SliceChain.from_model(params, topo, slice_cap)
    return chain.marginals(obs)


# ---------------------------------------------------------------------------
# Brute-force enumeration oracle


@dataclass
class BrutePosterior:
    """Exhaustive posterior over configurations; reference for everything else."""

    topo: Topology
    observations: ObservationSequence
    configurations: list[Configuration]
    log_weights: np.ndarray
    log_partition: float

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_partition)

    def marginals(self) -> MarginalSet:
        depth = self.topo.depth
        length = self.observations.length
        probs = self.probabilities()
        grids = np.stack([cfg.x for cfg in self.configurations])
        state = []
        t_idx = np.broadcast_to(np.arange(length), grids.shape[::2])
        for lev in range(depth):
            table = np.zeros((length, self.topo.sizes[lev]))
            np.add.at(table, (t_idx, grids[:, lev, :]), probs[:, None])
            state.append(table)
        transition = np.zeros((length - 1, depth))
        if length > 1:
            rows = np.stack([cfg.e for cfg in self.configurations])
            b_idx = np.broadcast_to(np.arange(length - 1), rows.shape)
            np.add.at(transition, (b_idx, rows), probs[:, None])
        return MarginalSet(state, transition, self.log_partition)

    def conditional_transition_level(self, t: int, e: np.ndarray) -> np.ndarray:
        """P(e_t = v | all other boundaries fixed to the given row)."""
        e = np.asarray(e, dtype=np.int64)
        others = np.ones(e.size, dtype=bool)
        others[t] = False
        mass = np.zeros(self.topo.depth)
        for cfg, lw in zip(self.configurations, self.log_weights):
            if np.array_equal(cfg.e[others], e[others]):
                mass[cfg.e[t]] += np.exp(lw - self.log_partition)
        total = mass.sum()
        if total <= 0.0:
            raise ValueError("conditioning row has no admissible completion")
        return mass / total


def brute_force_posterior(
    params: ModelParams,
    topo: Topology,
    obs: ObservationSequence,
    limit: int = 1_000_000,
) -> BrutePosterior:
    configurations = list(enumerate_configurations(topo, obs.length, limit))
    log_weights = np.array(
        [log_joint_potential(params, topo, obs, cfg) for cfg in configurations]
    )
    log_partition = float(logsumexp(log_weights))
    return BrutePosterior(topo, obs, configurations, log_weights, log_partition)


# ---------------------------------------------------------------------------
# Tree passes conditioned on a transition-level row


class TreeEngine:
    """Sums, posteriors, and samples over state grids for a fixed segmentation.

    Weights are pre-masked by admissibility; every pass walks the
    segmentation tree once, treating each sibling run as a small chain
    batched over the possible parent states.
    """

    def __init__(self, params: ModelParams, topo: Topology) -> None:
        params.validate_shapes(topo)
        self.topo = topo
        self.minit = []
        self.mtrans = []
        self.mend = []
        for lev in range(topo.depth - 1):
            mask = topo.child_mask(lev)
            self.minit.append(np.where(mask, params.init[lev], NEG_INF))
            self.mtrans.append(
                np.where(
                    mask[:, :, None] & mask[:, None, :],
                    params.trans[lev],
                    NEG_INF,
                )
            )
            self.mend.append(np.where(mask, params.end[lev], NEG_INF))
        self.root = params.root_init + params.root_end
        self.obs_weights = params.obs

    def _cumulative_emissions(self, obs: ObservationSequence) -> np.ndarray:
        per_step = self.obs_weights[:, obs.symbols]
        out = np.zeros((per_step.shape[0], obs.length + 1))
        np.cumsum(per_step, axis=1, out=out[:, 1:])
        return out

    def _tree(self, obs: ObservationSequence, e: np.ndarray) -> SegmentationTree:
        e = check_transition_levels(
            e, self.topo.depth, self.topo.root_persists, obs.length
        )
        return segmentation_from_e(e, self.topo.depth)

    def _upward(
        self, tree: SegmentationTree, cum: np.ndarray
    ) -> list[list[np.ndarray]]:
        """Per-segment messages: log-sum of the subtree below, per own state."""
        depth = self.topo.depth
        msgs: list[list[np.ndarray]] = [
            [None] * len(tree.levels[lev]) for lev in range(depth)
        ]
        for idx, seg in enumerate(tree.levels[depth - 1]):
            msgs[depth - 1][idx] = cum[:, seg.end + 1] - cum[:, seg.start]
        for lev in range(depth - 2, -1, -1):
            for idx, seg in enumerate(tree.levels[lev]):
                kids = seg.children
                acc = self.minit[lev] + msgs[lev + 1][kids[0]][None, :]
                for kid in kids[1:]:
                    acc = (
                        logsumexp(acc[:, :, None] + self.mtrans[lev], axis=1)
                        + msgs[lev + 1][kid][None, :]
                    )
                msgs[lev][idx] = logsumexp(acc + self.mend[lev], axis=1)
        return msgs

    def log_sum(self, obs: ObservationSequence, e: np.ndarray) -> float:
        """log of the potential summed over all state grids consistent with ``e``."""
        tree = self._tree(obs, e)
        msgs = self._upward(tree, self._cumulative_emissions(obs))
        total = 0.0
        for idx in range(len(tree.levels[0])):
            total += float(logsumexp(self.root + msgs[0][idx]))
        return total

    def state_marginals(
        self, obs: ObservationSequence, e: np.ndarray
    ) -> list[np.ndarray]:
        """Exact P(state at (level, t) | e, observations); constant inside segments."""
        tree = self._tree(obs, e)
        depth, length = self.topo.depth, obs.length
        msgs = self._upward(tree, self._cumulative_emissions(obs))
        out: list[list[np.ndarray]] = [
            [None] * len(tree.levels[lev]) for lev in range(depth)
        ]
        result = [np.zeros((length, self.topo.sizes[lev])) for lev in range(depth)]
        for idx, seg in enumerate(tree.levels[0]):
            out[0][idx] = self.root
            posterior = _softmax_from_log(self.root + msgs[0][idx])
            result[0][seg.start : seg.end + 1] = posterior
        for lev in range(depth - 1):
            for idx, seg in enumerate(tree.levels[lev]):
                kids = seg.children
                count = len(kids)
                left = [None] * count
                left[0] = self.minit[lev]
                for i in range(count - 1):
                    left[i + 1] = logsumexp(
                        (left[i] + msgs[lev + 1][kids[i]][None, :])[:, :, None]
                        + self.mtrans[lev],
                        axis=1,
                    )
                right = [None] * count
                right[count - 1] = self.mend[lev]
                for i in range(count - 2, -1, -1):
                    right[i] = logsumexp(
                        self.mtrans[lev]
                        + (msgs[lev + 1][kids[i + 1]][None, :] + right[i + 1])[
                            :, None, :
                        ],
                        axis=2,
                    )
                for i, kid in enumerate(kids):
                    outside = logsumexp(
                        out[lev][idx][:, None] + left[i] + right[i], axis=0
                    )
                    out[lev + 1][kid] = outside
                    kid_seg = tree.levels[lev + 1][kid]
                    posterior = _softmax_from_log(
                        outside + msgs[lev + 1][kid]
                    )
                    result[lev + 1][kid_seg.start : kid_seg.end + 1] = posterior
        return result

    def sample_states(
        self, obs: ObservationSequence, e: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        """Draw one state grid from P(x | e, observations) by backward sampling."""
        tree = self._tree(obs, e)
        depth = self.topo.depth
        msgs = self._upward(tree, self._cumulative_emissions(obs))
        x = np.zeros((depth, obs.length), dtype=np.int64)
        chosen: list[list[int]] = [
            [0] * len(tree.levels[lev]) for lev in range(depth)
        ]
        for idx, seg in enumerate(tree.levels[0]):
            state = draw_categorical(
                _softmax_from_log(self.root + msgs[0][idx]), rng
            )
            chosen[0][idx] = state
            x[0, seg.start : seg.end + 1] = state
        for lev in range(depth - 1):
            for idx, seg in enumerate(tree.levels[lev]):
                parent_state = chosen[lev][idx]
                kids = seg.children
                count = len(kids)
                fwd = [None] * count
                fwd[0] = self.minit[lev][parent_state] + msgs[lev + 1][kids[0]]
                for i in range(1, count):
                    fwd[i] = (
                        logsumexp(
                            fwd[i - 1][:, None] + self.mtrans[lev][parent_state],
                            axis=0,
                        )
                        + msgs[lev + 1][kids[i]]
                    )
                state = draw_categorical(
                    _softmax_from_log(fwd[count - 1] + self.mend[lev][parent_state]),
                    rng,
                )
                for i in range(count - 1, -1, -1):
                    kid_seg = tree.levels[lev + 1][kids[i]]
                    chosen[lev + 1][kids[i]] = state
                    x[lev + 1, kid_seg.start : kid_seg.end + 1] = state
                    if i > 0:
                        state = draw_categorical(
                            _softmax_from_log(
                                fwd[i - 1]
                                + self.mtrans[lev][parent_state][:, state]
                            ),
                            rng,
                        )
        return x


def tree_log_sum(
    params: ModelParams,
    topo: Topology,
    obs: ObservationSequence,
    e: np.ndarray,
) -> float:
    return TreeEngine(params, topo).log_sum(obs, e)


def tree_state_marginals(
    params: ModelParams,
    topo: Topology,
    obs: ObservationSequence,
    e: np.ndarray,
) -> list[np.ndarray]:
    return TreeEngine(params, topo).state_marginals(obs, e)


def sample_states_given_e(
    params: ModelParams,
    topo: Topology,
    obs: ObservationSequence,
    e: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    return TreeEngine(params, topo).sample_states(obs, e, rng)


# ---------------------------------------------------------------------------
# Serialization


def write_marginals(
    ms: MarginalSet,
    state_path: str | Path,
    transition_path: str | Path,
    meta_path: str | Path | None = None,
) -> None:
    """Write one marginal set as two CSV tables plus an optional JSON sidecar."""
    with open(state_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "time", "state", "probability"])
        for lev, table in enumerate(ms.state):
            for t in range(table.shape[0]):
                for s in range(table.shape[1]):
                    writer.writerow([lev, t, s, repr(float(table[t, s]))])
    with open(transition_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "level", "probability"])
        for t in range(ms.transition.shape[0]):
            for lev in range(ms.transition.shape[1]):
                writer.writerow([t, lev, repr(float(ms.transition[t, lev]))])
    if meta_path is not None:
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump({"log_partition": ms.log_partition}, fh)
            fh.write("\n")


def read_marginals(
    state_path: str | Path,
    transition_path: str | Path,
    meta_path: str | Path | None = None,
) -> MarginalSet:
    cells: list[tuple[int, int, int, float]] = []
    with open(state_path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cells.append(
                (
                    int(row["level"]),
                    int(row["time"]),
                    int(row["state"]),
                    float(row["probability"]),
                )
            )
    depth = max(c[0] for c in cells) + 1
    length = max(c[1] for c in cells) + 1
    sizes = [0] * depth
    for lev, _, s, _ in cells:
        sizes[lev] = max(sizes[lev], s + 1)
    state = [np.zeros((length, sizes[lev])) for lev in range(depth)]
    for lev, t, s, p in cells:
        state[lev][t, s] = p
    transition = np.zeros((length - 1, depth))
    with open(transition_path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            transition[int(row["time"]), int(row["level"])] = float(
                row["probability"]
            )
    log_partition = None
    if meta_path is not None:
        with open(meta_path, "r", encoding="utf-8") as fh:
            log_partition = json.load(fh).get("log_partition")
    return MarginalSet(state, transition, log_partition)
