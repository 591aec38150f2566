"""Log-linear weights and the joint potential over hidden configurations.

The unnormalised log-potential of a configuration is a sum of event
weights read off its segmentation tree: an initial-child weight where a
segment starts together with its parent, a lateral-transition weight
where it follows a sibling, an end weight where it closes its parent's
span, root start/end weights for each root segment, and one emission
weight per time step at the bottom level.  Weights are free real
numbers; pairs outside the topology's admissibility are structurally
excluded rather than stored as infinities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .configurations import Configuration, is_valid_configuration, segmentation_from_e
from .topology import Topology

__all__ = [
    "ObservationSequence",
    "ModelParams",
    "FeatureVector",
    "feature_counts",
    "log_joint_potential",
    "params_to_dict",
    "params_from_dict",
    "read_params",
    "write_params",
]


@dataclass
class ObservationSequence:
    """A row of discrete symbols drawn from a finite alphabet."""

    symbols: np.ndarray
    alphabet_size: int

    def __post_init__(self) -> None:
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if self.symbols.ndim != 1 or self.symbols.size < 1:
            raise ValueError("observations must form a non-empty 1-d array")
        if self.alphabet_size < 1:
            raise ValueError("alphabet size must be positive")
        if self.symbols.min() < 0 or self.symbols.max() >= self.alphabet_size:
            raise ValueError(
                f"observation symbols must lie in 0..{self.alphabet_size - 1}"
            )

    @property
    def length(self) -> int:
        return self.symbols.size


def _group_shapes(topo: Topology, alphabet_size: int) -> list[tuple[int, ...]]:
    shapes: list[tuple[int, ...]] = [(topo.sizes[0],), (topo.sizes[0],)]
    for lev in range(topo.depth - 1):
        pair = (topo.sizes[lev], topo.sizes[lev + 1])
        shapes.append(pair)
        shapes.append((topo.sizes[lev], topo.sizes[lev + 1], topo.sizes[lev + 1]))
        shapes.append(pair)
    shapes.append((topo.sizes[topo.depth - 1], alphabet_size))
    return shapes


class _GroupedArrays:
    """Shared container logic for weights and counts (same shapes, different dtype)."""

    root_init: np.ndarray
    root_end: np.ndarray
    init: list[np.ndarray]
    trans: list[np.ndarray]
    end: list[np.ndarray]
    obs: np.ndarray

    def _arrays(self) -> list[np.ndarray]:
        out = [self.root_init, self.root_end]
        for lev in range(len(self.init)):
            out.extend((self.init[lev], self.trans[lev], self.end[lev]))
        out.append(self.obs)
        return out

    def pack(self) -> np.ndarray:
        """Flatten all groups into one float vector (fixed group order)."""
        return np.concatenate([a.ravel().astype(np.float64) for a in self._arrays()])

    @property
    def size(self) -> int:
        return sum(a.size for a in self._arrays())


@dataclass
class ModelParams(_GroupedArrays):
    """All weight groups of the model, shaped by a topology and an alphabet.

    ``init[d]``, ``trans[d]`` and ``end[d]`` are indexed by the parent
    level ``d``; their remaining axes range over child states at level
    ``d + 1``.  ``obs`` maps bottom-level states to symbol weights.
    """

    root_init: np.ndarray
    root_end: np.ndarray
    init: list[np.ndarray]
    trans: list[np.ndarray]
    end: list[np.ndarray]
    obs: np.ndarray

    @classmethod
    def zeros(cls, topo: Topology, alphabet_size: int) -> "ModelParams":
        shapes = _group_shapes(topo, alphabet_size)
        arrays = [np.zeros(s) for s in shapes]
        return cls._from_flat_list(arrays, topo.depth)

    @classmethod
    def random(
        cls,
        topo: Topology,
        alphabet_size: int,
        rng: np.random.Generator,
        scale: float = 1.0,
    ) -> "ModelParams":
        shapes = _group_shapes(topo, alphabet_size)
        arrays = [rng.normal(0.0, scale, size=s) for s in shapes]
        return cls._from_flat_list(arrays, topo.depth)

    @classmethod
    def _from_flat_list(cls, arrays: list[np.ndarray], depth: int) -> "ModelParams":
        root_init, root_end = arrays[0], arrays[1]
        init, trans, end = [], [], []
        for lev in range(depth - 1):
            init.append(arrays[2 + 3 * lev])
            trans.append(arrays[3 + 3 * lev])
            end.append(arrays[4 + 3 * lev])
        return cls(root_init, root_end, init, trans, end, arrays[-1])

    @classmethod
    def unpack(
        cls, topo: Topology, alphabet_size: int, flat: np.ndarray
    ) -> "ModelParams":
        shapes = _group_shapes(topo, alphabet_size)
        arrays = []
        offset = 0
        for shape in shapes:
            size = int(np.prod(shape))
            arrays.append(np.asarray(flat[offset : offset + size]).reshape(shape))
            offset += size
        if offset != flat.size:
            raise ValueError("flat vector length does not match the model shapes")
        return cls._from_flat_list(arrays, topo.depth)

    @property
    def alphabet_size(self) -> int:
        return self.obs.shape[1]

    def validate_shapes(self, topo: Topology) -> None:
        expected = _group_shapes(topo, self.alphabet_size)
        actual = [a.shape for a in self._arrays()]
        if [tuple(s) for s in expected] != actual:
            raise ValueError("parameter shapes do not match the topology")


@dataclass
class FeatureVector(_GroupedArrays):
    """Integer event counts, one counter per weight coordinate."""

    root_init: np.ndarray
    root_end: np.ndarray
    init: list[np.ndarray]
    trans: list[np.ndarray]
    end: list[np.ndarray]
    obs: np.ndarray

    @classmethod
    def zeros(cls, topo: Topology, alphabet_size: int) -> "FeatureVector":
        shapes = _group_shapes(topo, alphabet_size)
        arrays = [np.zeros(s, dtype=np.int64) for s in shapes]
        mp = ModelParams._from_flat_list(arrays, topo.depth)
        return cls(mp.root_init, mp.root_end, mp.init, mp.trans, mp.end, mp.obs)

    @property
    def total_events(self) -> int:
        return int(sum(a.sum() for a in self._arrays()))


def _require_consistent(
    cfg: Configuration, obs: ObservationSequence, topo: Topology
) -> None:
    if not is_valid_configuration(cfg, topo):
        raise ValueError("inconsistent configuration")
    if obs.length != cfg.length:
        raise ValueError("observation length does not match the configuration")


def feature_counts(
    cfg: Configuration, obs: ObservationSequence, topo: Topology
) -> FeatureVector:
    """Count every potential event of a configuration.

    Each root segment contributes one root start and one root end count;
    deeper segments contribute an init count when they open their parent's
    span, a transition count when they follow a sibling, and an end count
    when they close the span.  Every time step adds one emission count at
    the bottom level.
    """
    _require_consistent(cfg, obs, topo)
    fv = FeatureVector.zeros(topo, obs.alphabet_size)
    tree = segmentation_from_e(cfg.e, topo.depth)
    x = cfg.x
    for seg in tree.levels[0]:
        fv.root_init[x[0, seg.start]] += 1
        fv.root_end[x[0, seg.end]] += 1
    for lev in range(1, topo.depth):
        prev_state = -1
        for seg in tree.levels[lev]:
            state = x[lev, seg.start]
            parent = x[lev - 1, seg.start]
            if seg.first_child:
                fv.init[lev - 1][parent, state] += 1
            else:
                fv.trans[lev - 1][parent, prev_state, state] += 1
            if seg.last_child:
                fv.end[lev - 1][parent, state] += 1
            prev_state = state
    np.add.at(fv.obs, (x[topo.depth - 1], obs.symbols), 1)
    return fv


def log_joint_potential(
    params: ModelParams,
    topo: Topology,
    obs: ObservationSequence,
    cfg: Configuration,
) -> float:
    """Sum of event weights for one configuration (the unnormalised log-potential)."""
    params.validate_shapes(topo)
    _require_consistent(cfg, obs, topo)
    tree = segmentation_from_e(cfg.e, topo.depth)
    x = cfg.x
    total = 0.0
    for seg in tree.levels[0]:
        total += params.root_init[x[0, seg.start]]
        total += params.root_end[x[0, seg.end]]
    for lev in range(1, topo.depth):
        prev_state = -1
        for seg in tree.levels[lev]:
            state = x[lev, seg.start]
            parent = x[lev - 1, seg.start]
            if seg.first_child:
                total += params.init[lev - 1][parent, state]
            else:
                total += params.trans[lev - 1][parent, prev_state, state]
            if seg.last_child:
                total += params.end[lev - 1][parent, state]
            prev_state = state
    total += params.obs[x[topo.depth - 1], obs.symbols].sum()
    return float(total)


def params_to_dict(params: ModelParams) -> dict:
    return {
        "root_init": params.root_init.tolist(),
        "root_end": params.root_end.tolist(),
        "init": [a.tolist() for a in params.init],
        "trans": [a.tolist() for a in params.trans],
        "end": [a.tolist() for a in params.end],
        "obs": params.obs.tolist(),
    }


def params_from_dict(data: dict) -> ModelParams:
    return ModelParams(
        root_init=np.asarray(data["root_init"], dtype=np.float64),
        root_end=np.asarray(data["root_end"], dtype=np.float64),
        init=[np.asarray(a, dtype=np.float64) for a in data["init"]],
        trans=[np.asarray(a, dtype=np.float64) for a in data["trans"]],
        end=[np.asarray(a, dtype=np.float64) for a in data["end"]],
        obs=np.asarray(data["obs"], dtype=np.float64),
    )


def read_params(path: str | Path) -> ModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))


def write_params(params: ModelParams, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_dict(params), fh)
        fh.write("\n")
