"""Hidden configurations: transition levels, state grids, and segmentation trees.

A length-``T`` configuration pairs a ``(depth, T)`` state grid with the
``T - 1`` interior transition levels.  Transition level ``v`` at boundary
``t`` (between positions ``t`` and ``t + 1``) means: levels above ``v``
keep their state, level ``v`` moves laterally to a sibling, and every
level below ``v`` ends its chain and re-initialises.  The final boundary
is pinned: all levels end at ``T - 1``, so it is never stored or sampled.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .topology import Topology

__all__ = [
    "Configuration",
    "Segment",
    "SegmentationTree",
    "check_transition_levels",
    "segmentation_from_e",
    "transition_levels_from_segmentation",
    "is_valid_configuration",
    "minimal_configuration",
    "enumerate_transition_sequences",
    "enumerate_configurations",
]

ENUMERATION_LIMIT = 1_000_000


@dataclass
class Configuration:
    """A state grid ``x`` of shape (depth, T) plus interior transition levels ``e``."""

    x: np.ndarray
    e: np.ndarray

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.int64)
        self.e = np.asarray(self.e, dtype=np.int64)
        if self.x.ndim != 2:
            raise ValueError("state grid must be two-dimensional")
        if self.e.ndim != 1 or self.e.size != self.x.shape[1] - 1:
            raise ValueError(
                "transition levels must be one-dimensional with length T - 1"
            )

    @property
    def length(self) -> int:
        return self.x.shape[1]


@dataclass
class Segment:
    """A maximal constant-state run at one level, spanning ``start..end`` inclusive."""

    level: int
    start: int
    end: int
    parent: int | None = None
    children: list[int] = field(default_factory=list)
    first_child: bool = True
    last_child: bool = True


@dataclass
class SegmentationTree:
    depth: int
    length: int
    levels: list[list[Segment]]

    def segment_covering(self, level: int, t: int) -> Segment:
        for seg in self.levels[level]:
            if seg.start <= t <= seg.end:
                return seg
        raise IndexError(f"no segment at level {level} covers position {t}")


def check_transition_levels(
    e: np.ndarray, depth: int, root_persists: bool, length: int | None = None
) -> np.ndarray:
    """Validate interior transition levels, returning them as an int array."""
    e = np.asarray(e, dtype=np.int64)
    if e.ndim != 1:
        raise ValueError("transition levels must form a one-dimensional array")
    if length is not None and e.size != length - 1:
        raise ValueError(
            f"expected {length - 1} interior transition levels, got {e.size}"
        )
    if e.size and (e.min() < 0 or e.max() >= depth):
        raise ValueError(f"transition levels must lie in 0..{depth - 1}")
    if root_persists and e.size and e.min() < 1:
        raise ValueError(
            "interior transitions at the root level are not allowed while the root persists"
        )
    return e


def segmentation_from_e(e: np.ndarray, depth: int) -> SegmentationTree:
    """Build the per-level segmentation induced by interior transition levels.

    Level ``lev`` has a boundary after position ``t`` exactly when
    ``e[t] <= lev``; both sequence ends always close every level.  Child
    segments nest inside the unique parent segment covering their span, and
    parent spans always align with their first and last child.
    """
    e = np.asarray(e, dtype=np.int64)
    if e.size and (e.min() < 0 or e.max() >= depth):
        raise ValueError(f"transition levels must lie in 0..{depth - 1}")
    length = e.size + 1
    levels: list[list[Segment]] = []
    for lev in range(depth):
        cuts = np.flatnonzero(e <= lev)
        starts = np.concatenate(([0], cuts + 1))
        ends = np.concatenate((cuts, [length - 1]))
        levels.append(
            [Segment(lev, int(a), int(b)) for a, b in zip(starts, ends)]
        )
    tree = SegmentationTree(depth, length, levels)
    for lev in range(1, depth):
        parent_idx = 0
        parents = tree.levels[lev - 1]
        for child_idx, seg in enumerate(tree.levels[lev]):
            while parents[parent_idx].end < seg.start:
                parent_idx += 1
            parent = parents[parent_idx]
            seg.parent = parent_idx
            seg.first_child = seg.start == parent.start
            seg.last_child = seg.end == parent.end
            parent.children.append(child_idx)
    for seg in tree.levels[0]:
        seg.first_child = seg.start == 0
        seg.last_child = seg.end == length - 1
    return tree


def transition_levels_from_segmentation(tree: SegmentationTree) -> np.ndarray:
    """Recover ``e`` from segment boundaries; inverse of ``segmentation_from_e``."""
    e = np.full(tree.length - 1, tree.depth, dtype=np.int64)
    for lev in reversed(range(tree.depth)):
        for seg in tree.levels[lev]:
            if seg.end < tree.length - 1:
                e[seg.end] = lev
    if e.size and e.max() >= tree.depth:
        raise ValueError("segmentation has a boundary missing at the bottom level")
    return e


def is_valid_configuration(cfg: Configuration, topo: Topology) -> bool:
    """True iff the grid and transition levels are mutually consistent.

    Checks: e is well formed; states lie in each level's range; every level
    above a boundary's transition level persists across it; and every
    parent-child pair in the grid is admissible.
    """
    depth = topo.depth
    x, e = cfg.x, cfg.e
    if x.shape[0] != depth or x.shape[1] != e.size + 1:
        return False
    try:
        check_transition_levels(e, depth, topo.root_persists)
    except ValueError:
        return False
    for lev in range(depth):
        if x[lev].min() < 0 or x[lev].max() >= topo.sizes[lev]:
            return False
    for t in range(e.size):
        lev = e[t]
        if lev > 0 and not np.array_equal(x[:lev, t], x[:lev, t + 1]):
            return False
    for lev in range(depth - 1):
        mask = topo.child_mask(lev)
        if not mask[x[lev], x[lev + 1]].all():
            return False
    return True


def minimal_configuration(topo: Topology, length: int) -> Configuration:
    """Lexicographically smallest valid configuration of the given length."""
    states = np.zeros(topo.depth, dtype=np.int64)
    for lev in range(1, topo.depth):
        states[lev] = min(topo.children[lev - 1][states[lev - 1]])
    x = np.repeat(states[:, None], length, axis=1)
    e = np.full(length - 1, topo.min_transition_level, dtype=np.int64)
    return Configuration(x, e)


def enumerate_transition_sequences(
    depth: int, length: int, root_persists: bool
) -> Iterator[np.ndarray]:
    """All well-formed interior transition-level sequences, lexicographically."""
    lo = 1 if root_persists else 0
    for combo in itertools.product(range(lo, depth), repeat=length - 1):
        yield np.array(combo, dtype=np.int64)


def _grids_for_tree(tree: SegmentationTree, topo: Topology) -> Iterator[np.ndarray]:
    """All admissible state grids over a fixed segmentation, as (depth, T) arrays."""
    order = [
        (lev, idx)
        for lev in range(tree.depth)
        for idx in range(len(tree.levels[lev]))
    ]
    assigned: dict[tuple[int, int], int] = {}
    x = np.zeros((tree.depth, tree.length), dtype=np.int64)

    def options(lev: int, idx: int) -> range | tuple[int, ...]:
        if lev == 0:
            return range(topo.sizes[0])
        parent_state = assigned[(lev - 1, tree.levels[lev][idx].parent)]
        return topo.children[lev - 1][parent_state]

    def rec(pos: int) -> Iterator[np.ndarray]:
        if pos == len(order):
            yield x.copy()
            return
        lev, idx = order[pos]
        seg = tree.levels[lev][idx]
        for state in options(lev, idx):
            assigned[(lev, idx)] = state
            x[lev, seg.start : seg.end + 1] = state
            yield from rec(pos + 1)
        del assigned[(lev, idx)]

    yield from rec(0)


def enumerate_configurations(
    topo: Topology, length: int, limit: int = ENUMERATION_LIMIT
) -> Iterator[Configuration]:
    """Yield every valid configuration of the given length.

    Intended for tiny instances only; raises once more than ``limit``
    configurations have been produced.
    """
    produced = 0
    for e in enumerate_transition_sequences(topo.depth, length, topo.root_persists):
        tree = segmentation_from_e(e, topo.depth)
        for grid in _grids_for_tree(tree, topo):
            produced += 1
            if produced > limit:
                raise ValueError(
                    f"instance too large for enumeration (limit {limit})"
                )
            yield Configuration(grid, e.copy())
