"""State hierarchies: per-level state sets and parent-to-child admissibility."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Topology",
    "validate_topology",
    "require_valid_topology",
    "fully_connected_topology",
    "topology_to_dict",
    "topology_from_dict",
    "read_topology",
    "write_topology",
]


@dataclass(frozen=True)
class Topology:
    """A bounded-depth state hierarchy.

    Levels are numbered 0 (root) through ``depth - 1`` (bottom).  States at
    level ``d`` are the dense integers ``0 .. sizes[d] - 1``.  For ``d <
    depth - 1``, ``children[d][p]`` lists the admissible level-``d + 1``
    states under parent ``p``; a child may appear under several parents.
    When ``root_persists`` is set, the level-0 state spans the whole
    sequence, so interior transition levels start at 1 instead of 0.
    """

    depth: int
    sizes: tuple[int, ...]
    children: tuple[tuple[tuple[int, ...], ...], ...]
    root_persists: bool = True

    @property
    def min_transition_level(self) -> int:
        return 1 if self.root_persists else 0

    @property
    def bottom(self) -> int:
        return self.depth - 1

    def child_mask(self, level: int) -> np.ndarray:
        """Boolean (sizes[level], sizes[level + 1]) admissibility matrix."""
        mask = np.zeros((self.sizes[level], self.sizes[level + 1]), dtype=bool)
        for parent, kids in enumerate(self.children[level]):
            mask[parent, list(kids)] = True
        return mask


def validate_topology(topo: Topology) -> list[str]:
    """Return a list of violations; an empty list means the topology is valid."""
    problems: list[str] = []
    if topo.depth < 2:
        problems.append(f"depth must be at least 2, got {topo.depth}")
    if len(topo.sizes) != topo.depth:
        problems.append(
            f"expected {topo.depth} level sizes, got {len(topo.sizes)}"
        )
        return problems
    for level, size in enumerate(topo.sizes):
        if size < 1:
            problems.append(f"level {level} must have at least one state")
    if len(topo.children) != max(topo.depth - 1, 0):
        problems.append(
            f"expected child sets for {topo.depth - 1} levels, got {len(topo.children)}"
        )
        return problems
    for level, per_parent in enumerate(topo.children):
        if len(per_parent) != topo.sizes[level]:
            problems.append(
                f"level {level} lists children for {len(per_parent)} parents, "
                f"expected {topo.sizes[level]}"
            )
            continue
        reached: set[int] = set()
        for parent, kids in enumerate(per_parent):
            if len(kids) == 0:
                problems.append(
                    f"state {parent} at level {level} has an empty child set"
                )
            if len(set(kids)) != len(kids):
                problems.append(
                    f"state {parent} at level {level} lists duplicate children"
                )
            for child in kids:
                if not 0 <= child < topo.sizes[level + 1]:
                    problems.append(
                        f"state {parent} at level {level} lists child {child} "
                        f"outside 0..{topo.sizes[level + 1] - 1}"
                    )
                else:
                    reached.add(child)
        for child in range(topo.sizes[level + 1]):
            if child not in reached:
                problems.append(
                    f"state {child} at level {level + 1} is unreachable from level {level}"
                )
    return problems


def require_valid_topology(topo: Topology) -> Topology:
    problems = validate_topology(topo)
    if problems:
        raise ValueError("invalid topology: " + "; ".join(problems))
    return topo


def fully_connected_topology(
    sizes: tuple[int, ...] | list[int], root_persists: bool = True
) -> Topology:
    """Topology where every parent admits every state of the next level."""
    sizes = tuple(int(s) for s in sizes)
    children = tuple(
        tuple(tuple(range(sizes[level + 1])) for _ in range(sizes[level]))
        for level in range(len(sizes) - 1)
    )
    return require_valid_topology(
        Topology(len(sizes), sizes, children, root_persists)
    )


def topology_to_dict(topo: Topology) -> dict:
    return {
        "depth": topo.depth,
        "states_per_level": list(topo.sizes),
        "children": [
            [list(kids) for kids in per_parent] for per_parent in topo.children
        ],
        "root_persists": topo.root_persists,
    }


def topology_from_dict(data: dict) -> Topology:
    topo = Topology(
        depth=int(data["depth"]),
        sizes=tuple(int(s) for s in data["states_per_level"]),
        children=tuple(
            tuple(tuple(int(c) for c in kids) for kids in per_parent)
            for per_parent in data["children"]
        ),
        root_persists=bool(data["root_persists"]),
    )
    return require_valid_topology(topo)


def read_topology(path: str | Path) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return topology_from_dict(json.load(fh))


def write_topology(topo: Topology, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(topology_to_dict(topo), fh, indent=2)
        fh.write("\n")
