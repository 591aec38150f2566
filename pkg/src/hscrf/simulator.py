"""Generative sampler for labeled sequences from a hierarchical HMM.

The generator mirrors the discriminative model's structure: per-parent
initial-child distributions, per-parent lateral transition rows with an
explicit end probability, and bottom-level emission rows.  A virtual
parent above the root makes every level uniform, so ``init[0]`` is the
root's initial distribution and ``trans[0]``/``end[0]`` drive root
dynamics when the root does not persist.

Sequences are cut to a fixed length: whenever the end cascade reaches
the shallowest level allowed to transition before the last position,
that level is forced to continue with a lateral move, and at the last
position every level ends.  Forced tails are kept, not rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .configurations import Configuration
from .model import ObservationSequence
from .topology import Topology

__all__ = [
    "GenerativeParams",
    "LabeledSequence",
    "validate_generative_params",
    "require_valid_generative_params",
    "random_generative_params",
    "sample_sequence",
    "make_dataset",
    "write_dataset",
    "read_dataset",
    "generative_params_to_dict",
    "generative_params_from_dict",
]

_ROW_TOL = 1e-9


class LabeledSequence(NamedTuple):
    config: Configuration | None
    observations: ObservationSequence


@dataclass
class GenerativeParams:
    """Stochastic rows of the generator, indexed like the model weights.

    ``init[d]`` has shape (parents, sizes[d]) where the parent axis has one
    entry for ``d = 0``.  ``trans[d][p, u]`` together with ``end[d][p, u]``
    forms one distribution: continue laterally to some sibling, or end.
    """

    init: list[np.ndarray]
    trans: list[np.ndarray]
    end: list[np.ndarray]
    emit: np.ndarray

    @property
    def alphabet_size(self) -> int:
        return self.emit.shape[1]


def _parent_count(topo: Topology, level: int) -> int:
    return 1 if level == 0 else topo.sizes[level - 1]


def _admissible(topo: Topology, level: int, parent: int) -> tuple[int, ...]:
    if level == 0:
        return tuple(range(topo.sizes[0]))
    return topo.children[level - 1][parent]


def validate_generative_params(gp: GenerativeParams, topo: Topology) -> list[str]:
    problems: list[str] = []
    for lev in range(topo.depth):
        parents = _parent_count(topo, lev)
        size = topo.sizes[lev]
        if gp.init[lev].shape != (parents, size):
            problems.append(f"init[{lev}] has shape {gp.init[lev].shape}")
            continue
        if gp.trans[lev].shape != (parents, size, size):
            problems.append(f"trans[{lev}] has shape {gp.trans[lev].shape}")
            continue
        if gp.end[lev].shape != (parents, size):
            problems.append(f"end[{lev}] has shape {gp.end[lev].shape}")
            continue
        for p in range(parents):
            allowed = np.zeros(size, dtype=bool)
            allowed[list(_admissible(topo, lev, p))] = True
            if abs(gp.init[lev][p].sum() - 1.0) > _ROW_TOL:
                problems.append(f"init[{lev}][{p}] does not sum to 1")
            if gp.init[lev][p][~allowed].any():
                problems.append(
                    f"init[{lev}][{p}] puts mass on inadmissible children"
                )
            row_sums = gp.trans[lev][p].sum(axis=1) + gp.end[lev][p]
            if np.abs(row_sums[allowed] - 1.0).max(initial=0.0) > _ROW_TOL:
                problems.append(
                    f"trans[{lev}][{p}] rows plus end do not sum to 1"
                )
            if gp.trans[lev][p][:, ~allowed].any() or gp.trans[lev][p][~allowed].any():
                problems.append(
                    f"trans[{lev}][{p}] puts mass on inadmissible children"
                )
    if gp.emit.shape[0] != topo.sizes[topo.depth - 1]:
        problems.append("emission rows do not match the bottom level")
    elif np.abs(gp.emit.sum(axis=1) - 1.0).max(initial=0.0) > _ROW_TOL:
        problems.append("emission rows do not sum to 1")
    return problems


def require_valid_generative_params(
    gp: GenerativeParams, topo: Topology
) -> GenerativeParams:
    problems = validate_generative_params(gp, topo)
    if problems:
        raise ValueError("invalid generative parameters: " + "; ".join(problems))
    return gp


def random_generative_params(
    topo: Topology,
    alphabet_size: int,
    rng: np.random.Generator,
    concentration: float = 1.0,
) -> GenerativeParams:
    """Draw every row from a symmetric Dirichlet over its admissible support."""
    init, trans, end = [], [], []
    for lev in range(topo.depth):
        parents = _parent_count(topo, lev)
        size = topo.sizes[lev]
        init_lev = np.zeros((parents, size))
        trans_lev = np.zeros((parents, size, size))
        end_lev = np.zeros((parents, size))
        for p in range(parents):
            allowed = list(_admissible(topo, lev, p))
            init_lev[p, allowed] = rng.dirichlet([concentration] * len(allowed))
            for u in allowed:
                row = rng.dirichlet([concentration] * (len(allowed) + 1))
                trans_lev[p, u, allowed] = row[:-1]
                end_lev[p, u] = row[-1]
        init.append(init_lev)
        trans.append(trans_lev)
        end.append(end_lev)
    emit = np.stack(
        [
            rng.dirichlet([concentration] * alphabet_size)
            for _ in range(topo.sizes[topo.depth - 1])
        ]
    )
    return GenerativeParams(init, trans, end, emit)


def sample_sequence(
    gp: GenerativeParams,
    topo: Topology,
    length: int,
    rng: np.random.Generator,
) -> LabeledSequence:
    """Run the generator for exactly ``length`` steps and label the output.

    At each interior boundary the bottom level decides to end or continue;
    ends cascade upward until some level continues, and that level's index
    is the recorded transition level.  The shallowest allowed level never
    ends before the final position.
    """
    if length < 1:
        raise ValueError("sequence length must be at least 1")
    depth = topo.depth
    floor_lev = topo.min_transition_level
    x = np.zeros((depth, length), dtype=np.int64)
    e = np.zeros(max(length - 1, 0), dtype=np.int64)
    symbols = np.zeros(length, dtype=np.int64)
    states = np.zeros(depth, dtype=np.int64)
    for lev in range(depth):
        parent = 0 if lev == 0 else states[lev - 1]
        states[lev] = rng.choice(topo.sizes[lev], p=gp.init[lev][parent])
    x[:, 0] = states
    symbols[0] = rng.choice(gp.alphabet_size, p=gp.emit[states[depth - 1]])
    for t in range(length - 1):
        lev = depth - 1
        while lev > floor_lev:
            parent = 0 if lev == 0 else states[lev - 1]
            if rng.random() < gp.end[lev][parent, states[lev]]:
                lev -= 1
            else:
                break
        parent = 0 if lev == 0 else states[lev - 1]
        row = gp.trans[lev][parent, states[lev]]
        total = row.sum()
        if total <= 0.0:
            raise ValueError(
                f"level {lev} has no lateral mass to continue a forced sequence"
            )
        states[lev] = rng.choice(topo.sizes[lev], p=row / total)
        for below in range(lev + 1, depth):
            states[below] = rng.choice(
                topo.sizes[below], p=gp.init[below][states[below - 1]]
            )
        e[t] = lev
        x[:, t + 1] = states
        symbols[t + 1] = rng.choice(gp.alphabet_size, p=gp.emit[states[depth - 1]])
    return LabeledSequence(
        Configuration(x, e), ObservationSequence(symbols, gp.alphabet_size)
    )


def make_dataset(
    gp: GenerativeParams,
    topo: Topology,
    count: int,
    length: int,
    rng: np.random.Generator,
) -> list[LabeledSequence]:
    return [sample_sequence(gp, topo, length, rng) for _ in range(count)]


def write_dataset(records: list[LabeledSequence], path: str | Path) -> None:
    """One JSON object per line with keys ``o``, ``x``, ``e``."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            row: dict = {"o": record.observations.symbols.tolist()}
            if record.config is not None:
                row["x"] = record.config.x.tolist()
                row["e"] = record.config.e.tolist()
            fh.write(json.dumps(row))
            fh.write("\n")


def read_dataset(
    path: str | Path, alphabet_size: int | None = None
) -> list[LabeledSequence]:
    """Read a JSONL dataset; rows without labels yield ``config=None``."""
    raw = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                raw.append(json.loads(line))
    if not raw:
        raise ValueError(f"dataset {path} is empty")
    if alphabet_size is None:
        alphabet_size = max(max(row["o"]) for row in raw) + 1
    records = []
    for row in raw:
        config = None
        if "x" in row and "e" in row:
            config = Configuration(np.asarray(row["x"]), np.asarray(row["e"]))
        records.append(
            LabeledSequence(
                config, ObservationSequence(np.asarray(row["o"]), alphabet_size)
            )
        )
    return records


def generative_params_to_dict(gp: GenerativeParams) -> dict:
    return {
        "init": [a.tolist() for a in gp.init],
        "trans": [a.tolist() for a in gp.trans],
        "end": [a.tolist() for a in gp.end],
        "emit": gp.emit.tolist(),
    }


def generative_params_from_dict(data: dict) -> GenerativeParams:
    return GenerativeParams(
        init=[np.asarray(a, dtype=np.float64) for a in data["init"]],
        trans=[np.asarray(a, dtype=np.float64) for a in data["trans"]],
        end=[np.asarray(a, dtype=np.float64) for a in data["end"]],
        emit=np.asarray(data["emit"], dtype=np.float64),
    )
