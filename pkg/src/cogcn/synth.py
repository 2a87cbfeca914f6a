"""Planted-partition fixtures with injected outliers, plus the ARI oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import row_normalize
from .numkit import make_rng

ATTR_NOISE = 0.05


@dataclass(frozen=True)
class PlantedSpec:
    n_blocks: int = 4
    nodes_per_block: int = 15
    p_in: float = 0.3
    p_out: float = 0.02
    n_struct_outliers: int = 3
    n_attr_outliers: int = 3
    attr_dim_per_block: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_blocks < 1 or self.nodes_per_block < 1 or self.attr_dim_per_block < 1:
            raise ValueError("block count, block size and attribute width must be positive")
        if not 0 <= self.p_out < self.p_in <= 1:
            raise ValueError(f"need 0 <= p_out < p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}")
        if min(self.n_struct_outliers, self.n_attr_outliers) < 0:
            raise ValueError("outlier counts must be non-negative")
        if self.n_struct_outliers + self.n_attr_outliers > self.n_nodes:
            raise ValueError("more planted outliers than nodes")
        if self.n_attr_outliers and self.n_blocks < 2:
            raise ValueError("attribute outliers need at least two blocks")

    @property
    def n_nodes(self) -> int:
        return self.n_blocks * self.nodes_per_block


@dataclass(frozen=True)
class PlantedGraph:
    adjacency: np.ndarray          # directed, binary, zero diagonal
    attributes: np.ndarray         # row-normalized, n x (n_blocks * attr_dim_per_block)
    labels: np.ndarray             # planted block of every node
    struct_outliers: np.ndarray    # node indices
    attr_outliers: np.ndarray
    attr_pattern: np.ndarray       # block whose attribute pattern each node carries
    spec: PlantedSpec

    @property
    def outliers(self) -> np.ndarray:
        return np.concatenate([self.struct_outliers, self.attr_outliers])

    @property
    def inlier_mask(self) -> np.ndarray:
        mask = np.ones(len(self.labels), dtype=bool)
        mask[self.outliers] = False
        return mask


def _orient(rng: np.random.Generator, upper: np.ndarray) -> np.ndarray:
    """Give each undirected edge (upper-triangular) a random call direction."""
    flip = rng.random(upper.shape) < 0.5
    return np.where(flip, 0.0, upper) + np.where(flip, upper, 0.0).T


def planted_graph(spec: PlantedSpec) -> PlantedGraph:
    rng = make_rng(spec.seed)
    n, k, d = spec.n_nodes, spec.n_blocks, spec.attr_dim_per_block
    labels = np.repeat(np.arange(k), spec.nodes_per_block)

    probs = np.where(labels[:, None] == labels[None, :], spec.p_in, spec.p_out)
    upper = np.triu((rng.random((n, n)) < probs).astype(float), k=1)

    picks = rng.permutation(n)[: spec.n_struct_outliers + spec.n_attr_outliers]
    struct = np.sort(picks[: spec.n_struct_outliers])
    attr = np.sort(picks[spec.n_struct_outliers :])

    # structural outliers: drop planted edges, reconnect uniformly at the
    # intra-block density so they interact heavily with every block
    if struct.size:
        sym = upper + upper.T
        sym[struct, :] = 0.0
        sym[:, struct] = 0.0
        draws = np.triu((rng.random((n, n)) < spec.p_in).astype(float), k=1)
        draws = draws + draws.T
        sym[struct, :] = draws[struct, :]
        sym[:, struct] = draws[:, struct]
        np.fill_diagonal(sym, 0.0)
        upper = np.triu(sym, k=1)
    adjacency = _orient(rng, upper)

    pattern = labels.copy()
    for i in attr:
        others = np.delete(np.arange(k), labels[i])
        pattern[i] = rng.choice(others)

    # block indicator spread over the block's d columns, plus uniform noise
    X = np.repeat(np.eye(k)[pattern], d, axis=1)
    X += ATTR_NOISE * rng.random(X.shape)
    return PlantedGraph(
        adjacency=adjacency,
        attributes=row_normalize(X),
        labels=labels,
        struct_outliers=struct,
        attr_outliers=attr,
        attr_pattern=pattern,
        spec=spec,
    )


def class_name(i: int) -> str:
    return f"C{i:03d}"


def planted_to_monolith(planted: PlantedGraph) -> dict:
    """Emit a planted graph in the monolith JSON schema.

    Each attribute column becomes a pseudo-entrypoint whose trace holds the
    nodes that carry that column in their planted pattern.
    """
    n = len(planted.labels)
    d = planted.spec.attr_dim_per_block
    names = [class_name(i) for i in range(n)]
    src, dst = np.nonzero(planted.adjacency)
    # the pattern columns are the ones well above the noise floor
    active = planted.attributes > planted.attributes.max(axis=1, keepdims=True) * 0.5
    entrypoints = {}
    for col in range(active.shape[1]):
        members = [names[i] for i in np.flatnonzero(active[:, col])]
        if members:
            entrypoints[f"block{col // d}_ep{col % d}"] = members
    return {
        "classes": names,
        "calls": [[names[a], names[b]] for a, b in zip(src, dst)],
        "inheritance": [],
        "entrypoints": entrypoints,
    }


def synthetic_monolith(
    n_classes: int,
    n_entrypoints: int,
    n_blocks: int,
    p_in: float = 0.3,
    p_out: float = 0.02,
    trace_in: float = 0.4,
    trace_out: float = 0.02,
    n_inheritance: int | None = None,
    seed: int = 0,
) -> dict:
    """Monolith-shaped JSON document of arbitrary size (for scale tests).

    Classes are split into near-equal blocks; entrypoints are dealt to blocks
    round-robin and trace mostly their own block's classes.
    """
    if n_blocks < 1 or n_classes < n_blocks or n_entrypoints < n_blocks:
        raise ValueError("need at least one class and one entrypoint per block")
    rng = make_rng(seed)
    labels = np.sort(np.arange(n_classes) % n_blocks)
    names = [class_name(i) for i in range(n_classes)]

    probs = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    upper = np.triu((rng.random((n_classes, n_classes)) < probs).astype(float), k=1)
    adjacency = _orient(rng, upper)
    src, dst = np.nonzero(adjacency)

    ep_block = np.arange(n_entrypoints) % n_blocks
    member = rng.random((n_entrypoints, n_classes)) < np.where(
        ep_block[:, None] == labels[None, :], trace_in, trace_out
    )
    for i in np.flatnonzero(~member.any(axis=0)):
        member[rng.choice(np.flatnonzero(ep_block == labels[i])), i] = True

    if n_inheritance is None:
        n_inheritance = n_classes // 10
    inheritance: set[tuple[int, int]] = set()
    while len(inheritance) < n_inheritance:
        a = int(rng.integers(n_classes))
        same = np.flatnonzero(labels == labels[a])
        b = int(rng.choice(same))
        if a != b:
            inheritance.add((min(a, b), max(a, b)))

    return {
        "classes": names,
        "calls": [[names[a], names[b]] for a, b in zip(src, dst)],
        "inheritance": [[names[a], names[b]] for a, b in sorted(inheritance)],
        "entrypoints": {
            f"ep{p:04d}": [names[i] for i in np.flatnonzero(member[p])]
            for p in range(n_entrypoints)
        },
    }


def _pairs(counts: np.ndarray) -> float:
    counts = np.asarray(counts, dtype=float)
    return float(np.sum(counts * (counts - 1) / 2.0))


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index from the pair-counting contingency table."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"label vectors differ in length: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        return 1.0
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1)
    index = _pairs(table)
    sum_a = _pairs(table.sum(axis=1))
    sum_b = _pairs(table.sum(axis=0))
    expected = sum_a * sum_b / _pairs([n])
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        # both labelings trivial (all-same or all-distinct) on the same split
        return 1.0 if index == max_index and sum_a == sum_b else 0.0
    return float((index - expected) / (max_index - expected))
