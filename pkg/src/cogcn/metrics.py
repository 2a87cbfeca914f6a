"""Partition quality metrics for microservice candidates.

Modularity, structural modularity and the cohesion counts use the undirected
(symmetrized) graph. IFN uses the original call direction, since a published
interface is a class *referenced from* another cluster.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np

from .ingest import symmetrize


def _labels(partition, n: int) -> np.ndarray:
    labels = np.asarray(partition, dtype=int)
    if labels.shape != (n,):
        raise ValueError(f"partition has {labels.shape[0]} labels for {n} nodes")
    if labels.size and labels.min() < 0:
        raise ValueError("cluster ids must be non-negative")
    return labels


def _n_clusters(labels: np.ndarray, n_clusters: int | None) -> int:
    k = int(labels.max()) + 1 if labels.size else 0
    if n_clusters is None:
        return k
    if n_clusters < k:
        raise ValueError(f"label {k - 1} out of range for {n_clusters} clusters")
    return n_clusters


def modularity(A: np.ndarray, partition) -> float:
    """Newman modularity on the undirected graph; 0 for an edgeless graph."""
    adj = symmetrize(np.asarray(A, dtype=float))
    labels = _labels(partition, adj.shape[0])
    two_m = adj.sum()
    if two_m == 0:
        return 0.0
    deg = adj.sum(axis=1)
    same = labels[:, None] == labels[None, :]
    return float(np.sum((adj - np.outer(deg, deg) / two_m) * same) / two_m)


def cluster_edge_counts(A: np.ndarray, partition, n_clusters: int | None = None) -> np.ndarray:
    """K x K matrix of undirected edge counts; diagonal holds intra-cluster edges u_k."""
    adj = symmetrize(np.asarray(A, dtype=float))
    np.fill_diagonal(adj, 0.0)
    labels = _labels(partition, adj.shape[0])
    k = _n_clusters(labels, n_clusters)
    M = np.eye(k)[labels]
    counts = M.T @ np.triu(adj) @ M
    # fold into a symmetric matrix, each undirected edge counted once per pair
    sym = counts + counts.T
    np.fill_diagonal(sym, np.diag(counts))
    return sym


def structural_modularity(A: np.ndarray, partition, n_clusters: int | None = None) -> float:
    labels = _labels(partition, np.asarray(A).shape[0])
    k = _n_clusters(labels, n_clusters)
    if k == 0:
        return 0.0
    sizes = np.bincount(labels, minlength=k).astype(float)
    counts = cluster_edge_counts(A, labels, k)
    cohesion = sum(counts[c, c] / sizes[c] ** 2 for c in range(k) if sizes[c] > 0) / k
    if k == 1:
        return float(cohesion)
    coupling = sum(
        counts[a, b] / (2.0 * sizes[a] * sizes[b])
        for a, b in combinations(range(k), 2)
        if sizes[a] > 0 and sizes[b] > 0
    )
    return float(cohesion - coupling / (k * (k - 1) / 2))


def ned(partition, lower: int = 5, upper: int = 20, n_clusters: int | None = None) -> float:
    """Returns 1 - NED: the fraction of classes sitting in extreme-sized clusters."""
    labels = np.asarray(partition, dtype=int)
    if labels.size == 0:
        return 0.0
    sizes = np.bincount(labels, minlength=_n_clusters(labels, n_clusters))
    non_extreme = sizes[(sizes >= lower) & (sizes <= upper)].sum()
    return float(1.0 - non_extreme / labels.size)


def interface_counts(A_directed: np.ndarray, partition, n_clusters: int | None = None) -> np.ndarray:
    """ifn_k: classes in cluster k with an incoming edge from another cluster."""
    adj = np.asarray(A_directed) != 0
    labels = _labels(partition, adj.shape[0])
    k = _n_clusters(labels, n_clusters)
    cross = adj & (labels[:, None] != labels[None, :])
    published = cross.any(axis=0)
    return np.bincount(labels[published], minlength=k)


def ifn(A_directed: np.ndarray, partition, n_clusters: int | None = None) -> float:
    counts = interface_counts(A_directed, partition, n_clusters)
    return float(counts.mean()) if counts.size else 0.0


@dataclass
class MetricsReport:
    modularity: float
    structural_modularity: float
    one_minus_ned: float
    ifn: float
    cluster_sizes: list[int]
    intra_edges: list[int]
    interfaces: list[int]

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_partition(A_directed: np.ndarray, partition, n_clusters: int | None = None) -> MetricsReport:
    labels = _labels(partition, np.asarray(A_directed).shape[0])
    k = _n_clusters(labels, n_clusters)
    counts = cluster_edge_counts(A_directed, labels, k)
    ifn_k = interface_counts(A_directed, labels, k)
    return MetricsReport(
        modularity=modularity(A_directed, labels),
        structural_modularity=structural_modularity(A_directed, labels, k),
        one_minus_ned=ned(labels, n_clusters=k),
        ifn=float(ifn_k.mean()) if k else 0.0,
        cluster_sizes=[int(s) for s in np.bincount(labels, minlength=k)],
        intra_edges=[int(u) for u in np.diag(counts)],
        interfaces=[int(i) for i in ifn_k],
    )
