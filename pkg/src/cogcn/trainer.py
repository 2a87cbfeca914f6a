"""Alternating-minimization training loop for CO-GCN.

One outer iteration is, in order:

1. closed-form outlier scores from the current reconstruction residuals,
2. nearest-center assignment followed by center recomputation,
3. a single ADAM step on the network weights with scores and clusters fixed.

Before the loop the autoencoder is pre-trained on the two reconstruction
losses with uniform outlier scores, and clusters are seeded with k-means++.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from os import PathLike
from typing import Callable, NamedTuple

import numpy as np

from . import gcn
from .gcn import LossComponents, LossWeights, ModelParams
from .ingest import normalize_adjacency, symmetrize
from .numkit import AdamState, adam_step, make_rng

log = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-12
KMEANS_MAX_ROUNDS = 100
KMEANS_RESTARTS = 10


class DivergenceError(RuntimeError):
    def __init__(self, phase: str, iteration: int):
        super().__init__(f"non-finite loss during {phase} at iteration {iteration}")
        self.phase = phase
        self.iteration = iteration


@dataclass(frozen=True)
class TrainConfig:
    n_clusters: int
    hidden_dim: int = 64
    embed_dim: int = 32
    pretrain_iters: int = 250
    main_iters: int = 500
    weights: LossWeights = LossWeights(0.1, 0.1, 0.8)
    seed: int = 0
    symmetrize: bool = True
    ablation_no_cluster: bool = False
    ablation_no_outlier: bool = False
    learning_rate: float = 0.01
    lr_decay_rate: float = 0.95
    lr_decay_every: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", LossWeights(*self.weights).validate())
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be at least 1")
        if min(self.hidden_dim, self.embed_dim) < 1:
            raise ValueError("layer widths must be positive")
        if min(self.pretrain_iters, self.main_iters) < 0:
            raise ValueError("iteration counts must be non-negative")

    @property
    def effective_weights(self) -> LossWeights:
        if self.ablation_no_cluster:
            return self.weights._replace(alpha3=0.0)
        return self.weights

    @property
    def log_weighting(self) -> bool:
        return not self.ablation_no_outlier

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = list(self.weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["weights"] = LossWeights(*d.get("weights", LossWeights()))
        return cls(**d)


class LossRecord(NamedTuple):
    iteration: int
    structural: float
    attribute: float
    clustering: float
    total: float


@dataclass
class TrainState:
    params: ModelParams
    Z: np.ndarray
    O_s: np.ndarray
    O_a: np.ndarray
    M: np.ndarray | None = None
    C: np.ndarray | None = None
    adam: AdamState | None = None
    X_hat: np.ndarray | None = None
    pretrain_history: list[LossRecord] = field(default_factory=list)
    loss_history: list[LossRecord] = field(default_factory=list)

    @property
    def labels(self) -> np.ndarray:
        if self.M is None:
            raise ValueError("state has no cluster assignment yet")
        return self.M.argmax(axis=1)


@dataclass(frozen=True)
class TrainingProblem:
    """Fixed inputs of one training run, derived from a graph and config."""

    a_hat: np.ndarray
    X: np.ndarray
    A_target: np.ndarray

    @classmethod
    def from_arrays(cls, adjacency: np.ndarray, attributes: np.ndarray, symmetrize_edges: bool = True):
        adjacency = np.asarray(adjacency, dtype=float)
        target = symmetrize(adjacency) if symmetrize_edges else adjacency
        return cls(
            a_hat=normalize_adjacency(adjacency, symmetrize_edges),
            X=np.asarray(attributes, dtype=float),
            A_target=target,
        )

    @property
    def n_nodes(self) -> int:
        return self.X.shape[0]


def _as_problem(graph, config: TrainConfig) -> TrainingProblem:
    if isinstance(graph, TrainingProblem):
        return graph
    return TrainingProblem.from_arrays(graph.adjacency, graph.attributes, config.symmetrize)


def _seeds(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    init_seq, cluster_seq = np.random.SeedSequence(seed).spawn(2)
    return init_seq, cluster_seq


def _checked(total: float, phase: str, iteration: int) -> float:
    if not math.isfinite(total):
        raise DivergenceError(phase, iteration)
    return total


def pretrain(graph, config: TrainConfig) -> TrainState:
    """Glorot init, then ADAM on the two reconstruction losses with uniform scores."""
    prob = _as_problem(graph, config)
    n = prob.n_nodes
    init_seq, _ = _seeds(config.seed)
    params = ModelParams.initialize(prob.X.shape[1], config.hidden_dim, config.embed_dim, init_seq)
    uniform = np.full(n, 1.0 / n)
    adam = AdamState(
        base_lr=config.learning_rate,
        decay_rate=config.lr_decay_rate,
        decay_every=config.lr_decay_every,
    )
    weights = config.weights._replace(alpha3=0.0)
    history = []
    for it in range(1, config.pretrain_iters + 1):
        total, comps, cache = gcn.evaluate(
            prob.a_hat, prob.X, prob.A_target, params, uniform, uniform, None, None,
            weights, config.log_weighting,
        )
        history.append(LossRecord(it, *comps, _checked(total, "pretraining", it)))
        grads = gcn.grad_params(
            prob.a_hat, prob.X, prob.A_target, params, uniform, uniform, None, None,
            weights, cache, config.log_weighting,
        )
        new, adam = adam_step(params.as_dict(), grads, adam)
        params = ModelParams.from_dict(new)
    cache = gcn.forward(prob.a_hat, prob.X, params)
    # a fresh optimizer for the joint objective; the pretraining moments
    # belong to a different loss surface
    joint_adam = replace(adam, step_count=0, first_moment={}, second_moment={})
    return TrainState(
        params=params, Z=cache.Z, X_hat=cache.X_hat, O_s=uniform.copy(), O_a=uniform.copy(),
        adam=joint_adam, pretrain_history=history,
    )


def _sq_dists(Z: np.ndarray, C: np.ndarray) -> np.ndarray:
    diff = Z[:, None, :] - C[None, :, :]
    return np.einsum("ikd,ikd->ik", diff, diff)


def update_assignments(Z: np.ndarray, C: np.ndarray) -> np.ndarray:
    """One-hot nearest-center assignment; ties go to the lowest cluster index."""
    nearest = np.argmin(_sq_dists(Z, C), axis=1)
    return np.eye(C.shape[0])[nearest]


def update_centers(Z: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Cluster means; an empty cluster is re-seeded at the point lying
    farthest from its own center (each such point is used once)."""
    gcn.check_one_hot(M)
    sizes = M.sum(axis=0)
    sums = M.T @ Z
    C = np.divide(sums, sizes[:, None], out=np.zeros_like(sums), where=sizes[:, None] > 0)
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        dist = np.sum((Z - M @ C) ** 2, axis=1)
        order = np.argsort(-dist, kind="stable")
        for k, i in zip(empty, order):
            C[k] = Z[i]
    return C


def _kmeanspp_seed(Z: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = Z.shape[0]
    chosen = [int(rng.integers(n))]
    closest = np.sum((Z - Z[chosen[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a chosen center
            nxt = int(rng.choice(np.setdiff1d(np.arange(n), chosen)))
        chosen.append(nxt)
        closest = np.minimum(closest, np.sum((Z - Z[nxt]) ** 2, axis=1))
    return Z[chosen].copy()


def _lloyd(Z: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    M = update_assignments(Z, C)
    for _ in range(KMEANS_MAX_ROUNDS):
        C = update_centers(Z, M)
        M_next = update_assignments(Z, C)
        if np.array_equal(M_next, M):
            break
        M = M_next
    return M, update_centers(Z, M)


def kmeanspp_init(Z: np.ndarray, K: int, seed, n_init: int = KMEANS_RESTARTS) -> tuple[np.ndarray, np.ndarray]:
    """k-means++ seeding followed by Lloyd rounds until assignments settle.

    The seeding is repeated ``n_init`` times from one generator and the run
    with the lowest clustering loss is kept (earliest run wins ties).
    """
    n = Z.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"cannot form {K} clusters from {n} points")
    if n_init < 1:
        raise ValueError("n_init must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    best = None
    for _ in range(n_init):
        M, C = _lloyd(Z, _kmeanspp_seed(Z, K, rng))
        inertia = gcn.loss_clus(Z, M, C)
        if best is None or inertia < best[0]:
            best = (inertia, M, C)
    return best[1], best[2]


def _normalized_scores(residuals: np.ndarray) -> np.ndarray:
    if not np.any(residuals > 0):
        return np.full(residuals.shape, 1.0 / residuals.size)
    clamped = np.maximum(residuals, RESIDUAL_FLOOR)
    return clamped / clamped.sum()


def update_outliers_structural(A_target: np.ndarray, Z: np.ndarray) -> np.ndarray:
    return _normalized_scores(gcn.structural_residuals(A_target, Z))


def update_outliers_attribute(X: np.ndarray, X_hat: np.ndarray) -> np.ndarray:
    return _normalized_scores(gcn.attribute_residuals(X, X_hat))


def fit(
    graph,
    config: TrainConfig,
    callback: Callable[[int, TrainState], None] | None = None,
) -> TrainState:
    """Run pretraining, k-means++ seeding and ``config.main_iters`` alternating steps.

    ``graph`` is anything with ``adjacency`` and ``attributes`` arrays (an
    AppGraph or PlantedGraph) or a prepared :class:`TrainingProblem`.
    ``callback(iteration, state)`` fires after each iteration's updates.
    """
    prob = _as_problem(graph, config)
    if config.n_clusters > prob.n_nodes:
        raise ValueError(f"n_clusters={config.n_clusters} exceeds node count {prob.n_nodes}")
    state = pretrain(prob, config)
    _, cluster_seq = _seeds(config.seed)
    state.M, state.C = kmeanspp_init(state.Z, config.n_clusters, cluster_seq)
    weights = config.effective_weights
    params = state.params
    cache = gcn.forward(prob.a_hat, prob.X, params)

    for it in range(1, config.main_iters + 1):
        state.O_s = update_outliers_structural(prob.A_target, cache.Z)
        state.O_a = update_outliers_attribute(prob.X, cache.X_hat)
        state.M = update_assignments(cache.Z, state.C)
        state.C = update_centers(cache.Z, state.M)

        comps = LossComponents(
            gcn.loss_str(prob.A_target, cache.Z, state.O_s, config.log_weighting),
            gcn.loss_att(prob.X, cache.X_hat, state.O_a, config.log_weighting),
            gcn.loss_clus(cache.Z, state.M, state.C),
        )
        total = _checked(gcn.total_loss(comps, weights), "training", it)
        state.loss_history.append(LossRecord(it, *comps, total))

        grads = gcn.grad_params(
            prob.a_hat, prob.X, prob.A_target, params, state.O_s, state.O_a,
            state.M, state.C, weights, cache, config.log_weighting,
        )
        new, state.adam = adam_step(params.as_dict(), grads, state.adam)
        params = ModelParams.from_dict(new)
        cache = gcn.forward(prob.a_hat, prob.X, params)
        state.params, state.Z, state.X_hat = params, cache.Z, cache.X_hat
        if callback is not None:
            callback(it, state)
        if it % 100 == 0:
            log.debug("iter %d total=%.6g (str=%.4g att=%.4g clus=%.4g)", it, total, *comps)

    if config.ablation_no_cluster:
        state.M, state.C = kmeanspp_init(state.Z, config.n_clusters, cluster_seq)
    return state


class RankedOutlier(NamedTuple):
    node: int
    kind: str
    rank: int
    o_s: float
    o_a: float


def _ranks(scores: np.ndarray) -> np.ndarray:
    order = np.lexsort((np.arange(scores.size), -scores))
    ranks = np.empty(scores.size, dtype=int)
    ranks[order] = np.arange(1, scores.size + 1)
    return ranks


def rank_outliers(O_s: np.ndarray, O_a: np.ndarray, top_n: int = 5) -> list[RankedOutlier]:
    """Merge the structural and attribute rankings by each node's best rank.

    Ties on best rank go to the larger O_s + O_a, then to the lower node index.
    """
    O_s = np.asarray(O_s, dtype=float)
    O_a = np.asarray(O_a, dtype=float)
    if O_s.shape != O_a.shape:
        raise ValueError("score vectors differ in length")
    rs, ra = _ranks(O_s), _ranks(O_a)
    best = np.minimum(rs, ra)
    order = np.lexsort((np.arange(O_s.size), -(O_s + O_a), best))
    top_n = max(0, min(top_n, O_s.size))
    return [
        RankedOutlier(
            node=int(i),
            kind="structural" if rs[i] <= ra[i] else "attribute",
            rank=int(best[i]),
            o_s=float(O_s[i]),
            o_a=float(O_a[i]),
        )
        for i in order[:top_n]
    ]


def write_loss_csv(history: list[LossRecord], path: str | PathLike[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "L_str", "L_att", "L_clus", "total"])
        for rec in history:
            writer.writerow([rec.iteration, *(repr(float(v)) for v in rec[1:])])
