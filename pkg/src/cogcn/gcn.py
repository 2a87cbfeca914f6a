"""GCN autoencoder forward passes, the three CO-GCN losses, and their gradients.

Shapes used throughout (N nodes, F input features, H hidden, E embedding)::

    encoder:  Z    = relu(A_hat @ relu(A_hat @ X @ W0) @ W1)     W0: F x H, W1: H x E
    decoder:  Xhat = relu(A_hat @ relu(A_hat @ Z @ W2) @ W3)     W2: E x H, W3: H x F
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numkit import glorot_init, make_rng, relu, relu_mask

PARAM_NAMES = ("W0", "W1", "W2", "W3")


@dataclass
class ModelParams:
    W0: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray

    def __post_init__(self) -> None:
        f, h = self.W0.shape
        e = self.W1.shape[1]
        expected = {"W0": (f, h), "W1": (h, e), "W2": (e, h), "W3": (h, f)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @classmethod
    def initialize(cls, n_features: int, hidden_dim: int, embed_dim: int, seed) -> "ModelParams":
        rng = make_rng(seed)
        return cls(
            W0=glorot_init(n_features, hidden_dim, rng),
            W1=glorot_init(hidden_dim, embed_dim, rng),
            W2=glorot_init(embed_dim, hidden_dim, rng),
            W3=glorot_init(hidden_dim, n_features, rng),
        )

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, d) -> "ModelParams":
        return cls(**{name: d[name] for name in PARAM_NAMES})


@dataclass
class ForwardCache:
    """Intermediates of one encoder+decoder pass; ``ax`` is A_hat @ X etc."""

    ax: np.ndarray
    enc_pre0: np.ndarray
    enc_h0: np.ndarray
    enc_ah0: np.ndarray
    enc_pre1: np.ndarray
    Z: np.ndarray
    az: np.ndarray | None = None
    dec_pre0: np.ndarray | None = None
    dec_h0: np.ndarray | None = None
    dec_ah0: np.ndarray | None = None
    dec_pre1: np.ndarray | None = None
    X_hat: np.ndarray | None = None


class LossWeights(NamedTuple):
    alpha1: float = 0.1
    alpha2: float = 0.1
    alpha3: float = 0.8

    def validate(self) -> "LossWeights":
        if any(a < 0 for a in self):
            raise ValueError(f"loss weights must be non-negative, got {tuple(self)}")
        if not any(a > 0 for a in self):
            raise ValueError("at least one loss weight must be positive")
        return self


class LossComponents(NamedTuple):
    structural: float
    attribute: float
    clustering: float


def _check_square(a_hat: np.ndarray, n: int) -> None:
    if a_hat.shape != (n, n):
        raise ValueError(f"A_hat has shape {a_hat.shape}, expected ({n}, {n})")


def encode(a_hat: np.ndarray, X: np.ndarray, params: ModelParams) -> tuple[np.ndarray, ForwardCache]:
    _check_square(a_hat, X.shape[0])
    if X.shape[1] != params.W0.shape[0]:
        raise ValueError(f"X has {X.shape[1]} features, W0 expects {params.W0.shape[0]}")
    ax = a_hat @ X
    pre0 = ax @ params.W0
    h0 = relu(pre0)
    ah0 = a_hat @ h0
    pre1 = ah0 @ params.W1
    Z = relu(pre1)
    return Z, ForwardCache(ax=ax, enc_pre0=pre0, enc_h0=h0, enc_ah0=ah0, enc_pre1=pre1, Z=Z)


def decode(
    a_hat: np.ndarray, Z: np.ndarray, params: ModelParams, cache: ForwardCache | None = None
) -> np.ndarray:
    """Map embeddings back to attribute space; fills ``cache`` if given."""
    _check_square(a_hat, Z.shape[0])
    if Z.shape[1] != params.W2.shape[0]:
        raise ValueError(f"Z has width {Z.shape[1]}, W2 expects {params.W2.shape[0]}")
    az = a_hat @ Z
    pre0 = az @ params.W2
    h0 = relu(pre0)
    ah0 = a_hat @ h0
    pre1 = ah0 @ params.W3
    X_hat = relu(pre1)
    if cache is not None:
        cache.az, cache.dec_pre0, cache.dec_h0 = az, pre0, h0
        cache.dec_ah0, cache.dec_pre1, cache.X_hat = ah0, pre1, X_hat
    return X_hat


def forward(a_hat: np.ndarray, X: np.ndarray, params: ModelParams) -> ForwardCache:
    Z, cache = encode(a_hat, X, params)
    decode(a_hat, Z, params, cache)
    return cache


def outlier_weights(scores: np.ndarray, log_weighting: bool = True) -> np.ndarray:
    """Per-node loss weights log(1/O); all ones when log weighting is disabled."""
    scores = np.asarray(scores, dtype=float)
    if np.any(scores <= 0):
        raise ValueError("outlier scores must be strictly positive")
    if not log_weighting:
        return np.ones_like(scores)
    return -np.log(scores)


def structural_residuals(A_target: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Per-node squared error ||A_i - (Z Z^T)_i||^2."""
    R = A_target - Z @ Z.T
    return np.einsum("ij,ij->i", R, R)


def attribute_residuals(X: np.ndarray, X_hat: np.ndarray) -> np.ndarray:
    R = X - X_hat
    return np.einsum("ij,ij->i", R, R)


def loss_str(A_target: np.ndarray, Z: np.ndarray, O_s: np.ndarray, log_weighting: bool = True) -> float:
    return float(outlier_weights(O_s, log_weighting) @ structural_residuals(A_target, Z))


def loss_att(X: np.ndarray, X_hat: np.ndarray, O_a: np.ndarray, log_weighting: bool = True) -> float:
    return float(outlier_weights(O_a, log_weighting) @ attribute_residuals(X, X_hat))


def check_one_hot(M: np.ndarray) -> None:
    if M.ndim != 2 or not np.all((M == 0) | (M == 1)) or not np.all(M.sum(axis=1) == 1):
        raise ValueError("cluster assignment matrix must have exactly one 1 per row")


def loss_clus(Z: np.ndarray, M: np.ndarray, C: np.ndarray) -> float:
    check_one_hot(M)
    if C.shape != (M.shape[1], Z.shape[1]):
        raise ValueError(f"centers have shape {C.shape}, expected {(M.shape[1], Z.shape[1])}")
    D = Z - M @ C
    return float(np.sum(D * D))


def total_loss(components, weights: LossWeights) -> float:
    a1, a2, a3 = weights
    s, a, c = components
    return a1 * s + a2 * a + a3 * c


def evaluate(
    a_hat, X, A_target, params, O_s, O_a, M, C, weights, log_weighting: bool = True
) -> tuple[float, LossComponents, ForwardCache]:
    """Forward pass plus all loss components for one parameter setting.

    With ``M`` set to None the clustering term is reported as 0.
    """
    cache = forward(a_hat, X, params)
    comps = LossComponents(
        loss_str(A_target, cache.Z, O_s, log_weighting),
        loss_att(X, cache.X_hat, O_a, log_weighting),
        0.0 if M is None else loss_clus(cache.Z, M, C),
    )
    return total_loss(comps, weights), comps, cache


def grad_params(
    a_hat: np.ndarray,
    X: np.ndarray,
    A_target: np.ndarray,
    params: ModelParams,
    O_s: np.ndarray,
    O_a: np.ndarray,
    M: np.ndarray | None,
    C: np.ndarray | None,
    weights: LossWeights,
    cache: ForwardCache,
    log_weighting: bool = True,
) -> dict[str, np.ndarray]:
    """Exact gradients of the weighted joint loss w.r.t. W0..W3 (reverse mode)."""
    a1, a2, a3 = weights
    Z = cache.Z
    a_hat_t = a_hat.T

    # attribute reconstruction, back through the decoder
    g_xhat = -2.0 * a2 * outlier_weights(O_a, log_weighting)[:, None] * (X - cache.X_hat)
    g_dpre1 = g_xhat * relu_mask(cache.dec_pre1)
    g_W3 = cache.dec_ah0.T @ g_dpre1
    g_dh0 = a_hat_t @ (g_dpre1 @ params.W3.T)
    g_dpre0 = g_dh0 * relu_mask(cache.dec_pre0)
    g_W2 = cache.az.T @ g_dpre0
    g_Z = a_hat_t @ (g_dpre0 @ params.W2.T)

    # structural reconstruction: d/dZ sum_i w_i ||A_i - (ZZ^T)_i||^2
    if a1 != 0.0:
        ws = outlier_weights(O_s, log_weighting)
        g_S = -2.0 * a1 * ws[:, None] * (A_target - Z @ Z.T)
        g_Z = g_Z + (g_S + g_S.T) @ Z

    if a3 != 0.0 and M is not None:
        g_Z = g_Z + 2.0 * a3 * (Z - M @ C)

    g_epre1 = g_Z * relu_mask(cache.enc_pre1)
    g_W1 = cache.enc_ah0.T @ g_epre1
    g_eh0 = a_hat_t @ (g_epre1 @ params.W1.T)
    g_epre0 = g_eh0 * relu_mask(cache.enc_pre0)
    g_W0 = cache.ax.T @ g_epre0
    return {"W0": g_W0, "W1": g_W1, "W2": g_W2, "W3": g_W3}
