"""Small dense numerics toolkit: activations, initialization, ADAM, gradient checks.

All randomness goes through ``numpy.random.default_rng`` (PCG64 bit generator
seeded via SeedSequence), so a given integer seed reproduces the same stream on
every platform numpy supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np


def relu(m: np.ndarray) -> np.ndarray:
    return np.maximum(m, 0.0)


def relu_mask(pre: np.ndarray) -> np.ndarray:
    # subgradient at exactly zero is taken as 0
    return (pre > 0.0).astype(float)


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    return np.random.default_rng(seed)


def glorot_init(rows: int, cols: int, rng_seed: int | np.random.Generator) -> np.ndarray:
    """Uniform Glorot/Xavier initialization in +-sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ValueError(f"dimensions must be positive, got ({rows}, {cols})")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else make_rng(rng_seed)
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


@dataclass
class AdamState:
    base_lr: float = 0.01
    decay_rate: float = 0.95
    decay_every: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.base_lr <= 0:
            raise ValueError("base_lr must be positive")
        if not 0 < self.decay_rate <= 1:
            raise ValueError("decay_rate must lie in (0, 1]")
        if self.decay_every < 1:
            raise ValueError("decay_every must be a positive integer")

    @property
    def learning_rate(self) -> float:
        """Step-decayed learning rate for the next update."""
        return self.base_lr * self.decay_rate ** (self.step_count // self.decay_every)


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """Apply one bias-corrected ADAM update.

    Returns fresh parameter arrays; ``state`` is advanced in place and also
    returned for convenience.
    """
    if set(params) != set(grads):
        raise ValueError(f"parameter/gradient keys differ: {sorted(params)} vs {sorted(grads)}")
    lr = state.learning_rate
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    out = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"shape mismatch for {name}: param {p.shape}, grad {g.shape}")
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        elif m.shape != p.shape:
            raise ValueError(f"moment shape mismatch for {name}: {m.shape} vs {p.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        out[name] = p - lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
        state.first_moment[name] = m
        state.second_moment[name] = v
    state.step_count = t
    return out, state


def finite_diff_grad(
    loss_fn: Callable[[np.ndarray], float], at: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of a scalar function of one matrix."""
    x = np.array(at, dtype=float, copy=True)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + h
        f_plus = float(loss_fn(x))
        x[idx] = orig - h
        f_minus = float(loss_fn(x))
        x[idx] = orig
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise FloatingPointError(f"non-finite loss while probing entry {idx}")
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad
