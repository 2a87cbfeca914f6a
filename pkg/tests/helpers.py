import numpy as np

from cogcn.gcn import LossWeights, ModelParams
from cogcn.ingest import normalize_adjacency, symmetrize


def random_instance(seed: int, n: int = 6, n_features: int = 10, hidden: int = 6,
                    embed: int = 4, k: int = 2, edge_p: float = 0.4):
    """Small random problem: graph, attributes, parameters, scores and clusters."""
    rng = np.random.default_rng(seed)
    adj = (rng.random((n, n)) < edge_p).astype(float)
    np.fill_diagonal(adj, 0.0)
    X = rng.random((n, n_features))
    X /= X.sum(axis=1, keepdims=True)
    O_s = rng.random(n) + 0.05
    O_a = rng.random(n) + 0.05
    labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    return {
        "adj": adj,
        "a_hat": normalize_adjacency(adj),
        "A_target": symmetrize(adj),
        "X": X,
        "params": ModelParams.initialize(n_features, hidden, embed, seed),
        "O_s": O_s / O_s.sum(),
        "O_a": O_a / O_a.sum(),
        "M": np.eye(k)[labels],
        "C": rng.random((k, embed)),
        "weights": LossWeights(*rng.uniform(0.1, 1.0, 3)),
    }
