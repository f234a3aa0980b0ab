"""Ground-truth graphs and Poisson counts whose dependence follows them.

Counts are built by trivariate reduction: every node owns an independent
Poisson(lambda_true) latent, every true edge adds one shared Poisson(lambda_true)
latent to both endpoints, and independent Poisson(lambda_noise) noise is added
on top. Edges therefore induce positive covariance ``lambda_true`` and nothing
else does.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import (
    AdjacencyMatrix,
    CountMatrix,
    InvalidArgumentError,
    RngSpec,
    as_generator,
)

GRAPH_KINDS = ("hub", "scale_free", "random")

# stream ids used by :func:`simulate`
_GRAPH_STREAM = 0
_COUNT_STREAM = 1


@dataclass(frozen=True)
class SimulationConfig:
    p: int = 50
    n: int = 200
    graph_kind: str = "hub"
    n_hubs: int = 3
    edge_prob: float | None = None
    lambda_true: float = 1.0
    lambda_noise: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.p < 2:
            raise InvalidArgumentError(f"p must be >= 2, got {self.p}")
        if self.n < 1:
            raise InvalidArgumentError(f"n must be >= 1, got {self.n}")
        if self.graph_kind not in GRAPH_KINDS:
            raise InvalidArgumentError(
                f"graph_kind must be one of {GRAPH_KINDS}, got {self.graph_kind!r}"
            )
        if not self.lambda_true > 0:
            raise InvalidArgumentError("lambda_true must be positive")
        if not self.lambda_noise >= 0:
            raise InvalidArgumentError("lambda_noise must be non-negative")
        if self.graph_kind == "random" and not 0 < self.resolved_edge_prob < 1:
            raise InvalidArgumentError("edge_prob must lie in (0, 1)")

    @property
    def resolved_edge_prob(self) -> float:
        # about p expected edges, comparable to the hub and scale-free graphs
        if self.edge_prob is None:
            return min(2.0 / (self.p - 1), 0.5)
        return self.edge_prob

    def to_dict(self) -> dict:
        return asdict(self)


def gen_hub_graph(p: int, n_hubs: int = 3, rng=None) -> AdjacencyMatrix:
    """Hub graph: ``n_hubs`` random hubs, every other node tied to one hub."""
    if not 1 <= n_hubs < p:
        raise InvalidArgumentError(f"need 1 <= n_hubs < p, got n_hubs={n_hubs}, p={p}")
    g = as_generator(rng)
    hubs = np.sort(g.choice(p, size=n_hubs, replace=False))
    others = np.setdiff1d(np.arange(p), hubs)
    owner = hubs[g.integers(0, n_hubs, size=others.size)]
    A = np.zeros((p, p), dtype=np.int8)
    A[others, owner] = 1
    A[owner, others] = 1
    return AdjacencyMatrix(A)


def gen_scale_free(p: int, rng=None) -> AdjacencyMatrix:
    """Preferential-attachment tree with one new edge per node."""
    if p < 3:
        raise InvalidArgumentError(f"scale-free graph needs p >= 3, got {p}")
    g = as_generator(rng)
    A = np.zeros((p, p), dtype=np.int8)
    deg = np.zeros(p)
    A[0, 1] = A[1, 0] = 1
    deg[:2] = 1
    for t in range(2, p):
        target = g.choice(t, p=deg[:t] / deg[:t].sum())
        A[t, target] = A[target, t] = 1
        deg[t] += 1
        deg[target] += 1
    return AdjacencyMatrix(A)


def gen_random_graph(p: int, edge_prob: float, rng=None) -> AdjacencyMatrix:
    """Erdos-Renyi graph: each pair independently with ``edge_prob``."""
    if not 0 < edge_prob < 1:
        raise InvalidArgumentError(f"edge_prob must lie in (0, 1), got {edge_prob}")
    g = as_generator(rng)
    upper = np.triu(g.random((p, p)) < edge_prob, 1)
    return AdjacencyMatrix((upper | upper.T).astype(np.int8))


def make_graph(config: SimulationConfig, rng=None) -> AdjacencyMatrix:
    if rng is None:
        rng = RngSpec(config.seed, _GRAPH_STREAM)
    if config.graph_kind == "hub":
        return gen_hub_graph(config.p, config.n_hubs, rng)
    if config.graph_kind == "scale_free":
        return gen_scale_free(config.p, rng)
    return gen_random_graph(config.p, config.resolved_edge_prob, rng)


def mixing_matrix(A: AdjacencyMatrix) -> np.ndarray:
    """Loading matrix ``B`` with ``X = Y @ B + E``.

    ``Y`` has ``p`` private columns followed by one shared column per edge;
    row ``p + e`` of ``B`` loads edge ``e`` onto both of its endpoints.
    """
    p = A.p
    pairs = A.edge_list()
    B = np.zeros((p + len(pairs), p))
    B[:p] = np.eye(p)
    for e, (j, k) in enumerate(pairs):
        B[p + e, j] = B[p + e, k] = 1.0
    return B


def simulate_counts(A: AdjacencyMatrix, config: SimulationConfig, rng=None) -> CountMatrix:
    """Draw ``config.n`` samples of a Poisson network with graph ``A``."""
    if A.p != config.p:
        raise InvalidArgumentError(f"graph has {A.p} nodes, config says {config.p}")
    g = as_generator(RngSpec(config.seed, _COUNT_STREAM) if rng is None else rng)
    B = mixing_matrix(A)
    Y = g.poisson(config.lambda_true, size=(config.n, B.shape[0]))
    E = g.poisson(config.lambda_noise, size=(config.n, config.p))
    X = Y @ B + E
    return CountMatrix(X.astype(np.float64), variable_ids=A.labels)


def simulate(config: SimulationConfig) -> tuple[CountMatrix, AdjacencyMatrix]:
    """Graph plus counts, both determined by ``config.seed``."""
    A = make_graph(config)
    return simulate_counts(A, config), A


def expected_moments(A: AdjacencyMatrix, lambda_true: float, lambda_noise: float):
    """Exact mean vector and covariance matrix of the simulated counts."""
    deg = A.degrees()
    mean = lambda_true * (1 + deg) + lambda_noise
    cov = lambda_true * A.edges.astype(float)
    cov[np.diag_indices(A.p)] = mean
    return mean, cov
