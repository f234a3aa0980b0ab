"""Shared data containers, errors and the seeded RNG contract.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be handed to concurrent workers without copying.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class LLGMError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(LLGMError, ValueError):
    pass


class DegenerateSampleError(LLGMError, ValueError):
    pass


class EmptyResultError(LLGMError, ValueError):
    pass


class ParseError(LLGMError, ValueError):
    pass


class LLGMWarning(UserWarning):
    """Warning category for recoverable numerical or data problems."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _check_labels(labels: Sequence[str], size: int, what: str) -> tuple[str, ...]:
    labels = tuple(str(s) for s in labels)
    if len(labels) != size:
        raise InvalidArgumentError(
            f"{what}: got {len(labels)} labels for {size} entries"
        )
    if len(set(labels)) != len(labels):
        seen = set()
        dup = next(s for s in labels if s in seen or seen.add(s))
        raise InvalidArgumentError(f"{what}: duplicate label {dup!r}")
    return labels


@dataclass(frozen=True)
class CountMatrix:
    """An ``n x p`` matrix of non-negative counts (samples in rows).

    Values are stored as float64 so that intermediate normalization steps can
    hold fractional values; ingestion and the default normalization produce
    integer-valued entries.
    """

    values: np.ndarray
    sample_ids: tuple[str, ...] = ()
    variable_ids: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise InvalidArgumentError(f"counts must be 2-d, got shape {v.shape}")
        n, p = v.shape
        if n < 2 or p < 2:
            raise InvalidArgumentError(f"need n >= 2 and p >= 2, got {n} x {p}")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("counts contain non-finite values")
        if np.any(v < 0):
            i, j = np.argwhere(v < 0)[0]
            raise InvalidArgumentError(f"negative count at row {i}, column {j}")
        sids = self.sample_ids or [f"s{i}" for i in range(n)]
        vids = self.variable_ids or [f"v{j}" for j in range(p)]
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "sample_ids", _check_labels(sids, n, "sample_ids"))
        object.__setattr__(self, "variable_ids", _check_labels(vids, p, "variable_ids"))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def is_integer(self) -> bool:
        return bool(np.all(self.values == np.round(self.values)))

    def take_rows(self, rows) -> "CountMatrix":
        rows = np.asarray(rows)
        return CountMatrix(
            self.values[rows], [self.sample_ids[i] for i in rows], self.variable_ids
        )

    def take_columns(self, cols) -> "CountMatrix":
        cols = np.asarray(cols)
        return CountMatrix(
            self.values[:, cols], self.sample_ids, [self.variable_ids[j] for j in cols]
        )

    def with_values(self, values: np.ndarray) -> "CountMatrix":
        return CountMatrix(values, self.sample_ids, self.variable_ids)


def as_counts(X) -> CountMatrix:
    """Wrap a plain array as a :class:`CountMatrix`; pass instances through."""
    if isinstance(X, CountMatrix):
        return X
    return CountMatrix(np.asarray(X, dtype=np.float64))


@dataclass(frozen=True)
class ParameterMatrix:
    """Neighborhood coefficients.

    ``theta[k, j]`` is the coefficient of variable ``k`` in the regression of
    variable ``j`` on all others. The matrix is generally not symmetric.
    """

    theta: np.ndarray
    intercepts: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise InvalidArgumentError(f"theta must be square, got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise InvalidArgumentError("theta contains non-finite values")
        if np.any(np.diag(t) != 0):
            raise InvalidArgumentError("theta must have a zero diagonal")
        icpt = self.intercepts
        icpt = np.zeros(t.shape[0]) if icpt is None else np.asarray(icpt, float)
        if icpt.shape != (t.shape[0],):
            raise InvalidArgumentError("intercepts must have one entry per column")
        object.__setattr__(self, "theta", _frozen(t))
        object.__setattr__(self, "intercepts", _frozen(icpt))

    @property
    def p(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class RegularizationPath:
    """Descending, log-spaced penalty grid."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size < 1:
            raise InvalidArgumentError("empty regularization path")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise InvalidArgumentError("path values must be positive and finite")
        if v.size > 1 and np.any(np.diff(v) >= 0):
            raise InvalidArgumentError("path values must be strictly decreasing")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def rho_max(self) -> float:
        return float(self.values[0])

    @property
    def rho_min(self) -> float:
        return float(self.values[-1])

    @property
    def K(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(self.values)


def make_path(rho_max: float, rho_min: float, K: int) -> RegularizationPath:
    """Return ``K`` log-spaced penalties from ``rho_max`` down to ``rho_min``.

    The endpoints are set exactly (not recovered through ``exp(log(.))``).
    """
    if not (np.isfinite(rho_max) and np.isfinite(rho_min)):
        raise InvalidArgumentError("rho_max and rho_min must be finite")
    if rho_min <= 0:
        raise InvalidArgumentError(f"rho_min must be positive, got {rho_min}")
    if rho_max <= rho_min:
        raise InvalidArgumentError(
            f"rho_max ({rho_max}) must exceed rho_min ({rho_min})"
        )
    if int(K) != K or K < 2:
        raise InvalidArgumentError(f"K must be an integer >= 2, got {K}")
    K = int(K)
    values = np.geomspace(rho_max, rho_min, K)
    values[0], values[-1] = rho_max, rho_min
    return RegularizationPath(values)


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric binary adjacency matrix with an empty diagonal."""

    edges: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        a = np.asarray(self.edges)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgumentError(f"adjacency must be square, got {a.shape}")
        if not np.all((a == 0) | (a == 1)):
            raise InvalidArgumentError("adjacency entries must be 0 or 1")
        a = a.astype(np.int8)
        if np.any(np.diag(a) != 0):
            raise InvalidArgumentError("adjacency must have a zero diagonal")
        if not np.array_equal(a, a.T):
            raise InvalidArgumentError("adjacency must be symmetric")
        labels = self.labels or [f"v{j}" for j in range(a.shape[0])]
        object.__setattr__(self, "edges", _frozen(a))
        object.__setattr__(self, "labels", _check_labels(labels, a.shape[0], "labels"))

    @property
    def p(self) -> int:
        return self.edges.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.edges, 1).sum())

    def degrees(self) -> np.ndarray:
        return self.edges.sum(axis=0).astype(int)

    def edge_list(self) -> list[tuple[int, int]]:
        """Unordered pairs ``(j, k)`` with ``j < k``."""
        jj, kk = np.nonzero(np.triu(self.edges, 1))
        return list(zip(jj.tolist(), kk.tolist()))

    @classmethod
    def from_edges(cls, p: int, pairs, labels=()) -> "AdjacencyMatrix":
        a = np.zeros((p, p), dtype=np.int8)
        for j, k in pairs:
            if j == k:
                raise InvalidArgumentError(f"self-loop on node {j}")
            a[j, k] = a[k, j] = 1
        return cls(a, labels)


@dataclass(frozen=True)
class RngSpec:
    """A (seed, stream) pair naming an independent random stream.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys and
    drive a counter-based Philox generator, so a given pair reproduces the same
    draws no matter which worker consumes it or in what order.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise InvalidArgumentError("stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, stream_id: int) -> "RngSpec":
        return RngSpec(self.seed, stream_id)


def as_generator(rng) -> np.random.Generator:
    """Accept an :class:`RngSpec`, a Generator, an int seed or None."""
    if isinstance(rng, RngSpec):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
