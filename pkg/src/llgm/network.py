"""Graph assembly, StARS stability selection and the end-to-end estimator.

The work is a grid of independent tasks: one full-data path fit per node and
one all-node path fit per subsample. Tasks only read the shared count matrix
and return their own results; the reduction to edge frequencies and the
choice of penalty happen sequentially afterwards, so results do not depend on
the number of workers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .core import (
    AdjacencyMatrix,
    CountMatrix,
    InvalidArgumentError,
    LLGMWarning,
    ParameterMatrix,
    RegularizationPath,
    RngSpec,
    as_counts,
    as_generator,
    make_path,
)
from .normalize import NormalizationConfig, NormalizationReport, normalize_pipeline
from .solver import PathSolution, SolverConfig, compute_rho_max, fit_node_path

EDGE_RULES = ("union", "intersection")


def _check_rule(rule: str) -> None:
    if rule not in EDGE_RULES:
        raise InvalidArgumentError(f"edge rule must be one of {EDGE_RULES}, got {rule!r}")


def _combine(M: np.ndarray, rule: str) -> np.ndarray:
    """Symmetrize a directed support indicator along its first two axes."""
    Mt = np.swapaxes(M, 0, 1)
    return (M | Mt) if rule == "union" else (M & Mt)


def assemble_adjacency(theta, rule: str = "union") -> AdjacencyMatrix:
    """Edge ``j - k`` iff theta_jk != 0 or (union) / and (intersection) theta_kj != 0."""
    _check_rule(rule)
    if not isinstance(theta, ParameterMatrix):
        theta = ParameterMatrix(np.asarray(theta, dtype=np.float64))
    M = theta.theta != 0
    A = _combine(M, rule)
    np.fill_diagonal(A, False)
    return AdjacencyMatrix(A.astype(np.int8))


def theta_at(paths: list[PathSolution], m: int) -> ParameterMatrix:
    """Parameter matrix at path index ``m``; column ``j`` comes from node ``j``."""
    p = len(paths)
    theta = np.zeros((p, p))
    icpt = np.zeros(p)
    for sol in sorted(paths, key=lambda s: s.node):
        theta[:, sol.node] = sol.full_column(m)
        icpt[sol.node] = sol.intercepts[m]
    return ParameterMatrix(theta, icpt)


def support_path(paths: list[PathSolution]) -> np.ndarray:
    """Directed supports for every path point, shape ``(K, p, p)``.

    Entry ``[m, k, j]`` is True when variable ``k`` has a nonzero coefficient
    in the regression of node ``j`` at the ``m``-th penalty.
    """
    p = len(paths)
    K = paths[0].coefficients.shape[1]
    M = np.zeros((K, p, p), dtype=bool)
    for sol in paths:
        nz = sol.coefficients != 0
        others = np.delete(np.arange(p), sol.node)
        M[:, others, sol.node] = nz.T
    return M


def adjacency_path(paths: list[PathSolution], rule: str = "union") -> np.ndarray:
    """Estimated graphs for every path point as a ``(K, p, p)`` boolean array."""
    _check_rule(rule)
    M = support_path(paths)
    return (M | M.transpose(0, 2, 1)) if rule == "union" else (M & M.transpose(0, 2, 1))


def default_subsample_size(n: int) -> int:
    """``floor(10 sqrt(n))``, clamped to ``floor(0.8 n)`` for small ``n``."""
    return int(min(math.floor(10 * math.sqrt(n)), math.floor(0.8 * n)))


def subsample_rows(n: int, m: int, rng) -> np.ndarray:
    """``m`` distinct row indices drawn uniformly, returned sorted."""
    if not 1 <= m < n:
        raise InvalidArgumentError(f"subsample size must satisfy 1 <= m < n, got m={m}, n={n}")
    return np.sort(as_generator(rng).choice(n, size=m, replace=False))


def subsample(X, m: int, rng) -> CountMatrix:
    X = as_counts(X)
    return X.take_rows(subsample_rows(X.n, m, rng))


def instability(A_bar: np.ndarray, p: int | None = None) -> float:
    """Mean of ``2 a (1 - a)`` over the unordered pairs of an edge-frequency matrix."""
    A_bar = np.asarray(A_bar, dtype=np.float64)
    p = A_bar.shape[0] if p is None else p
    if np.any(A_bar < 0) or np.any(A_bar > 1):
        raise InvalidArgumentError("edge frequencies must lie in [0, 1]")
    iu = np.triu_indices(p, 1)
    a = A_bar[iu]
    return float(np.sum(2 * a * (1 - a)) / (p * (p - 1) / 2))


def monotonize(D: np.ndarray) -> np.ndarray:
    """Running maximum from the sparse end of a descending-penalty path."""
    return np.maximum.accumulate(np.asarray(D, dtype=np.float64))


@dataclass(frozen=True)
class StabilityConfig:
    B: int = 100
    beta: float = 0.05
    m: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.B < 2:
            raise InvalidArgumentError(f"B must be >= 2, got {self.B}")
        if not 0 < self.beta <= 0.5:
            raise InvalidArgumentError(f"beta must lie in (0, 0.5], got {self.beta}")
        if self.m is not None and self.m < 1:
            raise InvalidArgumentError(f"m must be >= 1, got {self.m}")

    def subsample_size(self, n: int) -> int:
        m = default_subsample_size(n) if self.m is None else self.m
        if not 1 <= m < n:
            raise InvalidArgumentError(f"subsample size must satisfy 1 <= m < n, got m={m}, n={n}")
        return m

    def row_sets(self, n: int) -> list[np.ndarray]:
        """Rows of every subsample; subsample ``b`` uses stream ``b``."""
        m = self.subsample_size(n)
        return [subsample_rows(n, m, RngSpec(self.seed, b)) for b in range(self.B)]


@dataclass
class StabilityResult:
    rhos: np.ndarray
    edge_frequency: np.ndarray
    instability: np.ndarray
    instability_mono: np.ndarray
    selected_index: int
    rho_opt: float
    beta: float
    budget_exhausted: bool = False
    warnings: list[str] = field(default_factory=list)

    def curve_rows(self):
        """``(rho, instability, monotonized)`` rows for plotting."""
        return list(zip(self.rhos.tolist(), self.instability.tolist(),
                        self.instability_mono.tolist()))


def select_rho(rhos: np.ndarray, D: np.ndarray, beta: float):
    """Smallest penalty whose monotonized instability stays within ``beta``.

    Returns ``(index, monotonized curve, exhausted)``; ``exhausted`` is True
    when no point qualifies and the sparsest point is returned instead.
    """
    mono = monotonize(D)
    ok = np.flatnonzero(mono <= beta)
    if ok.size == 0:
        return 0, mono, True
    # mono is non-decreasing along the descending path, so ok is a prefix
    return int(ok[-1]), mono, False


def _fit_nodes(values: np.ndarray, nodes, path, config: SolverConfig):
    X = CountMatrix(values)
    return [fit_node_path(X, j, path, config, warn=False) for j in nodes]


def _subsample_graphs(values: np.ndarray, rows: np.ndarray, path, config: SolverConfig,
                      rule: str, b: int):
    """Directed supports along the path for one subsample, plus notes."""
    Xb = values[rows]
    p = Xb.shape[1]
    notes = []
    constant = np.all(Xb == Xb[0], axis=0)
    nodes = [j for j in range(p) if not constant[j]]
    for j in np.flatnonzero(constant):
        notes.append(f"subsample {b}: variable {j} is constant; its regression is skipped")
    sols = _fit_nodes(Xb, nodes, path, config) if Xb.shape[0] >= 2 else []
    K = len(path)
    M = np.zeros((K, p, p), dtype=bool)
    for sol in sols:
        others = np.delete(np.arange(p), sol.node)
        M[:, others, sol.node] = (sol.coefficients != 0).T
        bad = int((~sol.converged).sum())
        if bad:
            notes.append(f"subsample {b}: node {sol.node} has {bad} unconverged path points")
    G = (M | M.transpose(0, 2, 1)) if rule == "union" else (M & M.transpose(0, 2, 1))
    return G, notes


def stars_select(X, path: RegularizationPath, solver_cfg: SolverConfig | None = None,
                 stab_cfg: StabilityConfig | None = None, rule: str = "union",
                 n_jobs: int = 1, row_sets=None) -> StabilityResult:
    """StARS: pick the penalty whose subsampled graphs are stable enough.

    Every subsample is fitted over the same fixed path. Edge frequencies are
    averaged over subsamples, the instability of each path point is computed,
    made monotone from the sparse end, and the smallest penalty with
    monotonized instability at most ``beta`` is chosen.
    """
    X = as_counts(X)
    _check_rule(rule)
    solver_cfg = solver_cfg or SolverConfig()
    stab_cfg = stab_cfg or StabilityConfig()
    rows = stab_cfg.row_sets(X.n) if row_sets is None else row_sets
    K, p = len(path), X.p
    counts = np.zeros((K, p, p), dtype=np.int64)
    notes: list[str] = []
    tasks = (
        delayed(_subsample_graphs)(X.values, r, path, solver_cfg, rule, b)
        for b, r in enumerate(rows)
    )
    runner = Parallel(n_jobs=n_jobs, prefer="threads", return_as="generator")
    for G, task_notes in runner(tasks):
        counts += G
        notes.extend(task_notes)
    A_bar = counts / len(rows)
    D = np.array([instability(A_bar[m], p) for m in range(K)])
    idx, mono, exhausted = select_rho(path.values, D, stab_cfg.beta)
    if exhausted:
        msg = "no penalty meets the instability budget; returning rho_max"
        warnings.warn(msg, LLGMWarning, stacklevel=2)
        notes.append(msg)
    if any("constant" in s for s in notes):
        warnings.warn("constant variables in some subsamples; see result warnings",
                      LLGMWarning, stacklevel=2)
    return StabilityResult(
        rhos=path.values.copy(),
        edge_frequency=A_bar,
        instability=D,
        instability_mono=mono,
        selected_index=idx,
        rho_opt=float(path.values[idx]),
        beta=stab_cfg.beta,
        budget_exhausted=exhausted,
        warnings=notes,
    )


def fit_paths(X, path, config: SolverConfig | None = None, n_jobs: int = 1):
    """Full-data path fit for every node, one task per node."""
    X = as_counts(X)
    config = config or SolverConfig()
    runner = Parallel(n_jobs=n_jobs, prefer="threads")
    chunks = runner(delayed(_fit_nodes)(X.values, [j], path, config) for j in range(X.p))
    return [s for chunk in chunks for s in chunk]


@dataclass(frozen=True)
class LlgmConfig:
    """Settings for :func:`fit_llgm`.

    ``normalization=None`` fits the counts as given. ``rho_max=None`` derives
    the top of the path from the data; ``paper_rho_max`` switches to the
    uncentred cross-product bound.
    """

    solver: SolverConfig = field(default_factory=SolverConfig)
    stability: StabilityConfig = field(default_factory=StabilityConfig)
    normalization: NormalizationConfig | None = None
    rho_min: float = 1e-4
    path_length: int = 100
    edge_rule: str = "union"
    paper_rho_max: bool = False
    rho_max: float | None = None
    n_jobs: int = 1

    def __post_init__(self):
        _check_rule(self.edge_rule)
        if self.path_length < 2:
            raise InvalidArgumentError("path_length must be >= 2")
        if not self.rho_min > 0:
            raise InvalidArgumentError("rho_min must be positive")


@dataclass
class LlgmFit:
    adjacency: AdjacencyMatrix
    theta: ParameterMatrix
    theta_path: list[PathSolution]
    stability: StabilityResult
    path: RegularizationPath
    counts: CountMatrix
    normalization: NormalizationReport | None = None
    warnings: list[str] = field(default_factory=list)
    stability_rule: str = "union"

    @property
    def rho_opt(self) -> float:
        return self.stability.rho_opt

    @property
    def variable_ids(self) -> tuple[str, ...]:
        return self.counts.variable_ids

    def edges(self):
        """``(label_a, label_b, weight)`` for each selected edge.

        The weight is ``max(|theta_ab|, |theta_ba|)`` at the selected penalty.
        """
        t = np.abs(self.theta.theta)
        labels = self.variable_ids
        return [(labels[a], labels[b], float(max(t[a, b], t[b, a])))
                for a, b in self.adjacency.edge_list()]

    def graph_at(self, m: int) -> AdjacencyMatrix:
        return assemble_adjacency(theta_at(self.theta_path, m), self.stability_rule)

    def report(self) -> dict:
        st = self.stability
        return {
            "variable_ids": list(self.variable_ids),
            "n_samples": self.counts.n,
            "path": self.path.values.tolist(),
            "rho_max": self.path.rho_max,
            "rho_min": self.path.rho_min,
            "rho_opt": st.rho_opt,
            "selected_index": st.selected_index,
            "beta": st.beta,
            "instability": st.instability.tolist(),
            "instability_mono": st.instability_mono.tolist(),
            "budget_exhausted": st.budget_exhausted,
            "edge_rule": self.stability_rule,
            "n_edges": self.adjacency.n_edges,
            "converged": {
                self.variable_ids[s.node]: s.converged.astype(bool).tolist()
                for s in self.theta_path
            },
            "warnings": self.warnings + st.warnings,
            "normalization": None if self.normalization is None
            else self.normalization.to_dict(),
        }


def path_top(X: CountMatrix, row_sets, config: LlgmConfig) -> float:
    """Top of the penalty path, empty for the full data and every subsample."""
    if config.rho_max is not None:
        return float(config.rho_max)
    s = config.solver
    if config.paper_rho_max:
        return compute_rho_max(X, cross_product=True)
    tops = [compute_rho_max(X, use_intercept=s.use_intercept, standardize=s.standardize)]
    for r in row_sets:
        tops.append(compute_rho_max(X.values[r], use_intercept=s.use_intercept,
                                    standardize=s.standardize))
    return float(max(tops))


def fit_llgm(X, config: LlgmConfig | None = None) -> LlgmFit:
    """Estimate a sparse Poisson graphical model with the full pipeline.

    Steps: optional normalization, a fixed log-spaced path from the empty
    graph down to ``rho_min``, full-data and subsample path fits for every
    node, graphs by the edge rule, penalty selection by StARS, and the graph
    at the selected penalty.
    """
    X = as_counts(X)
    config = config or LlgmConfig()
    report = None
    if config.normalization is not None:
        X, report = normalize_pipeline(X, config.normalization)

    rows = config.stability.row_sets(X.n)
    top = path_top(X, rows, config)
    if top <= config.rho_min:
        raise InvalidArgumentError(
            f"rho_max ({top:.4g}) does not exceed rho_min ({config.rho_min:.4g})"
        )
    path = make_path(top, config.rho_min, config.path_length)

    theta_path = fit_paths(X, path, config.solver, config.n_jobs)
    stab = stars_select(X, path, config.solver, config.stability, config.edge_rule,
                        config.n_jobs, row_sets=rows)
    m = stab.selected_index
    theta = theta_at(theta_path, m)
    A = assemble_adjacency(theta, config.edge_rule)

    notes = []
    for sol in theta_path:
        if not sol.converged[m]:
            notes.append(f"node {X.variable_ids[sol.node]}: full-data fit not "
                         f"converged at rho_opt={path.values[m]:.4g}")
    for msg in notes:
        warnings.warn(msg, LLGMWarning, stacklevel=2)
    return LlgmFit(
        adjacency=AdjacencyMatrix(A.edges, X.variable_ids),
        theta=theta,
        theta_path=theta_path,
        stability=stab,
        path=path,
        counts=X,
        normalization=report,
        warnings=notes,
        stability_rule=config.edge_rule,
    )
