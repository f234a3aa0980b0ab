"""l1-penalized Poisson (log-linear) regression of one variable on the rest.

For node ``j`` the solver maximizes

    (1/n) * sum_i [ x_ij * eta_i - exp(eta_i) ] - rho * ||beta||_1,
    eta_i = intercept + X[i, -j] @ beta,

with the intercept fixed at zero by default. The penalty path is traced with
warm starts; each point is solved by a proximal Newton loop whose quadratic
model is minimized by cyclic coordinate descent with soft-thresholding.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .core import (
    CountMatrix,
    InvalidArgumentError,
    LLGMWarning,
    RegularizationPath,
    as_counts,
)


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings for :func:`fit_node` and :func:`fit_node_path`.

    Parameters
    ----------
    tol : float
        Convergence tolerance. A point is accepted once every KKT residual is
        below ``10 * tol * max(1, |objective|)``.
    max_iter : int
        Maximum number of outer (Newton) iterations per penalty value.
    eta_cap : float
        Linear predictors are clamped to ``[-eta_cap, eta_cap]`` before
        exponentiation.
    use_intercept : bool
        Fit an unpenalized intercept. Off by default: depth-adjusted data is
        modelled without one.
    active_set : bool
        Cycle over nonzero coordinates between full verification sweeps.
    standardize : bool
        Penalize coefficients on the unit-variance predictor scale. Returned
        coefficients are always on the raw count scale.
    """

    tol: float = 1e-6
    max_iter: int = 1000
    eta_cap: float = 30.0
    use_intercept: bool = False
    active_set: bool = True
    standardize: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.eta_cap > 0:
            raise InvalidArgumentError(f"eta_cap must be positive, got {self.eta_cap}")


@dataclass
class FitDiagnostics:
    converged: bool
    n_iter: int
    objective: float
    kkt_violation: float
    capped_iterations: int = 0
    diverged: bool = False
    stalled: bool = False
    objective_trace: list[float] = field(default_factory=list)


@dataclass
class PathSolution:
    """Coefficient path for one node.

    ``coefficients[:, m]`` holds the ``p - 1`` coefficients (other variables
    in their original order, node ``node`` skipped) at ``rhos[m]``.
    """

    node: int
    rhos: np.ndarray
    coefficients: np.ndarray
    intercepts: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    objective: np.ndarray
    diverged: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.coefficients.shape[0] + 1

    def full_column(self, m: int) -> np.ndarray:
        """Length-``p`` coefficient vector at path index ``m`` (0 at ``node``)."""
        return np.insert(self.coefficients[:, m], self.node, 0.0)

    def to_dict(self) -> dict:
        return {
            "node": int(self.node),
            "rhos": self.rhos.tolist(),
            "coefficients": self.coefficients.tolist(),
            "intercepts": self.intercepts.tolist(),
            "converged": self.converged.astype(bool).tolist(),
            "iterations": self.iterations.astype(int).tolist(),
            "objective": self.objective.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PathSolution":
        return cls(
            node=int(d["node"]),
            rhos=np.asarray(d["rhos"], float),
            coefficients=np.asarray(d["coefficients"], float).reshape(
                -1, len(d["rhos"])
            ),
            intercepts=np.asarray(d["intercepts"], float),
            converged=np.asarray(d["converged"], bool),
            iterations=np.asarray(d["iterations"], int),
            objective=np.asarray(d["objective"], float),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "PathSolution":
        return cls.from_dict(json.loads(s))


def _response_and_design(X: CountMatrix, j: int):
    if not 0 <= j < X.p:
        raise InvalidArgumentError(f"node index {j} out of range for p = {X.p}")
    v = X.values
    y = np.ascontiguousarray(v[:, j])
    Z = np.asfortranarray(np.delete(v, j, axis=1))
    return y, Z


def _scales(Z: np.ndarray) -> np.ndarray:
    s = Z.std(axis=0)
    s[s == 0] = 1.0
    return s


def _check_finite(name, a):
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"{name} contains non-finite values")


def objective(X, j: int, beta, intercept: float = 0.0, rho: float = 0.0,
              eta_cap: float = 30.0) -> float:
    """Penalized log-likelihood of node ``j`` at ``(intercept, beta)``.

    Returns ``(1/n) sum_i [x_ij eta_i - exp(eta_i)] - rho * ||beta||_1``.
    The linear predictor is clamped to ``[-eta_cap, eta_cap]`` inside the
    exponential only.
    """
    X = as_counts(X)
    y, Z = _response_and_design(X, j)
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (X.p - 1,):
        raise InvalidArgumentError(f"beta must have length {X.p - 1}")
    _check_finite("beta", beta)
    if not np.isfinite(intercept) or not np.isfinite(rho):
        raise InvalidArgumentError("intercept and rho must be finite")
    if rho < 0:
        raise InvalidArgumentError("rho must be non-negative")
    eta = intercept + Z @ beta
    return float(_kernels.loglik(y, eta, eta_cap) - rho * np.abs(beta).sum())


def gradient(X, j: int, beta, intercept: float = 0.0,
             eta_cap: float = 30.0) -> np.ndarray:
    """Gradient of the unpenalized objective with respect to ``beta``."""
    X = as_counts(X)
    y, Z = _response_and_design(X, j)
    eta = intercept + Z @ np.asarray(beta, float)
    return Z.T @ (y - np.exp(np.clip(eta, -eta_cap, eta_cap))) / X.n


def compute_rho_max(X, cross_product: bool = False, use_intercept: bool = False,
                    standardize: bool = False) -> float:
    """Smallest penalty at which every node's neighborhood is empty.

    By default this is the exact KKT threshold at ``beta = 0``:
    ``max_{j, k != j} (1/n) |X_k^T (X_j - 1)|`` (with an intercept the
    baseline is the column mean instead of 1). ``cross_product=True`` returns the
    cruder ``max_{j, k != j} |X_k^T X_j|`` instead; it is usually far larger.
    """
    X = as_counts(X)
    v = X.values
    n = X.n
    if cross_product:
        G = np.abs(v.T @ v)
        np.fill_diagonal(G, 0.0)
        return float(G.max())
    base = v.mean(axis=0) if use_intercept else np.ones(X.p)
    Z = v / _scales(v) if standardize else v
    # G[k, j] = (1/n) Z_k^T (X_j - base_j)
    G = np.abs(Z.T @ (v - base)) / n
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def _initial_intercept(y, config: SolverConfig) -> float:
    if not config.use_intercept:
        return 0.0
    m = y.mean()
    return float(np.log(m)) if m > 0 else -config.eta_cap


def _design(X: CountMatrix, j: int, config: SolverConfig):
    """Kernel inputs for node ``j``: response, design, penalty factors, scales.

    With an intercept the design gains a trailing all-ones column that is
    left unpenalized.
    """
    y, Z = _response_and_design(X, j)
    s = _scales(Z) if config.standardize else np.ones(Z.shape[1])
    if config.standardize:
        Z = Z / s
    pf = np.ones(Z.shape[1])
    if config.use_intercept:
        Z = np.column_stack([Z, np.ones(X.n)])
        pf = np.append(pf, 0.0)
    return y, np.asfortranarray(Z), pf, s


def fit_node(X, j: int, rho: float, warm_start=None,
             config: SolverConfig | None = None, intercept: float | None = None,
             trace: bool = False):
    """Solve the penalized regression of node ``j`` at a single ``rho``.

    Returns
    -------
    beta : ndarray, shape (p - 1,)
    intercept : float
    diagnostics : FitDiagnostics
    """
    X = as_counts(X)
    config = config or SolverConfig()
    if not np.isfinite(rho) or rho < 0:
        raise InvalidArgumentError(f"rho must be a non-negative real, got {rho}")
    y, Z, pf, s = _design(X, j, config)
    q = X.p - 1
    beta = np.zeros(q) if warm_start is None else np.array(warm_start, float)
    if beta.shape != (q,):
        raise InvalidArgumentError(f"warm_start must have length {q}")
    _check_finite("warm_start", beta)
    beta = beta * s
    if config.use_intercept:
        b0 = _initial_intercept(y, config) if intercept is None else intercept
        beta = np.append(beta, b0)
    eta = Z @ beta
    stats = np.zeros(_kernels.N_STATS)
    tr = np.full(config.max_iter, np.nan) if trace else np.empty(0)
    _kernels.solve_point(
        Z, y, pf, float(rho), beta, eta, config.tol, int(config.max_iter),
        config.eta_cap, config.active_set, tr, stats,
    )
    b0 = float(beta[q]) if config.use_intercept else 0.0
    beta = beta[:q] / s
    diag = _diagnostics(stats, tr)
    _warn_flags(j, rho, diag)
    return beta, b0, diag


def _diagnostics(stats, tr=None) -> FitDiagnostics:
    n_iter = int(stats[_kernels.N_ITER])
    return FitDiagnostics(
        converged=bool(stats[_kernels.CONVERGED]),
        n_iter=n_iter,
        objective=float(stats[_kernels.OBJECTIVE]),
        kkt_violation=float(stats[_kernels.KKT]),
        capped_iterations=int(stats[_kernels.CAPPED]),
        diverged=bool(stats[_kernels.DIVERGED]),
        stalled=bool(stats[_kernels.STALLED]),
        objective_trace=[] if tr is None or tr.size == 0 else tr[:n_iter].tolist(),
    )


def _warn_flags(j, rho, diag: FitDiagnostics):
    if diag.diverged:
        warnings.warn(
            f"node {j}, rho={rho:.4g}: linear predictor hit eta_cap on every "
            "iteration", LLGMWarning, stacklevel=3,
        )
    elif not diag.converged:
        warnings.warn(
            f"node {j}, rho={rho:.4g}: not converged after {diag.n_iter} "
            f"iterations (KKT residual {diag.kkt_violation:.3g})",
            LLGMWarning, stacklevel=3,
        )


def fit_node_path(X, j: int, path, config: SolverConfig | None = None,
                  warn: bool = True) -> PathSolution:
    """Fit node ``j`` along a descending penalty path with warm starts.

    The path normally starts at ``rho_max`` so the first column is zero and
    every later point starts from its predecessor's solution.
    """
    X = as_counts(X)
    config = config or SolverConfig()
    rhos = path.values if isinstance(path, RegularizationPath) else np.asarray(path, float)
    rhos = np.ascontiguousarray(rhos, dtype=np.float64)
    if rhos.ndim != 1 or rhos.size == 0 or np.any(rhos < 0):
        raise InvalidArgumentError("path must be a non-empty list of penalties")
    y, Z, pf, s = _design(X, j, config)
    q, K = X.p - 1, rhos.size
    beta = np.zeros(Z.shape[1])
    if config.use_intercept:
        beta[q] = _initial_intercept(y, config)
    coef = np.zeros((Z.shape[1], K))
    stats = np.zeros((K, _kernels.N_STATS))
    _kernels.solve_path(
        Z, y, pf, rhos, beta, config.tol, int(config.max_iter), config.eta_cap,
        config.active_set, coef, stats,
    )
    icpt = coef[q].copy() if config.use_intercept else np.zeros(K)
    coef = coef[:q] / s[:, None]
    sol = PathSolution(
        node=j,
        rhos=rhos.copy(),
        coefficients=coef,
        intercepts=icpt,
        converged=stats[:, _kernels.CONVERGED].astype(bool),
        iterations=stats[:, _kernels.N_ITER].astype(int),
        objective=stats[:, _kernels.OBJECTIVE].copy(),
        diverged=stats[:, _kernels.DIVERGED].astype(bool),
    )
    if warn and not sol.converged.all():
        bad = np.flatnonzero(~sol.converged)
        warnings.warn(
            f"node {j}: {bad.size} of {K} path points did not converge "
            f"(first at rho={rhos[bad[0]]:.4g})", LLGMWarning, stacklevel=2,
        )
    return sol


def kkt_residual(X, j: int, beta, rho: float, intercept: float = 0.0,
                 use_intercept: bool = False, eta_cap: float = 30.0) -> float:
    """Largest violation of the stationarity conditions at ``beta``."""
    g = gradient(X, j, beta, intercept, eta_cap)
    beta = np.asarray(beta, float)
    viol = np.where(beta == 0, np.abs(g) - rho, np.abs(g - rho * np.sign(beta)))
    out = float(max(viol.max(initial=0.0), 0.0))
    if use_intercept:
        X = as_counts(X)
        y, Z = _response_and_design(X, j)
        eta = intercept + Z @ beta
        out = max(out, abs(float(np.mean(y - np.exp(np.clip(eta, -eta_cap, eta_cap))))))
    return out


def save_paths(paths: list[PathSolution], file) -> None:
    """Write a list of node paths to a compressed ``.npz`` archive."""
    arrays = {}
    for sol in paths:
        for key, val in asdict(sol).items():
            if key == "node" or val is None:
                continue
            arrays[f"{sol.node}/{key}"] = np.asarray(val)
    arrays["nodes"] = np.array([s.node for s in paths])
    np.savez_compressed(file, **arrays)


def load_paths(file) -> list[PathSolution]:
    with np.load(file) as z:
        out = []
        for node in z["nodes"]:
            get = lambda k: z[f"{node}/{k}"]  # noqa: E731
            out.append(PathSolution(
                node=int(node), rhos=get("rhos"), coefficients=get("coefficients"),
                intercepts=get("intercepts"), converged=get("converged"),
                iterations=get("iterations"), objective=get("objective"),
                diverged=z[f"{node}/diverged"] if f"{node}/diverged" in z else None,
            ))
    return out
