"""Edge-recovery metrics and degree-distribution diagnostics."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from .core import AdjacencyMatrix, InvalidArgumentError, LLGMWarning, as_generator
from .network import adjacency_path


def _edges(A) -> np.ndarray:
    a = A.edges if isinstance(A, AdjacencyMatrix) else np.asarray(A)
    return a.astype(bool)


def tpr_fpr(A_hat, A_true) -> tuple[float, float]:
    """True- and false-positive rates over unordered node pairs.

    A rate whose denominator is zero (no true edges, or a complete true graph)
    is returned as NaN with a warning.
    """
    est, true = _edges(A_hat), _edges(A_true)
    if est.shape != true.shape:
        raise InvalidArgumentError(f"shape mismatch: {est.shape} vs {true.shape}")
    iu = np.triu_indices(true.shape[0], 1)
    est, true = est[iu], true[iu]
    n_true = int(true.sum())
    n_false = true.size - n_true
    if n_true == 0:
        warnings.warn("true graph has no edges; TPR undefined", LLGMWarning, stacklevel=2)
        tpr = float("nan")
    else:
        tpr = float((est & true).sum() / n_true)
    if n_false == 0:
        warnings.warn("true graph is complete; FPR undefined", LLGMWarning, stacklevel=2)
        fpr = float("nan")
    else:
        fpr = float((est & ~true).sum() / n_false)
    return tpr, fpr


def _rates(graphs: np.ndarray, true: np.ndarray) -> np.ndarray:
    """Vectorized ``(fpr, tpr)`` for a ``(K, p, p)`` stack of graphs."""
    iu = np.triu_indices(true.shape[0], 1)
    t = true[iu]
    g = graphs[:, iu[0], iu[1]]
    n_true, n_false = t.sum(), (~t).sum()
    with np.errstate(invalid="ignore", divide="ignore"):
        tpr = (g & t).sum(axis=1) / n_true if n_true else np.full(len(g), np.nan)
        fpr = (g & ~t).sum(axis=1) / n_false if n_false else np.full(len(g), np.nan)
    return np.column_stack([fpr, tpr])


def auc_trapezoid(points) -> float:
    """Area under ``(fpr, tpr)`` points with (0, 0) and (1, 1) anchors added."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    pts = pts[~np.isnan(pts).any(axis=1)]
    pts = np.vstack([[0.0, 0.0], pts, [1.0, 1.0]])
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    return float(trapezoid(pts[:, 1], pts[:, 0]))


@dataclass
class RocCurve:
    """ROC points in path order (descending penalty) and their AUC."""

    points: np.ndarray
    auc: float
    rhos: np.ndarray | None = None

    @property
    def fpr(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def tpr(self) -> np.ndarray:
        return self.points[:, 1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho", "fpr", "tpr"])
        rhos = self.rhos if self.rhos is not None else [float("nan")] * len(self.points)
        for r, (f, t) in zip(rhos, self.points):
            w.writerow([repr(float(r)), repr(float(f)), repr(float(t))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "rho": None if self.rhos is None else self.rhos.tolist(),
            "fpr": self.fpr.tolist(),
            "tpr": self.tpr.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def roc_from_graphs(graphs, A_true, rhos=None) -> RocCurve:
    """ROC curve for a sequence of estimated graphs, one per penalty."""
    graphs = np.asarray(graphs).astype(bool)
    if graphs.ndim == 2:
        graphs = graphs[None]
    true = _edges(A_true)
    if graphs.shape[1:] != true.shape:
        raise InvalidArgumentError("graph and truth dimensions differ")
    pts = _rates(graphs, true)
    if np.isnan(pts).any():
        warnings.warn("degenerate true graph; some ROC rates are undefined",
                      LLGMWarning, stacklevel=2)
    return RocCurve(pts, auc_trapezoid(pts),
                    None if rhos is None else np.asarray(rhos, float))


def roc_from_path(theta_path, A_true, rule: str = "union") -> RocCurve:
    """ROC curve traced by the estimated graphs along a coefficient path."""
    graphs = adjacency_path(theta_path, rule)
    if graphs.shape[1] != _edges(A_true).shape[0]:
        raise InvalidArgumentError("path and truth dimensions differ")
    return roc_from_graphs(graphs, A_true, theta_path[0].rhos)


def permutation_null_auc(graphs, A_true, n_perm: int = 200, rng=None) -> np.ndarray:
    """AUCs of ``graphs`` against randomly relabelled copies of the truth.

    Relabelling preserves the true graph's shape while breaking any relation
    to the estimate, so the spread of these AUCs is the chance-level spread.
    """
    graphs = np.asarray(graphs).astype(bool)
    true = _edges(A_true)
    g = as_generator(rng)
    out = np.empty(n_perm)
    for b in range(n_perm):
        perm = g.permutation(true.shape[0])
        out[b] = auc_trapezoid(_rates(graphs, true[np.ix_(perm, perm)]))
    return out


@dataclass
class DegreeReport:
    degree_histogram: dict[int, int]
    loglog_slope: float
    loglog_r2: float

    def to_csv(self) -> str:
        lines = ["degree,count"]
        lines += [f"{d},{c}" for d, c in sorted(self.degree_histogram.items())]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "degree_histogram": {str(k): v for k, v in sorted(self.degree_histogram.items())},
            "loglog_slope": self.loglog_slope,
            "loglog_r2": self.loglog_r2,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def degree_stats(A) -> DegreeReport:
    """Degree histogram and least-squares fit of log(count) on log(degree).

    Isolated nodes appear in the histogram (so counts sum to ``p``) but are
    left out of the regression. With fewer than two distinct positive degrees
    the slope and R^2 are NaN.
    """
    deg = _edges(A).sum(axis=0).astype(int)
    values, counts = np.unique(deg, return_counts=True)
    hist = {int(d): int(c) for d, c in zip(values, counts)}
    pos = values > 0
    if pos.sum() < 2:
        return DegreeReport(hist, float("nan"), float("nan"))
    fit = stats.linregress(np.log(values[pos]), np.log(counts[pos]))
    return DegreeReport(hist, float(fit.slope), float(fit.rvalue ** 2))
