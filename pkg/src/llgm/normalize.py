"""Count normalization: depth adjustment, low-variance filtering, power transform.

After these steps each variable should look roughly like i.i.d. Poisson draws
with its own mean, which is what the neighborhood regressions assume.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import (
    CountMatrix,
    DegenerateSampleError,
    EmptyResultError,
    InvalidArgumentError,
    LLGMWarning,
    as_counts,
)

DEPTH_METHODS = ("median-of-ratios", "total-count", "upper-quartile", "none")
DEFAULT_ALPHA_GRID = tuple(np.round(np.arange(1, 21) * 0.05, 2))


def round_half_up(x: np.ndarray) -> np.ndarray:
    """Nearest integer, halves away from zero (inputs here are non-negative)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _geometric_mean_one(factors: np.ndarray) -> np.ndarray:
    return factors / np.exp(np.mean(np.log(factors)))


def size_factors(X, method: str = "median-of-ratios") -> np.ndarray:
    """Per-sample depth factors, scaled to geometric mean 1."""
    X = as_counts(X)
    v = X.values
    if method not in DEPTH_METHODS:
        raise InvalidArgumentError(f"unknown depth method {method!r}")
    if method == "none":
        return np.ones(X.n)
    totals = v.sum(axis=1)
    if np.any(totals <= 0):
        i = int(np.flatnonzero(totals <= 0)[0])
        raise DegenerateSampleError(f"sample {X.sample_ids[i]!r} has zero total count")
    if method == "total-count":
        return _geometric_mean_one(totals)
    if method == "median-of-ratios":
        positive = np.all(v > 0, axis=0)
        if positive.any():
            logs = np.log(v[:, positive])
            ratios = logs - logs.mean(axis=0)
            return _geometric_mean_one(np.exp(np.median(ratios, axis=1)))
        warnings.warn(
            "no variable is positive in every sample; median-of-ratios falls "
            "back to upper-quartile", LLGMWarning, stacklevel=2,
        )
    uq = np.array([np.percentile(row[row > 0], 75) for row in v])
    return _geometric_mean_one(uq)


def adjust_depth(X, method: str = "median-of-ratios"):
    """Divide each sample by its depth factor.

    Returns
    -------
    CountMatrix
        Depth-adjusted values (not rounded).
    ndarray
        Factors, one per sample, with geometric mean 1.
    """
    X = as_counts(X)
    f = size_factors(X, method)
    return X.with_values(X.values / f[:, None]), f


def filter_low_variance(X, fraction: float = 0.5):
    """Drop the ``fraction`` of variables with the smallest sample variance.

    Constant variables are always dropped. Among tied variances the variable
    with the higher index goes first. Returns the filtered matrix and the
    sorted indices of the kept variables.
    """
    X = as_counts(X)
    if not 0 <= fraction < 1:
        raise InvalidArgumentError(f"fraction must lie in [0, 1), got {fraction}")
    var = X.values.var(axis=0, ddof=1)
    idx = np.arange(X.p)
    n_drop = int(np.floor(fraction * X.p))
    order = np.lexsort((-idx, var))
    drop = np.zeros(X.p, dtype=bool)
    drop[order[:n_drop]] = True
    drop |= var == 0
    kept = idx[~drop]
    if kept.size == 0:
        raise EmptyResultError("every variable was filtered out")
    if kept.size < 2:
        raise EmptyResultError("fewer than two variables survive filtering")
    return X.take_columns(kept), kept


def dispersion_index(values: np.ndarray, warn: bool = True) -> np.ndarray:
    """Per-variable variance-to-mean ratio; zero-mean variables give NaN."""
    values = np.asarray(values, dtype=np.float64)
    mean = values.mean(axis=0)
    var = values.var(axis=0, ddof=1)
    zero = mean == 0
    if warn and zero.any():
        warnings.warn(
            f"{int(zero.sum())} variable(s) have zero mean and are excluded "
            "from the dispersion summary", LLGMWarning, stacklevel=2,
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(zero, np.nan, var / np.where(zero, 1.0, mean))


def median_dispersion(values: np.ndarray, warn: bool = True) -> float:
    phi = dispersion_index(values, warn=warn)
    if np.all(np.isnan(phi)):
        return float("nan")
    return float(np.nanmedian(phi))


def power_transform(X, alpha: float, round_result: bool = True) -> CountMatrix:
    """Entrywise ``round(x ** alpha)``."""
    X = as_counts(X)
    if not 0 < alpha <= 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1], got {alpha}")
    out = X.values ** alpha
    if round_result:
        out = round_half_up(out)
    return X.with_values(out)


def estimate_alpha(X, grid=DEFAULT_ALPHA_GRID, tau: float = 0.10,
                   round_result: bool = True) -> float:
    """Largest power whose transformed data has median dispersion <= 1 + tau.

    If no grid value qualifies, the one whose median dispersion is closest to
    one is returned.
    """
    X = as_counts(X)
    grid = np.sort(np.asarray(grid, dtype=np.float64))[::-1]
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid > 1):
        raise InvalidArgumentError("alpha grid values must lie in (0, 1]")
    meds = []
    warned = False
    for a in grid:
        v = X.values ** a
        if round_result:
            v = round_half_up(v)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            med = median_dispersion(v)
        if caught and not warned:
            warnings.warn(str(caught[0].message), LLGMWarning, stacklevel=2)
            warned = True
        if med <= 1 + tau:
            return float(a)
        meds.append(med)
    meds = np.asarray(meds)
    if np.all(np.isnan(meds)):
        return float(grid[0])
    return float(grid[np.nanargmin(np.abs(meds - 1))])


@dataclass(frozen=True)
class NormalizationConfig:
    depth_method: str = "median-of-ratios"
    filter_fraction: float = 0.5
    alpha: float | None = None
    alpha_grid: tuple = DEFAULT_ALPHA_GRID
    tau: float = 0.10
    round_counts: bool = True
    adjust_depth: bool = True
    filter: bool = True
    correct_overdispersion: bool = True

    def __post_init__(self):
        if self.depth_method not in DEPTH_METHODS:
            raise InvalidArgumentError(f"unknown depth method {self.depth_method!r}")
        if not 0 <= self.filter_fraction < 1:
            raise InvalidArgumentError("filter_fraction must lie in [0, 1)")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise InvalidArgumentError("alpha must lie in (0, 1]")

    @classmethod
    def disabled(cls) -> "NormalizationConfig":
        return cls(adjust_depth=False, filter=False, correct_overdispersion=False,
                   round_counts=False)


@dataclass
class NormalizationReport:
    depth_method: str
    scale_factors: list[float]
    kept_variables: list[int]
    filter_fraction: float
    alpha: float
    dispersion_before: float
    dispersion_after: float
    kept_variable_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationReport":
        return cls(**d)


def normalize_pipeline(X, config: NormalizationConfig | None = None):
    """Depth adjustment, then filtering, then the overdispersion power.

    ``dispersion_before`` is the median dispersion index of the input and
    ``dispersion_after`` that of the output.
    """
    X = as_counts(X)
    config = config or NormalizationConfig()
    before = median_dispersion(X.values, warn=False)

    method = config.depth_method if config.adjust_depth else "none"
    out, factors = adjust_depth(X, method)
    if config.adjust_depth and config.round_counts:
        out = out.with_values(round_half_up(out.values))

    fraction = config.filter_fraction if config.filter else 0.0
    if config.filter:
        out, kept = filter_low_variance(out, fraction)
    else:
        kept = np.arange(X.p)

    alpha = 1.0
    if config.correct_overdispersion:
        if config.alpha is not None:
            alpha = float(config.alpha)
        else:
            alpha = estimate_alpha(out, config.alpha_grid, config.tau,
                                   round_result=config.round_counts)
        if alpha != 1.0:
            out = power_transform(out, alpha, round_result=config.round_counts)

    report = NormalizationReport(
        depth_method=method,
        scale_factors=factors.tolist(),
        kept_variables=[int(k) for k in kept],
        filter_fraction=float(fraction),
        alpha=alpha,
        dispersion_before=before,
        dispersion_after=median_dispersion(out.values, warn=False),
        kept_variable_ids=list(out.variable_ids),
    )
    return out, report
