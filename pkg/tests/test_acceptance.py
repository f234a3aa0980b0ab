"""Acceptance suite: one PASS/FAIL line per criterion.

The lines are collected by ``conftest.py`` and printed in the terminal
summary under "acceptance criteria". Tolerances are fixed constants below.
"""

import os
import time
import warnings

import numpy as np
import pytest

from llgm.core import CountMatrix, LLGMWarning, RngSpec
from llgm.evaluate import degree_stats, permutation_null_auc, roc_from_path, tpr_fpr
from llgm.network import LlgmConfig, StabilityConfig, adjacency_path, fit_llgm, fit_paths
from llgm.normalize import NormalizationConfig, median_dispersion, normalize_pipeline
from llgm.simulate import SimulationConfig, expected_moments, simulate
from llgm.solver import compute_rho_max, fit_node, gradient, objective

# criterion 1
ORACLE_TOL = 1e-6
ORACLE_BOX = 2.0
ORACLE_STEP = 0.01
# criterion 3
FD_STEP = 1e-5
FD_RTOL = 1e-5
# criterion 4
N_SE = 3.0
PHI_RANGE = (0.9, 1.1)
# criterion 5
STUDY_P, STUDY_N = 50, 200
SNR_NOISE = {"high": 0.5, "low": 5.0}
GRAPHS = ("hub", "scale_free", "random")
REPLICATES = 10
STUDY_B = 100
STUDY_M = 141
NULL_SDS = 5.0
N_PERM = 200
FPR_MAX = 0.2
STARS_BETA = 0.05
# criterion 8
CASE_N, CASE_P_RAW, CASE_P = 544, 524, 262
CASE_LIMIT_S = 2 * 3600
SPEEDUP_MIN = 2.0
# criterion 9
DISPERSION_RANGE = (0.8, 1.2)


def record(log, k, ok, detail):
    log.append(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def quiet():
    ctx = warnings.catch_warnings()
    ctx.__enter__()
    warnings.simplefilter("ignore", LLGMWarning)
    return ctx


# ---------------------------------------------------------------- criterion 1

def _node_problem(X, j):
    y = X.values[:, j]
    Z = np.delete(X.values, j, axis=1)
    return y, Z


def _grid_oracle(y, Z, rho):
    """Brute-force maximum over a grid, refined by coordinate bisection."""
    n = len(y)
    g = np.arange(-ORACLE_BOX, ORACLE_BOX + ORACLE_STEP / 2, ORACLE_STEP)
    B1, B2 = np.meshgrid(g, g, indexing="ij")
    eta = Z[:, 0, None, None] * B1 + Z[:, 1, None, None] * B2
    F = ((y[:, None, None] * eta - np.exp(eta)).sum(axis=0) / n
         - rho * (np.abs(B1) + np.abs(B2)))
    i, k = np.unravel_index(np.argmax(F), F.shape)
    b = np.array([g[i], g[k]])

    def deriv(c, bc, side):
        bb = b.copy()
        bb[c] = bc
        mu = np.exp(Z @ bb)
        smooth = Z[:, c] @ (y - mu) / n
        sign = (1.0 if bc > 0 or (bc == 0 and side > 0) else -1.0)
        return smooth - rho * sign

    for _ in range(2000):
        old = b.copy()
        for c in range(2):
            lo, hi = -ORACLE_BOX, ORACLE_BOX
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if deriv(c, mid, +1) > 0:
                    lo = mid
                elif deriv(c, mid, -1) < 0:
                    hi = mid
                else:
                    lo = hi = mid
                    break
            b[c] = 0.5 * (lo + hi)
        if np.max(np.abs(b - old)) < 1e-14:
            break
    eta = Z @ b
    return float((y @ eta - np.exp(eta).sum()) / n - rho * np.abs(b).sum()), b


def test_criterion_1_solver_oracle(acceptance_log):
    t0 = time.perf_counter()
    worst, on_edge = 0.0, 0
    for inst in range(20):
        rng = np.random.default_rng(1000 + inst)
        X = CountMatrix(rng.poisson(2.0, size=(50, 3)).astype(float))
        y, Z = _node_problem(X, 0)
        for rho in (0.01, 0.1, 0.5):
            beta, _, diag = fit_node(X, 0, rho)
            ref, b = _grid_oracle(y, Z, rho)
            on_edge += int(np.any(np.abs(b) >= ORACLE_BOX - 1e-9))
            worst = max(worst, abs(objective(X, 0, beta, rho=rho) - ref))
    elapsed = time.perf_counter() - t0
    ok = worst <= ORACLE_TOL and elapsed < 60 and on_edge == 0
    record(acceptance_log, 1, ok,
           f"max |objective - oracle| = {worst:.2e} (tol {ORACLE_TOL}), "
           f"oracle on box edge {on_edge}x, {elapsed:.1f}s (< 60s)")


# ---------------------------------------------------------------- criterion 2

def test_criterion_2_kkt_endpoints(acceptance_log):
    t0 = time.perf_counter()
    failures = []
    for inst in range(50):
        rng = np.random.default_rng(2000 + inst)
        p = int(rng.integers(2, 11))
        n = int(rng.integers(10, 101))
        X = CountMatrix(rng.poisson(rng.uniform(0.5, 5.0), size=(n, p)).astype(float))
        v = X.values
        G = np.abs(v.T @ (v - 1.0)) / n  # G[k, j]
        np.fill_diagonal(G, -np.inf)
        k, j = np.unravel_index(np.argmax(G), G.shape)
        top = compute_rho_max(X)
        if top <= 0:
            failures.append(f"instance {inst}: rho_max = 0")
            continue
        for node in range(p):
            beta, _, _ = fit_node(X, node, top)
            if np.any(beta != 0):
                failures.append(f"instance {inst}: node {node} nonzero at rho_max")
        beta, _, _ = fit_node(X, j, 0.99 * top)
        pos = k if k < j else k - 1
        if beta[pos] == 0:
            failures.append(f"instance {inst}: ({j},{k}) still zero at 0.99 rho_max")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60
    record(acceptance_log, 2, ok,
           f"50 matrices, {len(failures)} failures {failures[:3]}, {elapsed:.1f}s (< 60s)")


# ---------------------------------------------------------------- criterion 3

def test_criterion_3_gradient(acceptance_log):
    worst = 0.0
    for point in range(100):
        rng = np.random.default_rng(3000 + point)
        n, p = int(rng.integers(20, 80)), int(rng.integers(3, 9))
        X = CountMatrix(rng.poisson(rng.uniform(0.5, 5), size=(n, p)).astype(float))
        j = int(rng.integers(p))
        beta = rng.uniform(-0.3, 0.3, p - 1)
        g = gradient(X, j, beta)
        fd = np.empty(p - 1)
        for k in range(p - 1):
            e = np.zeros(p - 1)
            e[k] = FD_STEP
            fd[k] = (objective(X, j, beta + e) - objective(X, j, beta - e)) / (2 * FD_STEP)
        worst = max(worst, np.max(np.abs(g - fd)) / np.max(np.abs(g)))
    record(acceptance_log, 3, worst <= FD_RTOL,
           f"max relative error {worst:.2e} over 100 points (tol {FD_RTOL})")


# ---------------------------------------------------------------- criterion 4

def test_criterion_4_simulator_moments(acceptance_log):
    t0 = time.perf_counter()
    cfg = SimulationConfig(p=10, n=50000, graph_kind="random", lambda_true=1.0,
                           lambda_noise=0.5, seed=0)
    X, A = simulate(cfg)
    v = X.values
    mean, cov = expected_moments(A, cfg.lambda_true, cfg.lambda_noise)
    m = v.mean(axis=0)
    z_mean = np.abs(m - mean) / np.sqrt(v.var(axis=0, ddof=1) / cfg.n)
    c = v - m
    z_cov = []
    for j in range(cfg.p):
        for k in range(j + 1, cfg.p):
            prod = c[:, j] * c[:, k]
            se = prod.std(ddof=1) / np.sqrt(cfg.n)
            z_cov.append(abs(prod.mean() - cov[j, k]) / se)
    phi = v.var(axis=0, ddof=1) / m
    elapsed = time.perf_counter() - t0
    ok = (z_mean.max() <= N_SE and max(z_cov) <= N_SE
          and phi.min() >= PHI_RANGE[0] and phi.max() <= PHI_RANGE[1] and elapsed < 60)
    record(acceptance_log, 4, ok,
           f"{A.n_edges} edges; max mean z {z_mean.max():.2f}, max cov z {max(z_cov):.2f} "
           f"(<= {N_SE}); dispersion in [{phi.min():.3f}, {phi.max():.3f}]; {elapsed:.1f}s")


# ---------------------------------------------------------------- criterion 5

def _study_run(kind, snr, rep, n_jobs=1):
    cfg = SimulationConfig(p=STUDY_P, n=STUDY_N, graph_kind=kind,
                           lambda_true=1.0, lambda_noise=SNR_NOISE[snr], seed=rep)
    X, A = simulate(cfg)
    config = LlgmConfig(stability=StabilityConfig(B=STUDY_B, beta=STARS_BETA, seed=rep),
                        n_jobs=n_jobs)
    t0 = time.perf_counter()
    ctx = quiet()
    try:
        fit = fit_llgm(X, config)
    finally:
        ctx.__exit__(None, None, None)
    elapsed = time.perf_counter() - t0
    return X, A, fit, elapsed


@pytest.fixture(scope="module")
def study():
    runs = {}
    t0 = time.perf_counter()
    for kind in GRAPHS:
        for snr in SNR_NOISE:
            for rep in range(REPLICATES):
                X, A, fit, _ = _study_run(kind, snr, rep)
                roc = roc_from_path(fit.theta_path, A)
                null = permutation_null_auc(adjacency_path(fit.theta_path), A, N_PERM,
                                            RngSpec(rep, 99))
                tpr, fpr = tpr_fpr(fit.adjacency, A)
                runs[kind, snr, rep] = dict(
                    X=X if rep == 0 else None, fit=fit, auc=roc.auc,
                    null_sd=float(null.std(ddof=1)), tpr=tpr, fpr=fpr,
                )
    return runs, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_5_simulation_study(study, acceptance_log):
    runs, elapsed = study
    ok = True
    parts = []
    for kind in GRAPHS:
        auc = {s: np.mean([runs[kind, s, r]["auc"] for r in range(REPLICATES)])
               for s in SNR_NOISE}
        sd = np.mean([runs[kind, "high", r]["null_sd"] for r in range(REPLICATES)])
        fpr = np.mean([runs[kind, "high", r]["fpr"] for r in range(REPLICATES)])
        m = runs[kind, "high", 0]["fit"].stability
        a = auc["high"] > auc["low"]
        b = auc["high"] - 0.5 >= NULL_SDS * sd
        c = fpr <= FPR_MAX
        ok &= a and b and c
        parts.append(f"{kind}: AUC high {auc['high']:.3f} > low {auc['low']:.3f} [{a}], "
                     f"margin {(auc['high'] - 0.5) / sd:.1f} null SD [{b}], "
                     f"FPR@rho_opt {fpr:.3f} [{c}]")
    fit0 = runs["hub", "high", 0]["fit"]
    m_ok = len(fit0.stability.edge_frequency) == 100 and fit0.counts.n == STUDY_N
    rows = StabilityConfig(B=STUDY_B).subsample_size(STUDY_N)
    ok &= m_ok and rows == STUDY_M
    record(acceptance_log, 5, ok,
           "; ".join(parts) + f"; m = {rows}; study wall-clock {elapsed / 60:.1f} min on "
           f"{os.cpu_count()} core(s) (target < 30 min on 4 cores, informational)")


# ---------------------------------------------------------------- criterion 6

@pytest.fixture(scope="module")
def thread_runs():
    """One criterion-5 configuration fitted with 1 and with 4 workers."""
    out = {}
    for n_jobs in (1, 4):
        _, _, fit, elapsed = _study_run("hub", "high", 0, n_jobs=n_jobs)
        out[n_jobs] = (fit, elapsed)
    return out


@pytest.mark.slow
def test_criterion_6_stars_contract(study, thread_runs, acceptance_log):
    runs, _ = study
    bad = []
    for key, r in runs.items():
        st = r["fit"].stability
        if st.instability[0] != 0:
            bad.append(f"{key}: D(rho_max) = {st.instability[0]}")
        if np.any(np.diff(st.instability_mono) < 0):
            bad.append(f"{key}: monotonized curve increases with rho")
        if st.instability_mono[st.selected_index] > STARS_BETA:
            bad.append(f"{key}: D_mono(rho_opt) > beta")
    f1, f4 = thread_runs[1][0], thread_runs[4][0]
    f0 = runs["hub", "high", 0]["fit"]
    same = (f1.rho_opt == f4.rho_opt == f0.rho_opt
            and np.array_equal(f1.stability.edge_frequency, f4.stability.edge_frequency)
            and np.array_equal(f1.adjacency.edges, f4.adjacency.edges))
    record(acceptance_log, 6, not bad and same,
           f"{len(runs)} runs, {len(bad)} contract violations {bad[:3]}; "
           f"rho_opt identical for 1 and 4 workers: {same}")


# ---------------------------------------------------------------- criterion 7

@pytest.mark.slow
def test_criterion_7_permutation_equivariance(study, acceptance_log):
    runs, _ = study
    r = runs["hub", "high", 0]
    X, fit = r["X"], r["fit"]
    perm = np.random.default_rng(7).permutation(X.p)
    G = adjacency_path(fit.theta_path)
    Gp = adjacency_path(fit_paths(X.take_columns(perm), fit.path))
    mism = int(sum(not np.array_equal(Gp[m], G[m][np.ix_(perm, perm)])
                   for m in range(len(G))))
    record(acceptance_log, 7, mism == 0,
           f"{len(G)} path points, {mism} differ after relabeling")


# ---------------------------------------------------------------- criterion 8

@pytest.mark.slow
def test_criterion_8_case_study_scale(thread_runs, acceptance_log, tmp_path):
    cfg = SimulationConfig(p=CASE_P_RAW, n=CASE_N, graph_kind="scale_free", seed=0)
    X, _ = simulate(cfg)
    workers = min(8, os.cpu_count() or 1)
    config = LlgmConfig(stability=StabilityConfig(B=100, seed=0), path_length=100,
                        normalization=NormalizationConfig(), n_jobs=workers)
    t0 = time.perf_counter()
    ctx = quiet()
    try:
        fit = fit_llgm(X, config)
    finally:
        ctx.__exit__(None, None, None)
    elapsed = time.perf_counter() - t0
    deg = degree_stats(fit.adjacency)
    csv = tmp_path / "degree.csv"
    csv.write_text(deg.to_csv())
    lines = csv.read_text().splitlines()
    csv_ok = (lines[0] == "degree,count" and len(lines) > 2
              and sum(int(s.split(",")[1]) for s in lines[1:]) == CASE_P)
    shape_ok = fit.counts.shape == (CASE_N, CASE_P) and len(fit.path) == 100
    t1, t4 = thread_runs[1][1], thread_runs[4][1]
    speedup = t1 / t4
    ok = shape_ok and csv_ok and elapsed < CASE_LIMIT_S and speedup >= SPEEDUP_MIN
    record(acceptance_log, 8, ok,
           f"{fit.counts.n}x{fit.counts.p} pipeline done in {elapsed / 60:.1f} min with "
           f"{workers} worker(s) (< 120 min); degree CSV ok: {csv_ok} "
           f"(slope {deg.loglog_slope:.2f}); 4-worker speedup {speedup:.2f}x "
           f"(needs >= {SPEEDUP_MIN}x; machine has {os.cpu_count()} core(s))")


# ---------------------------------------------------------------- criterion 9

def test_criterion_9_normalization(acceptance_log):
    rng = np.random.default_rng(9)
    n, p = 300, 100
    mu = rng.uniform(2, 30, p)
    depth = rng.lognormal(0.0, 0.5, size=(n, 1))
    lam = rng.gamma(5.0, depth * mu / 5.0)  # gamma mixing injects overdispersion
    X = CountMatrix(rng.poisson(lam).astype(float))
    ctx = quiet()
    try:
        Y, rep = normalize_pipeline(X)
    finally:
        ctx.__exit__(None, None, None)
    after = median_dispersion(Y.values)
    lo, hi = DISPERSION_RANGE
    ok = rep.dispersion_after < rep.dispersion_before and lo <= after <= hi
    record(acceptance_log, 9, ok,
           f"median dispersion {rep.dispersion_before:.2f} -> {after:.3f} "
           f"(alpha {rep.alpha}), target [{lo}, {hi}]")
