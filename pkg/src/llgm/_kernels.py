"""Compiled inner loops for the penalized Poisson regression solver.

Everything here works on raw arrays: ``Z`` is the ``n x q`` predictor matrix
(an all-ones column stands in for the intercept, with penalty factor 0), ``y``
the response. The functions release the GIL so a thread pool gets real
parallelism.
"""

import math

import numpy as np
from numba import njit

# Result slots written by ``solve_point``.
CONVERGED, N_ITER, OBJECTIVE, KKT, CAPPED, DIVERGED, STALLED, N_SWEEPS = range(8)
N_STATS = 8

_MAX_HALVINGS = 60
_MAX_SWEEPS = 5000
_MAX_EXPANSIONS = 100
_REFINE_EVERY = 64


@njit(cache=True, nogil=True)
def _clip(x, cap):
    if x > cap:
        return cap
    if x < -cap:
        return -cap
    return x


@njit(cache=True, nogil=True)
def loglik(y, eta, eta_cap):
    """Mean Poisson log-likelihood kernel ``(1/n) sum(y*eta - exp(eta))``."""
    n = y.shape[0]
    s = 0.0
    for i in range(n):
        s += y[i] * eta[i] - math.exp(_clip(eta[i], eta_cap))
    return s / n


@njit(cache=True, nogil=True)
def _penalty(beta, pf):
    s = 0.0
    for k in range(beta.shape[0]):
        s += pf[k] * abs(beta[k])
    return s


@njit(cache=True, nogil=True)
def _soft(u, rho):
    if u > rho:
        return u - rho
    if u < -rho:
        return u + rho
    return 0.0


@njit(cache=True, nogil=True)
def _cholesky(A):
    """Lower Cholesky factor of symmetric PSD ``A``; a tiny ridge is added if
    the plain factorization fails. Returns a 0 x 0 array on failure."""
    m = A.shape[0]
    try:
        return np.linalg.cholesky(A)
    except Exception:  # noqa: BLE001 - numba only matches generic exceptions
        pass
    scale = 0.0
    for u in range(m):
        scale += A[u, u]
    R = A.copy()
    for u in range(m):
        R[u, u] += 1e-10 * scale / m + 1e-300
    try:
        return np.linalg.cholesky(R)
    except Exception:  # noqa: BLE001
        return np.empty((0, 0))


@njit(cache=True, nogil=True)
def _chol_solve(L, rhs, m):
    """Solve with the leading ``m x m`` block of the factor ``L``."""
    x = np.empty(m)
    for u in range(m):
        t = rhs[u]
        for v in range(u):
            t -= L[u, v] * x[v]
        x[u] = t / L[u, u]
    for u in range(m - 1, -1, -1):
        t = x[u]
        for v in range(u + 1, m):
            t -= L[v, u] * x[v]
        x[u] = t / L[u, u]
    return x


@njit(cache=True, nogil=True)
def _chol_drop(L, m, h):
    """Delete index ``h`` from the factor held in the leading ``m x m`` block.

    Removing row ``h`` leaves one superdiagonal per later row; Givens
    rotations on column pairs clear it without changing ``L L'``. Returns
    False if a zero pivot appears.
    """
    for i in range(h, m - 1):
        for v in range(i + 2):
            L[i, v] = L[i + 1, v]
    for j in range(h, m - 1):
        a = L[j, j]
        e = L[j, j + 1]
        r = math.hypot(a, e)
        if r == 0.0:
            return False
        cs = a / r
        sn = e / r
        for i in range(j, m - 1):
            u = L[i, j]
            w = L[i, j + 1]
            L[i, j] = cs * u + sn * w
            L[i, j + 1] = cs * w - sn * u
    return True


@njit(cache=True, nogil=True)
def _refine(H, c, lam, b, S_size, tol):
    """Active-set refinement of ``0.5 b'Hb - c'b + sum(lam*|b|)`` on the
    current nonzeros of ``b``.

    With the signs held fixed the model is a smooth quadratic. Each step
    solves it exactly (a tiny ridge stands in when the restricted matrix is
    singular), moves along the solution direction with an exact line search
    and stops at the first sign change, which drops that coordinate from the
    factorization. The objective never increases. Returns True when the
    result satisfies every stationarity condition within ``tol``.
    """
    nt = 0
    for a in range(S_size):
        if b[a] != 0.0 or lam[a] == 0.0:
            nt += 1
    T = np.empty(nt, dtype=np.int64)
    u = 0
    for a in range(S_size):
        if b[a] != 0.0 or lam[a] == 0.0:
            T[u] = a
            u += 1
    HT = np.empty((nt, nt))
    g = np.empty(nt)
    sgn = np.empty(nt)
    for u in range(nt):
        a = T[u]
        s = 0.0
        if lam[a] > 0.0:
            s = 1.0 if b[a] > 0.0 else -1.0
        sgn[u] = s
        g[u] = c[a] - lam[a] * s
        for v in range(nt):
            HT[u, v] = H[a, T[v]]
    L = _cholesky(HT) if nt > 0 else np.empty((0, 0))
    if nt > 0 and L.shape[0] == 0:
        return False
    d = np.empty(nt)
    m = nt
    while m > 0:
        x = _chol_solve(L, g, m)
        for u in range(m):
            d[u] = x[u] - b[T[u]]
            if not math.isfinite(d[u]):
                return False
        slope = 0.0
        curv = 0.0
        for u in range(m):
            hb = 0.0
            hd = 0.0
            for v in range(m):
                hb += H[T[u], T[v]] * b[T[v]]
                hd += H[T[u], T[v]] * d[v]
            slope += (hb - g[u]) * d[u]
            curv += d[u] * hd
        if not slope < 0.0:
            break
        alpha = -slope / curv if curv > 0.0 else np.inf
        hit = -1
        for u in range(m):
            if sgn[u] * d[u] < 0.0:
                t = -b[T[u]] / d[u]
                if t <= alpha:
                    alpha = t
                    hit = u
        if not math.isfinite(alpha):
            return False
        for u in range(m):
            b[T[u]] += alpha * d[u]
        if hit < 0:
            break
        b[T[hit]] = 0.0
        if not _chol_drop(L, m, hit):
            return False
        for u in range(hit, m - 1):
            T[u] = T[u + 1]
            g[u] = g[u + 1]
            sgn[u] = sgn[u + 1]
        m -= 1
    worst = 0.0
    for a in range(S_size):
        r = c[a]
        for e in range(S_size):
            r -= H[a, e] * b[e]
        if b[a] == 0.0:
            v = abs(r) - lam[a]
        elif b[a] > 0.0:
            v = abs(r - lam[a])
        else:
            v = abs(r + lam[a])
        if v > worst:
            worst = v
    return worst <= tol


@njit(cache=True, nogil=True)
def _quad_kkt(r, b, lam, S_size):
    """Largest stationarity violation of the quadratic model; ``r = c - Hb``."""
    worst = 0.0
    for a in range(S_size):
        if b[a] == 0.0:
            v = abs(r[a]) - lam[a]
        elif b[a] > 0.0:
            v = abs(r[a] - lam[a])
        else:
            v = abs(r[a] + lam[a])
        if v > worst:
            worst = v
    return worst


@njit(cache=True, nogil=True)
def _solve_quadratic(H, c, lam, b, S_size, tol):
    """Minimize ``0.5 b'Hb - c'b + sum(lam*|b|)`` by cyclic coordinate descent.

    ``b`` holds the warm start and receives the result. Every few sweeps an
    active-set refinement on the current sign pattern runs and the loop stops
    once it certifies optimality. Returns the number of sweeps used.
    """
    r = np.empty(S_size)
    for a in range(S_size):
        s = c[a]
        for e in range(S_size):
            s -= H[a, e] * b[e]
        r[a] = s
    sweeps = 0
    for sweep in range(_MAX_SWEEPS):
        sweeps += 1
        maxchg = 0.0
        for a in range(S_size):
            h = H[a, a]
            if h <= 0.0:
                continue
            nb = _soft(r[a] + h * b[a], lam[a]) / h
            d = nb - b[a]
            if d != 0.0:
                for e in range(S_size):
                    r[e] -= H[e, a] * d
                b[a] = nb
                chg = h * abs(d)
                if chg > maxchg:
                    maxchg = chg
        if maxchg < tol or _quad_kkt(r, b, lam, S_size) < tol:
            break
        # refine after sweeps 1, 2, 4, 8, ... and then every _REFINE_EVERY
        k = sweep + 1
        if (k & (k - 1)) == 0 or k % _REFINE_EVERY == 0:
            if _refine(H, c, lam, b, S_size, tol):
                break
            for a in range(S_size):
                s = c[a]
                for e in range(S_size):
                    s -= H[a, e] * b[e]
                r[a] = s
    return sweeps


@njit(cache=True, nogil=True)
def solve_point(Z, y, pf, rho, beta, eta, tol, max_iter, eta_cap, active_set,
                trace, stats):
    """Maximize the penalized log-likelihood at one penalty value.

    ``beta`` and ``eta`` are updated in place and must be consistent on entry
    (``eta = Z @ beta``). Proximal Newton outer loop; the quadratic model is
    minimized by coordinate descent over a working set that grows until the
    remaining coordinates satisfy their zero-optimality condition. Step
    halving keeps the penalized objective non-decreasing. ``trace`` receives
    the objective at each outer iterate (pass a length-0 array to skip).
    """
    n, q = Z.shape
    w = np.empty(n)
    sw = np.empty(n)
    v = np.empty(n)
    wv = np.empty(n)
    eta_try = np.empty(n)
    grad = np.empty(q)
    bnew = np.empty(q)
    in_set = np.zeros(q, dtype=np.bool_)
    colsq = np.zeros(q)
    for k in range(q):
        s = 0.0
        for i in range(n):
            s += Z[i, k] * Z[i, k]
        colsq[k] = s

    converged = False
    stalled = False
    capped_iters = 0
    sweeps = 0
    it = 0
    obj = 0.0
    kkt = 0.0
    for it in range(1, max_iter + 1):
        any_capped = False
        for i in range(n):
            e = eta[i]
            if e > eta_cap or e < -eta_cap:
                any_capped = True
            w[i] = math.exp(_clip(e, eta_cap))
            sw[i] = math.sqrt(w[i])
        if any_capped:
            capped_iters += 1

        obj = loglik(y, eta, eta_cap) - rho * _penalty(beta, pf)
        if trace.shape[0] >= it:
            trace[it - 1] = obj

        kkt = 0.0
        for k in range(q):
            g = 0.0
            for i in range(n):
                g += Z[i, k] * (y[i] - w[i])
            g /= n
            grad[k] = g
            lam = rho * pf[k]
            if beta[k] == 0.0:
                viol = abs(g) - lam
            elif beta[k] > 0.0:
                viol = abs(g - lam)
            else:
                viol = abs(g + lam)
            if viol > kkt:
                kkt = viol

        kappa = 10.0 * tol * max(1.0, abs(obj))
        if kkt <= kappa:
            converged = True
            break
        if it == max_iter:
            break

        # working set: nonzeros, unpenalized and currently violating coordinates
        for k in range(q):
            in_set[k] = colsq[k] > 0.0 and (
                (not active_set) or beta[k] != 0.0 or pf[k] == 0.0
                or abs(grad[k]) > rho * pf[k])
            bnew[k] = beta[k]
        inner_tol = max(0.01 * kappa, 1e-3 * kkt)

        for _ in range(_MAX_EXPANSIONS):
            S_size = 0
            for k in range(q):
                if in_set[k]:
                    S_size += 1
            S = np.empty(S_size, dtype=np.int64)
            a = 0
            for k in range(q):
                if in_set[k]:
                    S[a] = k
                    a += 1
            ZS = np.empty((n, S_size))
            for a in range(S_size):
                k = S[a]
                for i in range(n):
                    ZS[i, a] = Z[i, k] * sw[i]
            H = np.dot(ZS.T, ZS) / n
            c = np.empty(S_size)
            lam_s = np.empty(S_size)
            b = np.empty(S_size)
            for a in range(S_size):
                k = S[a]
                s = grad[k]
                for e in range(S_size):
                    s += H[a, e] * beta[S[e]]
                c[a] = s
                lam_s[a] = rho * pf[k]
                b[a] = bnew[k]
            sweeps += _solve_quadratic(H, c, lam_s, b, S_size, inner_tol)
            for a in range(S_size):
                bnew[S[a]] = b[a]

            # step in linear-predictor space and zero-optimality of the rest
            for i in range(n):
                v[i] = 0.0
            for a in range(S_size):
                k = S[a]
                d = bnew[k] - beta[k]
                if d != 0.0:
                    for i in range(n):
                        v[i] += d * Z[i, k]
            for i in range(n):
                wv[i] = w[i] * v[i]
            added = False
            for k in range(q):
                if in_set[k] or colsq[k] == 0.0:
                    continue
                s = 0.0
                for i in range(n):
                    s += Z[i, k] * wv[i]
                if abs(grad[k] - s / n) > rho * pf[k] + inner_tol:
                    in_set[k] = True
                    added = True
            if not added:
                break

        moved = False
        for k in range(q):
            if bnew[k] != beta[k]:
                moved = True
                break
        if not moved:
            stalled = True
            break

        # step halving on the penalized objective
        t = 1.0
        accepted = False
        for _ in range(_MAX_HALVINGS):
            for i in range(n):
                eta_try[i] = eta[i] + t * v[i]
            pen = 0.0
            for k in range(q):
                pen += pf[k] * abs(beta[k] + t * (bnew[k] - beta[k]))
            cand = loglik(y, eta_try, eta_cap) - rho * pen
            if cand >= obj:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            stalled = True
            break
        for k in range(q):
            beta[k] = beta[k] + t * (bnew[k] - beta[k])
        for i in range(n):
            eta[i] = eta_try[i]

    if stalled:
        obj = loglik(y, eta, eta_cap) - rho * _penalty(beta, pf)
    stats[CONVERGED] = 1.0 if converged else 0.0
    stats[N_ITER] = it
    stats[OBJECTIVE] = obj
    stats[KKT] = kkt
    stats[CAPPED] = capped_iters
    stats[DIVERGED] = 1.0 if capped_iters == it and it > 0 else 0.0
    stats[STALLED] = 1.0 if stalled else 0.0
    stats[N_SWEEPS] = sweeps


@njit(cache=True, nogil=True)
def solve_path(Z, y, pf, rhos, beta, tol, max_iter, eta_cap, active_set,
               coef_out, stats_out):
    """Warm-started sweep over a descending penalty grid."""
    n, q = Z.shape
    eta = np.empty(n)
    for i in range(n):
        s = 0.0
        for k in range(q):
            s += Z[i, k] * beta[k]
        eta[i] = s
    no_trace = np.empty(0)
    for m in range(rhos.shape[0]):
        solve_point(Z, y, pf, rhos[m], beta, eta, tol, max_iter, eta_cap,
                    active_set, no_trace, stats_out[m])
        for k in range(q):
            coef_out[k, m] = beta[k]
