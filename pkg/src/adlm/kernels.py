"""Hot inner loops of the sampler.

Every kernel exists twice: a numba version (``*_nb``) and a numpy/scipy
version (``*_np``). The public name points at the numba one unless
``ADLM_DISABLE_NUMBA`` is set. Both variants consume the same pre-drawn
random numbers, so a chain is reproducible under either backend up to
floating-point rounding.
"""
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from ._jit import HAVE_NUMBA, njit

PIVOT_RTOL = 1e-12


# ---------------------------------------------------------------------------
# Cholesky factorisation


def _cholesky_py(a):
    n = a.shape[0]
    L = np.zeros((n, n))
    tol = 0.0
    for i in range(n):
        if a[i, i] > tol:
            tol = a[i, i]
    tol *= PIVOT_RTOL
    for j in range(n):
        s = a[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > tol:
            return L, False
        d = math.sqrt(s)
        L[j, j] = d
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / d
    return L, True


def cholesky_np(a):
    """Lower Cholesky factor and success flag (LAPACK)."""
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0)), True
    try:
        L = cholesky(a, lower=True, check_finite=False)
    except LinAlgError:
        return np.zeros((n, n)), False
    if not np.all(np.isfinite(L)):
        return L, False
    # LAPACK only rejects nonpositive pivots; apply the relative floor too
    if np.min(np.diag(L)) ** 2 <= PIVOT_RTOL * np.max(np.diag(a)):
        return L, False
    return L, True


cholesky_nb = njit(cache=True)(_cholesky_py)


# ---------------------------------------------------------------------------
# Gaussian draw from a precision matrix


def _precision_draw_py(a, lin, z):
    # x = A^{-1} lin + L^{-T} z with A = L L^T, factorised after symmetric
    # diagonal scaling so one huge diagonal entry cannot trip the pivot floor
    n = a.shape[0]
    x = np.zeros(n)
    s = np.empty(n)
    for i in range(n):
        if not a[i, i] > 0:
            return x, False
        s[i] = 1.0 / math.sqrt(a[i, i])
    sa = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            sa[i, j] = a[i, j] * s[i] * s[j]
    L, ok = _cholesky_kernel(sa)
    if not ok:
        return x, False
    w = np.empty(n)
    for i in range(n):
        t = lin[i] * s[i]
        for k in range(i):
            t -= L[i, k] * w[k]
        w[i] = t / L[i, i]
    for i in range(n - 1, -1, -1):
        t = w[i] + z[i]
        for k in range(i + 1, n):
            t -= L[k, i] * x[k]
        x[i] = t / L[i, i]
    for i in range(n):
        x[i] *= s[i]
    return x, True


def precision_draw_np(a, lin, z):
    d = np.diag(a)
    if not np.all(d > 0):
        return np.zeros(a.shape[0]), False
    s = 1.0 / np.sqrt(d)
    L, ok = cholesky_np(a * np.outer(s, s))
    if not ok:
        return np.zeros(a.shape[0]), False
    w = solve_triangular(L, lin * s, lower=True, check_finite=False)
    x = solve_triangular(L, w + z, lower=True, trans="T", check_finite=False)
    return x * s, True


if HAVE_NUMBA:
    _cholesky_kernel = cholesky_nb
    precision_draw_nb = njit(cache=True)(_precision_draw_py)
else:
    _cholesky_kernel = _cholesky_py
    precision_draw_nb = _precision_draw_py


# ---------------------------------------------------------------------------
# Metropolis-Hastings sweep over the log smoothing precisions


def _tau_sweep_py(tau, d2, inv_zeta2, level_prec, sd, z, logu, accepted, bound):
    """One random-walk MH pass over ``tau`` in place.

    Log target for coordinate k (up to a constant):
        tau_k / 2 - exp(tau_k) d2_k / 2
        - inv_zeta2 / 2 * [squared differences with neighbours]
        - level_prec / 2 * (sum tau)^2
    where ``d2_k = (b_{k+1} - b_k)^2 / sigma2``. Proposals with
    ``|tau_k| > bound`` are rejected (truncated prior).
    """
    m = tau.shape[0]
    total = 0.0
    for k in range(m):
        total += tau[k]
    for k in range(m):
        cur = tau[k]
        new = cur + sd[k] * z[k]
        if abs(new) > bound:
            accepted[k] = False
            continue
        dlog = 0.5 * (new - cur) - 0.5 * d2[k] * (math.exp(new) - math.exp(cur))
        nb = 0.0
        if k > 0:
            nb += (new - tau[k - 1]) ** 2 - (cur - tau[k - 1]) ** 2
        if k < m - 1:
            nb += (tau[k + 1] - new) ** 2 - (tau[k + 1] - cur) ** 2
        dlog -= 0.5 * inv_zeta2 * nb
        new_total = total - cur + new
        dlog -= 0.5 * level_prec * (new_total * new_total - total * total)
        if logu[k] < dlog:
            tau[k] = new
            total = new_total
            accepted[k] = True
        else:
            accepted[k] = False


tau_sweep_np = _tau_sweep_py
tau_sweep_nb = njit(cache=True)(_tau_sweep_py)


# ---------------------------------------------------------------------------
# Lag embedding


def lag_embed_np(x, p):
    """(n-p, p+1) matrix whose row i is (x[p+i], x[p+i-1], ..., x[i])."""
    return np.ascontiguousarray(sliding_window_view(x, p + 1)[:, ::-1])


def _lag_embed_py(x, p):
    n = x.shape[0]
    out = np.empty((n - p, p + 1))
    for i in range(n - p):
        for j in range(p + 1):
            out[i, j] = x[p + i - j]
    return out


lag_embed_nb = njit(cache=True)(_lag_embed_py)


if HAVE_NUMBA:
    cholesky_lower = cholesky_nb
    precision_draw = precision_draw_nb
    tau_sweep = tau_sweep_nb
    lag_embed = lag_embed_nb
else:
    cholesky_lower = cholesky_np
    precision_draw = precision_draw_np
    tau_sweep = tau_sweep_np
    lag_embed = lag_embed_np

BACKEND = "numba" if HAVE_NUMBA else "numpy"
