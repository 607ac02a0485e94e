"""Hot numeric kernels: numba-compiled loops with a NumPy fallback path.

The recursions here (ARMA residuals, AR(1) paths, rolling window fits)
dominate the runtime of the whole package.  When numba is importable they
are compiled with ``@njit``; setting the environment variable
``OPTINFORMED_NO_NUMBA=1`` before import forces the fallback path, which
implements the same arithmetic through ``scipy.signal.lfilter`` and plain
Python.  Both paths produce results that agree to machine precision; see
``benchmarks/bench_kernels.py`` for the speed gap.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.signal import lfilter

ENV_FLAG = "OPTINFORMED_NO_NUMBA"

# Fit box: the AR coefficient stays strictly inside the unit interval, the
# MA coefficient may sit on the non-invertibility boundary itself.
RHO_BOUND = 0.999
DELTA_BOUND = 1.0


def numba_disabled_by_env() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


NUMBA_ENABLED = False
if not numba_disabled_by_env():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is an install dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        """Decorator stand-in that leaves the function untouched."""
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# ARMA(1,1) residual recursion
#
#   eps[t] = x[t] - gamma - rho * x[t-1] - delta * eps[t-1],  eps start at 0
#
# Residuals exist for t = 1..n-1, so the output is one shorter than the input.
# ---------------------------------------------------------------------------


@njit(cache=True)
def arma_residuals(x, gamma, rho, delta):
    n = x.shape[0]
    eps = np.empty(n - 1)
    prev = 0.0
    for t in range(1, n):
        e = x[t] - gamma - rho * x[t - 1] - delta * prev
        eps[t - 1] = e
        prev = e
    return eps


def arma_residuals_numpy(x, gamma, rho, delta):
    """Same recursion through an IIR filter; used on the fallback path."""
    w = x[1:] - gamma - rho * x[:-1]
    return lfilter([1.0], [1.0, delta], w)


# ---------------------------------------------------------------------------
# Concentrated CSS objective.
#
# The residual recursion is affine in gamma, so for fixed (rho, delta) the
# optimal intercept has a closed form and the search runs over two
# parameters only.  The gradient comes from the sensitivity recursions
#   d eps/d rho   = -x[t-1]   - delta * (previous)
#   d eps/d delta = -eps[t-1] - delta * (previous)
# evaluated at the concentrated optimum, which equals the total gradient of
# the concentrated objective because d SSE/d gamma vanishes there.
# ---------------------------------------------------------------------------


@njit(cache=True)
def css_objective_grad(x, rho, delta):
    n = x.shape[0]
    m = n - 1
    a = np.empty(m)  # residuals at gamma = 0
    d = np.empty(m)  # d eps / d gamma
    ap = 0.0
    dp = 0.0
    sad = 0.0
    sdd = 0.0
    for t in range(1, n):
        av = x[t] - rho * x[t - 1] - delta * ap
        dv = -1.0 - delta * dp
        a[t - 1] = av
        d[t - 1] = dv
        sad += av * dv
        sdd += dv * dv
        ap = av
        dp = dv
    gamma = -sad / sdd  # sdd >= 1 because d[0] = -1
    sse = 0.0
    gr = 0.0
    gd = 0.0
    ep = 0.0
    sr = 0.0
    sd = 0.0
    for t in range(1, n):
        e = a[t - 1] + gamma * d[t - 1]
        srv = -x[t - 1] - delta * sr
        sdv = -ep - delta * sd
        sse += e * e
        gr += e * srv
        gd += e * sdv
        ep = e
        sr = srv
        sd = sdv
    return sse, 2.0 * gr, 2.0 * gd, gamma


def css_objective_grad_numpy(x, rho, delta):
    """Vectorized twin of :func:`css_objective_grad`."""
    one = [1.0]
    ma = [1.0, delta]
    w = x[1:] - rho * x[:-1]
    a = lfilter(one, ma, w)
    d = lfilter(one, ma, np.full(w.shape[0], -1.0))
    gamma = -float(a @ d) / float(d @ d)
    e = a + gamma * d
    sr = lfilter(one, ma, -x[:-1])
    elag = np.empty_like(e)
    elag[0] = 0.0
    elag[1:] = e[:-1]
    sd = lfilter(one, ma, -elag)
    return float(e @ e), 2.0 * float(e @ sr), 2.0 * float(e @ sd), gamma


# ---------------------------------------------------------------------------
# Bounded quasi-Newton search over (rho, delta).
#
# Projected BFGS with backtracking along the projection arc.  Two variables
# keep the inverse Hessian an explicit symmetric 2x2.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _clip(v, bound):
    if v > bound:
        return bound
    if v < -bound:
        return -bound
    return v


@njit(cache=True)
def css_minimize(x, r0, d0, gtol, maxiter):
    """Minimize the concentrated CSS objective from one starting point.

    Returns (rho, delta, gamma, sse, converged, n_evals).
    """
    r = _clip(r0, RHO_BOUND)
    d = _clip(d0, DELTA_BOUND)
    f, gr, gd, gam = css_objective_grad(x, r, d)
    nev = 1
    h11 = 1.0
    h12 = 0.0
    h22 = 1.0
    converged = False
    for _ in range(maxiter):
        # Projected gradient: a component pushing into an active bound is inert.
        pgr = gr
        if (r >= RHO_BOUND and gr < 0.0) or (r <= -RHO_BOUND and gr > 0.0):
            pgr = 0.0
        pgd = gd
        if (d >= DELTA_BOUND and gd < 0.0) or (d <= -DELTA_BOUND and gd > 0.0):
            pgd = 0.0
        gscale = gtol * (1.0 + abs(f))
        if abs(pgr) <= gscale and abs(pgd) <= gscale:
            converged = True
            break
        pr = -(h11 * gr + h12 * gd)
        pd = -(h12 * gr + h22 * gd)
        if pr * gr + pd * gd >= 0.0:  # not a descent direction: reset
            h11 = 1.0
            h12 = 0.0
            h22 = 1.0
            pr = -gr
            pd = -gd
        # Scale overly long steps down before the line search.
        plen = math.sqrt(pr * pr + pd * pd)
        if plen > 1.0:
            pr /= plen
            pd /= plen
        alpha = 1.0
        accepted = False
        rn = r
        dn = d
        fn = f
        grn = gr
        gdn = gd
        gamn = gam
        for _ls in range(30):
            rc = _clip(r + alpha * pr, RHO_BOUND)
            dc = _clip(d + alpha * pd, DELTA_BOUND)
            sr_ = rc - r
            sd_ = dc - d
            if sr_ == 0.0 and sd_ == 0.0:
                break
            fc, grc, gdc, gamc = css_objective_grad(x, rc, dc)
            nev += 1
            if fc <= f + 1.0e-4 * (gr * sr_ + gd * sd_):
                rn = rc
                dn = dc
                fn = fc
                grn = grc
                gdn = gdc
                gamn = gamc
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # No further progress along any tried step; treat the current
            # point as converged if the projected gradient is merely small.
            converged = abs(pgr) <= 1.0e3 * gscale and abs(pgd) <= 1.0e3 * gscale
            break
        s1 = rn - r
        s2 = dn - d
        y1 = grn - gr
        y2 = gdn - gd
        sy = s1 * y1 + s2 * y2
        ss = s1 * s1 + s2 * s2
        yy = y1 * y1 + y2 * y2
        if sy > 1.0e-10 * math.sqrt(ss * yy) and sy > 0.0:
            # Inverse BFGS update, written out for the 2x2 symmetric case.
            rho_b = 1.0 / sy
            hy1 = h11 * y1 + h12 * y2
            hy2 = h12 * y1 + h22 * y2
            yhy = y1 * hy1 + y2 * hy2
            c = (1.0 + rho_b * yhy) * rho_b
            h11 = h11 - rho_b * (s1 * hy1 + hy1 * s1) + c * s1 * s1
            h12 = h12 - rho_b * (s1 * hy2 + hy1 * s2) + c * s1 * s2
            h22 = h22 - rho_b * (s2 * hy2 + hy2 * s2) + c * s2 * s2
        r = rn
        d = dn
        f = fn
        gr = grn
        gd = gdn
        gam = gamn
    return r, d, gam, f, converged, nev


# Low-discrepancy restart points: golden-ratio Weyl pairs, fixed across calls
# so that every fit of the same data returns the same answer.
_WEYL_A = 0.6180339887498949
_WEYL_B = 0.4142135623730951
N_RESTARTS = 5


@njit(cache=True)
def fit_css(x, gtol, maxiter):
    """Best-of-starts CSS fit.  Returns (gamma, rho, delta, sse, converged).

    Starting points: an autocovariance-based guess, then N_RESTARTS scattered
    points.  Ties in the objective keep the earlier start.  Remaining restarts
    are skipped once two converged starts land on the same objective value;
    whenever starts disagree, the full ladder runs.
    """
    n = x.shape[0]
    mean = 0.0
    for i in range(n):
        mean += x[i]
    mean /= n
    c = x - mean
    v0 = np.dot(c, c) / n
    if v0 <= 0.0:
        return mean, 0.0, 0.0, 0.0, False
    v1 = np.dot(c[1:], c[:-1]) / n
    v2 = np.dot(c[2:], c[:-2]) / n
    # Moment-based start: AR from the autocovariance tail ratio, MA from the
    # lag-1 ratio quadratic.
    if abs(v1) > 1.0e-12 * v0:
        r_start = _clip(v2 / v1, 0.95)
    else:
        r_start = 0.0
    k = v1 / v0
    if k > 0.999:
        k = 0.999
    elif k < -0.999:
        k = -0.999
    aq = r_start - k
    bq = 1.0 + r_start * r_start - 2.0 * r_start * k
    d_start = 0.0
    if abs(aq) > 1.0e-12:
        disc = bq * bq - 4.0 * aq * aq
        if disc > 0.0:
            root = math.sqrt(disc)
            if bq >= 0.0:
                q = -0.5 * (bq + root)
            else:
                q = -0.5 * (bq - root)
            cand = q / aq
            if abs(cand) > 1.0:
                cand = aq / q
            d_start = _clip(cand, 0.98)
    best_r = 0.0
    best_d = 0.0
    best_g = mean
    best_f = np.inf
    best_conv = False
    agree = 0
    for s in range(N_RESTARTS + 1):
        if s == 0:
            rs = r_start
            ds = d_start
        else:
            rs = -0.9 + 1.8 * ((s * _WEYL_A) % 1.0)
            ds = -0.9 + 1.8 * ((s * _WEYL_B) % 1.0)
        r, d, g, f, conv, _ = css_minimize(x, rs, ds, gtol, maxiter)
        if np.isfinite(best_f):
            ftol = 1.0e-9 * (best_f + 1.0e-300)
        else:
            ftol = 0.0
        if f < best_f - ftol:
            best_r = r
            best_d = d
            best_g = g
            best_f = f
            best_conv = conv
            agree = 1 if conv else 0
        elif f <= best_f + ftol and conv:
            # Same objective reached independently; swap in the converged
            # point only if the incumbent never converged.
            if not best_conv:
                best_r = r
                best_d = d
                best_g = g
                best_f = f
                best_conv = True
            agree += 1
        if agree >= 2:
            break
    return best_g, best_r, best_d, best_f, best_conv


@njit(cache=True)
def rolling_css(x, m, gtol, maxiter):
    """Independent CSS fits on every window of m+1 consecutive observations.

    Window s covers x[s : s+m+1] for s = 0..len(x)-m-1.  Returns a
    (windows, 4) array of (gamma, rho, delta, sse) rows plus a convergence
    flag per window.
    """
    n = x.shape[0]
    k = n - m
    out = np.empty((k, 4))
    conv = np.empty(k, np.bool_)
    for s in range(k):
        g, r, d, f, cv = fit_css(x[s:s + m + 1], gtol, maxiter)
        out[s, 0] = g
        out[s, 1] = r
        out[s, 2] = d
        out[s, 3] = f
        conv[s] = cv
    return out, conv


# ---------------------------------------------------------------------------
# Simulation recursions
# ---------------------------------------------------------------------------


@njit(cache=True)
def ar1_path(innovations, rho, const, y0):
    """y[t] = const + rho * y[t-1] + innovations[t], seeded with y[-1] = y0."""
    n = innovations.shape[0]
    y = np.empty(n)
    prev = y0
    for t in range(n):
        prev = const + rho * prev + innovations[t]
        y[t] = prev
    return y


def ar1_path_numpy(innovations, rho, const, y0):
    f = innovations + const
    f[0] += rho * y0
    return lfilter([1.0], [1.0, -rho], f)


@njit(cache=True)
def arma11_path(eps, gamma, rho, delta, x0, e0):
    """x[t] = gamma + rho * x[t-1] + eps[t] + delta * eps[t-1]."""
    n = eps.shape[0]
    x = np.empty(n)
    xp = x0
    ep = e0
    for t in range(n):
        xv = gamma + rho * xp + eps[t] + delta * ep
        x[t] = xv
        xp = xv
        ep = eps[t]
    return x


def arma11_path_numpy(eps, gamma, rho, delta, x0, e0):
    forcing = np.empty_like(eps)
    forcing[0] = gamma + eps[0] + delta * e0
    forcing[1:] = gamma + eps[1:] + delta * eps[:-1]
    forcing[0] += rho * x0
    return lfilter([1.0], [1.0, -rho], forcing)


if not NUMBA_ENABLED:
    arma_residuals = arma_residuals_numpy
    css_objective_grad = css_objective_grad_numpy
    ar1_path = ar1_path_numpy
    arma11_path = arma11_path_numpy
