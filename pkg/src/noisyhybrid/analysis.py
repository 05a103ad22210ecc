"""Fits on ensemble means: 1/L extrapolation, S(q) scaling laws, data collapse."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import interpolate, optimize


class FitModel(str, Enum):
    POWER_FIXED_THIRD = "pow13"
    POWER_FREE = "powfree"
    LOG_LINEAR = "log"


@dataclass(frozen=True)
class ThermoResult:
    s_inf: float
    c: float
    s_inf_stderr: float
    c_stderr: float
    rss: float


@dataclass(frozen=True)
class FitResult:
    """``S = a * q**exponent + b`` (power models) or ``S = a * ln q + b`` (log)."""

    model: FitModel
    a: float
    b: float
    exponent: float | None
    rss: float
    q: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    def predict(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.model is FitModel.LOG_LINEAR:
            return self.a * np.log(q) + self.b
        return self.a * q**self.exponent + self.b


@dataclass(frozen=True)
class CollapseResult:
    q_c: float
    nu: float
    cost: float
    trace: np.ndarray = field(repr=False)  # rows of (q_c, nu, cost) over the grid


def _weights(stderr, n: int) -> np.ndarray:
    if stderr is None:
        return np.ones(n)
    se = np.asarray(stderr, dtype=float)
    if se.shape != (n,):
        raise ValueError("stderr must match the data length")
    if np.any(~np.isfinite(se)) or np.any(se <= 0):
        # a zero standard error would pin the fit to one point; fall back to equal weights
        return np.ones(n)
    return 1.0 / se**2


def _wls(X: np.ndarray, y: np.ndarray, w: np.ndarray):
    sw = np.sqrt(w)
    beta, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ beta
    return beta, resid, float(np.sum(w * resid**2))


def extrapolate_thermo(sizes, values, stderr=None) -> ThermoResult:
    """Fit ``S(L) = c / L + S_inf`` by weighted least squares."""
    L = np.asarray(sizes, dtype=float)
    s = np.asarray(values, dtype=float)
    if L.shape != s.shape or L.ndim != 1:
        raise ValueError("sizes and values must be 1-d and of equal length")
    if np.unique(L).size < 2:
        raise ValueError("need at least two distinct system sizes")
    w = _weights(stderr, L.size)
    X = np.column_stack([np.ones_like(L), 1.0 / L])
    beta, _, rss = _wls(X, s, w)
    xtwx_inv = np.linalg.inv(X.T @ (w[:, None] * X))
    if stderr is None:
        dof = L.size - 2
        cov = xtwx_inv * (rss / dof if dof > 0 else 0.0)
    else:
        cov = xtwx_inv
    return ThermoResult(
        s_inf=float(beta[0]),
        c=float(beta[1]),
        s_inf_stderr=float(np.sqrt(cov[0, 0])),
        c_stderr=float(np.sqrt(cov[1, 1])),
        rss=rss,
    )


def _power_profile(q, s, w, e):
    X = np.column_stack([q ** (-e), np.ones_like(q)])
    return _wls(X, s, w)


def power_profile_rss(q, values, e, stderr=None) -> float:
    """Residual sum of squares of ``a q**-e + b`` with ``a, b`` profiled out."""
    q = np.asarray(q, dtype=float)
    s = np.asarray(values, dtype=float)
    return _power_profile(q, s, _weights(stderr, q.size), e)[2]


def fit_scaling(q, values, model: FitModel | str, stderr=None, q_max: float | None = None,
                exponent_range: tuple[float, float] = (0.1, 0.6), n_grid: int = 51) -> FitResult:
    """Fit ``S(q)`` with one of the three scaling hypotheses.

    Points with ``q > q_max`` are dropped first.  For the free power law the
    decay exponent ``e`` is scanned on a grid, then refined by golden-section
    search on the profiled residual sum of squares; the reported exponent is
    the power of ``q``, i.e. ``-e``.
    """
    model = FitModel(model)
    q = np.asarray(q, dtype=float)
    s = np.asarray(values, dtype=float)
    if q.shape != s.shape or q.ndim != 1:
        raise ValueError("q and values must be 1-d and of equal length")
    if np.any(q <= 0):
        raise ValueError("reset rates must be positive")
    se = None if stderr is None else np.asarray(stderr, dtype=float)
    if q_max is not None:
        keep = q <= q_max
        q, s = q[keep], s[keep]
        se = None if se is None else se[keep]
    need = 4 if model is FitModel.POWER_FREE else 3
    if q.size < need:
        raise ValueError(f"{model.value} fit needs at least {need} points, got {q.size}")
    if np.unique(q).size < 2:
        raise ValueError("degenerate input: all reset rates are equal")
    w = _weights(se, q.size)

    if model is FitModel.LOG_LINEAR:
        X = np.column_stack([np.log(q), np.ones_like(q)])
        beta, resid, rss = _wls(X, s, w)
        return FitResult(model, float(beta[0]), float(beta[1]), None, rss, q, resid)

    if model is FitModel.POWER_FIXED_THIRD:
        e = 1.0 / 3.0
    else:
        lo, hi = exponent_range
        grid = np.linspace(lo, hi, n_grid)
        costs = np.array([_power_profile(q, s, w, g)[2] for g in grid])
        i = int(np.argmin(costs))
        f = lambda e_: _power_profile(q, s, w, e_)[2]  # noqa: E731
        if 0 < i < n_grid - 1 and costs[i] < costs[i - 1] and costs[i] < costs[i + 1]:
            res = optimize.minimize_scalar(f, bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                           method="golden", tol=1e-12)
        else:
            a_, b_ = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
            res = optimize.minimize_scalar(f, bounds=(a_, b_), method="bounded",
                                           options={"xatol": 1e-12})
        e = float(res.x)
    beta, resid, rss = _power_profile(q, s, w, e)
    return FitResult(model, float(beta[0]), float(beta[1]), -e, rss, q, resid)


# -- data collapse --


def _group_by_size(L, q, g):
    L = np.asarray(L, dtype=float)
    q = np.asarray(q, dtype=float)
    g = np.asarray(g, dtype=float)
    if not (L.shape == q.shape == g.shape) or L.ndim != 1:
        raise ValueError("L, q and g must be 1-d and of equal length")
    groups = []
    for size in np.unique(L):
        m = L == size
        order = np.argsort(q[m])
        groups.append((size, q[m][order], g[m][order]))
    return groups


def _lsq_spline_cost(x: np.ndarray, y: np.ndarray, n_knots: int) -> float:
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    k = 3
    while True:
        inner = np.quantile(x, np.linspace(0, 1, n_knots + 2)[1:-1]) if n_knots > 0 else np.array([])
        t = np.concatenate([[x[0]] * (k + 1), inner, [x[-1]] * (k + 1)])
        try:
            spl = interpolate.make_lsq_spline(x, y, t, k=k)
            break
        except (ValueError, np.linalg.LinAlgError):
            if n_knots == 0:
                raise
            n_knots -= 1
    return float(np.mean((y - spl(x)) ** 2))


def collapse_cost(groups, q_c: float, nu: float, n_knots: int) -> float:
    """Mean squared deviation of the rescaled cloud from one least-squares cubic spline."""
    xs, ys = [], []
    for size, qs, gs in groups:
        g_c = interpolate.PchipInterpolator(qs, gs)(q_c)
        xs.append((qs - q_c) * size ** (1.0 / nu))
        ys.append(gs - g_c)
    return _lsq_spline_cost(np.concatenate(xs), np.concatenate(ys), n_knots)


def data_collapse(L, q, g, qc_range: tuple[float, float], nu_range: tuple[float, float],
                  n_grid: int = 41, n_knots: int | None = None) -> CollapseResult:
    """Estimate ``(q_c, nu)`` from ``g(q, L) - g(q_c, L) = F((q - q_c) L**(1/nu))``.

    ``g(q_c, L)`` comes from monotone cubic interpolation of each size's curve.
    A grid scan over the two ranges is followed by Nelder-Mead refinement.
    """
    groups = _group_by_size(L, q, g)
    if len(groups) < 3:
        raise ValueError(f"need at least 3 system sizes, got {len(groups)}")
    for size, qs, _ in groups:
        if np.unique(qs).size < 5:
            raise ValueError(f"size L={size:g} has fewer than 5 distinct q values")
    lo_support = max(qs[0] for _, qs, _ in groups)
    hi_support = min(qs[-1] for _, qs, _ in groups)
    qlo, qhi = qc_range
    if not (lo_support <= qlo < qhi <= hi_support):
        raise ValueError(
            f"q_c range [{qlo}, {qhi}] must lie inside the common data support "
            f"[{lo_support}, {hi_support}]"
        )
    nlo, nhi = nu_range
    if not 0 < nlo < nhi:
        raise ValueError("nu range must be positive and increasing")
    if n_knots is None:
        n_knots = max(1, min(len(qs) for _, qs, _ in groups) - 2)

    qcs = np.linspace(qlo, qhi, n_grid)
    nus = np.linspace(nlo, nhi, n_grid)
    trace = np.array([(a, b, collapse_cost(groups, a, b, n_knots)) for a in qcs for b in nus])
    best = trace[np.argmin(trace[:, 2])]

    def f(p):
        a, b = p
        if not (qlo <= a <= qhi and nlo <= b <= nhi):
            return np.inf
        return collapse_cost(groups, a, b, n_knots)

    res = optimize.minimize(f, best[:2], method="Nelder-Mead",
                            options={"xatol": 1e-6, "fatol": 1e-14, "maxiter": 2000})
    if res.fun <= best[2]:
        q_c, nu, cost = float(res.x[0]), float(res.x[1]), float(res.fun)
    else:
        q_c, nu, cost = float(best[0]), float(best[1]), float(best[2])
    return CollapseResult(q_c=q_c, nu=nu, cost=cost, trace=trace)
