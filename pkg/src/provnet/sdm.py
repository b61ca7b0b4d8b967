"""Spatial Durbin model by concentrated maximum likelihood.

    y = rho W y + a + X beta + W X theta + eps,   eps ~ N(0, sigma2 I)

With ``Z = [1 | X | WX]`` the coefficients and variance are profiled out,
leaving a scalar search over rho:

    L(rho) = -n/2 (log 2pi + 1) - n/2 log sigma2(rho) + log|I - rho W|

where ``sigma2(rho)`` is the mean squared residual of regressing
``(I - rho W) y`` on ``Z``. Because that regression is linear in rho, the
residual is ``e0 - rho eL`` with ``e0``, ``eL`` the residuals of ``y`` and
``Wy`` on ``Z``, so each evaluation costs O(n) plus the log-determinant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu
from scipy.stats import chi2, norm
from scipy.stats import t as student_t

from . import _brent
from .autocorr import global_moran_test
from .errors import (
    BoundaryRho,
    DimensionMismatch,
    NameClash,
    NumericalFailure,
    RankDeficient,
    SingularFilter,
    ZeroVariance,
)
from .ingest import AttributeTable
from .weights import SpatialWeights, spatial_lag

__all__ = [
    "DesignMatrix",
    "LogDet",
    "SdmFit",
    "OlsFit",
    "LmTestResult",
    "ModelComparison",
    "build_design",
    "log_det_spatial_filter",
    "fit_ols",
    "fit_sdm",
    "fit_spatial_lag",
    "concentrated_loglik",
    "lm_residual_test",
    "model_compare",
    "significant_tokens",
]

RHO_BOUNDS = (-0.999, 0.999)
LU_THRESHOLD = 2000
_LOG2PI = np.log(2 * np.pi)
# residual variance below this fraction of var(y) counts as an exact fit
_EXACT_FIT = 1e-20


@dataclass(frozen=True)
class DesignMatrix:
    """``Z = [1 | X | WX]`` (or ``[1 | X]`` without lags) with column names."""

    Z: np.ndarray
    names: tuple
    x_names: tuple
    lagged: bool = True

    @property
    def p(self) -> int:
        return len(self.x_names)

    @property
    def n(self) -> int:
        return self.Z.shape[0]


def _as_matrix(X, names):
    if isinstance(X, AttributeTable):
        names = X.names if names is None else list(names)
        return X.matrix(names), tuple(names)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    return X, tuple(names)


def build_design(X, W: SpatialWeights, names=None, lagged: bool = True) -> DesignMatrix:
    """Assemble ``[1 | X | WX]``; lag columns are named ``W_<name>``."""
    X, names = _as_matrix(X, names)
    n, p = X.shape
    if p < 1:
        raise ValueError("need at least one covariate")
    if len(names) != p:
        raise DimensionMismatch(f"{len(names)} names for {p} columns")
    if n != W.n:
        raise DimensionMismatch(f"X has {n} rows, W has {W.n}")
    cols = ["const", *names]
    blocks = [np.ones((n, 1)), X]
    if lagged:
        cols += [f"W_{c}" for c in names]
        blocks.append(spatial_lag(W, X))
    if len(set(cols)) != len(cols):
        dupes = sorted({c for c in cols if cols.count(c) > 1})
        raise NameClash("duplicate column names: " + ", ".join(dupes))
    return DesignMatrix(np.hstack(blocks), tuple(cols), names, lagged)


def _check_rank(Z, names):
    _, s, vt = np.linalg.svd(Z, full_matrices=False)
    tol = s.max() * max(Z.shape) * np.finfo(float).eps
    null = vt[s <= tol]
    if null.size:
        involved = np.abs(null).max(axis=0) > 1e-8
        raise RankDeficient([nm for nm, hit in zip(names, involved) if hit])


def _perm_parity(perm):
    perm = np.asarray(perm)
    seen = np.zeros(perm.size, dtype=bool)
    parity = 0
    for start in range(perm.size):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return -1.0 if parity else 1.0


class LogDet:
    """``log|det(I - rho W)|`` for one weights matrix.

    ``method="eig"`` computes the complex spectrum of W once and sums
    ``log|1 - rho lambda|``; ``method="lu"`` factorizes the sparse filter
    at every call. ``"auto"`` picks eig up to n = 2000.
    """

    def __init__(self, W: SpatialWeights, method: str = "auto"):
        if method == "auto":
            method = "eig" if W.n <= LU_THRESHOLD else "lu"
        if method not in ("eig", "lu"):
            raise ValueError(f"unknown log-determinant method {method!r}")
        self.method = method
        self.W = W
        self.n = W.n
        if method == "eig":
            lam = np.linalg.eigvals(W.dense())
            self.eigenvalues = lam
            self._real = np.abs(lam.imag) <= 1e-10 * np.maximum(1.0, np.abs(lam))

    def __call__(self, rho: float) -> float:
        return self._eig(rho) if self.method == "eig" else self._lu(rho)

    def _eig(self, rho):
        terms = 1.0 - rho * self.eigenvalues
        mags = np.abs(terms)
        # conjugate pairs multiply to |.|^2 > 0; only real factors carry sign
        if (mags == 0).any() or (terms.real[self._real] < 0).sum() % 2:
            raise SingularFilter(f"det(I - rho W) <= 0 at rho={rho}")
        return float(np.log(mags).sum())

    def _lu(self, rho):
        A = (sparse.identity(self.n, format="csc") - rho * self.W.sparse).tocsc()
        try:
            lu = splu(A)
        except RuntimeError as exc:
            raise SingularFilter(f"I - rho W is singular at rho={rho}") from exc
        d = lu.U.diagonal()
        if (d == 0).any():
            raise SingularFilter(f"I - rho W is singular at rho={rho}")
        sign = np.prod(np.sign(d)) * _perm_parity(lu.perm_r) * _perm_parity(lu.perm_c)
        if sign <= 0:
            raise SingularFilter(f"det(I - rho W) <= 0 at rho={rho}")
        return float(np.log(np.abs(d)).sum())


def log_det_spatial_filter(W: SpatialWeights, rho: float, method: str = "eig") -> float:
    """``log|det(I - rho W)|``. Build a :class:`LogDet` once when evaluating many rho."""
    return LogDet(W, method)(rho)


@dataclass(frozen=True)
class OlsFit:
    names: tuple
    coefficients: np.ndarray
    se: np.ndarray
    p_values: np.ndarray
    sigma2: float
    loglik: float
    aic: float
    residuals: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.residuals.size

    @property
    def k(self):
        """Estimated parameters, including sigma2."""
        return self.coefficients.size + 1


def _gaussian_loglik(n, sigma2):
    return -0.5 * n * (_LOG2PI + 1.0 + np.log(sigma2))


def _variance_floor(y):
    return _EXACT_FIT * max(float(np.var(y)), np.finfo(float).tiny)


def fit_ols(y, Z, names=None) -> OlsFit:
    """Least squares with ML variance (divisor n) for the likelihood and
    t-based two-sided p-values (divisor n - k for the standard errors)."""
    if isinstance(Z, DesignMatrix):
        names = Z.names
        Z = Z.Z
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    y = np.asarray(y, dtype=float)
    n, kz = Z.shape
    if names is None:
        names = tuple(f"z{j}" for j in range(kz))
    if y.shape != (n,):
        raise DimensionMismatch(f"y has shape {y.shape}, design has {n} rows")
    if n <= kz:
        raise DimensionMismatch(f"need more observations ({n}) than columns ({kz})")
    _check_rank(Z, names)
    coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
    resid = y - Z @ coef
    rss = float(resid @ resid)
    sigma2 = max(rss / n, _variance_floor(y))
    loglik = float(_gaussian_loglik(n, sigma2))
    s2 = rss / (n - kz)
    cov = s2 * np.linalg.inv(Z.T @ Z)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(se > 0, coef / se, np.inf * np.sign(coef))
    p = 2 * student_t.sf(np.abs(tstat), n - kz)
    aic = 2 * (kz + 1) - 2 * loglik
    return OlsFit(tuple(names), coef, se, p, sigma2, loglik, aic, resid, y)


class _Profile:
    """Concentrated likelihood of the spatial-lag regression of y on Z."""

    def __init__(self, y, Z, W: SpatialWeights, logdet: LogDet):
        self.n = y.size
        self.y = y
        self.Z = Z
        self.Wy = spatial_lag(W, y)
        both, *_ = np.linalg.lstsq(Z, np.column_stack([y, self.Wy]), rcond=None)
        self.d0, self.dL = both[:, 0], both[:, 1]
        self.e0 = y - Z @ self.d0
        self.eL = self.Wy - Z @ self.dL
        self.floor = _variance_floor(y)
        self.logdet = logdet

    def sigma2(self, rho):
        r = self.e0 - rho * self.eL
        return max(float(r @ r) / self.n, self.floor)

    def __call__(self, rho):
        return float(_gaussian_loglik(self.n, self.sigma2(rho))) + self.logdet(rho)

    def coefficients(self, rho):
        return self.d0 - rho * self.dL


def concentrated_loglik(y, design: DesignMatrix, W: SpatialWeights, rho, logdet: LogDet | None = None):
    """Concentrated log-likelihood at ``rho`` (scalar or array)."""
    prof = _Profile(np.asarray(y, dtype=float), design.Z, W, logdet or LogDet(W))
    if np.ndim(rho) == 0:
        return prof(float(rho))
    return np.array([prof(float(r)) for r in np.ravel(rho)])


def _full_loglik(params, y, Wy, Z, logdet):
    rho, delta, s = params[0], params[1:-1], params[-1]
    r = y - rho * Wy - Z @ delta
    n = y.size
    return -0.5 * n * _LOG2PI - 0.5 * n * s - float(r @ r) / (2.0 * np.exp(s)) + logdet(rho)


def _numerical_hessian(f, x):
    x = np.asarray(x, dtype=float)
    m = x.size
    h = 1e-5 * np.maximum(1.0, np.abs(x))
    H = np.empty((m, m))
    f0 = f(x)
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(m)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
    return H


@dataclass(frozen=True)
class SdmFit:
    """Result of :func:`fit_sdm`.

    ``names`` labels ``coefficients``/``se``/``p_values`` (intercept, X,
    then WX). ``p_rho`` comes from the likelihood-ratio test against
    rho = 0; ``rho_se`` from the numerical Hessian.
    """

    rho: float
    rho_se: float
    p_rho: float
    lr_rho: float
    names: tuple
    x_names: tuple
    coefficients: np.ndarray
    se: np.ndarray
    p_values: np.ndarray
    sigma2: float
    loglik: float
    loglik_rho0: float
    aic: float
    residuals: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    convergence: dict = field(default_factory=dict)
    lagged: bool = True

    @property
    def n(self):
        return self.residuals.size

    @property
    def p(self):
        return len(self.x_names)

    @property
    def intercept(self) -> float:
        return float(self.coefficients[0])

    @property
    def beta(self) -> np.ndarray:
        return self.coefficients[1:1 + self.p]

    @property
    def theta(self) -> np.ndarray:
        if not self.lagged:
            return np.empty(0)
        return self.coefficients[1 + self.p:1 + 2 * self.p]

    @property
    def n_params(self) -> int:
        """Intercept, betas, thetas, rho and sigma2."""
        return self.coefficients.size + 2

    def coefficient_table(self) -> list:
        """Rows ``(name, estimate, se, p)`` with rho first."""
        rows = [("rho", self.rho, self.rho_se, self.p_rho)]
        rows += list(zip(self.names, self.coefficients.tolist(), self.se.tolist(), self.p_values.tolist()))
        return rows

    def direct_significant(self, alpha=0.05) -> list:
        return significant_tokens(self.x_names, self.beta, self.p_values[1:1 + self.p], alpha)

    def indirect_significant(self, alpha=0.05) -> list:
        return significant_tokens(self.x_names, self.theta, self.p_values[1 + self.p:1 + 2 * self.p], alpha)


def significant_tokens(names, estimates, p_values, alpha=0.05) -> list:
    """Sign-suffixed names (``living+``, ``health-``) of coefficients with
    ``p < alpha``, sorted alphabetically."""
    out = [f"{nm}{'+' if est > 0 else '-'}" for nm, est, p in zip(names, estimates, p_values) if p < alpha]
    return sorted(out)


def _fit_ml(y, design: DesignMatrix, W: SpatialWeights, bounds=RHO_BOUNDS, xtol=1e-8,
            logdet: LogDet | str = "auto") -> SdmFit:
    y = np.asarray(y, dtype=float)
    n = y.size
    if y.shape != (n,) or n != W.n or design.n != n:
        raise DimensionMismatch("y, design and W disagree on n")
    if not np.all(np.isfinite(y)):
        raise NumericalFailure("y contains non-finite values")
    if np.std(y) <= 1e-13 * np.abs(y).max():
        raise ZeroVariance("y")
    Z = design.Z
    if n <= Z.shape[1] + 2:
        raise DimensionMismatch(f"n={n} is too small for {Z.shape[1] + 2} parameters")
    _check_rank(Z, design.names)
    if not isinstance(logdet, LogDet):
        logdet = LogDet(W, logdet)
    prof = _Profile(y, Z, W, logdet)

    lo, hi = bounds
    # 201-point grid that contains rho = 0 exactly
    grid = np.concatenate([np.linspace(lo, 0.0, 101), np.linspace(0.0, hi, 101)[1:]])
    values = np.array([prof(r) for r in grid])
    if not np.isfinite(values).any():
        raise NumericalFailure("log-likelihood is non-finite on the whole rho grid")
    values[~np.isfinite(values)] = -np.inf
    j = int(np.argmax(values))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    res = _brent.maximize(prof, a, b, xtol=xtol)
    rho, ll = float(grid[j]), float(values[j])
    if res.fx > ll:
        rho, ll = res.x, res.fx
    if not np.isfinite(ll):
        raise NumericalFailure(f"non-finite log-likelihood at rho={rho}")
    if min(rho - lo, hi - rho) < 10 * xtol:
        raise BoundaryRho(rho, bounds)

    delta = prof.coefficients(rho)
    sigma2 = prof.sigma2(rho)
    resid = y - rho * prof.Wy - Z @ delta
    ll0 = prof(0.0)
    lr = max(0.0, 2.0 * (ll - ll0))
    p_rho = float(chi2.sf(lr, 1))

    params = np.concatenate([[rho], delta, [np.log(sigma2)]])
    H = _numerical_hessian(lambda t: _full_loglik(t, y, prof.Wy, Z, logdet), params)
    info = -H
    pinv_used = False
    try:
        np.linalg.cholesky(info)
        if np.linalg.cond(info) > 1e13:
            raise np.linalg.LinAlgError
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info)
        pinv_used = True
    var = np.diag(cov)
    if not np.all(np.isfinite(var)):
        raise NumericalFailure("non-finite coefficient covariance")
    se_all = np.sqrt(np.clip(var, 0.0, None))
    se = se_all[1:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        zstat = np.where(se > 0, delta / se, np.inf * np.sign(delta))
    pvals = 2 * norm.sf(np.abs(zstat))

    k = delta.size + 2
    convergence = {
        "iterations": res.iterations,
        "bracket_width": res.width,
        "brent_converged": res.converged,
        "grid_rho": float(grid[j]),
        "pinv_used": pinv_used,
        "logdet_method": logdet.method,
    }
    return SdmFit(rho, float(se_all[0]), p_rho, lr, design.names, design.x_names, delta, se, pvals,
                  sigma2, ll, ll0, 2 * k - 2 * ll, resid, y, convergence, design.lagged)


def fit_sdm(y, X, W: SpatialWeights, names=None, bounds=RHO_BOUNDS, xtol=1e-8, logdet="auto") -> SdmFit:
    """Fit the spatial Durbin model ``y = rho W y + a + X beta + W X theta + eps``.

    rho is found by a 201-point grid over ``bounds`` followed by Brent
    refinement to a bracket of ``xtol``. Coefficient standard errors come
    from a central-difference Hessian of the full log-likelihood in
    ``(rho, coefficients, log sigma2)``; rho's p-value from the
    likelihood-ratio test against rho = 0 with the same regressors.

    Raises
    ------
    BoundaryRho
        The maximum sits on the edge of ``bounds``.
    RankDeficient
        ``[1 | X | WX]`` lacks full column rank.
    """
    design = build_design(X, W, names, lagged=True)
    return _fit_ml(y, design, W, bounds, xtol, logdet)


def fit_spatial_lag(y, X, W: SpatialWeights, names=None, bounds=RHO_BOUNDS, xtol=1e-8, logdet="auto") -> SdmFit:
    """Same estimator without the ``WX`` block (spatial lag model)."""
    design = build_design(X, W, names, lagged=False)
    return _fit_ml(y, design, W, bounds, xtol, logdet)


@dataclass(frozen=True)
class LmTestResult:
    statistic: float
    p_value: float
    method: str
    nsim: int
    seed: int


def lm_residual_test(fit: SdmFit, W: SpatialWeights, nsim: int = 999, seed: int = 0) -> LmTestResult:
    """Residual spatial autocorrelation check: permutation Moran test on the
    SDM residuals. A large p means no remaining spatial structure."""
    res = global_moran_test(fit.residuals, W, nsim=nsim, seed=seed)
    return LmTestResult(res.I, res.p_value, "moran-permutation-residuals", res.nsim, res.seed)


@dataclass(frozen=True)
class ModelComparison:
    delta_aic: float
    lr: float
    preferred: str
    aic_sdm: float
    aic_ols: float


def model_compare(sdm: SdmFit, ols: OlsFit) -> ModelComparison:
    """``delta_aic = aic_ols - aic_sdm``; the lower AIC wins, ties go to OLS."""
    if sdm.n != ols.n:
        raise DimensionMismatch(f"SDM fitted on n={sdm.n}, OLS on n={ols.n}")
    if not np.array_equal(sdm.y, ols.y):
        raise DimensionMismatch("models were fitted on different y")
    preferred = "SDM" if sdm.aic < ols.aic else "OLS"
    return ModelComparison(ols.aic - sdm.aic, 2.0 * (sdm.loglik - ols.loglik), preferred, sdm.aic, ols.aic)
