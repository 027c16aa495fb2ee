"""Closed-form estimators: pooled means, shifted-mean posteriors, OLS, ridge and GLS.

Linear systems are solved through Cholesky / least-squares factorizations.
Explicit inverses only appear in the dense reference paths that exist for
cross-checking (``GlsCovariance.dense``, ``DenseSigmaInverse.dense``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DegeneratePathError, EmptyInputError, NumericalError, ParameterError, ShapeError, SingularDesignError
from .models import MeanDataset, MeanModelParams, RegModelParams

__all__ = [
    "PosteriorWeights",
    "GlsComponents",
    "GlsCovariance",
    "WoodburySigmaInverse",
    "DenseSigmaInverse",
    "DENSE_MAX_N",
    "empirical_mean",
    "kappa_weighted_pooled_mean",
    "posterior_weights_mean",
    "conjugate_mean_weights",
    "posterior_mean_shifted",
    "joint_gaussian_conditional",
    "ols",
    "ridge_posterior",
    "gls_covariance",
    "woodbury_sigma_inverse",
    "sigma_inverse",
    "gls_estimate",
    "gls_posterior_mean",
    "gls_components",
    "reg_posterior_via_M_m",
    "whitened_sq_norm",
]

# Above this many rows the structured (Woodbury) path is used by default.
DENSE_MAX_N = 512

SINGULAR_RTOL = 1e-10


# -- mean estimation -------------------------------------------------------


def empirical_mean(rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise ShapeError(f"expected a k x d matrix, got shape {rows.shape}")
    if rows.shape[0] == 0:
        raise EmptyInputError("empirical mean of zero rows")
    return rows.mean(axis=0)


def kappa_weighted_pooled_mean(ds: MeanDataset, kappa: float) -> np.ndarray:
    """Pool of the two empirical means with public rows counted as ``m / kappa``."""
    if not kappa >= 1:
        raise ParameterError(f"kappa must be >= 1, got {kappa}")
    n, m = ds.n, ds.m
    if n + m == 0:
        raise EmptyInputError("no rows to pool")
    if m == 0:
        return empirical_mean(ds.x_priv)
    if n == 0:
        return empirical_mean(ds.x_pub)
    m_eff = m / kappa
    pool = n + m_eff
    return empirical_mean(ds.x_pub) * (m_eff / pool) + empirical_mean(ds.x_priv) * (n / pool)


@dataclass(frozen=True)
class PosteriorWeights:
    w_priv: float
    w_pub: float


def posterior_weights_mean(params: MeanModelParams) -> PosteriorWeights:
    """Weights of the two empirical means in ``E[mu_priv | X]``.

    Refuses when either source is empty; use :func:`conjugate_mean_weights`
    for the single-source conjugate posterior.
    """
    n, m, d = params.n, params.m, params.d
    if n < 1 or m < 1:
        raise DegeneratePathError(f"posterior weights need n, m >= 1 (got n={n}, m={m})")
    s2 = params.prior_sigma2
    t = params.tau**2 / d
    denom = s2 * (t + 1 / m + 1 / n) + t / n + 1 / (m * n)
    return PosteriorWeights(w_priv=s2 * (t + 1 / m) / denom, w_pub=(s2 / n) / denom)


def conjugate_mean_weights(params: MeanModelParams) -> PosteriorWeights:
    """Posterior weights for any (n, m), falling back to one source when the other is empty."""
    if params.n >= 1 and params.m >= 1:
        return posterior_weights_mean(params)
    s2 = params.prior_sigma2
    if params.m == 0:
        return PosteriorWeights(w_priv=s2 / (s2 + 1 / params.n), w_pub=0.0)
    # public-only: the public mean sees mu_priv through v and sampling noise
    var = params.tau**2 / params.d + 1 / params.m
    return PosteriorWeights(w_priv=0.0, w_pub=s2 / (s2 + var))


def posterior_mean_shifted(ds: MeanDataset, params: MeanModelParams) -> np.ndarray:
    w = posterior_weights_mean(params)
    return w.w_priv * empirical_mean(ds.x_priv) + w.w_pub * empirical_mean(ds.x_pub)


def joint_gaussian_conditional(params: MeanModelParams, mu_bar_pub, mu_bar_priv) -> np.ndarray:
    """``E[mu_priv | mu_bar_pub, mu_bar_priv]`` by dense block-Gaussian conditioning.

    Builds the 3d x 3d joint covariance of ``(mu_priv, mu_bar_pub, mu_bar_priv)``
    and solves against its lower-right 2d x 2d block.  Deliberately does not
    reuse :func:`posterior_weights_mean`; it is the reference it is checked against.
    """
    d, n, m = params.d, params.n, params.m
    if n < 1 or m < 1:
        raise DegeneratePathError("joint conditioning needs both sample means")
    mu_bar_pub = np.asarray(mu_bar_pub, dtype=float)
    mu_bar_priv = np.asarray(mu_bar_priv, dtype=float)
    if mu_bar_pub.shape != (d,) or mu_bar_priv.shape != (d,):
        raise ShapeError("sample means must have length d")
    s2 = params.prior_sigma2
    eye = np.eye(d)
    cov = np.block(
        [
            [s2 * eye, s2 * eye, s2 * eye],
            [s2 * eye, (s2 + params.tau**2 / d + 1 / m) * eye, s2 * eye],
            [s2 * eye, s2 * eye, (s2 + 1 / n) * eye],
        ]
    )
    s12 = cov[:d, d:]
    s22 = cov[d:, d:]
    try:
        coef = la.solve(s22, np.concatenate([mu_bar_pub, mu_bar_priv]), assume_a="pos")
    except la.LinAlgError as exc:
        raise NumericalError("joint covariance block is not positive definite") from exc
    return s12 @ coef


# -- least squares ---------------------------------------------------------


def _check_xy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ShapeError(f"incompatible design {x.shape} and response {y.shape}")
    return x, y


def _require_nonsingular(normal: np.ndarray, n_rows: int, what: str):
    if normal.shape[0] == 0:
        return
    lam_min = np.linalg.eigvalsh(normal)[0]
    if not lam_min > SINGULAR_RTOL * max(n_rows, 1):
        raise SingularDesignError(f"{what}: min eigenvalue {lam_min:.3g} <= {SINGULAR_RTOL:g} * {n_rows}")


def ols(x, y) -> np.ndarray:
    x, y = _check_xy(x, y)
    n_rows, d = x.shape
    if n_rows < d:
        raise SingularDesignError(f"ols needs N >= d, got N={n_rows}, d={d}")
    _require_nonsingular(x.T @ x, n_rows, "ols")
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    return beta


def ridge_posterior(x, y, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Posterior precision ``a X'X + b I`` and mean ``a * precision^{-1} X'y``."""
    if not (a > 0 and b > 0):
        raise ParameterError(f"a and b must be positive, got a={a}, b={b}")
    x, y = _check_xy(x, y)
    precision = a * (x.T @ x) + b * np.eye(x.shape[1])
    mean = a * la.cho_solve(la.cho_factor(precision), x.T @ y)
    return precision, mean


# -- shifted regression: noise covariance ----------------------------------


@dataclass(frozen=True, eq=False)
class GlsCovariance:
    """``Sigma = sigma2 I_N + (tau^2/d) P P'`` with P nonzero only on public rows.

    Held as its structured pieces; :meth:`apply` never forms the N x N matrix.
    """

    x_pub: np.ndarray
    tau: float
    sigma2: float
    n_priv: int

    @property
    def N(self) -> int:
        return self.n_priv + self.x_pub.shape[0]

    @property
    def d(self) -> int:
        return self.x_pub.shape[1]

    @property
    def shift_scale(self) -> float:
        return self.tau**2 / self.d

    def apply(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = self.sigma2 * z
        if self.tau > 0 and self.x_pub.shape[0]:
            zp = z[self.n_priv :]
            out[self.n_priv :] += self.shift_scale * (self.x_pub @ (self.x_pub.T @ zp))
        return out

    def dense(self) -> np.ndarray:
        sigma = self.sigma2 * np.eye(self.N)
        n = self.n_priv
        sigma[n:, n:] += self.shift_scale * (self.x_pub @ self.x_pub.T)
        return sigma


def gls_covariance(x_pub, tau: float, sigma2: float, n_priv: int) -> GlsCovariance:
    x_pub = np.asarray(x_pub, dtype=float)
    if x_pub.ndim != 2:
        raise ShapeError(f"x_pub must be m x d, got shape {x_pub.shape}")
    if tau < 0 or sigma2 <= 0 or n_priv < 0:
        raise ParameterError("need tau >= 0, sigma2 > 0, n_priv >= 0")
    return GlsCovariance(x_pub=x_pub, tau=float(tau), sigma2=float(sigma2), n_priv=int(n_priv))


class WoodburySigmaInverse:
    """Applies ``Sigma^{-1} = I/sigma2 - U W U' / sigma2^2`` without forming Sigma.

    ``U`` is the public design padded with zeros on private rows,
    ``S = X_pub' X_pub`` and ``W = (d/tau^2 I + S/sigma2)^{-1}``.  At
    ``tau = 0`` the correction vanishes and ``Sigma^{-1} = I/sigma2``.
    Cost per vector is O(N d + d^2) after an O(m d^2 + d^3) setup.
    """

    def __init__(self, cov: GlsCovariance):
        self.cov = cov
        self.sigma2 = cov.sigma2
        self.n_priv = cov.n_priv
        self.x_pub = cov.x_pub
        d = cov.d
        self.S = self.x_pub.T @ self.x_pub
        self._chol = None
        if cov.tau > 0 and self.x_pub.shape[0]:
            inner = (d / cov.tau**2) * np.eye(d) + self.S / self.sigma2
            try:
                self._chol = la.cho_factor(inner)
            except la.LinAlgError as exc:
                raise NumericalError("Woodbury inner matrix is not positive definite") from exc

    @property
    def N(self) -> int:
        return self.cov.N

    @property
    def W(self) -> np.ndarray:
        d = self.cov.d
        if self._chol is None:
            return np.zeros((d, d))
        return la.cho_solve(self._chol, np.eye(d))

    def apply_W(self, u) -> np.ndarray:
        if self._chol is None:
            return np.zeros_like(np.asarray(u, dtype=float))
        return la.cho_solve(self._chol, u)

    def apply_public(self, z_pub) -> np.ndarray:
        """``Sigma_pub^{-1} z_pub`` for the m x m public block."""
        z_pub = np.asarray(z_pub, dtype=float)
        out = z_pub / self.sigma2
        if self._chol is not None:
            out = out - self.x_pub @ self.apply_W(self.x_pub.T @ z_pub) / self.sigma2**2
        return out

    def apply(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape[0] != self.N:
            raise ShapeError(f"vector of length {z.shape[0]} applied to Sigma^-1 of size {self.N}")
        out = z / self.sigma2
        if self._chol is not None:
            n = self.n_priv
            out[n:] = self.apply_public(z[n:])
        return out

    def dense(self) -> np.ndarray:
        return self.apply(np.eye(self.N))


class DenseSigmaInverse:
    """Cholesky of the dense N x N Sigma; same interface as the Woodbury path."""

    def __init__(self, cov: GlsCovariance):
        self.cov = cov
        self.sigma2 = cov.sigma2
        self.n_priv = cov.n_priv
        self.x_pub = cov.x_pub
        try:
            self._chol = la.cho_factor(cov.dense())
        except la.LinAlgError as exc:
            raise NumericalError("Sigma is not positive definite") from exc

    @property
    def N(self) -> int:
        return self.cov.N

    def apply(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape[0] != self.N:
            raise ShapeError(f"vector of length {z.shape[0]} applied to Sigma^-1 of size {self.N}")
        return la.cho_solve(self._chol, z)

    def apply_public(self, z_pub) -> np.ndarray:
        z = np.zeros(self.N if np.ndim(z_pub) == 1 else (self.N,) + np.shape(z_pub)[1:])
        z[self.n_priv :] = z_pub
        return self.apply(z)[self.n_priv :]

    def dense(self) -> np.ndarray:
        return la.cho_solve(self._chol, np.eye(self.N))


def woodbury_sigma_inverse(x_pub, tau: float, sigma2: float, n_priv: int) -> WoodburySigmaInverse:
    return WoodburySigmaInverse(gls_covariance(x_pub, tau, sigma2, n_priv))


def sigma_inverse(x_pub, tau: float, sigma2: float, n_priv: int, method: str = "auto"):
    """Pick the dense path for N <= ``DENSE_MAX_N``, Woodbury otherwise."""
    cov = gls_covariance(x_pub, tau, sigma2, n_priv)
    if method == "auto":
        method = "dense" if cov.N <= DENSE_MAX_N else "woodbury"
    if method == "dense":
        return DenseSigmaInverse(cov)
    if method == "woodbury":
        return WoodburySigmaInverse(cov)
    raise ParameterError(f"unknown method {method!r}")


def whitened_sq_norm(sigma_inv, r) -> float:
    """``||Sigma^{-1/2} r||^2 = r' Sigma^{-1} r``."""
    r = np.asarray(r, dtype=float)
    return float(r @ sigma_inv.apply(r))


# -- GLS estimators --------------------------------------------------------


def _gls_normal(x, y, sigma_inv):
    x, y = _check_xy(x, y)
    if x.shape[0] != sigma_inv.N:
        raise ShapeError(f"design has {x.shape[0]} rows but Sigma is {sigma_inv.N} x {sigma_inv.N}")
    sx = sigma_inv.apply(x)
    return x.T @ sx, sx.T @ y


def gls_estimate(x, y, sigma_inv) -> np.ndarray:
    """``(X' Sigma^{-1} X)^{-1} X' Sigma^{-1} y``."""
    normal, rhs = _gls_normal(x, y, sigma_inv)
    _require_nonsingular(normal, sigma_inv.N, "gls")
    return la.cho_solve(la.cho_factor(normal), rhs)


def gls_posterior_mean(x, y, sigma_inv, b: float) -> np.ndarray:
    """Posterior mean of beta_priv under the prior ``N(0, I/b)``."""
    if not b > 0:
        raise ParameterError(f"prior precision must be positive, got {b}")
    normal, rhs = _gls_normal(x, y, sigma_inv)
    return la.cho_solve(la.cho_factor(normal + b * np.eye(normal.shape[0])), rhs)


@dataclass(frozen=True, eq=False)
class GlsComponents:
    """Pieces of the posterior written without Sigma^{-1}.

    ``S = X_pub' X_pub``, ``W = (d/tau^2 I + S/sigma2)^{-1}``,
    ``M = X'X/sigma2 - S W S/sigma2^2`` and
    ``m_vec = X'y/sigma2 - S W X_pub' y_pub/sigma2^2``.
    """

    S: np.ndarray
    W: np.ndarray
    M: np.ndarray
    m_vec: np.ndarray


def gls_components(x, y, params: RegModelParams) -> GlsComponents:
    x, y = _check_xy(x, y)
    n, d, s2, tau = params.n, params.d, params.noise_sigma2, params.tau
    if x.shape != (params.N, d):
        raise ShapeError(f"design shape {x.shape} does not match (N, d) = ({params.N}, {d})")
    x_pub, y_pub = x[n:], y[n:]
    S = x_pub.T @ x_pub
    if tau > 0 and params.m > 0:
        try:
            chol = la.cho_factor((d / tau**2) * np.eye(d) + S / s2)
        except la.LinAlgError as exc:
            raise NumericalError("inner matrix d/tau^2 I + S/sigma2 is not positive definite") from exc
        W = la.cho_solve(chol, np.eye(d))
    else:
        W = np.zeros((d, d))
    SW = S @ W
    M = x.T @ x / s2 - SW @ S / s2**2
    M = 0.5 * (M + M.T)
    m_vec = x.T @ y / s2 - SW @ (x_pub.T @ y_pub) / s2**2
    return GlsComponents(S=S, W=W, M=M, m_vec=m_vec)


def reg_posterior_via_M_m(x, y, params: RegModelParams) -> np.ndarray:
    """``(M + b I)^{-1} m_vec``; agrees with :func:`gls_posterior_mean`."""
    comp = gls_components(x, y, params)
    precision = comp.M + params.prior_precision_b * np.eye(params.d)
    try:
        return la.cho_solve(la.cho_factor(precision), comp.m_vec)
    except la.LinAlgError as exc:
        raise NumericalError("M + bI is not positive definite") from exc
