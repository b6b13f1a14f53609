"""Latent factor path and loadings conditionals.

Given VAR residuals ``eps_t = X f_t + eta_t`` with ``f_t ~ N(0, H_t)`` and
``eta_t ~ N(0, Omega_t)`` (both diagonal):

* ``f_t | .`` is Gaussian with covariance ``(X' Omega_t^-1 X + H_t^-1)^-1``,
  independently over ``t``;
* each row of ``X`` is a heteroskedastic Bayesian regression of
  ``eps_jt`` on ``f_t``, where pinned entries (see
  :func:`fsvar.model.loading_pattern`) are held fixed and their contribution
  is subtracted before drawing the free ones.
"""

import numpy as np

from .errors import NumericalError
from .model import loading_pattern


def factor_posterior(residuals, loadings, factor_vars, idio_vars):
    """Per-period mean ``(n, q)`` and covariance ``(n, q, q)`` of ``f_t``."""
    E = np.asarray(residuals, float)
    X = np.asarray(loadings, float)
    H = np.asarray(factor_vars, float)
    W = 1.0 / np.asarray(idio_vars, float)
    prec = np.einsum("ji,tj,jk->tik", X, W, X)
    idx = np.arange(X.shape[1])
    prec[:, idx, idx] += 1.0 / H
    lin = (E * W) @ X
    cov = np.linalg.inv(prec)
    mean = np.einsum("tik,tk->ti", cov, lin)
    return mean, cov


def sample_factors(residuals, loadings, factor_vars, idio_vars, rng):
    """Draw the ``(n, q)`` factor path."""
    E = np.asarray(residuals, float)
    X = np.asarray(loadings, float)
    H = np.asarray(factor_vars, float)
    W = 1.0 / np.asarray(idio_vars, float)
    n, q = H.shape
    if q == 1:
        prec = (W * X[:, 0] ** 2).sum(axis=1) + 1.0 / H[:, 0]
        mean = (E * W) @ X[:, 0] / prec
        return (mean + rng.standard_normal(n) / np.sqrt(prec))[:, None]
    prec = np.einsum("ji,tj,jk->tik", X, W, X)
    idx = np.arange(q)
    prec[:, idx, idx] += 1.0 / H
    lin = (E * W) @ X
    try:
        L = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("factor posterior precision not positive definite") from exc
    # mean = prec^-1 lin ; draw = mean + L^-T z
    y = np.linalg.solve(L, lin[..., None])
    z = rng.standard_normal((n, q, 1))
    draw = np.linalg.solve(np.swapaxes(L, 1, 2), y + z)
    return draw[..., 0]


def loading_row_posterior(target, regressors, weights, prior_variance):
    """Mean and covariance of a Gaussian regression row with ``N(0, v I)`` prior."""
    Fw = regressors * weights[:, None]
    prec = Fw.T @ regressors + np.eye(regressors.shape[1]) / prior_variance
    cov = np.linalg.inv(prec)
    return cov @ (Fw.T @ target), cov


def sample_loadings(residuals, factors, idio_vars, prior_variance, rng):
    """Draw the ``(m, q)`` loading matrix with identification entries pinned."""
    E = np.asarray(residuals, float)
    F = np.asarray(factors, float)
    W = 1.0 / np.asarray(idio_vars, float)
    m = E.shape[1]
    q = F.shape[1]
    free, fixed = loading_pattern(m, q)
    X = fixed.copy()
    for j in range(m):
        cols = np.flatnonzero(free[j])
        if cols.size == 0:
            continue
        target = E[:, j] - F @ fixed[j]
        Fj = F[:, cols]
        Fw = Fj * W[:, j, None]
        prec = Fw.T @ Fj + np.eye(cols.size) / prior_variance
        lin = Fw.T @ target
        try:
            L = np.linalg.cholesky(prec)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"loading row {j}: precision not positive definite") from exc
        mean = np.linalg.solve(L.T, np.linalg.solve(L, lin))
        X[j, cols] = mean + np.linalg.solve(L.T, rng.standard_normal(cols.size))
    return X
