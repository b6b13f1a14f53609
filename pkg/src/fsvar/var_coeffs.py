"""Equation-by-equation draws of the VAR coefficients.

Conditional on the factor contribution, the system reduces to ``m``
unrelated heteroskedastic regressions

    y_jt - (X f_t)_j = z_t' b_j + eta_jt,    eta_jt ~ N(0, w_jt)

with independent ``N(0, tau_ij)`` priors on the coefficients.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import NumericalError, ParameterError
from .model import ChainState, Panel, lag_design

# largest condition number of a posterior precision we attempt to factor
MAX_CONDITION = 1e300


def _precision(y_hat, Z, idio_vars, prior_vars):
    idio_vars = np.asarray(idio_vars, float)
    prior_vars = np.asarray(prior_vars, float)
    if not (np.all(idio_vars > 0) and np.all(prior_vars > 0)):
        raise ParameterError("idiosyncratic and prior variances must be positive")
    w = 1.0 / idio_vars
    Zw = Z * w[:, None]
    prec = Zw.T @ Z
    prec[np.diag_indices_from(prec)] += 1.0 / prior_vars
    return prec, Zw.T @ np.asarray(y_hat, float)


def _factor(prec, j):
    try:
        return cho_factor(prec, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        with np.errstate(all="ignore"):
            cond = np.linalg.cond(prec) if np.all(np.isfinite(prec)) else np.inf
        raise NumericalError(
            f"equation {j}: posterior precision not factorable (condition number {cond:.3g})"
        ) from exc


def var_equation_posterior(y_hat, regressors, idio_vars, prior_vars, j=0):
    """Closed-form conditional mean and covariance of one equation."""
    prec, lin = _precision(y_hat, regressors, idio_vars, prior_vars)
    cf = _factor(prec, j)
    mean = cho_solve(cf, lin)
    cov = cho_solve(cf, np.eye(len(lin)))
    return mean, 0.5 * (cov + cov.T)


def sample_var_equation(j, y_hat, regressors, idio_vars, prior_vars, rng):
    """Draw ``b_j ~ N(V Z'W y_hat, V)`` with ``V = (Z'WZ + D^-1)^-1``."""
    prec, lin = _precision(y_hat, regressors, idio_vars, prior_vars)
    c, lower = _factor(prec, j)
    mean = cho_solve((c, lower), lin)
    L = np.tril(c)
    draw = mean + solve_triangular(L, rng.standard_normal(len(lin)), lower=True, trans="T")
    if not np.all(np.isfinite(draw)):
        raise NumericalError(f"equation {j}: non-finite coefficient draw")
    return draw


def factor_adjusted(Y, state: ChainState):
    """``y_t - X f_t`` on the effective sample."""
    return Y - state.factors @ state.loadings.T


def sweep_all_equations(state: ChainState, data, rng, order=None):
    """Redraw every equation; returns the new ``K x m`` coefficient matrix.

    ``data`` is a :class:`Panel` or a precomputed ``(Y, Z)`` design pair.
    ``rng`` is one generator shared by all equations, or a sequence with one
    generator per equation (the layout used for reproducible parallel runs).
    """
    if isinstance(data, Panel):
        Y, Z = lag_design(data.values, state.lags, data.exogenous, state.intercept)
    else:
        Y, Z = data
    target = factor_adjusted(Y, state)
    omega = state.idio_var
    coef = np.empty_like(state.coef)
    order = range(state.m) if order is None else order
    streams = rng if isinstance(rng, (list, tuple)) else None
    for j in order:
        stream = streams[j] if streams is not None else rng
        coef[:, j] = sample_var_equation(j, target[:, j], Z, omega[:, j], state.tau[:, j], stream)
    return coef
