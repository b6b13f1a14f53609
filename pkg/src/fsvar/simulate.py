"""Synthetic data and prior draws for the factor-SV VAR."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .model import (ChainState, ModelSpec, Panel, coef_groups, loading_pattern,
                    n_coefficients, spectral_radius)
from .shrinkage import sample_tau_prior
from .stochvol import draw_sv_prior, simulate_logvol


def draw_prior_state(spec: ModelSpec, m, n, rng, n_exog=0) -> ChainState:
    """Every parameter and latent path drawn from the prior."""
    q, P = spec.factors, spec.lags
    intercept = spec.include_intercept
    K = n_coefficients(m, P, n_exog, intercept)
    groups = coef_groups(m, P, n_exog, intercept)
    delta = rng.gamma(spec.lambda_prior[:, 0], 1.0 / spec.lambda_prior[:, 1])
    lam = np.cumprod(delta)[groups]
    kappa = spec.kappa[groups]
    tau = sample_tau_prior(np.repeat(kappa[:, None], m, 1), np.repeat(lam[:, None], m, 1), rng)
    coef = np.sqrt(tau) * rng.standard_normal((K, m))
    free, fixed = loading_pattern(m, q)
    X = np.where(free, np.sqrt(spec.loading_prior_variance) * rng.standard_normal((m, q)), fixed)

    def sv_block(count):
        params = np.array([draw_sv_prior(spec.sv_prior, rng) for _ in range(count)])
        paths = np.column_stack([simulate_logvol(n, *params[i], rng) for i in range(count)])
        return paths, params

    factor_logvol, factor_sv = sv_block(q)
    idio_logvol, idio_sv = sv_block(m)
    F = np.exp(0.5 * factor_logvol) * rng.standard_normal((n, q))
    return ChainState(coef=coef, loadings=X, factors=F, factor_logvol=factor_logvol,
                      factor_sv=factor_sv, idio_logvol=idio_logvol, idio_sv=idio_sv,
                      tau=tau, delta=delta, lags=P, n_exog=n_exog, intercept=intercept)


def simulate_observations(state: ChainState, initial, rng, exogenous=None):
    """Draw ``y`` on the effective sample given every latent quantity.

    ``initial`` holds the first ``P`` rows, used as fixed initial conditions.
    Returns the full ``(P + n) x m`` array.
    """
    P, m, n = state.lags, state.m, state.n
    y = np.empty((P + n, m))
    y[:P] = initial
    B = state.B
    C = state.exog_coef
    c = state.intercept_coef
    eta = np.exp(0.5 * state.idio_logvol) * rng.standard_normal((n, m))
    shocks = state.factors @ state.loadings.T + eta
    for r in range(n):
        t = P + r
        mean = c.copy()
        for p in range(P):
            mean += B[p] @ y[t - p - 1]
        if state.n_exog:
            mean += C @ exogenous[t]
        y[t] = mean + shocks[r]
    return y


def simulate_panel(spec: ModelSpec, truth: ChainState, T, rng, exogenous=None, warmup=100,
                   use_truth_paths=False, names=None, kinds=None, countries=None):
    """Generate a synthetic panel forward from ``truth``'s parameters.

    Volatility paths are simulated from the truth's ``(mu, phi, xi)``, or,
    with ``use_truth_paths``, taken from ``truth`` on the effective sample
    ``t = P..T-1`` (earlier periods sit at the process means).  The recursion
    starts from zeros and the first ``warmup`` steps are discarded.

    Returns ``(panel, truth)`` where the returned truth carries the latent
    paths actually used on the effective sample.
    """
    P, m, q = truth.lags, truth.m, truth.q
    if P != spec.lags or q != spec.factors:
        raise ParameterError("truth and spec disagree on lags or factors")
    if spectral_radius(truth) >= 1:
        raise ParameterError("truth VAR is not stable (companion spectral radius >= 1)")
    if truth.invariant_violations():
        raise ParameterError("truth violates state invariants: " + "; ".join(truth.invariant_violations()))
    n = T - P
    total = warmup + T
    if truth.n_exog:
        if exogenous is None:
            raise ParameterError("truth has exogenous coefficients but no exogenous data given")
        exogenous = np.asarray(exogenous, float).reshape(T, -1)
        exo_full = np.vstack([np.zeros((warmup, exogenous.shape[1])), exogenous])
    else:
        exo_full = None

    def paths(params, given):
        out = np.empty((total, params.shape[0]))
        for i, (mu, phi, xi) in enumerate(params):
            if use_truth_paths:
                out[:, i] = mu
                out[warmup + P:, i] = given[:, i]
            else:
                out[:, i] = simulate_logvol(total, mu, phi, xi, rng)
        return out

    hf = paths(truth.factor_sv, truth.factor_logvol)
    hw = paths(truth.idio_sv, truth.idio_logvol)
    F = np.exp(0.5 * hf) * rng.standard_normal((total, q))
    eta = np.exp(0.5 * hw) * rng.standard_normal((total, m))
    shocks = F @ truth.loadings.T + eta
    B = truth.B
    C = truth.exog_coef
    c = truth.intercept_coef
    y = np.zeros((total, m))
    for t in range(total):
        mean = c.copy()
        for p in range(P):
            if t - p - 1 >= 0:
                mean += B[p] @ y[t - p - 1]
        if exo_full is not None:
            mean += C @ exo_full[t]
        y[t] = mean + shocks[t]
    keep = slice(warmup, None)
    eff = slice(warmup + P, None)
    new_truth = truth.replace(factors=F[eff], factor_logvol=hf[eff], idio_logvol=hw[eff])
    panel = Panel(y[keep], names or tuple(f"y{j}" for j in range(m)),
                  countries=countries or (), kinds=kinds or (), exogenous=exogenous)
    assert new_truth.n == n
    return panel, new_truth


def make_truth(spec: ModelSpec, B, loadings, factor_sv, idio_sv, n, exog_coef=None,
               intercept=None, factor_logvol=None, idio_logvol=None) -> ChainState:
    """Assemble a truth :class:`ChainState` from readable pieces.

    ``B`` is ``(P, m, m)``; ``factor_sv`` / ``idio_sv`` are ``(mu, phi, xi)``
    rows.  Shrinkage scales are set to placeholder ones.
    """
    B = np.asarray(B, float)
    P, m, _ = B.shape
    blocks = [B[p].T for p in range(P)]
    n_exog = 0
    if exog_coef is not None:
        exog_coef = np.asarray(exog_coef, float).reshape(m, -1)
        n_exog = exog_coef.shape[1]
        blocks.append(exog_coef.T)
    if intercept is not None:
        blocks.append(np.asarray(intercept, float).reshape(1, m))
    coef = np.vstack(blocks)
    X = np.asarray(loadings, float).reshape(m, -1)
    q = X.shape[1]
    factor_sv = np.asarray(factor_sv, float).reshape(q, 3)
    idio_sv = np.asarray(idio_sv, float).reshape(m, 3)
    if factor_logvol is None:
        factor_logvol = np.tile(factor_sv[:, 0], (n, 1))
    if idio_logvol is None:
        idio_logvol = np.tile(idio_sv[:, 0], (n, 1))
    return ChainState(coef=coef, loadings=X, factors=np.zeros((n, q)),
                      factor_logvol=np.asarray(factor_logvol, float).reshape(n, q),
                      factor_sv=factor_sv,
                      idio_logvol=np.asarray(idio_logvol, float).reshape(n, m), idio_sv=idio_sv,
                      tau=np.ones_like(coef), delta=np.ones(P), lags=P, n_exog=n_exog,
                      intercept=intercept is not None)


def desk_truth(spec: ModelSpec, T=400) -> ChainState:
    """Reference truth for the six-variable, two-lag, one-factor recovery study."""
    m = 6
    B1 = 0.5 * np.eye(m) + 0.1 * np.eye(m, k=1)
    B2 = 0.1 * np.eye(m)
    X = np.array([1.0, 0.8, -0.6, 0.5, 1.2, 0.3])
    factor_sv = [0.0, 0.95, 0.1]
    idio_sv = [[-1.0, 0.9, 0.1], [-1.2, 0.9, 0.1], [-0.8, 0.85, 0.15],
               [-1.0, 0.95, 0.05], [-1.5, 0.9, 0.1], [-1.0, 0.8, 0.2]]
    return make_truth(spec, np.stack([B1, B2]), X[:, None], factor_sv, idio_sv, T - spec.lags)


def stable_prior_truth(spec: ModelSpec, m, n, rng, max_tries=1000) -> ChainState:
    """A prior draw whose VAR part is stable, by rejection."""
    for _ in range(max_tries):
        state = draw_prior_state(spec, m, n, rng)
        if spectral_radius(state) < 1:
            return state
    raise ParameterError(f"no stable prior draw in {max_tries} tries; tighten the shrinkage prior")
