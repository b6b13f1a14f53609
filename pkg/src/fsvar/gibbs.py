"""Block Gibbs sampler for the factor-SV Bayesian VAR.

Block order within one sweep:

1. VAR coefficients on the factor-adjusted data (equation by equation)
2. idiosyncratic log-volatility paths and their AR(1) parameters
3. factor path
4. loadings
5. factor log-volatility paths and parameters
6. local shrinkage scales ``tau``
7. global shrinkage scales (``delta`` increments, hence ``lambda^2``)

Every random draw comes from a stream keyed by ``(seed, sweep, block,
unit)``, so a chain is reproducible bit for bit whatever the thread count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError
from .factors import sample_factors, sample_loadings
from .model import (ChainState, ModelSpec, Panel, coef_groups, lag_design,
                    loading_pattern, spectral_radius)
from .shrinkage import TAU_FLOOR, sample_global_scales, sample_tau
from .stochvol import SvSeries, initial_series, update_sv
from .var_coeffs import sweep_all_equations

log = logging.getLogger(__name__)

BLOCKS = ("var", "idio_sv", "factors", "loadings", "factor_sv", "tau", "lambda")
_BLOCK_ID = {name: i for i, name in enumerate(BLOCKS)}

STATE_FIELDS = ("coef", "loadings", "factors", "factor_logvol", "factor_sv",
                "idio_logvol", "idio_sv", "tau", "delta")


class Streams:
    """Random generators keyed by work-unit identity."""

    def __init__(self, seed):
        self.seed = int(seed)

    def get(self, sweep, block, unit=0):
        ss = np.random.SeedSequence(self.seed, spawn_key=(sweep, _BLOCK_ID[block], unit))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class DrawStore:
    """Retained draws in columnar form: one stacked array per state field."""

    arrays: dict
    lags: int
    n_exog: int = 0
    intercept: bool = False
    names: tuple = ()
    kinds: tuple = ()
    countries: tuple = ()
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.arrays["delta"].shape[0]

    def __getitem__(self, key):
        return self.arrays[key]

    @property
    def m(self):
        return self.arrays["coef"].shape[2]

    @property
    def q(self):
        return self.arrays["loadings"].shape[2]

    @property
    def n(self):
        return self.arrays["idio_logvol"].shape[1]

    def state(self, i) -> ChainState:
        return ChainState(**{k: self.arrays[k][i] for k in STATE_FIELDS},
                          lags=self.lags, n_exog=self.n_exog, intercept=self.intercept)

    def states(self):
        for i in range(len(self)):
            yield self.state(i)

    @property
    def B(self):
        """Lag matrices, shape ``(draws, P, m, m)``."""
        D, m = len(self), self.m
        return (self.arrays["coef"][:, : m * self.lags]
                .reshape(D, self.lags, m, m).transpose(0, 1, 3, 2))

    @classmethod
    def from_states(cls, states, meta=None, names=(), kinds=(), countries=()):
        states = list(states)
        if not states:
            raise ValueError("no states")
        s0 = states[0]
        arrays = {k: np.stack([getattr(s, k) for s in states]) for k in STATE_FIELDS}
        return cls(arrays, s0.lags, s0.n_exog, s0.intercept, tuple(names), tuple(kinds),
                   tuple(countries), dict(meta or {}))


def _check(state, sweep, block):
    arrays = {
        "var": ("coef",), "idio_sv": ("idio_logvol", "idio_sv"), "factors": ("factors",),
        "loadings": ("loadings",), "factor_sv": ("factor_logvol", "factor_sv"),
        "tau": ("tau",), "lambda": ("delta",),
    }[block]
    for name in arrays:
        if not np.all(np.isfinite(getattr(state, name))):
            raise NumericalError(f"non-finite {name} after block '{block}' in sweep {sweep}")


def _sv_units(obs, logvol, params, prior, streams, exact, pool):
    def one(i):
        series = SvSeries(logvol[:, i], *params[i])
        new = update_sv(obs[:, i], series, prior, streams[i], exact=exact)
        return new.logvol_path, new.params
    units = range(obs.shape[1])
    results = list(pool.map(one, units)) if pool is not None else [one(i) for i in units]
    return (np.column_stack([r[0] for r in results]), np.vstack([r[1] for r in results]))


def gibbs_sweep(state: ChainState, Y, Z, spec: ModelSpec, streams: Streams, sweep: int,
                pool=None, lambda_rate_scale=1.0) -> ChainState:
    """One full pass over all seven blocks; returns the new state."""
    m, q = state.m, state.q
    groups = coef_groups(m, state.lags, state.n_exog, state.intercept)
    kappa = spec.kappa[groups]

    # 1. VAR coefficients
    eq_streams = [streams.get(sweep, "var", j) for j in range(m)]
    if pool is not None:
        def one_eq(j):
            return sweep_all_equations(state, (Y, Z), eq_streams, order=[j])[:, j]
        coef = np.column_stack(list(pool.map(one_eq, range(m))))
    else:
        coef = sweep_all_equations(state, (Y, Z), eq_streams)
    state = state.replace(coef=coef)
    _check(state, sweep, "var")

    # 2. idiosyncratic volatilities
    resid = Y - Z @ state.coef
    eta = resid - state.factors @ state.loadings.T
    idio_logvol, idio_sv = _sv_units(
        eta, state.idio_logvol, state.idio_sv, spec.sv_prior,
        [streams.get(sweep, "idio_sv", j) for j in range(m)], spec.exact_sv, pool)
    state = state.replace(idio_logvol=idio_logvol, idio_sv=idio_sv)
    _check(state, sweep, "idio_sv")

    # 3. factors
    F = sample_factors(resid, state.loadings, state.factor_var, state.idio_var,
                       streams.get(sweep, "factors"))
    state = state.replace(factors=F)
    _check(state, sweep, "factors")

    # 4. loadings
    X = sample_loadings(resid, F, state.idio_var, spec.loading_prior_variance,
                        streams.get(sweep, "loadings"))
    state = state.replace(loadings=X)
    _check(state, sweep, "loadings")

    # 5. factor volatilities
    factor_logvol, factor_sv = _sv_units(
        F, state.factor_logvol, state.factor_sv, spec.sv_prior,
        [streams.get(sweep, "factor_sv", i) for i in range(q)], spec.exact_sv, pool)
    state = state.replace(factor_logvol=factor_logvol, factor_sv=factor_sv)
    _check(state, sweep, "factor_sv")

    # 6. local scales
    lam = state.lambda_sq[groups]
    tau = sample_tau(state.coef, kappa[:, None], lam[:, None], streams.get(sweep, "tau"))
    state = state.replace(tau=np.asarray(tau).reshape(state.coef.shape))
    _check(state, sweep, "tau")

    # 7. global scales
    delta = sample_global_scales(state.tau, groups, spec.kappa, spec.lambda_prior,
                                 state.delta, streams.get(sweep, "lambda"),
                                 rate_scale=lambda_rate_scale)
    state = state.replace(delta=delta)
    _check(state, sweep, "lambda")
    return state


def initial_state(Y, Z, spec: ModelSpec, n_exog=0) -> ChainState:
    """Deterministic starting point.

    Ridge VAR (penalty 0.1), principal-component factor and loadings scaled to
    the identification pattern, smoothed log-squares for the volatilities,
    prior-mean global scales and local scales at their prior mean.
    """
    n, m = Y.shape
    q = spec.factors
    K = Z.shape[1]
    coef = np.linalg.solve(Z.T @ Z + 0.1 * np.eye(K), Z.T @ Y)
    resid = Y - Z @ coef
    free, fixed = loading_pattern(m, q)
    _, _, Vt = np.linalg.svd(resid, full_matrices=False)
    V = Vt[:q].T
    top = V[:q]
    if abs(np.linalg.det(top)) > 1e-8:
        X = V @ np.linalg.inv(top)
        X = np.where(free, X, fixed)
        F = resid @ V @ top.T
    else:
        X = fixed.copy()
        F = np.zeros((n, q))
    F = np.asarray(F).reshape(n, q)
    eta = resid - F @ X.T

    idio = [initial_series(eta[:, j]) for j in range(m)]
    fac = [initial_series(F[:, i]) for i in range(q)]
    delta = spec.lambda_prior[:, 0] / spec.lambda_prior[:, 1]
    groups = coef_groups(m, spec.lags, n_exog, spec.include_intercept)
    lam = np.cumprod(delta)[groups]
    tau = np.repeat((2.0 / lam)[:, None], m, axis=1)
    return ChainState(
        coef=coef, loadings=X, factors=F,
        factor_logvol=np.column_stack([s.logvol_path for s in fac]),
        factor_sv=np.vstack([s.params for s in fac]),
        idio_logvol=np.column_stack([s.logvol_path for s in idio]),
        idio_sv=np.vstack([s.params for s in idio]),
        tau=np.maximum(tau, TAU_FLOOR), delta=delta.copy(),
        lags=spec.lags, n_exog=n_exog, intercept=spec.include_intercept,
    )


def validate_panel(panel: Panel, spec: ModelSpec):
    if panel.T <= spec.lags + 10:
        raise DataError(f"need T > P + 10 observations (T={panel.T}, P={spec.lags})")
    if spec.factors > panel.m:
        raise DataError(f"{spec.factors} factors exceed {panel.m} series")


def run_chain(panel: Panel, spec: ModelSpec, seed=None, threads=1, init=None,
              progress_every=1000, lambda_rate_scale=1.0) -> DrawStore:
    """Run burn-in plus ``keep * thin`` sweeps and retain every ``thin``-th."""
    validate_panel(panel, spec)
    mc = spec.mcmc
    seed = mc.seed if seed is None else seed
    Y, Z = lag_design(panel.values, spec.lags, panel.exogenous, spec.include_intercept)
    state = init if init is not None else initial_state(Y, Z, spec, panel.n_exog)
    streams = Streams(seed)

    keep = mc.keep
    store = {k: np.empty((keep,) + np.shape(getattr(state, k))) for k in STATE_FIELDS}
    radius = np.empty(keep)
    pool = ThreadPoolExecutor(max_workers=threads) if threads and threads > 1 else None
    started = time.perf_counter()
    kept = 0
    try:
        for sweep in range(mc.sweeps):
            state = gibbs_sweep(state, Y, Z, spec, streams, sweep, pool, lambda_rate_scale)
            if sweep >= mc.burn_in and (sweep - mc.burn_in + 1) % mc.thin == 0:
                for k in STATE_FIELDS:
                    store[k][kept] = getattr(state, k)
                radius[kept] = spectral_radius(state)
                kept += 1
            if progress_every and (sweep + 1) % progress_every == 0:
                log.info("sweep %d/%d", sweep + 1, mc.sweeps)
    finally:
        if pool is not None:
            pool.shutdown()
    meta = {
        "seed": int(seed), "burn_in": mc.burn_in, "keep": keep, "thin": mc.thin,
        "spectral_radius": radius, "unstable_draws": int(np.sum(radius >= 1)),
        "wall_time": time.perf_counter() - started,
    }
    return DrawStore(store, spec.lags, panel.n_exog, spec.include_intercept,
                     panel.names, panel.kinds, panel.countries, meta)
