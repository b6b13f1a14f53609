"""Joint-distribution ("getting it right") validation of the Gibbs sampler.

Marginal-conditional simulator: independent prior draws of every parameter
and latent path.  Successive-conditional simulator: starting from a prior
draw, alternate "simulate data given parameters" and one Gibbs sweep.  If
every conditional is right, both produce the prior as the marginal of each
monitored scalar.  Marginals are compared by two-sample KS tests whose
p-values account for the autocorrelation of the successive-conditional chain.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import ks_two_sample
from .gibbs import Streams, gibbs_sweep
from .model import ModelSpec, SvPrior, lag_design
from .simulate import draw_prior_state, simulate_observations


def reduced_spec(lags=1) -> ModelSpec:
    """Small configuration used by the harness.

    Default shrinkage and loading priors; the SV priors are tightened
    (``mu ~ N(0, 1)``, ``xi ~ Gamma(1/2, rate 5)``) so that simulated data
    stay within a numerically comfortable range.
    """
    return ModelSpec(lags=lags, factors=1, sv_prior=SvPrior(mu_var=1.0, xi_rate=5.0))


def monitored(state):
    """Scalars tracked by the harness, one or more per Gibbs block."""
    mid = state.n // 2
    out = {
        "coef[0,0]": state.coef[0, 0],
        "coef[1,0]": state.coef[1, 0],
        "log_tau[0,0]": np.log(state.tau[0, 0]),
        "log_lambda_sq[1]": np.log(state.lambda_sq[0]),
        "loading[1]": state.loadings[1, 0],
        "loading[2]": state.loadings[2, 0],
        "factor[mid]": state.factors[mid, 0],
        "factor_mu": state.factor_sv[0, 0],
        "factor_phi": state.factor_sv[0, 1],
        "factor_log_xi": np.log(state.factor_sv[0, 2]),
        "factor_logvol[mid]": state.factor_logvol[mid, 0],
        "idio_mu[0]": state.idio_sv[0, 0],
        "idio_phi[0]": state.idio_sv[0, 1],
        "idio_log_xi[0]": np.log(state.idio_sv[0, 2]),
        "idio_logvol[0,mid]": state.idio_logvol[mid, 0],
    }
    if state.lags > 1:
        out[f"log_lambda_sq[{state.lags}]"] = np.log(state.lambda_sq[-1])
    return out


@dataclass
class GirReport:
    rows: list = field(default_factory=list)
    cycles: int = 0
    seconds: float = 0.0
    threshold: float = 0.01

    @property
    def min_p(self):
        return min((r["p_value"] for r in self.rows), default=1.0)

    @property
    def passed(self):
        return all(r["p_value"] > self.threshold for r in self.rows)

    def lines(self):
        out = []
        for r in self.rows:
            flag = "ok" if r["p_value"] > self.threshold else "FAIL"
            out.append(f"{r['name']:<22} D={r['ks_stat']:.4f} p={r['p_value']:.4g} "
                       f"ess={r['ess']:.0f} {flag}")
        return out


def getting_it_right(spec: ModelSpec = None, cycles=10_000, seed=0, m=3, T=40,
                     lambda_rate_scale=1.0, threshold=0.01) -> GirReport:
    """Run both simulators for ``cycles`` steps and KS-compare marginals."""
    spec = reduced_spec() if spec is None else spec
    report = GirReport(cycles=cycles, threshold=threshold)
    if cycles <= 0:
        return report
    started = time.perf_counter()
    P = spec.lags
    n = T - P
    prior_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    data_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2,)))
    streams = Streams(np.random.SeedSequence(seed, spawn_key=(3,)).generate_state(1)[0])

    prior_draws = [monitored(draw_prior_state(spec, m, n, prior_rng)) for _ in range(cycles)]

    state = draw_prior_state(spec, m, n, data_rng)
    initial = np.zeros((P, m))
    chain_draws = []
    for c in range(cycles):
        y = simulate_observations(state, initial, data_rng)
        Y, Z = lag_design(y, P, None, spec.include_intercept)
        state = gibbs_sweep(state, Y, Z, spec, streams, c, lambda_rate_scale=lambda_rate_scale)
        chain_draws.append(monitored(state))

    for name in prior_draws[0]:
        a = np.array([d[name] for d in prior_draws])
        b = np.array([d[name] for d in chain_draws])
        stat, p, ess = ks_two_sample(a, b)
        report.rows.append({"name": name, "ks_stat": stat, "p_value": p, "ess": ess,
                            "prior_mean": float(a.mean()), "chain_mean": float(b.mean())})
    report.seconds = time.perf_counter() - started
    return report
