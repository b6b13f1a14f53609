"""Normal-Gamma global-local shrinkage: GIG and Gamma conditionals.

Parameterisation used throughout the sampler::

    beta_ip | tau_ip      ~ N(0, tau_ip)
    tau_ip  | lambda_p^2  ~ Gamma(kappa_p, rate=kappa_p * lambda_p^2 / 2)
    lambda_p^2 = delta_1 * ... * delta_p,   delta_j ~ Gamma(c_j, rate=d_j)

so that ``tau | beta ~ GIG(kappa - 1/2, beta^2, kappa * lambda^2)`` and the
marginal prior variance of ``beta`` is ``2 / lambda^2``.

GIG densities are written ``f(x) ~ x^(p-1) exp(-(a x + b / x) / 2)``.  The
general case uses the Hormann & Leydold (2014) generators (ratio of uniforms
with or without mode shift, and the three-piece hat for the non-log-concave
region), vectorised as batched rejection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError

# squared coefficients below this are treated as exactly zero
BETA_SQ_FLOOR = 1e-300
# smallest local scale handed back to the coefficient sampler
TAU_FLOOR = 1e-250
# below this omega (and for order >= 2) GIG draws use the Gamma limit
GAMMA_LIMIT_OMEGA = 1e-6


@dataclass(frozen=True)
class GigParams:
    order: float
    chi: float
    psi: float

    def __post_init__(self):
        _check_gig(np.asarray(self.order), np.asarray(self.chi), np.asarray(self.psi))


def _check_gig(p, b, a):
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ParameterError("GIG parameters must be finite")
    ok = ((a > 0) & (b > 0)) | ((a > 0) & (b == 0) & (p > 0)) | ((a == 0) & (b > 0) & (p < 0))
    if not np.all(ok):
        raise ParameterError("invalid GIG parameters: need a, b > 0, or b = 0 with p > 0, "
                             "or a = 0 with p < 0")


def _mode(lam, omega):
    # mode of x^(lam-1) exp(-omega/2 (x + 1/x)), written to avoid cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = (np.sqrt((lam - 1) ** 2 + omega**2) + (lam - 1)) / omega
        lower = omega / (np.sqrt((1 - lam) ** 2 + omega**2) + (1 - lam))
    return np.where(lam >= 1, upper, lower)


def _rou_noshift(lam, omega, rng):
    t = 0.5 * (lam - 1)
    s = 0.25 * omega
    xm = _mode(lam, omega)
    nc = t * np.log(xm) - s * (xm + 1 / xm)
    ym = ((lam + 1) + np.sqrt((lam + 1) ** 2 + omega**2)) / omega
    um = np.exp(0.5 * (lam + 1) * np.log(ym) - s * (ym + 1 / ym) - nc)
    out = np.empty_like(lam)
    todo = np.arange(lam.size)
    while todo.size:
        u = um[todo] * rng.random(todo.size)
        v = rng.random(todo.size)
        x = u / v
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = np.log(v) <= t[todo] * np.log(x) - s[todo] * (x + 1 / x) - nc[todo]
        ok &= x > 0
        out[todo[ok]] = x[ok]
        todo = todo[~ok]
    return out


def _rou_shift(lam, omega, rng):
    t = 0.5 * (lam - 1)
    s = 0.25 * omega
    xm = _mode(lam, omega)
    nc = t * np.log(xm) - s * (xm + 1 / xm)
    # extremes of (x - xm) sqrt(f(x)) are roots of a cubic
    a = -(2 * (lam + 1) / omega + xm)
    b = 2 * (lam - 1) * xm / omega - 1
    c = xm
    p = b - a * a / 3
    q = 2 * a**3 / 27 - a * b / 3 + c
    fi = np.arccos(np.clip(-q / (2 * np.sqrt(-(p**3) / 27)), -1.0, 1.0))
    fak = 2 * np.sqrt(-p / 3)
    y1 = fak * np.cos(fi / 3) - a / 3
    y2 = fak * np.cos(fi / 3 + 4 / 3 * np.pi) - a / 3
    uplus = (y1 - xm) * np.exp(t * np.log(y1) - s * (y1 + 1 / y1) - nc)
    uminus = (y2 - xm) * np.exp(t * np.log(y2) - s * (y2 + 1 / y2) - nc)
    out = np.empty_like(lam)
    todo = np.arange(lam.size)
    while todo.size:
        lo, hi = uminus[todo], uplus[todo]
        u = lo + rng.random(todo.size) * (hi - lo)
        v = rng.random(todo.size)
        x = u / v + xm[todo]
        pos = x > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = pos & (np.log(v) <= t[todo] * np.log(x) - s[todo] * (x + 1 / x) - nc[todo])
        out[todo[ok]] = x[ok]
        todo = todo[~ok]
    return out


def _three_piece(lam, omega, rng):
    # 0 <= lam < 1, small omega: constant hat near zero, power hat in the
    # middle, exponential tail
    xm = _mode(lam, omega)
    x0 = omega / (1 - lam)
    k0 = np.exp((lam - 1) * np.log(xm) - 0.5 * omega * (xm + 1 / xm))
    A0 = k0 * x0
    wide = x0 >= 2 / omega
    zero_lam = lam == 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        k1 = np.where(wide, 0.0, np.exp(-omega))
        A1_pow = k1 / lam * ((2 / omega) ** lam - x0**lam)
        A1_log = k1 * (np.log(2.0) - 2 * np.log(omega))
        A1 = np.where(wide, 0.0, np.where(zero_lam, A1_log, A1_pow))
        k2 = np.where(wide, x0 ** (lam - 1), (2 / omega) ** (lam - 1))
        A2 = np.where(wide, k2 * 2 * np.exp(-omega * x0 / 2) / omega, k2 * 2 * np.exp(-1.0) / omega)
    tail_start = np.maximum(x0, 2 / omega)
    total = A0 + A1 + A2
    if not np.all(np.isfinite(total) & (total > 0)):
        raise NumericalError("GIG three-piece hat is not finite for these parameters")
    out = np.empty_like(lam)
    todo = np.arange(lam.size)
    while todo.size:
        L, W = lam[todo], omega[todo]
        v = total[todo] * rng.random(todo.size)
        x = np.empty(todo.size)
        hx = np.empty(todo.size)
        r0 = v <= A0[todo]
        r1 = ~r0 & (v <= A0[todo] + A1[todo])
        r2 = ~(r0 | r1)
        x[r0] = x0[todo][r0] * v[r0] / A0[todo][r0]
        hx[r0] = k0[todo][r0]
        if np.any(r1):
            v1 = v[r1] - A0[todo][r1]
            L1, kk1, xx0, W1 = L[r1], k1[todo][r1], x0[todo][r1], W[r1]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                x_pow = (xx0**L1 + L1 / kk1 * v1) ** (1 / L1)
                x_log = W1 * np.exp(np.exp(W1) * v1)
            x1 = np.where(L1 == 0, x_log, x_pow)
            x[r1] = x1
            hx[r1] = kk1 * x1 ** (L1 - 1)
        if np.any(r2):
            v2 = v[r2] - A0[todo][r2] - A1[todo][r2]
            W2, kk2 = W[r2], k2[todo][r2]
            with np.errstate(divide="ignore", invalid="ignore"):
                x2 = -2 / W2 * np.log(np.exp(-W2 / 2 * tail_start[todo][r2]) - W2 / (2 * kk2) * v2)
            x[r2] = x2
            hx[r2] = kk2 * np.exp(-W2 / 2 * x2)
        u = rng.random(todo.size) * hx
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (x > 0) & np.isfinite(x) & (np.log(u) <= (L - 1) * np.log(x) - W / 2 * (x + 1 / x))
        out[todo[ok]] = x[ok]
        todo = todo[~ok]
    return out


def _standard_gig(lam, omega, rng):
    """Draws from ``x^(lam-1) exp(-omega/2 (x + 1/x))`` with ``lam >= 0``."""
    out = np.empty_like(lam)
    # for lam >= 2 and vanishing omega the 1/x term is negligible (total
    # variation to the Gamma limit is at most omega^2 / (4 (lam - 1))), while
    # the mode-shift construction overflows
    limit = (lam >= 2) & (omega < GAMMA_LIMIT_OMEGA)
    if np.any(limit):
        out[limit] = rng.gamma(lam[limit], 2.0 / omega[limit])
    shift = ~limit & ((lam > 2) | (omega > 3))
    noshift = ~limit & ~shift & ((lam >= 1 - 2.25 * omega**2) | (omega > 0.2))
    rest = ~(limit | shift | noshift)
    for mask, algo in ((shift, _rou_shift), (noshift, _rou_noshift), (rest, _three_piece)):
        if np.any(mask):
            out[mask] = algo(lam[mask], omega[mask], rng)
    return out


def gig_rvs(p, a, b, rng, size=None):
    """Vectorised GIG draws; ``p``, ``a`` (psi) and ``b`` (chi) broadcast.

    Exact special cases: ``b = 0`` is ``Gamma(p, rate=a/2)``, ``a = 0`` is an
    inverse Gamma, ``p = -1/2`` is an inverse Gaussian.
    """
    p, a, b = np.broadcast_arrays(np.asarray(p, float), np.asarray(a, float), np.asarray(b, float))
    if size is not None:
        shape = (size,) if np.isscalar(size) else tuple(size)
        p, a, b = (np.broadcast_to(v, shape) for v in (p, a, b))
    shape = p.shape
    p, a, b = p.ravel(), a.ravel(), b.ravel()
    _check_gig(p, b, a)
    out = np.empty(p.size)

    gamma = b == 0
    invgamma = a == 0
    wald = ~gamma & ~invgamma & (p == -0.5)
    general = ~(gamma | invgamma | wald)
    if np.any(gamma):
        out[gamma] = rng.gamma(p[gamma], 2.0 / a[gamma])
    if np.any(invgamma):
        out[invgamma] = 1.0 / rng.gamma(-p[invgamma], 2.0 / b[invgamma])
    if np.any(wald):
        out[wald] = rng.wald(np.sqrt(b[wald] / a[wald]), b[wald])
    if np.any(general):
        pg, ag, bg = p[general], a[general], b[general]
        omega = np.sqrt(ag) * np.sqrt(bg)
        alpha = np.sqrt(bg) / np.sqrt(ag)
        lam = np.abs(pg)
        x = _standard_gig(lam, omega, rng)
        out[general] = np.where(pg < 0, alpha / x, alpha * x)
    return out.reshape(shape)


def sample_gig(params: GigParams, rng) -> float:
    return float(gig_rvs(params.order, params.psi, params.chi, rng))


def gig_log_density(x, p, a, b):
    """Unnormalised log density; handy for oracles and diagnostics."""
    x = np.asarray(x, float)
    return (p - 1) * np.log(x) - 0.5 * (a * x + b / x)


def sample_tau(beta, kappa_p, lambda_sq_p, rng):
    """Local scale draw(s) ``GIG(kappa - 1/2, beta^2, kappa * lambda^2)``.

    Accepts arrays.  Squared coefficients below ``BETA_SQ_FLOOR`` take the
    exact Gamma limit when ``kappa > 1/2``; for ``kappa <= 1/2`` that limit is
    improper, so ``beta^2`` is floored instead.  Results are floored at
    ``TAU_FLOOR`` so that prior precisions stay finite.
    """
    beta = np.asarray(beta, float)
    kappa_p = np.asarray(kappa_p, float)
    lambda_sq_p = np.asarray(lambda_sq_p, float)
    if np.any(kappa_p <= 0) or np.any(lambda_sq_p <= 0):
        raise ParameterError("kappa and lambda^2 must be positive")
    order = kappa_p - 0.5
    b2 = beta**2
    tiny = b2 < BETA_SQ_FLOOR
    b2 = np.where(tiny & (order > 0), 0.0, np.where(tiny, BETA_SQ_FLOOR, b2))
    draws = gig_rvs(order, kappa_p * lambda_sq_p, b2, rng)
    draws = np.maximum(draws, TAU_FLOOR)
    return float(draws) if draws.ndim == 0 else draws


def sample_tau_prior(kappa_p, lambda_sq_p, rng, size=None):
    """Prior draw ``tau ~ Gamma(kappa, rate=kappa * lambda^2 / 2)``.

    With ``beta | tau ~ N(0, tau)`` this gives ``Var(beta) = 2 / lambda^2``.
    """
    kappa_p = np.asarray(kappa_p, float)
    rate = kappa_p * np.asarray(lambda_sq_p, float) / 2
    return np.maximum(rng.gamma(kappa_p, 1.0 / rate, size=size), TAU_FLOOR)


def lambda_sq_conditional(p, taus, prior, kappa_p, lower_lambdas=()):
    """Shape and rate of the lag-``p`` global-scale Gamma conditional.

    ``p`` is 1-based.  ``lower_lambdas`` are the increments ``delta_z`` of the
    lower lags (their product is ``lambda_{p-1}^2``); the returned Gamma is the
    conditional of ``delta_p`` given only lag ``p``'s local scales, which is the
    exact full conditional whenever ``p`` is the highest lag.
    """
    taus = np.asarray(taus, float)
    if np.any(taus <= 0):
        raise ParameterError("local scales must be positive")
    c, d = prior
    k = taus.size
    below = float(np.prod(lower_lambdas)) if p > 1 else 1.0
    return c + kappa_p * k, d + kappa_p * below * taus.sum() / 2


def sample_lambda_sq(p, taus, prior, kappa_p, lower_lambdas, rng, rate_scale=1.0):
    """Draw ``lambda_p^2 = delta_p * prod(lower_lambdas)`` from the single-lag
    conditional of :func:`lambda_sq_conditional`."""
    shape, rate = lambda_sq_conditional(p, taus, prior, kappa_p, lower_lambdas)
    delta = rng.gamma(shape, 1.0 / (rate * rate_scale))
    below = float(np.prod(lower_lambdas)) if p > 1 else 1.0
    return delta * below


def delta_conditional(p, tau_sums, counts, kappa, prior, delta):
    """Exact Gamma full conditional of the increment ``delta_p`` (1-based ``p``).

    ``delta_p`` enters ``lambda_l^2`` for every ``l >= p``, so all higher lags
    contribute to shape and rate.
    """
    P = len(delta)
    c, d = prior[p - 1]
    shape, rate = c, d
    for lag in range(p, P + 1):
        rest = np.prod(delta[:lag]) / delta[p - 1]
        shape += kappa[lag - 1] * counts[lag - 1]
        rate += kappa[lag - 1] * rest * tau_sums[lag - 1] / 2
    return shape, rate


def sample_global_scales(tau, groups, kappa, prior, delta, rng, rate_scale=1.0):
    """Sequentially redraw every ``delta_p``; returns the new increments.

    ``rate_scale`` multiplies each Gamma rate.  It exists only so the
    validation harness can run a deliberately broken sampler.
    """
    tau = np.asarray(tau, float)
    if np.any(tau <= 0):
        raise ParameterError("local scales must be positive")
    P = len(delta)
    groups = np.asarray(groups)
    flat_groups = np.broadcast_to(groups[:, None], tau.shape) if tau.ndim == 2 else groups
    tau_sums = np.array([tau[flat_groups == g].sum() for g in range(P)])
    counts = np.array([np.count_nonzero(flat_groups == g) for g in range(P)])
    delta = np.array(delta, float)
    for p in range(1, P + 1):
        shape, rate = delta_conditional(p, tau_sums, counts, kappa, prior, delta)
        delta[p - 1] = rng.gamma(shape, 1.0 / (rate * rate_scale))
    return delta
