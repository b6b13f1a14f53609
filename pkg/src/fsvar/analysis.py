"""Posterior summaries of a draw store.

* factor volatility path ``h_1t`` per draw,
* impulse responses to a one-time factor impulse, scaled per draw,
* shares of innovation variance explained by the factors.

Quantiles use numpy's default linear interpolation (type 7), so the median of
``1..100`` is ``50.5``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .model import companion_matrix

QUANTILES = (0.05, 0.16, 0.5, 0.84, 0.95)
# a mean equity loading smaller than this cannot carry the scaling rule
MIN_EQUITY_LOADING = 1e-10


def summarize(draws, grid=QUANTILES):
    """Quantiles over the leading (draw) axis; shape ``(len(grid), ...)``."""
    draws = np.asarray(draws, float)
    if draws.ndim == 0 or draws.shape[0] == 0:
        raise DataError("cannot summarise an empty draw set")
    return np.quantile(draws, np.asarray(grid, float), axis=0)


def factor_volatility_path(store, factor=0):
    """Factor variance ``h_t`` per draw, shape ``(draws, n)``."""
    return np.exp(store["factor_logvol"][:, :, factor])


@dataclass
class IrfResult:
    responses: np.ndarray          # (kept draws, horizon + 1, m)
    scales: np.ndarray             # shock size per kept draw
    kept: np.ndarray               # indices into the store
    excluded: int = 0
    rule: str = "equity"


def _response_paths(B, impact, horizon):
    """Propagate impact vectors through the companion form.

    ``B`` is ``(D, P, m, m)``, ``impact`` is ``(D, m)``; returns
    ``(D, horizon + 1, m)``.
    """
    D, P, m, _ = B.shape
    comps = np.stack([companion_matrix(B[d]) for d in range(D)]) if D else np.zeros((0, m * P, m * P))
    z = np.zeros((D, m * P))
    z[:, :m] = impact
    out = np.empty((D, horizon + 1, m))
    out[:, 0] = impact
    for h in range(1, horizon + 1):
        z = np.einsum("dij,dj->di", comps, z)
        out[:, h] = z[:, :m]
    return out


def impulse_response(store, horizon, shock_scale="equity", equity=None, target=-10.0,
                     factor=0, ref_time=-1):
    """Responses of every variable to an impulse in one factor.

    ``shock_scale`` rules:

    ``"equity"``
        per draw, the impulse ``s`` solves ``mean(X[equity, factor] * s) = target``
        (default ``-10``: a ten percent average fall when equity series are
        100 x log levels).  Draws with a vanishing mean equity loading are
        excluded and counted.
    ``"one_sd"``
        ``s = sqrt(h_{ref_time})`` of the draw.
    ``"unit"`` or a number
        a fixed impulse.
    """
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    X = store["loadings"][:, :, factor]
    D = X.shape[0]
    if isinstance(shock_scale, str) and shock_scale == "equity":
        if equity is None or len(equity) == 0:
            raise ConfigError("the equity scaling rule needs at least one equity variable")
        mean_load = X[:, list(equity)].mean(axis=1)
        kept = np.flatnonzero(np.abs(mean_load) > MIN_EQUITY_LOADING)
        scales = target / mean_load[kept]
    elif isinstance(shock_scale, str) and shock_scale == "one_sd":
        kept = np.arange(D)
        scales = np.sqrt(np.exp(store["factor_logvol"][:, ref_time, factor]))
    elif isinstance(shock_scale, str) and shock_scale == "unit":
        kept = np.arange(D)
        scales = np.ones(D)
    elif isinstance(shock_scale, (int, float)):
        kept = np.arange(D)
        scales = np.full(D, float(shock_scale))
    else:
        raise ConfigError(f"unknown shock scale rule {shock_scale!r}")
    impact = X[kept] * scales[:, None]
    responses = _response_paths(store.B[kept], impact, horizon)
    rule = shock_scale if isinstance(shock_scale, str) else "fixed"
    return IrfResult(responses, scales, kept, D - kept.size, rule)


def variance_shares(store, horizon=1, factors=None):
    """Share of forecast-error variance explained by the factors.

    ``horizon=1`` gives the innovation decomposition
    ``sum_i X_ji^2 h_it / (sum_i X_ji^2 h_it + w_jt)``.  Larger horizons are
    an extension that accumulates the moving-average weights of the VAR with
    ``Sigma_t`` held at its period-``t`` value.  Returns ``(draws, n, m)``.
    """
    X = store["loadings"]
    h = np.exp(store["factor_logvol"])
    w = np.exp(store["idio_logvol"])
    if factors is not None:
        X = X[:, :, list(factors)]
        h = h[:, :, list(factors)]
    if horizon == 1:
        num = np.einsum("djq,dtq->dtj", X**2, h)
        return num / (num + w)
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    B = store.B
    D, P, m, _ = B.shape
    psi = np.zeros((D, horizon, m, m))
    for d in range(D):
        comp = companion_matrix(B[d])
        power = np.eye(m * P)
        for k in range(horizon):
            psi[d, k] = power[:m, :m]
            power = comp @ power
    load_acc = np.einsum("dkjl,dlq->dkjq", psi, X)
    num = np.einsum("djq,dtq->dtj", (load_acc**2).sum(axis=1), h)
    idio = np.einsum("djl,dtl->dtj", (psi**2).sum(axis=1), w)
    return num / (num + idio)


@dataclass
class ShockAnalysis:
    irf: IrfResult
    fevd: np.ndarray
    volatility_path: np.ndarray
    grid: tuple = QUANTILES
    summaries: dict = field(default_factory=dict)

    def __post_init__(self):
        self.summaries = {
            "irf": summarize(self.irf.responses, self.grid),
            "fevd": summarize(self.fevd, self.grid),
            "volatility_path": summarize(self.volatility_path, self.grid),
        }


def analyse(store, horizon=36, equity=None, shock_scale="equity", grid=QUANTILES):
    irf = impulse_response(store, horizon, shock_scale, equity)
    return ShockAnalysis(irf, variance_shares(store), factor_volatility_path(store), tuple(grid))


def quantile_columns(grid):
    return [f"p{100 * q:02.0f}" if abs(100 * q - round(100 * q)) < 1e-9 else f"p{100 * q:g}"
            for q in grid]


def quantile_rows(summary, names, index=None):
    """Long table rows ``(variable, time_or_horizon, q...)``.

    ``summary`` is ``(len(grid), periods, m)`` or ``(len(grid), periods)``
    (the latter written with a single variable ``names[0]``).
    """
    summary = np.asarray(summary)
    if summary.ndim == 2:
        summary = summary[:, :, None]
    _, periods, m = summary.shape
    index = range(periods) if index is None else index
    rows = []
    for j in range(m):
        for t, label in zip(range(periods), index):
            rows.append([names[j], label] + [summary[g, t, j] for g in range(summary.shape[0])])
    return rows


def write_quantile_csv(path, summary, names, grid=QUANTILES, index=None):
    header = ["variable", "time_or_horizon"] + quantile_columns(grid)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in quantile_rows(summary, names, index):
            writer.writerow(row[:2] + [repr(float(v)) for v in row[2:]])
