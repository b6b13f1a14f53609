"""Domain types and shared linear algebra for the factor-SV Bayesian VAR.

Model::

    y_t   = sum_p B_p y_{t-p} + C x_t (+ c) + eps_t
    eps_t = X f_t + eta_t,   f_t ~ N(0, H_t),   eta_t ~ N(0, Omega_t)

with ``H_t = diag(h_1t..h_qt)`` and ``Omega_t = diag(w_1t..w_mt)``, each
log-variance a stationary centered AR(1).

Coefficients are held as a ``K x m`` matrix ``coef`` whose column ``j`` is
equation ``j``.  Row layout is ``[y_{t-1} (m rows), ..., y_{t-P} (m rows),
exogenous (x rows), intercept (0 or 1 row)]``.  The local shrinkage scales
``tau`` share that layout.  Exogenous and intercept rows belong to the lag-1
shrinkage pool.

Time indices of latent paths (factors, log-volatilities) run over the
effective sample ``t = P..T-1`` of the panel, i.e. there are ``n = T - P`` of
them.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, ParameterError


@dataclass(frozen=True)
class SvPrior:
    """Priors of a centered AR(1) log-volatility process.

    ``mu ~ N(mu_mean, mu_var)``, ``(phi + 1)/2 ~ Beta(phi_a, phi_b)`` and
    ``xi ~ Gamma(xi_shape, rate=xi_rate)`` on the innovation variance.
    """

    mu_mean: float = 0.0
    mu_var: float = 10.0
    phi_a: float = 5.0
    phi_b: float = 1.5
    xi_shape: float = 0.5
    xi_rate: float = 0.5

    def __post_init__(self):
        if self.mu_var <= 0 or self.phi_a <= 0 or self.phi_b <= 0:
            raise ParameterError("SV prior variances and Beta parameters must be positive")
        if self.xi_shape <= 0 or self.xi_rate <= 0:
            raise ParameterError("SV innovation-variance prior must have positive shape and rate")


@dataclass(frozen=True)
class McmcSettings:
    burn_in: int = 10_000
    keep: int = 5_000
    thin: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0 or self.keep < 0 or self.thin < 1:
            raise ParameterError("burn_in and keep must be >= 0 and thin >= 1")

    @property
    def sweeps(self) -> int:
        return self.burn_in + self.keep * self.thin


def default_kappa(lags: int) -> np.ndarray:
    p = np.arange(1, lags + 1, dtype=float)
    return 0.6 / p**2


@dataclass(frozen=True)
class ModelSpec:
    """Lag order, factor count and every prior hyperparameter of a run.

    Defaults: ``kappa_p = 0.6 / p**2``, ``(c_j, d_j) = (3, 0.03)``,
    loading prior variance 10, SV priors ``N(0, 10)``, ``Beta(5, 1.5)``,
    ``Gamma(1/2, 1/2)`` for both the factor and idiosyncratic processes.
    """

    lags: int
    factors: int = 1
    include_intercept: bool = False
    kappa: Optional[Sequence[float]] = None
    lambda_prior: Optional[Sequence[Sequence[float]]] = None
    loading_prior_variance: float = 10.0
    sv_prior: SvPrior = field(default_factory=SvPrior)
    mcmc: McmcSettings = field(default_factory=McmcSettings)
    exact_sv: bool = True

    def __post_init__(self):
        if int(self.lags) != self.lags or self.lags < 1:
            raise ParameterError(f"lags must be a positive integer, got {self.lags!r}")
        if int(self.factors) != self.factors or self.factors < 1:
            raise ParameterError(f"factors must be a positive integer, got {self.factors!r}")
        kappa = default_kappa(self.lags) if self.kappa is None else np.asarray(self.kappa, float)
        lam = (np.tile([3.0, 0.03], (self.lags, 1)) if self.lambda_prior is None
               else np.asarray(self.lambda_prior, float))
        if kappa.shape != (self.lags,):
            raise ParameterError(f"kappa needs {self.lags} entries, got shape {kappa.shape}")
        if lam.shape != (self.lags, 2):
            raise ParameterError(f"lambda_prior needs {self.lags} (c, d) pairs, got shape {lam.shape}")
        if np.any(kappa <= 0) or np.any(lam <= 0):
            raise ParameterError("kappa, c_j and d_j must all be positive")
        if self.loading_prior_variance <= 0:
            raise ParameterError("loading_prior_variance must be positive")
        kappa.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "lambda_prior", lam)

    def replace(self, **changes) -> "ModelSpec":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Panel:
    """Observed multivariate series (rows are periods)."""

    values: np.ndarray
    names: tuple
    countries: tuple = ()
    kinds: tuple = ()
    exogenous: Optional[np.ndarray] = None
    exog_names: tuple = ()
    transform_log: tuple = ()
    dates: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError("panel values must be a T x m matrix")
        T, m = values.shape
        names = tuple(str(n) for n in self.names)
        if len(names) != m:
            raise DataError(f"{len(names)} names for {m} columns")
        if len(set(names)) != m:
            raise DataError("variable names must be unique")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            r, c = bad[0]
            raise DataError(f"non-finite value at row {r}, column {names[c]!r}")
        countries = tuple(self.countries) or ("",) * m
        kinds = tuple(self.kinds) or ("",) * m
        logs = tuple(bool(v) for v in self.transform_log) or (False,) * m
        if not (len(countries) == len(kinds) == len(logs) == m):
            raise DataError("group tags and transform flags need one entry per variable")
        exog = self.exogenous
        exog_names = tuple(self.exog_names)
        if exog is not None:
            exog = np.array(exog, dtype=float)
            if exog.ndim == 1:
                exog = exog[:, None]
            if exog.shape[0] != T:
                raise DataError("exogenous block must have as many rows as the panel")
            if not np.all(np.isfinite(exog)):
                raise DataError("non-finite value in exogenous block")
            if exog.shape[1] == 0:
                exog = None
            elif not exog_names:
                exog_names = tuple(f"x{i}" for i in range(exog.shape[1]))
        if self.dates and len(self.dates) != T:
            raise DataError("dates need one entry per row")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "countries", countries)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "transform_log", logs)
        object.__setattr__(self, "exogenous", exog)
        object.__setattr__(self, "exog_names", exog_names if exog is not None else ())
        object.__setattr__(self, "dates", tuple(self.dates))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def n_exog(self) -> int:
        return 0 if self.exogenous is None else self.exogenous.shape[1]

    def indices_of_kind(self, kind: str) -> list:
        return [j for j, k in enumerate(self.kinds) if k == kind]


def n_coefficients(m: int, lags: int, n_exog: int = 0, intercept: bool = False) -> int:
    return m * lags + n_exog + int(intercept)


def coef_groups(m: int, lags: int, n_exog: int = 0, intercept: bool = False) -> np.ndarray:
    """Shrinkage-pool index (0-based lag) of each coefficient row."""
    groups = np.repeat(np.arange(lags), m)
    extra = np.zeros(n_exog + int(intercept), dtype=int)
    return np.concatenate([groups, extra])


def lag_design(values, lags, exogenous=None, intercept=False):
    """Return ``(Y, Z)`` for the conditional likelihood on rows ``P..T-1``.

    Row ``r`` of ``Z`` holds ``[y_{t-1}, ..., y_{t-P}, x_t, 1]`` for
    ``t = P + r``.
    """
    values = np.asarray(values, dtype=float)
    T, m = values.shape
    n = T - lags
    if n < 1:
        raise DataError(f"need more than {lags} observations, got {T}")
    blocks = [values[lags - p:T - p] for p in range(1, lags + 1)]
    if exogenous is not None:
        blocks.append(np.asarray(exogenous, dtype=float).reshape(T, -1)[lags:])
    if intercept:
        blocks.append(np.ones((n, 1)))
    return values[lags:], np.hstack(blocks)


def loading_pattern(m: int, q: int):
    """Identification pattern for the loadings.

    Returns ``(free, fixed)``: a boolean mask of freely sampled entries and the
    values of the pinned ones (unit diagonal on the leading ``q x q`` block,
    zeros above it).
    """
    if q > m:
        raise ParameterError(f"cannot identify {q} factors from {m} series")
    free = np.ones((m, q), dtype=bool)
    fixed = np.zeros((m, q))
    for i in range(q):
        free[i, i:] = False
        fixed[i, i] = 1.0
    return free, fixed


@dataclass(frozen=True)
class ChainState:
    """One complete parameter configuration of the sampler.

    ``factor_sv`` and ``idio_sv`` hold one ``(mu, phi, xi)`` row per process.
    ``tau`` is aligned with ``coef``; ``delta`` holds the per-lag Gamma
    increments whose cumulative product is ``lambda_sq``.
    """

    coef: np.ndarray
    loadings: np.ndarray
    factors: np.ndarray
    factor_logvol: np.ndarray
    factor_sv: np.ndarray
    idio_logvol: np.ndarray
    idio_sv: np.ndarray
    tau: np.ndarray
    delta: np.ndarray
    lags: int
    n_exog: int = 0
    intercept: bool = False

    def replace(self, **changes) -> "ChainState":
        return dataclasses.replace(self, **changes)

    @property
    def m(self) -> int:
        return self.coef.shape[1]

    @property
    def q(self) -> int:
        return self.loadings.shape[1]

    @property
    def n(self) -> int:
        return self.idio_logvol.shape[0]

    @property
    def lambda_sq(self) -> np.ndarray:
        return np.cumprod(self.delta)

    @property
    def B(self) -> np.ndarray:
        """Lag matrices as a ``(P, m, m)`` array with ``B[p-1][j, i]`` the
        effect of ``y_{i, t-p}`` on ``y_{j, t}``."""
        m = self.m
        return self.coef[: m * self.lags].reshape(self.lags, m, m).transpose(0, 2, 1)

    @property
    def exog_coef(self) -> np.ndarray:
        m, start = self.m, self.m * self.lags
        return self.coef[start:start + self.n_exog].T

    @property
    def intercept_coef(self) -> np.ndarray:
        if not self.intercept:
            return np.zeros(self.m)
        return self.coef[-1].copy()

    @property
    def factor_var(self) -> np.ndarray:
        return np.exp(self.factor_logvol)

    @property
    def idio_var(self) -> np.ndarray:
        return np.exp(self.idio_logvol)

    def invariant_violations(self) -> list:
        """Human-readable list of broken invariants (empty when valid)."""
        problems = []
        free, fixed = loading_pattern(self.m, self.q)
        if not np.array_equal(self.loadings[~free], fixed[~free]):
            problems.append("pinned loadings altered")
        for label, sv in (("factor", self.factor_sv), ("idiosyncratic", self.idio_sv)):
            if np.any(np.abs(sv[:, 1]) >= 1):
                problems.append(f"{label} persistence outside (-1, 1)")
            if np.any(sv[:, 2] <= 0):
                problems.append(f"{label} innovation variance not positive")
        if np.any(self.tau <= 0):
            problems.append("non-positive local scale")
        if np.any(self.delta <= 0):
            problems.append("non-positive global scale")
        for name in ("coef", "loadings", "factors", "factor_logvol", "factor_sv",
                     "idio_logvol", "idio_sv", "tau", "delta"):
            if not np.all(np.isfinite(getattr(self, name))):
                problems.append(f"non-finite {name}")
        return problems


def assemble_sigma(state: ChainState, t: int) -> np.ndarray:
    """``Sigma_t = X H_t X' + Omega_t`` at effective-sample index ``t``
    (0-based, ``0 <= t < n``)."""
    if not 0 <= t < state.n:
        raise IndexError(f"time index {t} outside 0..{state.n - 1}")
    X = state.loadings
    h = np.exp(state.factor_logvol[t])
    sigma = (X * h) @ X.T + np.diag(np.exp(state.idio_logvol[t]))
    return 0.5 * (sigma + sigma.T)


def companion_matrix(state_or_B) -> np.ndarray:
    """Stacked first-order form of the lag polynomial.

    Accepts a :class:`ChainState` or a ``(P, m, m)`` array of lag matrices.
    """
    B = state_or_B.B if isinstance(state_or_B, ChainState) else np.asarray(state_or_B, float)
    if B.ndim == 2:
        B = B[None]
    P, m, _ = B.shape
    comp = np.zeros((m * P, m * P))
    comp[:m] = np.hstack(list(B))
    if P > 1:
        comp[m:, :-m] = np.eye(m * (P - 1))
    return comp


def spectral_radius(state_or_B) -> float:
    eig = np.linalg.eigvals(companion_matrix(state_or_B))
    return float(np.max(np.abs(eig))) if eig.size else 0.0
