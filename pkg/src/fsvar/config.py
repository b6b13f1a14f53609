"""Run configuration: one YAML file with sections ``data``, ``transforms``,
``groups``, ``model``, ``priors``, ``mcmc`` and ``analysis``.

Every key has a default, so an empty file is a valid configuration.  The
canonical form (:func:`canonical`) fills in all defaults and sorts keys; a
parsed-then-dumped file reproduces that form exactly.

Example::

    data:
      path: panel.csv
      exogenous: [oil]
      log_scale: 100
    transforms:
      default: none
      series: {ip_de: logdiff, stoxx: log}
    groups:
      countries: {ip_de: DE}
      kinds: {stoxx: equity}
    model: {lags: 2, factors: 1}
    mcmc: {burn_in: 10000, keep: 5000, thin: 2, seed: 0}
    analysis: {horizon: 36, shock_scale: equity, target: -10}
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .analysis import QUANTILES
from .errors import ConfigError, FsvarError
from .model import McmcSettings, ModelSpec, SvPrior

TRANSFORMS = ("none", "sa", "log", "sa_log", "diff", "sa_diff", "logdiff", "sa_logdiff")

DEFAULTS = {
    "data": {"path": None, "exogenous": [], "log_scale": 100.0,
             "demean": True, "standardize": False},
    "transforms": {"default": "none", "series": {}},
    "groups": {"countries": {}, "kinds": {}},
    "model": {"lags": 2, "factors": 1, "intercept": False, "exact_sv": True},
    "priors": {"kappa": None, "lambda": None, "loading_variance": 10.0,
               "sv": {"mu_mean": 0.0, "mu_var": 10.0, "phi_a": 5.0, "phi_b": 1.5,
                      "xi_shape": 0.5, "xi_rate": 0.5}},
    "mcmc": {"burn_in": 10_000, "keep": 5_000, "thin": 2, "seed": 0},
    "analysis": {"horizon": 36, "quantiles": list(QUANTILES), "shock_scale": "equity",
                 "target": -10.0, "equity_kind": "equity"},
}

_FLOATS = {("data", "log_scale"), ("priors", "loading_variance"), ("analysis", "target")}
_INTS = {("model", "lags"), ("model", "factors"), ("mcmc", "burn_in"), ("mcmc", "keep"),
         ("mcmc", "thin"), ("mcmc", "seed"), ("analysis", "horizon")}
_BOOLS = {("data", "demean"), ("data", "standardize"), ("model", "intercept"),
          ("model", "exact_sv")}


def _merge(defaults, given, where):
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(f"section {where or 'root'!r} must be a mapping")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where or 'root'!r}")
    out = {}
    for key, default in defaults.items():
        value = given.get(key, default)
        if isinstance(default, dict) and default:
            out[key] = _merge(default, given.get(key), f"{where}.{key}" if where else key)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _coerce(cfg):
    for section, key in _FLOATS:
        try:
            cfg[section][key] = float(cfg[section][key])
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key} must be a number") from None
    for section, key in _INTS:
        value = cfg[section][key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
        cfg[section][key] = int(value)
    for section, key in _BOOLS:
        if not isinstance(cfg[section][key], bool):
            raise ConfigError(f"{section}.{key} must be true or false")
    sv = cfg["priors"]["sv"]
    for key in sv:
        try:
            sv[key] = float(sv[key])
        except (TypeError, ValueError):
            raise ConfigError(f"priors.sv.{key} must be a number") from None
    for name in ("kappa", "lambda"):
        value = cfg["priors"][name]
        if value is not None:
            try:
                cfg["priors"][name] = _float_tree(value)
            except (TypeError, ValueError):
                raise ConfigError(f"priors.{name} must be numeric") from None
    try:
        cfg["analysis"]["quantiles"] = [float(q) for q in cfg["analysis"]["quantiles"]]
    except (TypeError, ValueError):
        raise ConfigError("analysis.quantiles must be a list of numbers") from None
    if not all(0 <= q <= 1 for q in cfg["analysis"]["quantiles"]) or not cfg["analysis"]["quantiles"]:
        raise ConfigError("analysis.quantiles must be a non-empty list of numbers in [0, 1]")
    scale = cfg["analysis"]["shock_scale"]
    if not (scale in ("equity", "one_sd", "unit") or
            (isinstance(scale, (int, float)) and not isinstance(scale, bool))):
        raise ConfigError(f"analysis.shock_scale must be equity, one_sd, unit or a number, got {scale!r}")
    cfg["data"]["exogenous"] = [str(x) for x in cfg["data"]["exogenous"] or []]
    if cfg["data"]["path"] is not None:
        cfg["data"]["path"] = str(cfg["data"]["path"])
    for name, tr in list(cfg["transforms"]["series"].items()) + [("default", cfg["transforms"]["default"])]:
        if tr not in TRANSFORMS:
            raise ConfigError(f"unknown transform {tr!r} for {name!r}; expected one of {TRANSFORMS}")
    for kind in ("countries", "kinds"):
        cfg["groups"][kind] = {str(k): str(v) for k, v in (cfg["groups"][kind] or {}).items()}
    cfg["transforms"]["series"] = {str(k): str(v) for k, v in (cfg["transforms"]["series"] or {}).items()}
    return cfg


def _float_tree(value):
    if isinstance(value, (list, tuple)):
        return [_float_tree(v) for v in value]
    if isinstance(value, bool):
        raise TypeError
    return float(value)


@dataclass
class RunConfig:
    """A fully resolved configuration plus the directory it was read from."""

    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def data(self):
        return self.raw["data"]

    @property
    def analysis(self):
        return self.raw["analysis"]

    @property
    def data_path(self):
        path = self.raw["data"]["path"]
        if path is None:
            raise ConfigError("data.path is not set")
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path

    def transform_of(self, name):
        return self.raw["transforms"]["series"].get(name, self.raw["transforms"]["default"])

    def model_spec(self, seed=None) -> ModelSpec:
        model, priors, mcmc = self.raw["model"], self.raw["priors"], self.raw["mcmc"]
        try:
            lam = priors["lambda"]
            if lam is not None and lam and not isinstance(lam[0], list):
                lam = [lam] * model["lags"]
            return ModelSpec(
                lags=model["lags"], factors=model["factors"], include_intercept=model["intercept"],
                kappa=priors["kappa"], lambda_prior=lam,
                loading_prior_variance=priors["loading_variance"],
                sv_prior=SvPrior(**priors["sv"]),
                mcmc=McmcSettings(mcmc["burn_in"], mcmc["keep"], mcmc["thin"],
                                  mcmc["seed"] if seed is None else int(seed)),
                exact_sv=model["exact_sv"])
        except FsvarError as exc:
            raise ConfigError(f"invalid model settings: {exc}") from exc

    def dump(self) -> str:
        return dump_canonical(self.raw)


def canonical(text_or_dict) -> dict:
    """Validated configuration with every default filled in."""
    if isinstance(text_or_dict, str):
        try:
            given = yaml.safe_load(text_or_dict)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse configuration: {exc}".splitlines()[0]) from exc
    else:
        given = text_or_dict
    return _coerce(_merge(DEFAULTS, given or {}, ""))


def dump_canonical(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)


def load_config(path=None, text=None) -> RunConfig:
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc.strerror}") from exc
        return RunConfig(canonical(text), path.parent)
    return RunConfig(canonical(text or ""))

