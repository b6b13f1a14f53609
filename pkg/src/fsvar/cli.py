"""Command-line interface.

Subcommands: ``simulate``, ``estimate``, ``irf``, ``fevd``, ``volpath``,
``summary`` and ``gir-test``.  Failures print a single line
``error[<code>]: <message>`` on stderr and exit with the code's status.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (factor_volatility_path, impulse_response, quantile_columns, summarize,
                       variance_shares, write_quantile_csv)
from .config import load_config
from .diagnostics import effective_sample_size, split_rhat
from .errors import ConfigError, FsvarError
from .gibbs import DrawStore, run_chain
from .gir import getting_it_right, reduced_spec
from .io import export_long_csv, load_store, panel_from_config, save_store, write_panel_csv
from .simulate import desk_truth, simulate_panel, stable_prior_truth

EXIT_CODES = {"error": 1, "usage": 2, "config": 3, "data": 4, "parameter": 5, "numerical": 6,
              "store": 7, "io": 8}
DESK_NAMES = ("equity_1", "equity_2", "output_1", "output_2", "prices", "rates")
DESK_KINDS = ("equity", "equity", "output", "output", "prices", "rates")


class UsageError(FsvarError):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _quantiles(text):
    try:
        grid = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not grid or not all(0 <= q <= 1 for q in grid):
        raise argparse.ArgumentTypeError("quantiles must lie in [0, 1]")
    return grid


def build_parser():
    parser = _Parser(prog="fsvar", description="Bayesian VAR with factor stochastic volatility")
    parser.add_argument("--version", action="version", version=f"fsvar {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True, out=True):
        if config:
            p.add_argument("--config", type=Path, help="YAML run configuration")
        if out:
            p.add_argument("--output-dir", type=Path, default=Path("."))
        return p

    p = common(sub.add_parser("simulate", help="write a synthetic panel and its truth"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--periods", type=int, default=400)
    p.add_argument("--truth", choices=("desk", "prior"), default="desk")
    p.add_argument("--variables", type=int, default=6, help="series count for --truth prior")

    p = common(sub.add_parser("estimate", help="run the Gibbs sampler"))
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--export-long", action="store_true", help="also write draws_long.csv")

    for name, text in (("irf", "impulse responses to a factor shock"),
                       ("fevd", "variance shares explained by the factors"),
                       ("volpath", "factor volatility path")):
        p = common(sub.add_parser(name, help=text))
        p.add_argument("--draws", type=Path, required=True)
        p.add_argument("--quantiles", type=_quantiles)
        if name != "volpath":
            p.add_argument("--horizon", type=int)
        if name == "irf":
            p.add_argument("--shock-scale", help="equity, one_sd, unit or a number")

    p = common(sub.add_parser("summary", help="chain diagnostics"), out=False)
    p.add_argument("--draws", type=Path, required=True)

    p = common(sub.add_parser("gir-test", help="joint-distribution test of the sampler"))
    p.add_argument("--cycles", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="exit 1 if any p-value fails")
    return parser


def _config(args):
    return load_config(args.config) if args.config is not None else load_config()


def _outdir(args):
    try:
        args.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FsvarError(f"cannot create {args.output_dir}: {exc.strerror}") from exc
    return args.output_dir


def cmd_simulate(args):
    cfg = _config(args)
    spec = cfg.model_spec()
    out = _outdir(args)
    rng = np.random.default_rng(args.seed)
    n = args.periods - spec.lags
    if args.truth == "desk":
        if spec.lags != 2 or spec.factors != 1 or spec.include_intercept:
            raise ConfigError("the desk truth needs lags 2, one factor and no intercept; use --truth prior")
        truth = desk_truth(spec, args.periods)
        names, kinds = DESK_NAMES, DESK_KINDS
    else:
        truth = stable_prior_truth(spec, args.variables, n, rng)
        names = tuple(f"y{j}" for j in range(args.variables))
        kinds = ("equity",) + ("",) * (args.variables - 1)
    panel, truth = simulate_panel(spec, truth, args.periods, rng, names=names, kinds=kinds)
    panel_path = out / "panel.csv"
    write_panel_csv(panel, panel_path)
    save_store(DrawStore.from_states([truth], {"seed": args.seed}, names, kinds), out / "truth.fsv")
    raw = dict(cfg.raw)
    raw["data"] = dict(raw["data"], path="panel.csv")
    raw["groups"] = {"countries": dict(raw["groups"]["countries"]),
                     "kinds": {n_: k for n_, k in zip(names, kinds) if k}}
    (out / "config.yaml").write_text(type(cfg)(raw).dump())
    print(f"wrote {panel_path} ({panel.T} x {panel.m}), truth.fsv, config.yaml")
    return 0


def cmd_estimate(args):
    cfg = _config(args)
    spec = cfg.model_spec(args.seed)
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    panel = panel_from_config(cfg)
    out = _outdir(args)
    store = run_chain(panel, spec, threads=args.threads)
    save_store(store, out / "draws.fsv")
    run = {"seed": spec.mcmc.seed, "threads": args.threads,
           "wall_time": store.meta["wall_time"], "unstable_draws": store.meta["unstable_draws"],
           "config": cfg.raw}
    (out / "run.json").write_text(json.dumps(run, indent=2, sort_keys=True))
    if args.export_long:
        export_long_csv(store, out / "draws_long.csv")
    print(f"kept {len(store)} draws in {store.meta['wall_time']:.1f}s; "
          f"{store.meta['unstable_draws']} with companion radius >= 1")
    return 0


def _grid(args, cfg):
    return args.quantiles if args.quantiles is not None else tuple(cfg.analysis["quantiles"])


def cmd_irf(args):
    cfg = _config(args)
    store = load_store(args.draws)
    horizon = args.horizon if args.horizon is not None else cfg.analysis["horizon"]
    scale = args.shock_scale if args.shock_scale is not None else cfg.analysis["shock_scale"]
    try:
        scale = float(scale)
    except (TypeError, ValueError):
        pass
    kind = cfg.analysis["equity_kind"]
    equity = [j for j, k in enumerate(store.kinds) if k == kind]
    res = impulse_response(store, horizon, scale, equity, cfg.analysis["target"])
    if res.responses.shape[0] == 0:
        raise FsvarError("every draw was excluded by the shock scaling rule")
    grid = _grid(args, cfg)
    path = _outdir(args) / "irf.csv"
    write_quantile_csv(path, summarize(res.responses, grid), store.names, grid)
    print(f"wrote {path}; {len(res.kept)} draws used, {res.excluded} excluded")
    return 0


def cmd_fevd(args):
    cfg = _config(args)
    store = load_store(args.draws)
    horizon = args.horizon if args.horizon is not None else 1
    shares = variance_shares(store, horizon)
    grid = _grid(args, cfg)
    path = _outdir(args) / "fevd.csv"
    write_quantile_csv(path, summarize(shares, grid), store.names, grid)
    print(f"wrote {path}")
    return 0


def cmd_volpath(args):
    cfg = _config(args)
    store = load_store(args.draws)
    grid = _grid(args, cfg)
    path = _outdir(args) / "volpath.csv"
    write_quantile_csv(path, summarize(factor_volatility_path(store), grid), ("factor_1",), grid)
    print(f"wrote {path}")
    return 0


def _summary_rows(store):
    rows = []
    X = store["loadings"]
    for j in range(store.m):
        for i in range(store.q):
            rows.append((f"loading[{store.names[j] if store.names else j},f{i + 1}]", X[:, j, i]))
    for i, label in enumerate(("mu", "phi", "xi")):
        for f in range(store.q):
            rows.append((f"factor_{label}[{f + 1}]", store["factor_sv"][:, f, i]))
        for j in range(store.m):
            rows.append((f"idio_{label}[{store.names[j] if store.names else j}]", store["idio_sv"][:, j, i]))
    for p in range(store.lags):
        rows.append((f"log_lambda_sq[{p + 1}]", np.log(np.cumprod(store["delta"], axis=1)[:, p])))
    return rows


def cmd_summary(args):
    store = load_store(args.draws)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["parameter", "mean", "sd", *quantile_columns((0.05, 0.5, 0.95)), "ess", "split_rhat"])
    for name, x in _summary_rows(store):
        q = np.quantile(x, (0.05, 0.5, 0.95))
        writer.writerow([name, f"{x.mean():.6g}", f"{x.std(ddof=1) if x.size > 1 else 0:.6g}",
                         *(f"{v:.6g}" for v in q), f"{effective_sample_size(x):.1f}",
                         f"{split_rhat(x):.4f}"])
    radius = store.meta.get("spectral_radius")
    if radius is not None:
        print(f"# draws {len(store)}, unstable {int(np.sum(np.asarray(radius) >= 1))}, "
              f"median companion radius {np.median(radius):.4f}")
    return 0


def cmd_gir(args):
    cfg = _config(args) if args.config is not None else None
    spec = reduced_spec(cfg.raw["model"]["lags"] if cfg else 1)
    report = getting_it_right(spec, args.cycles, args.seed)
    path = _outdir(args) / "gir_report.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["parameter", "ks_stat", "p_value", "ess", "prior_mean", "chain_mean"])
        for r in report.rows:
            writer.writerow([r["name"], repr(r["ks_stat"]), repr(r["p_value"]), repr(r["ess"]),
                             repr(r["prior_mean"]), repr(r["chain_mean"])])
    for line in report.lines():
        print(line)
    verdict = "pass" if report.passed else "FAIL"
    print(f"{report.cycles} cycles in {report.seconds:.1f}s; {len(report.rows)} parameters; {verdict}")
    return 1 if args.strict and not report.passed else 0


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "irf": cmd_irf, "fevd": cmd_fevd,
            "volpath": cmd_volpath, "summary": cmd_summary, "gir-test": cmd_gir}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except FsvarError as exc:
        code, message = exc.code, str(exc)
    except OSError as exc:
        code, message = "io", f"{exc.filename or ''}: {exc.strerror or exc}".lstrip(": ")
    message = message.replace("\n", " ")
    print(f"error[{code}]: {message}", file=sys.stderr)
    return EXIT_CODES.get(code, 1)


if __name__ == "__main__":
    sys.exit(main())
