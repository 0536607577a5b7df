"""Command-line front end: ``stochlab {simulate,verify,ensemble,plot}``.

Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
3 numerical blow-up.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import jet, rotor
from .ensemble import (AllPathsBlewUpError, estimate_convergence, estimate_exceedance,
                       run_ensemble, supermartingale_check)
from .experiments import make_case, verify_case
from .sde import BlowUpError, IntegratorConfig, InvalidArgumentError, simulate_path
from .serialize import (CsvParseError, default_panel_rows, read_csv, write_csv, write_json,
                        write_svg)

log = logging.getLogger("stochlab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3
SEED_ENV = "STOCHLAB_SEED"


class ConfigError(ValueError):
    pass


@dataclass
class EnsembleOptions:
    n_paths: int = 200
    eps1: float = 1.0
    threshold: float = 0.05
    tail_fraction: float = 0.2
    workers: int = 1


@dataclass
class RunConfig:
    model: str = "jet"
    params: object = None
    integrator: IntegratorConfig = IntegratorConfig()
    x0: Optional[np.ndarray] = None
    ensemble: EnsembleOptions = field(default_factory=EnsembleOptions)
    outputs: dict = field(default_factory=dict)

    def case(self):
        return make_case(self.model, self.params)

    def initial_state(self):
        return self.case().default_x0 if self.x0 is None else self.x0


_PARAM_TYPES = {"jet": jet.JetParams, "rotor": rotor.RotorParams}
_TOP_KEYS = {"model", "params", "integrator", "x0", "ensemble", "outputs"}
_OUTPUT_KEYS = {"csv", "svg", "json"}


def _only(d: dict, allowed, where: str):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def build_config(doc: dict, args: Optional[argparse.Namespace] = None,
                 env: Optional[dict] = None) -> RunConfig:
    """Merge a JSON config document with command-line overrides.

    Seed precedence: ``--seed``, then ``integrator.seed``, then the
    ``STOCHLAB_SEED`` environment variable, then 0.
    """
    env = os.environ if env is None else env
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _only(doc, _TOP_KEYS, "config")
    a = vars(args) if args is not None else {}

    def flag(name):
        return a.get(name)

    model = flag("model") or doc.get("model", "jet")
    if model not in _PARAM_TYPES:
        raise ConfigError(f"model must be 'jet' or 'rotor', got {model!r}")
    ptype = _PARAM_TYPES[model]
    pdoc = dict(doc.get("params", {}))
    _only(pdoc, {f.name for f in dataclasses.fields(ptype)}, "params")
    for key, attr in (("sigma", "sigma"), ("eps", "eps"), ("momentum_fix", "momentum_fix"),
                      ("h_mode", "h_mode")):
        if flag(key) is not None:
            pdoc[attr] = flag(key)
    if model == "jet" and ("momentum_fix" in pdoc or "h_mode" in pdoc):
        raise ConfigError("momentum_fix and h_mode only apply to the rotor model")
    try:
        params = ptype(**pdoc)
    except (TypeError, InvalidArgumentError) as exc:
        raise ConfigError(f"bad params: {exc}") from None

    idoc = dict(doc.get("integrator", {}))
    _only(idoc, {"dt", "horizon", "scheme", "seed"}, "integrator")
    for key in ("dt", "horizon", "scheme", "seed"):
        if flag(key) is not None:
            idoc[key] = flag(key)
    if "seed" not in idoc:
        idoc["seed"] = int(env[SEED_ENV]) if env.get(SEED_ENV) else 0
    try:
        integ = IntegratorConfig(**{k: (int(v) if k == "seed" else v) for k, v in idoc.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad integrator settings: {exc}") from None

    x0 = flag("x0") if flag("x0") is not None else doc.get("x0")
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        dim = 6 if model == "jet" else 8
        if x0.shape != (dim,):
            raise ConfigError(f"x0 must have {dim} components")

    edoc = dict(doc.get("ensemble", {}))
    _only(edoc, {f.name for f in dataclasses.fields(EnsembleOptions)}, "ensemble")
    for key in ("n_paths", "eps1", "threshold", "tail_fraction", "workers"):
        if flag(key) is not None:
            edoc[key] = flag(key)
    ens = EnsembleOptions(**edoc)
    if ens.n_paths < 1 or ens.workers < 1:
        raise ConfigError("n_paths and workers must be >= 1")

    outputs = dict(doc.get("outputs", {}))
    _only(outputs, _OUTPUT_KEYS, "outputs")
    for key in _OUTPUT_KEYS:
        if flag(f"out_{key}") is not None:
            outputs[key] = flag(f"out_{key}")
    return RunConfig(model, params, integ, x0, ens, outputs)


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def path_table(case, path):
    cols = ["t", *case.state_names, "V", "LV_analytic"]
    with np.errstate(over="ignore", invalid="ignore"):
        V = case.lyapunov.value(path.states)
        LV = case.lv_analytic(path.states)
    rows = np.column_stack([path.times, path.states, V, LV])
    return cols, rows


def cmd_simulate(cfg: RunConfig) -> int:
    case = cfg.case()
    out_csv = cfg.outputs.get("csv")
    if not out_csv:
        raise ConfigError("simulate needs an output CSV (--out-csv)")
    code = EXIT_OK
    try:
        path = simulate_path(case.model, cfg.initial_state(), config=cfg.integrator)
    except BlowUpError as exc:
        log.error("numerical blow-up at step %d", exc.step)
        path, code = exc.path, EXIT_BLOWUP
    cols, rows = path_table(case, path)
    write_csv(out_csv, cols, rows)
    if cfg.outputs.get("svg"):
        write_svg(cfg.outputs["svg"], cols, rows, default_panel_rows(case.state_names))
    return code


def cmd_verify(cfg: RunConfig, case=None) -> int:
    case = case or cfg.case()
    report = verify_case(case, seed=cfg.integrator.seed, dt=cfg.integrator.dt,
                         horizon=cfg.integrator.horizon)
    out = cfg.outputs.get("json")
    if out:
        write_json(out, report)
    else:
        print(json.dumps(report["conditions"], sort_keys=True))
    for c in report["checks"]:
        log.info("%-24s %s", c["name"], "pass" if c["passed"] else "FAIL")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def ensemble_report(cfg: RunConfig, summary) -> dict:
    e = cfg.ensemble
    p_exc, ci_exc = estimate_exceedance(summary, e.eps1)
    p_conv, ci_conv = estimate_convergence(summary, e.threshold)
    y = list(cfg.case().model.y_indices)
    names = cfg.case().state_names
    return {
        "model": cfg.model,
        "n_paths": summary.n_paths,
        "seed": summary.seed,
        "dt": cfg.integrator.dt,
        "horizon": cfg.integrator.horizon,
        "blowup_count": summary.blowup_count,
        "ceiling_count": summary.ceiling_count(1e3),
        "exceedance": {"eps1": e.eps1, "p_hat": p_exc, "ci95": list(ci_exc),
                       "note": "maximum over grid points, a lower bound on the continuous supremum"},
        "convergence": {"threshold": e.threshold, "tail_fraction": e.tail_fraction,
                        "p_hat": p_conv, "ci95": list(ci_conv),
                        "note": "surrogate: tail-window mean of |y| below threshold"},
        "tail_mean_abs_max": {names[i]: float(np.max(summary.tail_mean_abs[~summary.blown, i]))
                              for i in y},
        "supermartingale": supermartingale_check(summary, alpha=0.00135).to_dict(),
    }


def cmd_ensemble(cfg: RunConfig) -> int:
    case = cfg.case()
    e = cfg.ensemble
    try:
        summary = run_ensemble(case.model, cfg.initial_state(), e.n_paths, cfg.integrator,
                               case.lyapunov, tail_fraction=e.tail_fraction, workers=e.workers)
    except AllPathsBlewUpError as exc:
        log.error("%s", exc)
        return EXIT_BLOWUP
    if cfg.outputs.get("csv"):
        cols = ["t", "mean_y_norm", "q05_y_norm", "q95_y_norm", "mean_V", "se_V"]
        rows = np.column_stack([summary.times, summary.mean_y_norm, summary.q05_y_norm,
                                summary.q95_y_norm, summary.mean_V, summary.se_V])
        write_csv(cfg.outputs["csv"], cols, rows)
        if cfg.outputs.get("svg"):
            write_svg(cfg.outputs["svg"], cols, rows, [["mean_y_norm", "q95_y_norm", "mean_V"]])
    report = ensemble_report(cfg, summary)
    if cfg.outputs.get("json"):
        write_json(cfg.outputs["json"], report)
    else:
        print(json.dumps({k: report[k] for k in ("exceedance", "convergence")}, sort_keys=True))
    return EXIT_BLOWUP if summary.blowup_count else EXIT_OK


def cmd_plot(csv_path, svg_path, panels) -> int:
    header, data = read_csv(csv_path)
    rows = [p.split(",") for p in panels] if panels else default_panel_rows(
        [h for h in header if h not in ("t", "V", "LV_analytic")])
    write_svg(svg_path, header, data, rows)
    return EXIT_OK


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config document")
    p.add_argument("--model", choices=["jet", "rotor"])
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--scheme", choices=["euler_maruyama", "milstein"])
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma", type=_float_list)
    p.add_argument("--eps", type=float)
    p.add_argument("--momentum-fix", dest="momentum_fix", choices=["as_printed", "corrected"])
    p.add_argument("--h-mode", dest="h_mode", choices=["constant_eps", "jet_style"])
    p.add_argument("--x0", type=_float_list)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--eps1", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--tail-fraction", dest="tail_fraction", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-csv", dest="out_csv")
    p.add_argument("--out-svg", dest="out_svg")
    p.add_argument("--out-json", dest="out_json")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "simulate one sample path"),
                        ("verify", "check the stability hypotheses"),
                        ("ensemble", "Monte Carlo stability estimates")):
        _common(sub.add_parser(name, help=help_))
    pp = sub.add_parser("plot", help="plot columns of a CSV produced by simulate")
    pp.add_argument("csv")
    pp.add_argument("svg")
    pp.add_argument("--panels", action="append",
                    help="comma-separated columns for one row of panels (repeatable)")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "plot":
            return cmd_plot(args.csv, args.svg, args.panels)
        doc = {}
        if args.config:
            doc = json.loads(Path(args.config).read_text())
        cfg = build_config(doc, args)
        return {"simulate": cmd_simulate, "verify": cmd_verify,
                "ensemble": cmd_ensemble}[args.command](cfg)
    except (ConfigError, CsvParseError, json.JSONDecodeError, InvalidArgumentError,
            FileNotFoundError) as exc:
        print(f"stochlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
