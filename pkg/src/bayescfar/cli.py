"""Command-line front end.

Subcommands::

    bayescfar threshold  --variant case2 --crp 1,2,3 --design-pfa 1e-3
    bayescfar pfa-sweep  --variant case3 --lambda-grid 0.1,1,10 --out pfa.csv
    bayescfar pd-curve   --variant ca --icr-db 20 --scr-grid-db 0,5,10,15,20
    bayescfar validate   --instances 100

Settings come from an optional ``--config`` file of ``key = value``
lines (keys as below, ``#`` comments allowed); command-line flags win.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import detectors as det
from . import oracle, simulate
from .detectors import ClutterRangeProfile, DetectorSpec, InterferencePrior, Variant
from .errors import BayesCfarError
from .simulate import Interferer, Scenario

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

PFA_COLUMNS = [
    "variant", "N", "lambda", "icr_db", "interferer_cell", "trials",
    "declared", "pfa_hat", "ci_low", "ci_high", "seed",
]
PD_COLUMNS = [
    "variant", "N", "scr_db", "icr_db", "trials", "pd_hat", "ci_low", "ci_high", "seed",
]

CONFIG_KEYS = {
    "variant", "n_cells", "design_pfa", "interferer_index", "prior", "lambda_grid",
    "scr_grid_db", "icr_db", "trials", "seed", "out", "format", "workers", "crp",
    "crp_file", "instances", "rel_tol",
}
DEFAULTS = {
    "n_cells": "16",
    "design_pfa": "1e-2",
    "lambda_grid": "1",
    "scr_grid_db": "0,5,10,15,20",
    "seed": "0",
    "format": "csv",
    "workers": "1",
    "instances": "100",
    "rel_tol": "1e-10",
}
DEFAULT_TRIALS = {"pfa-sweep": 10**6, "pd-curve": 10**5}


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    spec: Optional[DetectorSpec]
    n_cells: int
    lambdas: List[float]
    scr_grid_db: List[float]
    icr_grid_db: List[Optional[float]]
    interferer_cell: int
    trials: int
    seed: int
    workers: int
    out: Optional[str]
    fmt: str


def _read_config_file(path):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    with open(path) as fh:
        parser.read_string("[run]\n" + fh.read())
    raw = dict(parser["run"])
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return raw


def _floats(text, what) -> List[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise ConfigError(f"cannot parse {what} from {text!r}") from None


def _int(text, what) -> int:
    text = str(text).strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        val = float(text)
    except ValueError:
        val = None
    if val is None or not val.is_integer():
        raise ConfigError(f"invalid {what}: {text!r}")
    return int(val)


def _settings(args):
    """Merged settings and the set of keys the user supplied explicitly."""
    merged = dict(DEFAULTS)
    explicit = set()
    if args.config:
        raw = _read_config_file(args.config)
        merged.update(raw)
        explicit.update(raw)
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = str(val)
            explicit.add(key)
    return merged, explicit


def _build_spec(cfg: dict, n: int) -> DetectorSpec:
    if "variant" not in cfg:
        raise ConfigError("variant is required")
    variant = Variant.parse(cfg["variant"])
    alpha = float(cfg["design_pfa"])
    index = _int(cfg["interferer_index"], "interferer_index") if cfg.get("interferer_index") else None
    prior = None
    if variant is Variant.CASE1 and index is None:
        index = n
    if variant is Variant.CASE2:
        prior = InterferencePrior.parse(cfg.get("prior", "uniform"), n)
    elif variant is Variant.CASE3:
        prior = InterferencePrior.parse(cfg.get("prior", "absent:0.5,uniform"), n)
    spec = DetectorSpec(variant, alpha, index, prior)
    spec.check_window(n)
    return spec


def _experiment(cfg: dict, command: str) -> ExperimentConfig:
    n = _int(cfg["n_cells"], "n_cells")
    if n < 2:
        raise ConfigError("n_cells must be >= 2")
    spec = _build_spec(cfg, n)
    icr: List[Optional[float]] = [None]
    if cfg.get("icr_db"):
        icr = []
        for tok in cfg["icr_db"].split(","):
            tok = tok.strip()
            icr.append(None if tok.lower() == "none" else _floats(tok, "icr_db")[0])
    cell = _int(cfg["interferer_index"], "interferer_index") if cfg.get("interferer_index") else n
    if not 1 <= cell <= n:
        raise ConfigError(f"interferer_index must lie in 1..{n}")
    fmt = cfg["format"].strip().lower().replace("_", "-")
    if fmt not in ("csv", "json-lines", "jsonl"):
        raise ConfigError(f"unknown output format {cfg['format']!r}")
    lambdas = _floats(cfg["lambda_grid"], "lambda_grid")
    if not lambdas or any(not lam > 0 for lam in lambdas):
        raise ConfigError("lambda_grid needs positive values")
    scr = _floats(cfg["scr_grid_db"], "scr_grid_db")
    if command == "pd-curve":
        if not scr:
            raise ConfigError("scr_grid_db is empty")
        if len(lambdas) != 1:
            raise ConfigError("pd-curve takes a single lambda")
    trials = _int(cfg.get("trials", DEFAULT_TRIALS[command]), "trials")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    workers = _int(cfg["workers"], "workers")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    seed = _int(cfg["seed"], "seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return ExperimentConfig(
        spec, n, lambdas, scr, icr, cell, trials, seed, workers,
        cfg.get("out"), "csv" if fmt == "csv" else "json-lines",
    )


def _num(x) -> str:
    return format(float(x), ".17g")


def _emit(rows: List[dict], columns: List[str], exp: ExperimentConfig) -> None:
    buf = io.StringIO()
    if exp.fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                "" if row[c] is None else _num(row[c]) if isinstance(row[c], float) else row[c]
                for c in columns
            )
    else:
        for row in rows:
            buf.write(json.dumps({c: row[c] for c in columns}) + "\n")
    if exp.out in (None, "", "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(exp.out, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _scenario(exp: ExperimentConfig, lam: float, icr: Optional[float]) -> Scenario:
    interferer = None if icr is None else Interferer(exp.interferer_cell, icr)
    return Scenario(exp.n_cells, lam, interferer=interferer)


def cmd_pfa_sweep(exp: ExperimentConfig) -> int:
    grid = [_scenario(exp, lam, icr) for icr in exp.icr_grid_db for lam in exp.lambdas]
    reports = simulate.run_pfa_sweep(exp.spec, grid, exp.trials, exp.seed, exp.workers)
    rows = []
    for r in reports:
        it = r.scenario.interferer
        rows.append({
            "variant": exp.spec.variant.value,
            "N": exp.n_cells,
            "lambda": float(r.scenario.clutter_rate),
            "icr_db": None if it is None else float(it.icr_db),
            "interferer_cell": None if it is None else it.cell,
            "trials": r.trials,
            "declared": r.declared,
            "pfa_hat": r.estimate,
            "ci_low": r.ci_low,
            "ci_high": r.ci_high,
            "seed": exp.seed,
        })
    _emit(rows, PFA_COLUMNS, exp)
    return EXIT_OK


def cmd_pd_curve(exp: ExperimentConfig) -> int:
    rows = []
    for g, icr in enumerate(exp.icr_grid_db):
        base = _scenario(exp, exp.lambdas[0], icr)
        reports = simulate.run_pd_curve(
            exp.spec, base, exp.scr_grid_db, exp.trials, exp.seed, exp.workers,
            first_stream=g * len(exp.scr_grid_db),
        )
        for r in reports:
            rows.append({
                "variant": exp.spec.variant.value,
                "N": exp.n_cells,
                "scr_db": float(r.scenario.scr_db),
                "icr_db": None if icr is None else float(icr),
                "trials": r.trials,
                "pd_hat": r.estimate,
                "ci_low": r.ci_low,
                "ci_high": r.ci_high,
                "seed": exp.seed,
            })
    _emit(rows, PD_COLUMNS, exp)
    return EXIT_OK


def _read_crp(cfg: dict) -> ClutterRangeProfile:
    if cfg.get("crp"):
        cells = _floats(cfg["crp"], "crp")
    elif cfg.get("crp_file"):
        with open(cfg["crp_file"]) as fh:
            cells = _floats(",".join(fh.read().replace(",", " ").split()), "crp_file")
    else:
        raise ConfigError("threshold needs --crp or --crp-file")
    return ClutterRangeProfile(np.array(cells))


def cmd_threshold(cfg: dict, explicit=frozenset()) -> int:
    crp = _read_crp(cfg)
    if "n_cells" in explicit and _int(cfg["n_cells"], "n_cells") != crp.n:
        raise ConfigError(f"n_cells={cfg['n_cells']} but the CRP has {crp.n} cells")
    spec = _build_spec(cfg, crp.n)
    tau = det.threshold(spec.design_pfa, spec, crp)
    pfa = det.variant_pfa(tau, spec, crp)
    print(f"variant = {spec.variant.value}")
    print(f"design_pfa = {_num(spec.design_pfa)}")
    print(f"tau = {_num(tau)}")
    print(f"pfa_at_tau = {_num(pfa)}")
    return EXIT_OK


def cmd_validate(cfg: dict, perturb: float) -> int:
    settings = oracle.QuadratureSettings(rel_tol=float(cfg["rel_tol"]))
    instances = _int(cfg["instances"], "instances")
    if instances < 1:
        raise ConfigError("instances must be >= 1")
    results = oracle.run_validation(instances, _int(cfg["seed"], "seed"), settings, perturb)
    width = max(len(r.name) for r in results)
    print(f"{'check':<{width}}  {'cases':>6}  {'max error':>10}  {'tolerance':>9}  result")
    for r in results:
        print(f"{r.name:<{width}}  {r.cases:>6}  {r.max_error:>10.3e}  {r.tolerance:>9.1e}  "
              f"{'PASS' if r.passed else 'FAIL'}")
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "SOME CHECKS FAILED")
    return EXIT_OK if ok else EXIT_FAILED


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    p.add_argument("--variant", help="ca, case1, case2 or case3")
    p.add_argument("--n-cells", dest="n_cells", type=int)
    p.add_argument("--design-pfa", dest="design_pfa", type=float)
    p.add_argument("--interferer-index", dest="interferer_index", type=int,
                   help="Case-1 excluded cell and simulated interferer cell (1-based, default N)")
    p.add_argument("--prior", help="'uniform', comma list, 'absent:<p0>,uniform' or 'absent:<p0>,<list>'")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayescfar", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="threshold for a given CRP and design Pfa")
    _add_common(p)
    p.add_argument("--crp", help="comma-separated cell intensities")
    p.add_argument("--crp-file", dest="crp_file", help="file of whitespace/comma separated intensities")

    for name, help_ in (("pfa-sweep", "Monte Carlo false-alarm rate over a lambda/ICR grid"),
                        ("pd-curve", "Monte Carlo detection probability over an SCR grid")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        p.add_argument("--lambda-grid", dest="lambda_grid")
        p.add_argument("--icr-db", dest="icr_db", help="comma list; 'none' for no interferer")
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out")
        p.add_argument("--format", choices=["csv", "json-lines"])
        if name == "pd-curve":
            p.add_argument("--scr-grid-db", dest="scr_grid_db")

    p = sub.add_parser("validate", help="run the quadrature/reduction oracle suite")
    p.add_argument("--config")
    p.add_argument("--instances", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, explicit = _settings(args)
        if args.command == "threshold":
            return cmd_threshold(cfg, explicit)
        if args.command == "validate":
            return cmd_validate(cfg, args.perturb)
        exp = _experiment(cfg, args.command)
        if args.command == "pfa-sweep":
            return cmd_pfa_sweep(exp)
        return cmd_pd_curve(exp)
    except (ConfigError, BayesCfarError, ValueError) as exc:
        print(f"bayescfar: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"bayescfar: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
