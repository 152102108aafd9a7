"""Command-line front end.

    waylab model NAME  [options]   verdict + noise report for one model (JSON)
    waylab sweep NAME  [options]   one row per parameter value (CSV or JSON)
    waylab check [--suite S]       acceptance suites, one PASS/FAIL line each

Exit codes: 0 success, 1 usage error, 2 expectation mismatch or failed
check, 3 I/O failure.  Every random draw derives from ``--seed``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import analysis as A
from . import position as P
from . import zoo
from .linalg import random_state

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_IO = 0, 1, 2, 3
POSITION = "position"
SUITE_NAMES = ("all", "wigner", "conservation", "ohira-pearle", "swap", "theorem",
               "inequalities", "distinguishability", "appendix", "position", "determinism")
ETA_TOL = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    command: str
    model_name: str | None = None
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    output_path: str | None = None
    format: str | None = None


def parse_int_list(text: str) -> list[int]:
    """"1..6" (inclusive range) or "1,2,3" or a mix such as "1,4..6"."""
    out = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise UsageError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise UsageError("empty integer list")
    return out


def parse_float_list(text: str) -> list[float]:
    try:
        vals = [float(p) for p in str(text).replace(" ", "").split(",") if p]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc
    if not vals:
        raise UsageError("empty number list")
    return vals


# config keys -> parameter names
_CONFIG_KEYS = {
    "n": "n", "dim": "dim", "scenario": "scenario", "lambda": "lambda", "ell": "ell",
    "profile": "profile", "grid.extent": "grid_extent", "grid.n": "grid", "grid": "grid",
    "suite": "suite", "seeds": "seeds", "optimize": "optimize",
}


def read_config(path: str) -> dict:
    """Settings from an INI file with a ``[run]`` and an optional ``[position]`` section."""
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path!r}: {exc}") from exc
    if not cp.has_section("run") and not cp.has_section(POSITION):
        raise UsageError(f"config {path!r} has no [run] section")
    out: dict = {}
    for section in ("run", POSITION):
        if not cp.has_section(section):
            continue
        for key, raw in cp.items(section):
            if key in ("command",):
                continue
            if key in ("model_name", "model"):
                out["model_name"] = raw
            elif key == "seed":
                out["seed"] = raw
            elif key in ("output_path", "out"):
                out["output_path"] = raw
            elif key == "format":
                out["format"] = raw
            elif key in _CONFIG_KEYS:
                out[_CONFIG_KEYS[key]] = raw
            else:
                raise UsageError(f"unknown config key {key!r} in [{section}]")
    return out


def _coerce(params: dict) -> dict:
    """Typed parameters from strings (config) or argparse values."""
    out = {}
    for key, val in params.items():
        if val is None:
            continue
        try:
            if key in ("n", "dim", "scenario"):
                out[key] = parse_int_list(val) if isinstance(val, str) else list(np.atleast_1d(val))
            elif key == "lambda":
                out[key] = parse_float_list(val) if isinstance(val, str) else list(val)
            elif key in ("ell", "grid_extent"):
                out[key] = float(val)
            elif key in ("grid", "seeds"):
                out[key] = int(val)
            elif key == "optimize":
                out[key] = val if isinstance(val, bool) else str(val).lower() in ("1", "true", "yes", "on")
            else:
                out[key] = val
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {val!r}") from exc
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    base = read_config(args.config) if args.config else {}
    cli = {k: getattr(args, k, None) for k in
           ("n", "dim", "scenario", "lambda", "ell", "profile", "grid_extent", "grid",
            "suite", "seeds")}
    if getattr(args, "optimize", False):
        cli["optimize"] = True
    merged = {k: v for k, v in base.items() if k not in ("model_name", "seed", "output_path", "format")}
    merged.update({k: v for k, v in cli.items() if v is not None})
    params = _coerce(merged)
    name = getattr(args, "name", None) or base.get("model_name")
    seed = args.seed if args.seed is not None else base.get("seed", 0)
    try:
        seed = int(seed)
    except ValueError as exc:
        raise UsageError(f"seed must be an integer, got {seed!r}") from exc
    if not 0 <= seed < 2 ** 64:
        raise UsageError("seed must fit in an unsigned 64-bit integer")
    fmt = args.format or base.get("format")
    if fmt is not None and fmt not in ("json", "csv"):
        raise UsageError(f"format must be json or csv, got {fmt!r}")
    cfg = RunConfig(args.command, name, params, seed, args.out or base.get("output_path"), fmt)
    if cfg.command in ("model", "sweep"):
        if not cfg.model_name:
            raise UsageError("a model name is required")
        if cfg.model_name != POSITION and cfg.model_name not in zoo.registry():
            raise UsageError(f"unknown model {cfg.model_name!r}; choose from "
                             f"{', '.join(zoo.registry() + [POSITION])}")
    suite = params.get("suite", "all")
    if cfg.command == "check" and suite not in SUITE_NAMES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITE_NAMES)}")
    return cfg


# ---------------------------------------------------------------- output

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def to_json(doc) -> str:
    return json.dumps(_clean(doc), indent=1, sort_keys=True) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _single(params: dict, key: str, default):
    vals = params.get(key)
    if vals is None:
        return default
    if len(vals) != 1:
        raise UsageError(f"--{key} takes a single value for this command")
    return vals[0]


# ---------------------------------------------------------------- model

def _model_kwargs(name: str, params: dict) -> dict:
    if name == "wigner-approx":
        return {"n": _single(params, "n", 3)}
    if name == "swap":
        return {"dim": _single(params, "dim", 2)}
    if name == "wigner-lastpage":
        return {"scenario": _single(params, "scenario", 1)}
    return {}


def _position_cfg(params: dict, lam: float, profile: str | None = None) -> P.PositionModelConfig:
    return P.PositionModelConfig(lam, params.get("ell", 1.0), profile or params.get("profile", "box"),
                                 params.get("grid_extent"), params.get("grid", 4096))


def model_report(cfg: RunConfig) -> tuple[dict, list[str]]:
    """Report document and the list of expectation mismatches."""
    p = cfg.parameters
    if cfg.model_name == POSITION:
        return position_report(cfg)
    kwargs = _model_kwargs(cfg.model_name, p)
    try:
        bundle = zoo.build(cfg.model_name, **kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    s = bundle.scheme
    verdict = A.way_verdict(s, bundle.observable, bundle.conserved, bundle.target, seed=cfg.seed)
    psi = random_state(np.random.default_rng(cfg.seed), s.system_dim)
    doc = {"model": bundle.name, "parameters": kwargs, "seed": cfg.seed,
           "verdict": verdict.to_dict(), "expected": bundle.expected,
           "scheme": bundle.to_dict(), "input_state": psi.amplitudes}
    for key, fn in (("noise", A.noise_report), ("repeatability", A.repeatability_report)):
        try:
            doc[key] = fn(s, bundle.observable, bundle.conserved, psi).to_dict()
        except A.BoundUndefined as exc:
            doc[key] = {"error": str(exc)}
    bad = bundle.mismatches(verdict)
    if bundle.name == "wigner-approx":
        n = kwargs["n"]
        info = {"eta_sq": bundle.info["eta_sq"], "theory_eta_sq": 1 / (2 * n - 1)}
        if p.get("optimize"):
            opt = zoo.optimize_wigner_error(n, seed=cfg.seed)
            info["optimizer"] = opt.to_dict()
            info["eta_sq"] = opt.eta_sq
            if abs(opt.eta_sq - 1 / (2 * n - 1)) > ETA_TOL:
                bad.append("eta_sq")
        doc["wigner"] = info
    doc["mismatches"] = bad
    return doc, bad


def position_report(cfg: RunConfig) -> tuple[dict, list[str]]:
    p = cfg.parameters
    lam = _single(p, "lambda", 1.0)
    box = _position_cfg(p, lam, "box")
    rc = box.with_profile("raised_cosine")
    d = P.density_e(box)
    alpha, beta = P.calibration_error(box), P.repeatability_error(box)
    oz = P.position_ozawa_check(rc, n_states=100, seed=cfg.seed)
    want_a, want_b = box.ell * np.exp(-lam), box.ell / np.expm1(lam)
    bad = []
    if abs(alpha - want_a) > d.grid.h:
        bad.append("alpha")
    if abs(beta - want_b) > d.grid.h:
        bad.append("beta")
    if oz.universal_min_slack < -1e-6:
        bad.append("universal_slack")
    doc = {"model": POSITION, "seed": cfg.seed,
           "parameters": {"lambda": lam, "ell": box.ell, "grid.n": box.grid_n,
                          "grid.extent": box.smearing_grid().extent},
           "kappa": box.kappa, "cell": d.grid.h, "density_integral": d.integral(),
           "alpha": alpha, "beta": beta,
           "expected": {"alpha": want_a, "beta": want_b},
           "ozawa_raised_cosine": oz.to_dict(), "mismatches": bad}
    return doc, bad


# ---------------------------------------------------------------- sweep

def sweep_table(cfg: RunConfig) -> tuple[list[str], list[list], list[str]]:
    """(header, rows, mismatches) for the sweep of one model."""
    p = cfg.parameters
    name = cfg.model_name
    if name == POSITION:
        lams = p.get("lambda", [1.0, 2.0, 4.0, 8.0])
        rows = P.stein_shimony_report(p.get("ell", 1.0), lams, p.get("grid", 4096),
                                      p.get("grid_extent"))
        return (list(P.CSV_HEADER),
                [[r.lam, r.alpha, r.beta, r.epsilon_sq, r.bound] for r in rows], [])
    if name == "wigner-approx":
        ns = p.get("n", list(range(1, 7)))
        etas = [zoo.optimize_wigner_error(n, seed=cfg.seed).eta_sq for n in ns]
        rows, bad = [], []
        for n, eta in zip(ns, etas):
            theory = 1 / (2 * n - 1)
            rows.append([int(n), float(eta), theory, abs(eta - theory)])
            if abs(eta - theory) > ETA_TOL:
                bad.append(f"eta_sq[n={n}]")
        return ["n", "eta_sq", "theory", "abs_error"], rows, bad
    key, values = {"swap": ("dim", p.get("dim", [2, 3, 4])),
                   "wigner-lastpage": ("scenario", p.get("scenario", [1, 2]))}.get(name, (None, [None]))
    header = ([key] if key else []) + list(zoo.VERDICT_FIELDS) + ["theorem_consistent", "mismatches"]
    rows, bad = [], []
    for v in values:
        bundle = zoo.build(name, **({key: v} if key else {}))
        r = A.way_verdict(bundle.scheme, bundle.observable, bundle.conserved, bundle.target,
                          seed=cfg.seed)
        mm = bundle.mismatches(r)
        bad += mm
        d = r.to_dict()
        rows.append(([v] if key else []) + [float(d[f]) for f in zoo.VERDICT_FIELDS]
                    + [int(d["theorem_consistent"]), ";".join(mm)])
    return header, rows, bad


# ---------------------------------------------------------------- check

def run_check(cfg: RunConfig):
    from . import acceptance
    p = cfg.parameters
    results = acceptance.run_suite(p.get("suite", "all"), seed=cfg.seed,
                                   seeds=p.get("seeds", 200), grid=p.get("grid", 4096))
    for c in results:
        print(c.line(), file=sys.stderr)
    return results


# ---------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="master seed for every random draw (int, default 0)")
    common.add_argument("--out", default=None, help="output file path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (model: json; sweep: csv; check: json)")
    common.add_argument("--config", default=None,
                        help="INI file with a [run] section; flags override its values")
    models = common.add_argument_group("model parameters")
    models.add_argument("--n", default=None,
                        help="wigner-approx grade count: int, list '1,2,3' or range '1..6'")
    models.add_argument("--dim", default=None, help="swap dimension: int or list")
    models.add_argument("--scenario", default=None, help="wigner-lastpage scenario 1 or 2")
    models.add_argument("--lambda", dest="lambda", default=None,
                        help="position coupling strength: float or list '1,2,4,8'")
    models.add_argument("--ell", type=float, default=None, help="apparatus half-width (float)")
    models.add_argument("--profile", choices=P.PROFILES, default=None,
                        help="apparatus profile for the position model")
    models.add_argument("--grid", type=int, default=None, help="grid points (int, default 4096)")
    models.add_argument("--grid-extent", dest="grid_extent", type=float, default=None,
                        help="half-width of the smearing grid (float, default auto)")
    models.add_argument("--optimize", action="store_true", default=False,
                        help="run the wigner-approx optimizer and compare with 1/(2n-1)")

    parser = _Parser(prog="waylab", description=__doc__.split("\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog="exit codes: 0 ok, 1 usage, 2 expectation mismatch, 3 I/O")
    parser.add_argument("--version", action="version", version=f"waylab {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    names = ", ".join(zoo.registry() + [POSITION])
    pm = sub.add_parser("model", parents=[common], help="analyse one model")
    pm.add_argument("name", nargs="?", default=None, help=f"one of: {names}")
    ps = sub.add_parser("sweep", parents=[common], help="sweep one model parameter")
    ps.add_argument("name", nargs="?", default=None, help=f"one of: {names}")
    pc = sub.add_parser("check", parents=[common], help="run acceptance suites")
    pc.add_argument("--suite", default=None, help=f"one of: {', '.join(SUITE_NAMES)}")
    pc.add_argument("--seeds", type=int, default=None,
                    help="number of schemes in the theorem ensemble (int, default 200)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = build_config(args)
        if cfg.command == "model":
            if cfg.format == "csv":
                raise UsageError("model reports are JSON only")
            doc, bad = model_report(cfg)
            emit(to_json(doc), cfg.output_path)
        elif cfg.command == "sweep":
            header, rows, bad = sweep_table(cfg)
            if cfg.format == "json":
                emit(to_json({"model": cfg.model_name, "seed": cfg.seed,
                              "rows": [dict(zip(header, r)) for r in rows]}), cfg.output_path)
            else:
                emit(to_csv(header, rows), cfg.output_path)
        else:
            results = run_check(cfg)
            bad = [c.name for c in results if not c.passed]
            if cfg.format == "csv":
                emit(to_csv(["criterion", "name", "passed", "measured", "expected", "tolerance"],
                            [[c.number, c.name, int(c.passed), float(c.measured),
                              float(c.expected), float(c.tolerance)] for c in results]),
                     cfg.output_path)
            else:
                emit(to_json({"seed": cfg.seed, "suite": cfg.parameters.get("suite", "all"),
                              "criteria": [c.to_dict() for c in results],
                              "all_passed": not bad}), cfg.output_path)
    except UsageError as exc:
        print(f"waylab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (P.GridResolutionError, ValueError, KeyError) as exc:
        print(f"waylab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"waylab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if bad:
        print(f"waylab: expectation mismatch: {', '.join(bad)}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
