"""Config parsing, subcommands, manifests and plot scripts.

Config files use INI sections (parsed by configparser).  Every key is
declared in SCHEMA with its type, default and one line of help; anything
else is rejected with a section.key message.  ``fplap config-reference``
prints the whole table.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import os
import sys
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__, _kernels
from .errors import NumericalError, ValidationError

log = logging.getLogger("fplap")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
REQUIRED = object()


# ------------------------------------------------------------------ schema

def _floats(text: str) -> Tuple[float, ...]:
    items = [t for t in text.replace(";", ",").split(",") if t.strip()]
    return tuple(float(t) for t in items)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str) -> Optional[float]:
    t = text.strip().lower()
    return None if t in ("", "none", "auto") else float(t)


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    help: str


SCHEMA: Dict[str, Dict[str, Key]] = {
    "params": {
        "N": Key(_int, REQUIRED, "space dimension"),
        "s": Key(float, REQUIRED, "fractional order, 0 < s < 1"),
        "p": Key(float, REQUIRED, "nonlinearity exponent, 1 < p < 2"),
    },
    "grid": {
        "R": Key(float, 200.0, "half width of the grid [-R, R]"),
        "n": Key(_int, 4001, "number of nodes (odd)"),
    },
    "evolve": {
        "t_end": Key(float, 1.0, "final time"),
        "dt_safety": Key(float, 0.9, "fraction of the monotone time step bound, in (0,1]"),
        "delta": Key(_opt_float, None, "regularisation of Phi near 0; auto = grid spacing"),
        "closure": Key(str, "power", "tail closure: power, zero or frozen"),
        "closure_q": Key(_opt_float, None, "power tail exponent; auto = regime decay exponent"),
        "snapshot_times": Key(_floats, (), "comma separated snapshot times"),
        "extinction_threshold": Key(float, 1e-3, "stop when mass < threshold * initial mass"),
        "energy_every": Key(_int, 0, "energy column cadence in steps; 0 disables"),
    },
    "initial": {
        "kind": Key(str, "bump", "bump, closed_form or csv"),
        "mass": Key(float, 1.0, "bump mass"),
        "radius": Key(float, 1.0, "bump radius"),
        "center": Key(float, 0.0, "bump centre"),
        "path": Key(str, "", "CSV file with columns x,u (kind = csv)"),
        "form": Key(str, "vss", "closed form name (kind = closed_form)"),
        "C1": Key(_opt_float, None, "closed form amplitude C1"),
        "C_inf": Key(_opt_float, None, "VSS amplitude; auto = quadrature value"),
        "T": Key(float, 1.0, "VSS time offset"),
        "cap": Key(str, "value", "origin treatment of singular forms: value or zeta"),
    },
    "profile": {
        "method": Key(str, "zoom", "zoom or direct"),
        "tol": Key(float, 1e-3, "convergence tolerance on the relative sup distance"),
        "eps": Key(float, 1e-2, "zoom: delta = eps * max u"),
        "dt_safety": Key(float, 1.0, "fraction of the monotone step bound"),
        "clock": Key(str, "exact", "zoom age: exact (tracked) or estimate (alpha u(0)/Lu(0))"),
        "renormalise": Key(_bool, True, "zoom: restore the initial total mass after each compression"),
        "min_steps": Key(_int, 50, "zoom: Euler steps per compression, at least"),
        "min_cycles": Key(_int, 10, "zoom: compressions before convergence may be declared"),
        "max_cycles": Key(_int, 200, "zoom: compression budget"),
        "t_first": Key(float, 1e-2, "direct: first snapshot time"),
        "t_end": Key(float, 10.0, "direct: last snapshot time"),
        "window": Key(_floats, (20.0, 200.0), "tail fit window r_lo, r_hi"),
    },
    "constants": {
        "N_values": Key(_floats, (1.0,), "dimensions to tabulate"),
        "s_values": Key(_floats, (0.5,), "s values to tabulate"),
        "p_values": Key(_floats, (1.2, 4.0 / 3.0, 1.4), "p values to tabulate"),
        "tol": Key(float, 1e-9, "quadrature tolerance"),
    },
    "barrier": {
        "form": Key(str, "barrierlower", "barrierlower, barrierupper, barriercritical or powerpc"),
        "C1": Key(_opt_float, None, "amplitude; auto = factor * C1*"),
        "factor": Key(float, 2.0, "C1 = factor * C1* when C1 is auto"),
        "annulus": Key(_floats, (2.0, 50.0), "r_lo, r_hi"),
        "sign": Key(str, "super", "super or sub"),
        "tol": Key(float, 0.0, "relative tolerance of the verdict"),
        "cap": Key(str, "zeta", "origin treatment: value or zeta"),
    },
    "verify": {
        "suite": Key(str, "default", "default or quick"),
    },
    "sweep": {
        "command": Key(str, "evolve", "subcommand run per point"),
        "key": Key(str, "params.p", "section.key to vary"),
        "values": Key(_floats, (), "values of the varied key"),
        "workers": Key(_int, 1, "worker processes"),
    },
    "output": {
        "plot": Key(_bool, True, "emit gnuplot scripts"),
        "snapshots": Key(_bool, True, "write snapshot CSV files"),
    },
}


def config_reference() -> str:
    out = io.StringIO()
    out.write("# fplap configuration reference (INI sections; '#' or ';' comments)\n")
    for sec, keys in SCHEMA.items():
        out.write(f"\n[{sec}]\n")
        for name, k in keys.items():
            if k.default is REQUIRED:
                dflt = "<required>"
            elif k.default is None:
                dflt = "auto"
            elif isinstance(k.default, tuple):
                dflt = ", ".join(f"{v:g}" for v in k.default)
            else:
                dflt = f"{k.default:g}" if isinstance(k.default, float) else str(k.default)
            out.write(f"# {k.help}\n{name} = {dflt}\n")
    return out.getvalue()


Config = Dict[str, Dict[str, Any]]


def parse_config_text(text: str, source: str = "<config>", require_params: bool = True) -> Config:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (N, R, C1)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ValidationError(f"{source}: {e}") from None
    cfg: Config = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ValidationError(f"{source}: unknown section [{sec}]; expected one of {sorted(SCHEMA)}")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ValidationError(f"{source}: unknown key {sec}.{key}")
            try:
                cfg.setdefault(sec, {})[key] = SCHEMA[sec][key].parse(raw)
            except ValueError as e:
                raise ValidationError(f"{source}: invalid value for {sec}.{key}: {e}") from None
    for sec, keys in SCHEMA.items():
        d = cfg.setdefault(sec, {})
        for key, k in keys.items():
            if key not in d:
                if k.default is REQUIRED:
                    if require_params:
                        raise ValidationError(f"{source}: missing required key {sec}.{key}")
                    continue
                d[key] = k.default
    if require_params:
        _check_params(cfg, source)
    return cfg


def _check_params(cfg: Config, source: str):
    from .params import Params

    p = cfg["params"]
    try:
        Params(p["N"], p["s"], p["p"])
    except ValidationError as e:
        raise ValidationError(f"{source}: params: {e}") from None
    from .grid_field import Grid

    try:
        Grid(cfg["grid"]["R"], cfg["grid"]["n"])
    except ValidationError as e:
        raise ValidationError(f"{source}: grid: {e}") from None


def parse_config(path, require_params: bool = True) -> Config:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file {path} does not exist")
    return parse_config_text(path.read_text(), str(path), require_params)


def default_config(**params) -> Config:
    body = "[params]\n" + "".join(f"{k} = {v}\n" for k, v in params.items())
    return parse_config_text(body)


# ------------------------------------------------------------- builders

def make_params(cfg: Config):
    from .params import Params

    p = cfg["params"]
    return Params(p["N"], p["s"], p["p"])


def make_grid(cfg: Config):
    from .grid_field import Grid

    return Grid(cfg["grid"]["R"], cfg["grid"]["n"])


def make_closure(cfg: Config):
    from .operator import make_closure as mk

    e = cfg["evolve"]
    return mk(e["closure"], e["closure_q"])


def make_initial(cfg: Config, grid, params):
    from .exact_solutions import closed_form, discretize
    from .grid_field import field_from_csv
    from .selfsim import bump

    ini = cfg["initial"]
    kind = ini["kind"].lower()
    if kind == "bump":
        return bump(grid, ini["mass"], ini["radius"], ini["center"])
    if kind == "csv":
        if not ini["path"]:
            raise ValidationError("initial.path is required for kind = csv")
        f = field_from_csv(ini["path"])
        if f.grid != grid:
            raise ValidationError(f"initial.path grid (R={f.grid.R}, n={f.grid.n}) differs from [grid]")
        return f
    if kind == "closed_form":
        kw = {}
        form = ini["form"].lower()
        if form.startswith("barrier"):
            kw["C1"] = ini["C1"]
            if kw["C1"] is None:
                raise ValidationError("initial.C1 is required for barrier forms")
        if form == "vss":
            kw = {"C_inf": ini["C_inf"], "T": ini["T"]}
        cf = closed_form(form, params, **kw)
        return discretize(cf, grid, 0.0, cap=ini["cap"], p=params.p)
    raise ValidationError(f"initial.kind must be bump, csv or closed_form, got {ini['kind']!r}")


def make_evolve_config(cfg: Config):
    from .evolve import EvolveConfig

    e = cfg["evolve"]
    return EvolveConfig(make_params(cfg), make_grid(cfg), e["t_end"], e["delta"], make_closure(cfg),
                        e["dt_safety"], tuple(e["snapshot_times"]), e["extinction_threshold"],
                        e["energy_every"])


def make_profile_config(cfg: Config):
    from .selfsim import ProfileConfig

    pr = cfg["profile"]
    return ProfileConfig(make_params(cfg), make_grid(cfg), method=pr["method"], tol=pr["tol"],
                         eps=pr["eps"], dt_safety=pr["dt_safety"], min_cycles=pr["min_cycles"],
                         max_cycles=pr["max_cycles"], renormalise=pr["renormalise"], clock=pr["clock"],
                         min_steps=pr["min_steps"], t_first=pr["t_first"], t_end=pr["t_end"])


# ------------------------------------------------------------ artifacts

class Manifest:
    def __init__(self, command: str, cfg: Config, out: Path):
        self.out = out
        self.data: Dict[str, Any] = {
            "command": command,
            "tool_version": __version__,
            "backend": _kernels.backend(),
            "threads": _kernels.threads(),
            "config": _jsonable(cfg),
            "outputs": [],
        }
        self.start = _time.perf_counter()
        try:
            from .params import derive_exponents

            self.data["exponents"] = _jsonable(derive_exponents(make_params(cfg)).__dict__)
        except (ValidationError, KeyError):
            pass

    def add(self, path: Path):
        self.data["outputs"].append(str(Path(path).relative_to(self.out)))

    def write_text(self, name: str, text: str) -> Path:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.add(path)
        return path

    def finish(self) -> Path:
        self.data["wall_time"] = _time.perf_counter() - self.start
        for rel in self.data["outputs"]:
            f = self.out / rel
            if not f.is_file() or f.stat().st_size == 0:
                raise NumericalError(f"manifest lists missing or empty output {rel}")
        path = self.out / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def trajectory_plot_script(csv_name: str, title: str) -> str:
    return f"""# gnuplot script: norms and mass along the run
set datafile separator ','
set key top right
set multiplot layout 1,2 title "{title}"
set xlabel 't'
set ylabel 'mass'
plot '{csv_name}' using 1:2 with lines title 'mass'
set logscale xy
set ylabel 'norm'
plot '{csv_name}' using 1:6 with lines title 'sup norm', \\
     '{csv_name}' using 1:3 with lines title 'L1'
unset multiplot
"""


def profile_plot_script(csv_name: str, title: str, slopes: Dict[str, float], anchor: float) -> str:
    """Linear panel and log-log panel with reference slope lines through
    the profile value at r = anchor."""
    refs = []
    for label, slope in slopes.items():
        refs.append(f"{anchor:.6g}**({-slope:.6g}) * F0 * x**({slope:.6g}) dashtype 2 title 'slope {label} = {slope:.4g}'")
    ref_plot = (", \\\n     " + ", \\\n     ".join(refs)) if refs else ""
    return f"""# gnuplot script: profile in linear and log-log scale
set datafile separator ','
set multiplot layout 1,2 title "{title}"
set xlabel 'y'
set ylabel 'F'
unset logscale
plot '{csv_name}' using 1:2 with lines title 'F'
set logscale xy
set xrange [0.1:*]
stats '{csv_name}' using (abs($1 - {anchor:.6g}) < 1e-9 ? $2 : 1/0) nooutput
F0 = STATS_max
plot '{csv_name}' using 1:($1 > 0 ? $2 : 1/0) with lines title 'F'{ref_plot}
unset multiplot
"""


# ------------------------------------------------------------ commands

def cmd_classify(cfg: Config, out: Path, args) -> int:
    from .params import classify_regime, decay_exponent, derive_exponents

    P = make_params(cfg)
    ex = derive_exponents(P)
    rep = {"N": P.N, "s": P.s, "p": P.p, "regime": classify_regime(P).value,
           "p_c": ex.p_c, "p_1": ex.p_1, "alpha": ex.alpha, "beta": ex.beta, "gamma": ex.gamma,
           "sigma": ex.sigma, "q_star": ex.q_star, "decay_exponent": decay_exponent(P)}
    text = json.dumps(_jsonable(rep), indent=2)
    print(text)
    man = Manifest("classify", cfg, out)
    man.write_text("classify.json", text + "\n")
    man.finish()
    return EXIT_OK


def constants_table(Ns, ss, ps, tol) -> Tuple[str, List[dict]]:
    from .constants import elliptic_power_action
    from .params import Params

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "s", "p", "A", "k", "C_inf", "err"])
    rows = []
    for N in Ns:
        for s in ss:
            for p in ps:
                rep = elliptic_power_action(Params(int(N), s, p), tol)
                rows.append(rep.as_dict())
                C = "" if rep.C_inf is None else f"{rep.C_inf:.12e}"
                w.writerow([int(N), f"{s:.12g}", f"{p:.12g}", f"{rep.A:.12e}", f"{rep.k:.12e}", C,
                            f"{rep.error_estimate:.3e}"])
    return buf.getvalue(), rows


def cmd_constants(cfg: Config, out: Path, args) -> int:
    c = cfg["constants"]
    tol = args.tol if args.tol is not None else c["tol"]
    text, rows = constants_table(c["N_values"], c["s_values"], c["p_values"], tol)
    man = Manifest("constants", cfg, out)
    man.write_text("constants.csv", text)
    man.data["quadrature_errors"] = [r["error_estimate"] for r in rows]
    man.finish()
    sys.stdout.write(text)
    return EXIT_OK


def cmd_evolve(cfg: Config, out: Path, args) -> int:
    from .evolve import run
    from .grid_field import field_to_csv

    ecfg = make_evolve_config(cfg)
    u0 = make_initial(cfg, ecfg.grid, ecfg.params)
    traj = run(ecfg, u0)
    man = Manifest("evolve", cfg, out)
    man.write_text("trajectory.csv", traj.to_csv())
    if cfg["output"]["snapshots"]:
        for k, f in enumerate(traj.snapshots):
            man.write_text(f"snapshot_{k:03d}.csv", field_to_csv(f))
    man.write_text("final.csv", field_to_csv(traj.final))
    if cfg["output"]["plot"]:
        man.write_text("trajectory.gp", trajectory_plot_script("trajectory.csv", "evolve"))
    man.data.update(dt=traj.dt, steps=traj.steps, run_wall_time=traj.wall_time,
                    extinction_time=traj.extinction_time, snapshot_times=[f.time for f in traj.snapshots])
    man.finish()
    log.info("evolve: %d steps, dt=%.3e, wall %.2fs", traj.steps, traj.dt, traj.wall_time)
    return EXIT_OK


def cmd_profile(cfg: Config, out: Path, args) -> int:
    from .diagnostics import tail_slope
    from .grid_field import field_from_csv
    from .params import decay_exponent, derive_exponents
    from .selfsim import convergence_report_json, extract_profile, profile_to_csv

    if args.tol is not None:
        cfg["profile"]["tol"] = args.tol
    pcfg = make_profile_config(cfg)
    if args.seed_profile:
        u0 = field_from_csv(args.seed_profile)
        if u0.grid != pcfg.grid:
            raise ValidationError("--seed-profile grid differs from [grid]")
    else:
        u0 = make_initial(cfg, pcfg.grid, pcfg.params)

    def progress(info):
        log.info("cycle %d  steps %d  distance %.3e  age %.5g", info["cycle"], info["steps"],
                 info["distance"], info["theta"])

    prof = extract_profile(u0, pcfg, progress)
    man = Manifest("profile", cfg, out)
    man.write_text("profile.csv", profile_to_csv(prof))
    lo, hi = cfg["profile"]["window"]
    fit = tail_slope(prof.field, (lo, hi))
    prof.convergence_report["tail_fit"] = fit.as_dict()
    man.write_text("convergence.json", convergence_report_json(prof) + "\n")
    if cfg["output"]["plot"]:
        P = pcfg.params
        ex = derive_exponents(P)
        slopes = {"fit": fit.slope, "-(N+sp)": -(P.N + P.sp)}
        if ex.p_c < P.p < ex.p_1:
            slopes["-sp/(2-p)"] = -ex.gamma
        h = pcfg.grid.h
        anchor = round(lo / h) * h
        man.write_text("profile.gp", profile_plot_script("profile.csv", f"p = {P.p:g}", slopes, anchor))
    rep = prof.convergence_report
    man.data.update(steps=rep.get("steps"), cycles=rep.get("cycles"), mass=prof.M, tail_fit=fit.as_dict())
    man.finish()
    print(json.dumps({"mass": prof.M, "tail_slope": fit.slope, "distances": rep["distances"][-3:]}))
    return EXIT_OK


def cmd_certify(cfg: Config, out: Path, args) -> int:
    from .constants import vss_amplitude
    from .exact_solutions import certify_barrier, closed_form

    P = make_params(cfg)
    g = make_grid(cfg)
    b = cfg["barrier"]
    form = b["form"].lower()
    man = Manifest("certify-barrier", cfg, out)
    kw = {}
    if form.startswith("barrier"):
        C1 = b["C1"]
        if C1 is None:
            if form != "barrierlower":
                raise ValidationError(f"barrier.C1 is required for {form}")
            tol = args.tol if args.tol is not None else 1e-9
            C1 = b["factor"] * vss_amplitude(P, tol)
            man.data["C1_star"] = C1 / b["factor"]
        kw["C1"] = C1
    cf = closed_form(form, P, **kw)
    if len(b["annulus"]) != 2:
        raise ValidationError("barrier.annulus needs two numbers")
    rep = certify_barrier(cf, P, g, tuple(b["annulus"]), b["sign"], b["tol"], cap=b["cap"])
    text = json.dumps(_jsonable(rep.as_dict()), indent=2)
    man.write_text("barrier.json", text + "\n")
    man.finish()
    print(text)
    return EXIT_OK


def cmd_verify(cfg: Config, out: Path, args) -> int:
    from .verify import run_suite

    results = run_suite(cfg["verify"]["suite"], tol=args.tol)
    man = Manifest("verify", cfg, out)
    text = json.dumps(_jsonable(results), indent=2)
    man.write_text("verify.json", text + "\n")
    man.finish()
    failed = [r for r in results if not r["passed"]]
    for r in results:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}: {r['detail']}")
    return EXIT_NUMERICAL if failed else EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "constants": cmd_constants,
    "evolve": cmd_evolve,
    "profile": cmd_profile,
    "certify-barrier": cmd_certify,
    "verify": cmd_verify,
}


def _sweep_point(job):
    command, cfg, out, tol, seed = job
    ns = argparse.Namespace(tol=tol, seed_profile=seed, threads=None)
    Path(out).mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[command](cfg, Path(out), ns)
    except ValidationError as e:
        log.error("%s: %s", out, e)
        return EXIT_VALIDATION
    except NumericalError as e:
        log.error("%s: %s", out, e)
        return EXIT_NUMERICAL


def cmd_sweep(cfg: Config, out: Path, args) -> int:
    sw = cfg["sweep"]
    if sw["command"] not in COMMANDS:
        raise ValidationError(f"sweep.command must be one of {sorted(COMMANDS)}")
    sec, _, key = sw["key"].partition(".")
    if sec not in SCHEMA or key not in SCHEMA[sec]:
        raise ValidationError(f"sweep.key {sw['key']!r} is not a config key")
    if not sw["values"]:
        raise ValidationError("sweep.values is empty")
    jobs = []
    for i, v in enumerate(sw["values"]):
        point = json.loads(json.dumps(cfg, default=list))
        point[sec][key] = SCHEMA[sec][key].parse(repr(v))
        _check_params(point, f"sweep point {i}")
        jobs.append((sw["command"], point, str(out / f"run_{i:03d}"), args.tol, args.seed_profile))
    workers = max(1, sw["workers"] if args.threads is None else args.threads)
    if workers == 1:
        codes = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            codes = list(ex.map(_sweep_point, jobs))
    man = Manifest("sweep", cfg, out)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value", "exit_code", "directory"])
    for i, (v, c) in enumerate(zip(sw["values"], codes)):
        w.writerow([i, f"{v:.12g}", c, f"run_{i:03d}"])
    man.write_text("sweep.csv", buf.getvalue())
    man.finish()
    return max(codes) if codes else EXIT_OK


COMMANDS["sweep"] = cmd_sweep


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fplap", description="Fractional p-Laplacian fast diffusion toolkit")
    ap.add_argument("--version", action="version", version=f"fplap {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["config-reference"]:
        sp = sub.add_parser(name)
        if name == "config-reference":
            continue
        sp.add_argument("--config", type=Path, help="INI config file")
        sp.add_argument("--out", type=Path, default=Path("fplap_out"), help="output directory")
        sp.add_argument("--seed-profile", type=Path, default=None, help="profile CSV used as initial data")
        sp.add_argument("--tol", type=float, default=None, help="override the command's tolerance")
        sp.add_argument("--threads", type=int, default=None, help="numba threads (sweep: workers)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "config-reference":
        sys.stdout.write(config_reference())
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.tol is not None and not (args.tol > 0):
            raise ValidationError("--tol must be > 0")
        if args.threads is not None:
            if args.threads < 1:
                raise ValidationError("--threads must be >= 1")
            _kernels.set_threads(args.threads)
        if args.config is not None:
            cfg = parse_config(args.config, require_params=args.command != "verify")
        elif args.command in ("verify",):
            cfg = parse_config_text("", require_params=False)
        else:
            raise ValidationError(f"{args.command} needs --config")
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out, args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        if e.history:
            print(f"history: {e.history[-5:]}", file=sys.stderr)
        return EXIT_NUMERICAL
