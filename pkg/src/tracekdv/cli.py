"""Batch front-end: ``tracekdv {forward,invert,evolve,verify,converge}``.

Each run reads a JSON config, writes CSV field data and a JSON report into
the output directory and exits with one of the codes below. Reports are
deterministic for a fixed config and seed; wall-clock timings go to a
separate ``timings.json`` so that ``report.json`` stays reproducible.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import tempfile
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from ._validation import check_methods, check_points, check_times
from .exceptions import ConfigError, NumericalGuardError, ParameterError, TraceKdVError
from .forward import ScatteringData, compute_TR
from .grids import KGrid, PotentialSpec, XGrid, sample_potential
from .kdv import conserved_check, kdv_solve, peak_track, positivity_sweep
from .reconstruction import METHODS, cross_table, reconstruct
from .verify import (
    derivative_order,
    perturbation_ladder,
    pv_family,
    q0_gap,
    quadratic_form_gap,
    refinement_ladder,
    relative_l2,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
EXIT_CHECK_FAILED = 5

COMMANDS = ("forward", "invert", "evolve", "verify", "converge")

DEFAULT_TOLERANCES = {
    "unitarity": 1e-6,
    "roundtrip": 1e-3,
    "cross": 1e-3,
    "drift": 1e-3,
    "positivity": 1e-6,
    "pv": 1e-6,
    "derivative_order": 1.9,
    "representation": 1e-5,
}

_SECTIONS = {
    "kgrid": {"K": 16.0, "N": 2048},
    "xgrid": {"x_min": -20.0, "x_max": 20.0, "n": 2001},
    "eval": {"x_min": -10.0, "x_max": 10.0, "n": 81},
    "ladder": {"N": [512, 1024, 2048], "K": None},
    "perturbation": {"amplitude": 0.1, "halvings": 3},
    "positivity": {"x_min": -8.0, "x_max": 8.0, "nx": 21, "t_max": 1.0, "nt": 5},
}

_TOP = {
    "schema_version", "potential", "scattering_data", "kgrid", "xgrid", "eval", "times", "methods",
    "alpha", "q0_method", "representation", "tolerances", "ladder", "perturbation", "positivity",
    "output_dir", "threads", "seed",
}


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    """Fully resolved run plan; see :func:`parse_config` for the JSON layout."""

    potential: Optional[dict] = None
    scattering_data: Optional[str] = None
    kgrid: dict = field(default_factory=lambda: dict(_SECTIONS["kgrid"]))
    xgrid: dict = field(default_factory=lambda: dict(_SECTIONS["xgrid"]))
    eval: dict = field(default_factory=lambda: dict(_SECTIONS["eval"]))
    times: list = field(default_factory=lambda: [0.0])
    methods: list = field(default_factory=lambda: ["trace2"])
    alpha: float = 1.0
    q0_method: str = "kernel"
    representation: str = "kernel"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    ladder: dict = field(default_factory=lambda: dict(_SECTIONS["ladder"]))
    perturbation: dict = field(default_factory=lambda: dict(_SECTIONS["perturbation"]))
    positivity: dict = field(default_factory=lambda: dict(_SECTIONS["positivity"]))
    output_dir: str = "out"
    threads: int = 1
    seed: int = 0
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    # resolved objects
    def kgrid_obj(self) -> KGrid:
        return KGrid(self.kgrid["K"], self.kgrid["N"])

    def xgrid_obj(self) -> XGrid:
        return XGrid(self.xgrid["x_min"], self.xgrid["x_max"], self.xgrid["n"])

    def eval_points(self) -> np.ndarray:
        e = self.eval
        return np.linspace(e["x_min"], e["x_max"], e["n"])

    def spec(self) -> PotentialSpec:
        if self.potential is None:
            raise ConfigError("potential: this command needs a potential")
        return PotentialSpec.from_dict(self.potential)


def _number(value, key: str, integer: bool = False, positive: bool = False, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite")
    if integer:
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if positive and value <= 0:
        raise ConfigError(f"{key}: must be positive, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value!r}")
    return value


def _section(raw, name: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected an object")
    defaults = _SECTIONS[name] if name in _SECTIONS else DEFAULT_TOLERANCES
    unknown = sorted(set(raw) - set(defaults))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}: unknown key (allowed: {sorted(defaults)})")
    out = dict(defaults)
    out.update(raw)
    return out


def _near_key(text: str, pos: int) -> str:
    keys = re.findall(r'"([^"\\]+)"\s*:', text[:pos])
    return f" (after key {keys[-1]!r})" if keys else ""


def load_config_text(text: str, source: str = "<config>") -> dict:
    """Decode JSON, reporting line, column and the nearest key on failure."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{source}:{err.lineno}:{err.colno}: {err.msg}{_near_key(text, err.pos)}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return raw


def parse_config(raw: dict, base: Optional[Path] = None) -> RunConfig:
    """Validate a decoded config and resolve defaults.

    Unknown keys at any level raise :class:`ConfigError` naming the key.
    """
    unknown = sorted(set(raw) - _TOP)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    cfg = RunConfig()
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported value {version!r} (expected {SCHEMA_VERSION})")
    if "potential" in raw:
        pot = raw["potential"]
        if not isinstance(pot, dict):
            raise ConfigError("potential: expected an object")
        try:
            PotentialSpec.from_dict(pot)
        except ParameterError as err:
            raise ConfigError(f"potential: {err}") from None
        cfg.potential = dict(pot)
    if "scattering_data" in raw:
        sd = raw["scattering_data"]
        if not isinstance(sd, str):
            raise ConfigError("scattering_data: expected a file path")
        path = Path(sd)
        if base is not None and not path.is_absolute():
            path = base / path
        cfg.scattering_data = str(path)

    kg = _section(raw.get("kgrid", {}), "kgrid")
    cfg.kgrid = {"K": _number(kg["K"], "kgrid.K", positive=True),
                 "N": _number(kg["N"], "kgrid.N", integer=True, positive=True)}
    for name in ("xgrid", "eval"):
        s = _section(raw.get(name, {}), name)
        lo, hi = _number(s["x_min"], f"{name}.x_min"), _number(s["x_max"], f"{name}.x_max")
        n = _number(s["n"], f"{name}.n", integer=True, minimum=2)
        if hi <= lo:
            raise ConfigError(f"{name}.x_max: must exceed x_min")
        setattr(cfg, name, {"x_min": lo, "x_max": hi, "n": n})

    if "times" in raw:
        ts = raw["times"]
        if not isinstance(ts, list) or not ts:
            raise ConfigError("times: expected a non-empty list")
        cfg.times = [_number(t, f"times[{i}]", minimum=0.0) for i, t in enumerate(ts)]
    if "methods" in raw:
        ms = raw["methods"]
        if not isinstance(ms, list):
            raise ConfigError("methods: expected a list")
        try:
            cfg.methods = list(check_methods(ms))
        except ParameterError as err:
            raise ConfigError(f"methods: {err}") from None
    if "alpha" in raw:
        cfg.alpha = _number(raw["alpha"], "alpha", positive=True)
    if "q0_method" in raw:
        if raw["q0_method"] not in ("kernel", "regularized"):
            raise ConfigError(f"q0_method: expected 'kernel' or 'regularized', got {raw['q0_method']!r}")
        cfg.q0_method = raw["q0_method"]
    if "representation" in raw:
        if raw["representation"] not in ("kernel", "spectral"):
            raise ConfigError(f"representation: expected 'kernel' or 'spectral', got {raw['representation']!r}")
        cfg.representation = raw["representation"]

    tol = _section(raw.get("tolerances", {}), "tolerances")
    cfg.tolerances = {k: _number(v, f"tolerances.{k}", positive=True) for k, v in tol.items()}

    lad = _section(raw.get("ladder", {}), "ladder")
    Ns = lad["N"]
    if not isinstance(Ns, list):
        raise ConfigError("ladder.N: expected a list")
    Ns = [_number(n, f"ladder.N[{i}]", integer=True, positive=True) for i, n in enumerate(Ns)]
    if len(Ns) < 2:
        raise ConfigError("ladder.N: a convergence ladder needs at least two rungs")
    Ks = lad["K"]
    if Ks is None:
        # hold the momentum spacing of the configured grid fixed, so the window grows with N
        dk = 2 * cfg.kgrid["K"] / cfg.kgrid["N"]
        Ks = [n * dk / 2 for n in Ns]
    elif not isinstance(Ks, list) or len(Ks) != len(Ns):
        raise ConfigError("ladder.K: expected a list as long as ladder.N")
    Ks = [_number(k, f"ladder.K[{i}]", positive=True) for i, k in enumerate(Ks)]
    rungs = list(zip(Ks, Ns))
    if any(b[0] < a[0] or (b[0] == a[0] and b[1] <= a[1]) for a, b in zip(rungs, rungs[1:])):
        raise ConfigError("ladder: rungs must refine monotonically")
    cfg.ladder = {"N": Ns, "K": Ks}

    pert = _section(raw.get("perturbation", {}), "perturbation")
    cfg.perturbation = {"amplitude": _number(pert["amplitude"], "perturbation.amplitude", positive=True),
                        "halvings": _number(pert["halvings"], "perturbation.halvings", integer=True, minimum=1)}
    pos = _section(raw.get("positivity", {}), "positivity")
    cfg.positivity = {"x_min": _number(pos["x_min"], "positivity.x_min"),
                      "x_max": _number(pos["x_max"], "positivity.x_max"),
                      "nx": _number(pos["nx"], "positivity.nx", integer=True, minimum=1),
                      "t_max": _number(pos["t_max"], "positivity.t_max", minimum=0.0),
                      "nt": _number(pos["nt"], "positivity.nt", integer=True, minimum=1)}
    if "output_dir" in raw:
        if not isinstance(raw["output_dir"], str):
            raise ConfigError("output_dir: expected a string")
        cfg.output_dir = raw["output_dir"]
    if "threads" in raw:
        cfg.threads = _number(raw["threads"], "threads", integer=True, positive=True)
    if "seed" in raw:
        cfg.seed = _seed(raw["seed"], "seed")
    return cfg


def _seed(value, key: str = "--seed") -> int:
    v = _number(value, key, integer=True, minimum=0)
    if v >= 2**64:
        raise ConfigError(f"{key}: must fit in 64 bits")
    return v


def read_config(path) -> RunConfig:
    """Load and validate a config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise IOError(f"cannot read config {path}: {err.strerror}") from None
    return parse_config(load_config_text(text, str(path)), base=path.parent)


# ----------------------------------------------------------------- output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return {"real": _jsonable(obj.real), "imag": _jsonable(obj.imag)}
    return obj


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, obj: dict) -> None:
    """UTF-8 JSON with sorted keys, written atomically."""
    payload = {"schema_version": SCHEMA_VERSION, **obj}
    _atomic_write(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False,
                                   allow_nan=False) + "\n")


def write_csv(path: Path, columns: dict) -> None:
    """Header row plus rows of 17-significant-digit floats, written atomically.

    A leading ``# schema_version=N`` comment line carries the format version.
    """
    names = list(columns)
    cols = [np.asarray(columns[n], dtype=float) for n in names]
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(f"{v:.17g}" for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_csv(path) -> dict:
    """Inverse of :func:`write_csv`."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != f"# schema_version={SCHEMA_VERSION}":
            raise ConfigError(f"{path}: unsupported CSV schema line {first!r}")
        names = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {n: data[:, i] for i, n in enumerate(names)}


def _report(cmd: str, cfg: RunConfig, results: dict) -> dict:
    return {"command": cmd, "artifact_version": __version__, "config": cfg.to_dict(), "results": results}


# ------------------------------------------------------------- commands


def _scattering_data(cfg: RunConfig) -> ScatteringData:
    if cfg.scattering_data is not None:
        path = Path(cfg.scattering_data)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as err:
            raise IOError(f"cannot read scattering data {path}: {err.strerror}") from None
        raw = load_config_text(text, str(path))
        if raw.get("schema_version") != SCHEMA_VERSION or "data" not in raw:
            raise ConfigError(f"scattering_data: {path} is not a scattering-data file")
        return ScatteringData.from_dict(raw["data"])
    return compute_TR(sample_potential(cfg.spec(), cfg.xgrid_obj()), cfg.kgrid_obj(), threads=cfg.threads)[0]


def cmd_forward(cfg: RunConfig, out: Path) -> int:
    """Scattering data of the configured potential."""
    p = sample_potential(cfg.spec(), cfg.xgrid_obj())
    sd, left = compute_TR(p, cfg.kgrid_obj(), threads=cfg.threads)
    write_csv(out / "scattering.csv", {
        "k": sd.k, "R_real": sd.R.real, "R_imag": sd.R.imag, "T_real": sd.T.real, "T_imag": sd.T.imag,
        "R_left_real": left.R.real, "R_left_imag": left.R.imag})
    states = [{"kappa": k, "c2": c} for k, c in sd.bound_states]
    write_json(out / "bound_states.json", {"side": sd.side, "bound_states": states})
    write_json(out / "scattering_data.json", {"data": sd.to_dict()})
    results = {"bound_states": states, "unitarity_residual": sd.unitarity_residual(),
               "symmetry_residual": sd.symmetry_residual(), "max_abs_R": float(np.max(np.abs(sd.R)))}
    write_json(out / "report.json", _report("forward", cfg, results))
    return EXIT_OK


def cmd_invert(cfg: RunConfig, out: Path) -> int:
    """Reconstructions by every selected method and their cross table."""
    sd = _scattering_data(cfg)
    x = cfg.eval_points()
    res = reconstruct(sd, x, cfg.methods, alpha=cfg.alpha)
    ref = cfg.spec()(x) if cfg.potential is not None else None
    per = {}
    for m, r in res.items():
        write_csv(out / f"q_{m}.csv", r.to_columns())
        entry = {"max_tail": float(np.max(r.tail)), "imag_residue": r.imag_residue}
        if ref is not None:
            entry["sup_error"] = float(np.max(np.abs(r.q - ref)))
            entry["rel_l2_error"] = relative_l2(x, r.q, ref)
        per[m] = entry
    results = {"methods": per, "cross_table": cross_table(res)}
    write_json(out / "report.json", _report("invert", cfg, results))
    return EXIT_OK


def cmd_evolve(cfg: RunConfig, out: Path) -> int:
    """``q(x, t)`` for each configured time with conservation diagnostics."""
    sd = _scattering_data(cfg)
    x = cfg.eval_points()
    ts = check_times(cfg.times)
    prof = kdv_solve(sd, x, ts, q0_method=cfg.q0_method)
    for i, q in enumerate(prof.q):
        write_csv(out / f"q_t{i:03d}.csv", {"x": x, "q": q})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sets = conserved_check(prof, sd)
    peaks = peak_track(prof)
    results = {
        "times": ts,
        "files": [f"q_t{i:03d}.csv" for i in range(ts.size)],
        "conserved": [c.to_dict() for c in sets],
        "max_rel_drift_q2": float(max(abs(c.drift_q2) for c in sets)),
        "peaks": peaks,
        "peak_velocity": float(np.polyfit(ts, peaks, 1)[0]) if ts.size > 1 else None,
        "warnings": [str(w.message) for w in caught],
    }
    write_json(out / "report.json", _report("evolve", cfg, results))
    return EXIT_OK


def _check(name: str, value: float, tol: float, below: bool = True) -> dict:
    ok = value <= tol if below else value >= tol
    return {"name": name, "value": float(value), "tolerance": float(tol),
            "passed": bool(ok and math.isfinite(value))}


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    """Oracle and property checks for the configured potential."""
    tol = cfg.tolerances
    spec = cfg.spec()
    sd = compute_TR(sample_potential(spec, cfg.xgrid_obj()), cfg.kgrid_obj(), threads=cfg.threads)[0]
    x = cfg.eval_points()
    ref = spec(x)
    checks = [_check("unitarity", sd.unitarity_residual(), tol["unitarity"])]

    res = reconstruct(sd, x, cfg.methods, alpha=cfg.alpha)
    for m, r in res.items():
        checks.append(_check(f"roundtrip.{m}", relative_l2(x, r.q, ref), tol["roundtrip"]))
    if len(res) > 1:
        checks.append(_check("cross_methods", max(cross_table(res).values()), tol["cross"]))

    pos = cfg.positivity
    px = np.linspace(pos["x_min"], pos["x_max"], pos["nx"])
    pt = np.linspace(0.0, pos["t_max"], pos["nt"])
    lam = positivity_sweep(sd, px, pt)
    write_csv(out / "positivity.csv", {"t": np.repeat(pt, px.size), "x": np.tile(px, pt.size),
                                       "lambda_min": lam.ravel()})
    checks.append(_check("positivity", float(lam.min()), tol["positivity"], below=False))

    kg = cfg.kgrid_obj()
    pv = pv_family(KGrid(2 * kg.K, 2 * kg.N), cfg.seed)
    checks.append(_check("pv_lemma", float(pv.max()), tol["pv"]))

    order, errs = derivative_order(sd, rep=cfg.representation)
    checks.append(_check("derivative_order", order, tol["derivative_order"], below=False))
    checks.append(_check("quadratic_forms", quadratic_form_gap(sd), tol["representation"]))
    qx = np.linspace(max(-6.0, x[0]), min(6.0, x[-1]), 7)
    checks.append(_check("q0_representations", q0_gap(sd, qx), tol["representation"]))

    ts = check_times(cfg.times)
    if ts.size > 1:
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            sets = conserved_check(kdv_solve(sd, x, ts, q0_method=cfg.q0_method), sd)
        checks.append(_check("conservation_q2", max(abs(c.drift_q2) for c in sets), tol["drift"]))

    ok = all(c["passed"] for c in checks)
    results = {"checks": checks, "passed": ok, "pv_residuals": pv, "derivative_errors": errs}
    write_json(out / "report.json", _report("verify", cfg, results))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_converge(cfg: RunConfig, out: Path) -> int:
    """Refinement ladder and shrinking-perturbation study."""
    spec = cfg.spec()
    x = cfg.eval_points()
    rows = refinement_ladder(spec, cfg.xgrid_obj(), x, cfg.ladder["N"], cfg.ladder["K"], threads=cfg.threads)
    write_csv(out / "convergence.csv", {k: [r[k] for r in rows] for k in ("K", "N", "sup_error", "rel_l2_error")})
    errs = [r["sup_error"] for r in rows]
    refine_ok = all(b < a for a, b in zip(errs, errs[1:]))

    center = float(np.random.default_rng(cfg.seed).uniform(-1.0, 1.0))
    pert = perturbation_ladder(spec, cfg.xgrid_obj(), cfg.kgrid_obj(), cfg.perturbation["amplitude"],
                               cfg.perturbation["halvings"], center, threads=cfg.threads)
    write_csv(out / "perturbation.csv", {k: [r[k] for r in pert] for k in ("epsilon", "dq_weighted_l1", "dR_l2")})
    dR = [r["dR_l2"] for r in pert]
    pert_ok = all(b < a for a, b in zip(dR, dR[1:]))
    results = {"ladder": rows, "trace2_strictly_decreasing": refine_ok, "perturbation_center": center,
               "perturbation": pert, "dR_strictly_decreasing": pert_ok}
    write_json(out / "report.json", _report("converge", cfg, results))
    return EXIT_OK if refine_ok and pert_ok else EXIT_CHECK_FAILED


_DISPATCH = {"forward": cmd_forward, "invert": cmd_invert, "evolve": cmd_evolve, "verify": cmd_verify,
             "converge": cmd_converge}


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracekdv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=_DISPATCH[name].__doc__.splitlines()[0])
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--threads", type=int, help="worker and BLAS threads")
        sp.add_argument("--seed", type=int, help="seed for randomized test families")
    return parser


def run(argv=None) -> int:
    """Parse arguments, execute one command and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    try:
        cfg = read_config(args.config)
        if args.threads is not None:
            cfg.threads = _number(args.threads, "--threads", integer=True, positive=True)
        if args.seed is not None:
            cfg.seed = _seed(args.seed)
        if args.out is not None:
            cfg.output_dir = args.out
        out = Path(cfg.output_dir)
        check_points(cfg.eval_points(), "eval")
        start = time.perf_counter()
        with threadpool_limits(limits=cfg.threads):
            code = _DISPATCH[args.command](cfg, out)
        write_json(out / "timings.json", {"command": args.command,
                                          "wall_seconds": time.perf_counter() - start})
        return code
    except (ConfigError, ParameterError) as err:
        print(f"tracekdv: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as err:
        print(f"tracekdv: numerical guard: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as err:
        print(f"tracekdv: I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    except TraceKdVError as err:  # pragma: no cover
        print(f"tracekdv: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
