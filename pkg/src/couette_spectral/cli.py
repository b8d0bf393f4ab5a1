"""Command-line front end: configuration, runs, sweeps and verification suites.

Exit codes: 0 success, 1 validation error, 2 integration failure, 3 failed check.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .checks import (ENERGY_SAMPLE_FIELDS, energy_samples, oracle_check, summarize_energy,
                     zero_mode_check)
from .diagnostics import RECORD_FIELDS
from .dynamics import FlowParams
from .errors import (ConfigError, ConfigSyntaxError, DomainError, HypothesisViolation,
                     IntegrationError, UnknownKeyError)
from .grid import build_grid, write_field_csv
from .initial_data import DataSpec, build_initial
from .integrator import THREADS_ENV, StepControl, evolve
from .rate_fit import bound_saturation, exp_rate, power_law_slope
from .symbols import audit_symbols, default_audit_grid

EXIT_OK, EXIT_VALIDATION, EXIT_INTEGRATION, EXIT_CHECK = 0, 1, 2, 3


# Configuration -----------------------------------------------------------

@dataclass
class GridConfig:
    K: int = 8
    eta_max: float = 32.0
    delta_eta: float = 0.25


@dataclass
class DataConfig:
    seed: int = 42
    k_band: list = field(default_factory=lambda: [1, None])
    eta_band: float | None = None
    spectrum_decay: float = 3.0
    target_norm: float = 1.0
    norm_index: float = 1.5


@dataclass
class RunConfig:
    gamma: float = 1.4
    nu: float = 0.01
    M: float = 1.0
    s: float = 1.5
    grid: GridConfig = field(default_factory=GridConfig)
    data: DataConfig = field(default_factory=DataConfig)
    constraint: bool = False
    t_end: float = 100.0
    dt_max: float = 0.1
    safety: float = 0.1
    output_times: list | None = None
    n_outputs: int = 201
    flush_tol: float = 0.0
    emit_snapshots: bool = False
    threads: int | str = 1
    allow_violation: bool = False

    def flow_params(self) -> FlowParams:
        return FlowParams(self.gamma, self.nu, self.M, self.s,
                          allow_violation=self.allow_violation)

    def grid_spec(self):
        return build_grid(self.grid.K, self.grid.eta_max, self.grid.delta_eta)

    def data_spec(self) -> DataSpec:
        d = self.data
        return DataSpec(seed=d.seed, k_band=tuple(d.k_band), eta_band=d.eta_band,
                        spectrum_decay=d.spectrum_decay, target_norm=d.target_norm,
                        norm_index=d.norm_index)

    def step_control(self) -> StepControl:
        return StepControl(t_end=self.t_end, output_times=self.output_times, dt_max=self.dt_max,
                           safety=self.safety, n_outputs=self.n_outputs)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {"grid": GridConfig, "data": DataConfig}

_HELP = {
    "gamma": "adiabatic exponent, > 1",
    "nu": "viscosity, in (0, 1)",
    "M": "Mach number, in (0, 1/nu]",
    "s": "Sobolev index of the energy weights",
    "grid.K": "largest |k|",
    "grid.eta_max": "eta truncation",
    "grid.delta_eta": "eta lattice spacing",
    "data.seed": "seed of the mode-keyed Gaussian draws",
    "data.k_band": "[k_min, k_max] of excited |k| (null: up to K)",
    "data.eta_band": "largest excited |eta| (null: whole lattice)",
    "data.spectrum_decay": "amplitude decay exponent in <k, eta>",
    "data.target_norm": "largest of the four H^s norms after rescaling",
    "data.norm_index": "Sobolev index of that normalisation",
    "constraint": "impose omega = -(rho + theta)/gamma",
    "t_end": "final time",
    "dt_max": "largest time step",
    "safety": "step-law safety factor in (0, 1]",
    "output_times": "explicit output instants starting at 0 (null: uniform)",
    "n_outputs": "number of uniform output instants when output_times is null",
    "flush_tol": "freeze unforced modes once below this fraction of their start size (0: off)",
    "emit_snapshots": "also write the final moving-frame field",
    "threads": "worker threads or \"auto\"; $%s overrides" % THREADS_ENV,
    "allow_violation": "run even if gamma, nu, M violate the stability hypotheses",
}


def _typed(value, default, key):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {value!r}", key)
        return value
    if isinstance(default, int) and key != "threads":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key)
        return float(value)
    return value


def _build(cls, raw: dict, prefix: str):
    if not isinstance(raw, dict):
        raise ConfigError("expected an object", prefix.rstrip("."))
    names = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in names:
            raise UnknownKeyError("unknown key", prefix + key)
    kwargs = {}
    defaults = cls()
    for f in dataclasses.fields(cls):
        if f.name not in raw:
            continue
        key = prefix + f.name
        if f.name in _SECTIONS and cls is RunConfig:
            kwargs[f.name] = _build(_SECTIONS[f.name], raw[f.name], key + ".")
        else:
            kwargs[f.name] = _typed(raw[f.name], getattr(defaults, f.name), key)
    return cls(**kwargs)


def _validate(cfg: RunConfig):
    if not cfg.gamma > 1:
        raise HypothesisViolation(f"gamma must exceed 1, got {cfg.gamma}", "gamma")
    if not 0 < cfg.nu < 1:
        raise HypothesisViolation(f"nu must lie in (0, 1), got {cfg.nu}", "nu")
    if not 0 < cfg.M <= 1.0 / cfg.nu:
        raise HypothesisViolation(f"M must lie in (0, 1/nu], got {cfg.M}", "M")


def _check_config(cfg: RunConfig) -> RunConfig:
    if cfg.allow_violation:
        if cfg.nu <= 0 or cfg.M <= 0:
            raise ConfigError("nu and M must stay positive", "nu" if cfg.nu <= 0 else "M")
    else:
        _validate(cfg)
    if cfg.threads != "auto" and (isinstance(cfg.threads, bool) or not isinstance(cfg.threads, int)
                                  or cfg.threads < 1):
        raise ConfigError("expected a positive integer or \"auto\"", "threads")
    if not isinstance(cfg.data.k_band, list) or len(cfg.data.k_band) != 2:
        raise ConfigError("expected [k_min, k_max]", "data.k_band")
    eb = cfg.data.eta_band
    if eb is not None and (isinstance(eb, bool) or not isinstance(eb, (int, float))):
        raise ConfigError("expected a number or null", "data.eta_band")
    if cfg.output_times is not None and not isinstance(cfg.output_times, list):
        raise ConfigError("expected a list of times", "output_times")
    if cfg.flush_tol < 0:
        raise ConfigError("must be nonnegative", "flush_tol")
    checks = (("grid", cfg.grid_spec), ("data", lambda: cfg.data_spec().resolved(cfg.grid_spec())),
              ("t_end", cfg.step_control), ("s", cfg.flow_params))
    for key, check in checks:
        try:
            check()
        except (DomainError, ValueError) as exc:
            raise ConfigError(str(exc), key) from None
    return cfg


def config_from_dict(raw: dict) -> RunConfig:
    return _check_config(_build(RunConfig, raw, ""))


def parse_config(text: str) -> RunConfig:
    """Validated :class:`RunConfig` from a JSON document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"malformed JSON: {exc}") from None
    return config_from_dict(raw)


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.as_dict(), indent=2, sort_keys=True)


# Runs --------------------------------------------------------------------

def _fmt(x) -> str:
    return "%.17g" % x


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(RECORD_FIELDS) + "\n")
        for r in records:
            fh.write(",".join(_fmt(getattr(r, name)) for name in RECORD_FIELDS) + "\n")


def read_records_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path} holds no rows")
    return {name: np.array([float(r[name]) for r in rows]) for name in rows[0]}


def simulate(cfg: RunConfig):
    grid = cfg.grid_spec()
    initial = build_initial(cfg.data_spec(), grid, cfg.gamma, cfg.constraint)
    return evolve(initial, cfg.step_control(), cfg.flow_params(), threads=cfg.threads,
                  flush_tol=cfg.flush_tol)


def run(cfg: RunConfig, csv_path, manifest_path, snapshot_dir=None):
    """Simulate ``cfg``, write the diagnostics CSV and the manifest; returns the trajectory."""
    start = time.perf_counter()
    traj = simulate(cfg)
    write_records_csv(traj.records, csv_path)
    if cfg.emit_snapshots and snapshot_dir is not None:
        Path(snapshot_dir).mkdir(parents=True, exist_ok=True)
        write_field_csv(traj.snapshot(len(traj.times) - 1), snapshot_dir, prefix="final_")
    manifest = dict(config=cfg.as_dict(), seed=cfg.data.seed, version=__version__,
                    wall_time=time.perf_counter() - start, n_steps=traj.n_steps,
                    csv=str(csv_path))
    Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return traj


def _safe(fit, *args, **kw):
    try:
        return fit(*args, **kw).exponent_or_rate
    except DomainError:
        return float("nan")


def fit_summary(records, cfg: RunConfig) -> dict:
    t = np.array([r.t for r in records])
    col = {name: np.array([getattr(r, name) for r in records]) for name in RECORD_FIELDS}
    T = cfg.t_end
    w = (min(10.0, 0.1 * T), T)
    out = {f"slope_{name}": _safe(power_law_slope, t, col[name], w)
           for name in ("norm_Pvx", "norm_Pvy", "norm_Qv", "norm_rho", "norm_theta")}
    out["rate_norm_Qv"] = _safe(exp_rate, t, col["norm_Qv"], (cfg.nu ** (-1.0 / 3.0), T), 0.5)
    return out


SUMMARY_PARAMS = ("gamma", "nu", "M", "s", "constraint", "t_end")
SUMMARY_FITS = ("slope_norm_Pvx", "slope_norm_Pvy", "slope_norm_Qv", "slope_norm_rho",
                "slope_norm_theta", "rate_norm_Qv")


def sweep(configs, out_dir) -> list[dict]:
    """Run every config in order; failures are recorded and the sweep goes on."""
    if not configs:
        raise ConfigError("sweep needs at least one configuration")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, cfg in enumerate(configs):
        row = dict(run=i, status="ok", error="")
        row.update({name: getattr(cfg, name) for name in SUMMARY_PARAMS})
        row.update(K=cfg.grid.K, seed=cfg.data.seed)
        row.update({name: float("nan") for name in SUMMARY_FITS})
        try:
            traj = run(cfg, out_dir / f"run_{i:03d}.csv", out_dir / f"run_{i:03d}.json")
            row.update(fit_summary(traj.records, cfg))
        except (IntegrationError, DomainError, ValueError) as exc:
            row.update(status="failed", error=str(exc))
        rows.append(row)
    cols = ["run", "status"] + list(SUMMARY_PARAMS) + ["K", "seed"] + list(SUMMARY_FITS) + ["error"]
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for row in rows:
            wr.writerow([_fmt(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
    return rows


# Command line ------------------------------------------------------------

def _load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def _emit(report: dict, path=None):
    text = json.dumps(report, indent=2, sort_keys=True, default=float)
    if path:
        Path(path).write_text(text + "\n")
    print(text)


def _cmd_gen_data(a):
    cfg = _load_config(a.config)
    f = build_initial(cfg.data_spec(), cfg.grid_spec(), cfg.gamma, cfg.constraint)
    paths = write_field_csv(f, a.out_dir)
    Path(a.out_dir, "data_manifest.json").write_text(json.dumps(
        dict(config=cfg.as_dict(), seed=cfg.data.seed, version=__version__,
             files=[str(p) for p in paths]), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _cmd_simulate(a):
    cfg = _load_config(a.config)
    run(cfg, a.csv, a.manifest, a.snapshot_dir)
    return EXIT_OK


def _cmd_sweep(a):
    raw = json.loads(Path(a.configs).read_text())
    if not isinstance(raw, list):
        raise ConfigSyntaxError("sweep file must hold a JSON list of configurations")
    configs = []
    for i, item in enumerate(raw):
        try:
            configs.append(config_from_dict(item))
        except ConfigError as exc:
            raise type(exc)(str(exc), f"[{i}]") from None
    rows = sweep(configs, a.out_dir)
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_INTEGRATION


FIT_COLUMNS = ("norm_Pvx", "norm_Pvy", "norm_Qv", "norm_rho", "norm_theta",
               "norm_rho_plus_theta", "lemma_Q")


def _cmd_fit_rates(a):
    data = read_records_csv(a.csv)
    columns = a.column or [c for c in FIT_COLUMNS if c in data]
    rep = {}
    for name in columns:
        if name not in data:
            raise ConfigError("no such column", name)
        t, v = data["t"], data[name]
        if a.kind == "power":
            rep[name] = power_law_slope(t, v, tuple(a.window)).as_dict()
        elif a.kind == "exp":
            rep[name] = exp_rate(t, v, tuple(a.window), a.detrend).as_dict()
        else:
            rep[name] = dict(ratio=bound_saturation(t, v, a.exponent, tuple(a.head),
                                                    tuple(a.window)))
    _emit(rep, a.out)
    return EXIT_OK


def _write_rows(rows, fields, path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(fields) + "\n")
        for r in rows:
            fh.write(",".join(str(r[f]) if isinstance(r[f], (int, str)) else _fmt(r[f])
                              for f in fields) + "\n")


def _cmd_verify_energy(a):
    cfg = _load_config(a.config)
    traj = simulate(cfg)
    rows = energy_samples(traj, n_samples=a.samples, fd_dt=a.fd_dt, seed=a.sample_seed)
    _write_rows(rows, ENERGY_SAMPLE_FIELDS, a.out)
    rep = summarize_energy(rows)
    rep["passed"] = bool(rep["max_residual"] <= a.tol)
    if cfg.M * cfg.nu ** (1.0 / 3.0) <= 1.0:
        rep["passed"] = bool(rep["passed"] and 0.25 <= rep["min_ratio"]
                             and rep["max_ratio"] <= 4.0)
    _emit(rep)
    return EXIT_OK if rep["passed"] else EXIT_CHECK


AUDIT_FIELDS = ("inequality", "min_margin", "argmin_t", "argmin_k", "argmin_eta")
AUDIT_LIMITS = dict(dtp_bound=0.0, k_p32_bound=0.0, k_p1_bound=0.0, bracket=0.2,
                    crucial_property=0.5)


def _cmd_audit(a):
    ts, ks, etas = default_audit_grid(t_max=a.t_max, n_t=a.n_t)
    rows = audit_symbols(ts, ks, etas)
    _write_rows(rows, AUDIT_FIELDS, a.out)
    failed = [r["inequality"] for r in rows if r["min_margin"] < AUDIT_LIMITS[r["inequality"]]]
    for r in rows:
        print(f"{r['inequality']:<18} min_margin={r['min_margin']:.6g}")
    return EXIT_CHECK if failed else EXIT_OK


def _cmd_oracle(a):
    cfg = _load_config(a.config)
    initial = build_initial(cfg.data_spec(), cfg.grid_spec(), cfg.gamma, cfg.constraint)
    rep = oracle_check(initial, cfg.step_control(), cfg.flow_params(), threads=cfg.threads)
    rep["passed"] = rep["max_rel_diff"] <= a.tol
    _emit(rep, a.out)
    return EXIT_OK if rep["passed"] else EXIT_CHECK


def _cmd_zero(a):
    rep = zero_mode_check(etas=a.etas, t_end=a.t_end)
    rep["passed"] = rep["max_error"] <= a.tol
    _emit(rep, a.out)
    return EXIT_OK if rep["passed"] else EXIT_CHECK


def _config_epilog() -> str:
    d = RunConfig()
    lines = ["config keys (JSON object; unknown keys are rejected):"]
    for key, text in _HELP.items():
        obj = d
        for part in key.split("."):
            obj = getattr(obj, part)
        lines.append(f"  {key:<20} {text} [default: {json.dumps(obj)}]")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="couette-spectral", description=__doc__.splitlines()[0],
                                 epilog=_config_epilog(),
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, fn, helptext):
        p = sub.add_parser(name, help=helptext, description=helptext, epilog=_config_epilog(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(fn=fn)
        return p

    p = cmd("gen-data", _cmd_gen_data, "write seeded initial data as per-scalar CSV files")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)

    p = cmd("simulate", _cmd_simulate, "run one configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--csv", required=True, help="diagnostics CSV")
    p.add_argument("--manifest", required=True, help="manifest JSON")
    p.add_argument("--snapshot-dir", help="directory for the final field when emit_snapshots")

    p = cmd("sweep", _cmd_sweep, "run a JSON list of configurations and fit rates")
    p.add_argument("--configs", required=True)
    p.add_argument("--out-dir", required=True)

    p = cmd("fit-rates", _cmd_fit_rates, "fit a power law, exponential rate or bound saturation")
    p.add_argument("--csv", required=True)
    p.add_argument("--column", action="append",
                   help="diagnostic column (repeatable; default: every norm column)")
    p.add_argument("--kind", choices=("power", "exp", "saturation"), default="power")
    p.add_argument("--window", type=float, nargs=2, required=True, metavar=("LO", "HI"),
                   help="fit window (tail window for saturation)")
    p.add_argument("--head", type=float, nargs=2, default=(1.0, 10.0), metavar=("LO", "HI"))
    p.add_argument("--detrend", type=float, default=0.0)
    p.add_argument("--exponent", type=float, default=0.0, help="compensating exponent")
    p.add_argument("--out")

    p = cmd("verify-energy", _cmd_verify_energy, "energy balance residuals and coercivity")
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--fd-dt", type=float, default=1e-4)
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--out", required=True,
                   help="CSV t,k,eta,E,coercive_form,ratio,balance_residual")

    p = cmd("audit-symbols", _cmd_audit, "grid audit of the symbol inequalities")
    p.add_argument("--t-max", type=float, default=1e3)
    p.add_argument("--n-t", type=int, default=2001)
    p.add_argument("--out", required=True,
                   help="CSV inequality,min_margin,argmin_t,argmin_k,argmin_eta")

    p = cmd("oracle-check", _cmd_oracle, "full against reduced system equivalence")
    p.add_argument("--config", required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out")

    p = cmd("zero-mode-check", _cmd_zero, "closed-form zero mode against integration")
    p.add_argument("--etas", type=float, nargs="+", default=[0.5, 1.0, 3.0])
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DomainError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
