"""Run configuration: one TOML file with sections per component.

All distances are SI meters, angles radians, forces newtons, moments
newton-meters; key names carry the unit suffix.  Any omitted key falls
back to the benchmark defaults below, so an empty file is a valid
config.  The fully resolved configuration is echoed next to every run's
outputs.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from wrenchmap.baselines import BaselineParams, NaiveParams
from wrenchmap.errors import ConfigError
from wrenchmap.filter import FilterConfig
from wrenchmap.shapegrid import GridGeometry, ShapeUpdateParams
from wrenchmap.simulator import TOOL_KINDS, ForceScript

MODES = ("simulate", "estimate", "bench", "sweep")
SWEEPS = ("particles", "cell_size", "theta0")

DEFAULTS: dict = {
    "run": {
        "method": "proposed",
        "shape": "straight",
        "trials": 10,
        "seed": 12345,
        "out_dir": "out",
        "snapshot_period_s": 5.0,
        "workers": 1,
        "sweep": "particles",
        "sweep_values": [10.0, 30.0, 100.0, 300.0, 1000.0],
    },
    "grid": {
        "nx": 80,
        "ny": 80,
        "cell_size_m": 0.005,
        "origin_x_m": 0.0,
        "origin_y_m": -0.05,
    },
    "filter": {
        "n_particles": 300,
        "n_th": 0.432,
        "sigma_c_m": 5.25e-6,
        "sigma_m_nm": 3.79e-4,
        "contact_force_threshold_n": 0.5,
        "ukf_alpha": 1.0,
        "ukf_beta": 2.0,
        "ukf_kappa": 0.0,
    },
    "shape_update": {
        "d_th_m": 0.00939,
        "theta_th_rad": 0.108,
        "ds_inc": 0.0347,
        "ds_dec": 0.0216,
        "s_lo": -20.0,
        "s_hi": 20.0,
    },
    "baseline": {
        "rho": 0.992,
        "alpha_reg": 860.0,
        "c0_x_m": 0.2,
        "c0_y_m": 0.15,
    },
    "naive": {
        "n_particles": 300,
        "nx": 5,
        "ny": 5,
        "cell_size_m": 0.08,
        "origin_x_m": 0.0,
        "origin_y_m": -0.05,
        "sigma_c_m": 1.14e-4,
        "sigma_s": 4.37e-3,
        "sigma_m_nm": 1.69e-5,
        "n_th": 0.432,
    },
    "script": {
        "theta0_rad": math.pi / 6,
        "t_fluct_s": 10.0,
        "t_end_s": 20.0,
        "hold_s": 1.0,
        "amp_lo_n": 1.0,
        "amp_hi_n": 3.0,
        "dt_s": 0.01,
        "gap_s": 0.0,
        "noise_sigma_f_n": 0.0,
        "noise_sigma_m_nm": 0.0,
    },
}


@dataclass
class RunConfig:
    """Everything a run needs, with typed sub-configurations."""

    method: str = "proposed"
    shape: str = "straight"
    trials: int = 10
    seed: int = 12345
    out_dir: str = "out"
    snapshot_period_s: float = 5.0
    workers: int = 1
    sweep: str = "particles"
    sweep_values: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    grid_geom: GridGeometry = None
    shape_params: ShapeUpdateParams = None
    filter_cfg: FilterConfig = None
    baseline_params: BaselineParams = None
    naive_params: NaiveParams = None
    script: ForceScript = None


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{where} must be a table")
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = val
    return out


def _build(raw: dict, seed: int, workers: int) -> RunConfig:
    g = raw["grid"]
    grid = GridGeometry(
        origin_x=float(g["origin_x_m"]),
        origin_y=float(g["origin_y_m"]),
        cell_size=float(g["cell_size_m"]),
        nx=int(g["nx"]),
        ny=int(g["ny"]),
    )
    s = raw["shape_update"]
    shape_params = ShapeUpdateParams(
        d_th=float(s["d_th_m"]),
        theta_th=float(s["theta_th_rad"]),
        ds_inc=float(s["ds_inc"]),
        ds_dec=float(s["ds_dec"]),
        s_lo=float(s["s_lo"]),
        s_hi=float(s["s_hi"]),
    )
    f = raw["filter"]
    try:
        filter_cfg = FilterConfig(
            n_particles=int(f["n_particles"]),
            n_th=float(f["n_th"]),
            sigma_c=float(f["sigma_c_m"]),
            sigma_m=float(f["sigma_m_nm"]),
            shape_params=shape_params,
            grid_geom=grid,
            ukf_alpha=float(f["ukf_alpha"]),
            ukf_beta=float(f["ukf_beta"]),
            ukf_kappa=float(f["ukf_kappa"]),
            seed=seed,
            contact_force_threshold=float(f["contact_force_threshold_n"]),
            workers=workers,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    b = raw["baseline"]
    baseline = BaselineParams(
        rho=float(b["rho"]),
        alpha_reg=float(b["alpha_reg"]),
        c0=(float(b["c0_x_m"]), float(b["c0_y_m"])),
    )
    nv = raw["naive"]
    naive = NaiveParams(
        n_particles=int(nv["n_particles"]),
        grid_geom=GridGeometry(
            origin_x=float(nv["origin_x_m"]),
            origin_y=float(nv["origin_y_m"]),
            cell_size=float(nv["cell_size_m"]),
            nx=int(nv["nx"]),
            ny=int(nv["ny"]),
        ),
        sigma_c=float(nv["sigma_c_m"]),
        sigma_s=float(nv["sigma_s"]),
        sigma_m=float(nv["sigma_m_nm"]),
        n_th=float(nv["n_th"]),
        seed=seed,
        contact_force_threshold=float(f["contact_force_threshold_n"]),
    )
    sc = raw["script"]
    try:
        script = ForceScript(
            theta0=float(sc["theta0_rad"]),
            t_fluct=float(sc["t_fluct_s"]),
            t_end=float(sc["t_end_s"]),
            hold=float(sc["hold_s"]),
            amp_lo=float(sc["amp_lo_n"]),
            amp_hi=float(sc["amp_hi_n"]),
            dt=float(sc["dt_s"]),
            seed=seed,
            gap=float(sc["gap_s"]),
            noise_sigma_f=float(sc["noise_sigma_f_n"]),
            noise_sigma_m=float(sc["noise_sigma_m_nm"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    r = raw["run"]
    cfg = RunConfig(
        method=str(r["method"]),
        shape=str(r["shape"]),
        trials=int(r["trials"]),
        seed=seed,
        out_dir=str(r["out_dir"]),
        snapshot_period_s=float(r["snapshot_period_s"]),
        workers=workers,
        sweep=str(r["sweep"]),
        sweep_values=[float(v) for v in r["sweep_values"]],
        raw=raw,
        grid_geom=grid,
        shape_params=shape_params,
        filter_cfg=filter_cfg,
        baseline_params=baseline,
        naive_params=naive,
        script=script,
    )
    if cfg.shape not in TOOL_KINDS:
        raise ConfigError(f"unknown shape {cfg.shape!r}; pick one of {TOOL_KINDS}")
    if cfg.method not in ("proposed", "naive", "baseline", "oracle"):
        raise ConfigError(f"unknown method {cfg.method!r}")
    if cfg.sweep not in SWEEPS:
        raise ConfigError(f"unknown sweep {cfg.sweep!r}; pick one of {SWEEPS}")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    return cfg


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Load TOML (optional), apply CLI overrides, build typed configs."""
    raw = DEFAULTS
    if path is not None:
        try:
            with open(path, "rb") as fh:
                file_cfg = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        raw = _merge(DEFAULTS, file_cfg)
    else:
        raw = _merge(DEFAULTS, {})
    if overrides:
        raw = _merge(raw, overrides)
    seed = int(raw["run"]["seed"])
    workers = int(raw["run"]["workers"])
    return _build(raw, seed, workers)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_resolved_config(cfg: RunConfig, path) -> None:
    """Echo the fully resolved configuration as TOML."""
    lines = []
    for section, table in cfg.raw.items():
        lines.append(f"[{section}]")
        for key, val in table.items():
            lines.append(f"{key} = {_toml_value(val)}")
        lines.append("")
    Path(path).write_text("\n".join(lines))
