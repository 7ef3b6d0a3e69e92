"""Run configuration: an INI file with one section per pipeline.

Every key has a default reproducing the published parameter set, so an empty
file (or no file) is a valid configuration. Physical values are re-validated
by the model constructors when the pipelines run.

Units: transmon and cavity energies in GHz, decay rates and couplings G in
MHz, circuit-model steps in ns, reduced-model times in microseconds.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError

OUT_ENV = "TCTSIM_OUT"
DEFAULT_OUT = "tctsim-out"


@dataclass(frozen=True)
class CircuitConfig:
    ec_a: float = 0.5
    ej_a: float = 25.0
    flux_a: float = 0.3
    ec_b: float = 0.9
    ej_b: float = 15.0
    charge_cutoff: int = 20
    cavity_frequency: float = 15.0
    fock_cutoff: int = 3
    zeta_a: float = 0.3
    zeta_b: float = 0.3


@dataclass(frozen=True)
class SpectrumConfig:
    flux_min: float = 0.0
    flux_max: float = 0.49
    flux_points: int = 50
    transmon_levels: int = 5
    bracket_lo: float = 0.28
    bracket_hi: float = 0.31
    zoom_halfwidth: float = 0.002
    zoom_points: int = 41


@dataclass(frozen=True)
class DynamicsConfig:
    gamma_a10: float = 0.3
    gamma_b10: float = 0.3
    gamma_a21: float = 0.2
    gamma_b21: float = 0.2
    kappa: float = 0.3
    t_final_us: float = 15.0
    dt_ns: float = 1.0
    sample_ns: float = 10.0
    initial_state: str = "eg"


@dataclass(frozen=True)
class TrajectoryConfig:
    gamma_a10: float = 0.3
    gamma_b10: float = 0.2
    etas: tuple = (0.0, 0.8, 1.0)
    n_traj: int = 2000
    dt_ns: float = 1.0
    t_final_us: float = 15.0
    sample_every: int = 50
    g_eg_override: float | None = None
    initial_state: str = "eg"


@dataclass(frozen=True)
class LiouvillianConfig:
    gamma_a10: float = 0.3
    gamma_b10: float = 0.2
    etas: tuple = (0.0, 0.8, 1.0)
    g_min: float = 0.0
    g_max: float = 1.0
    g_points: int = 101
    dynamics_g: tuple = (0.2, 1.0)
    dynamics_t_final_us: float = 30.0
    dynamics_points: int = 301
    frame: str = "lab"
    ep_g_max: float = 0.05
    ep_points: int = 101
    pt_g: tuple = (0.03, 0.02)
    pt_t_final_us: float = 2000.0
    pt_points: int = 4001
    initial_state: str = "eg"


@dataclass(frozen=True)
class RunConfig:
    circuit: CircuitConfig = field(default_factory=CircuitConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    trajectories: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    liouvillian: LiouvillianConfig = field(default_factory=LiouvillianConfig)
    seed: int = 20240601
    threads: int = 1
    out_dir: str = DEFAULT_OUT


SECTIONS = {
    "circuit": CircuitConfig,
    "spectrum": SpectrumConfig,
    "dynamics": DynamicsConfig,
    "trajectories": TrajectoryConfig,
    "liouvillian": LiouvillianConfig,
}
STATES = ("gg", "ge", "eg", "ee")


def _convert(cls, name: str, raw: str):
    default = {f.name: f.default for f in fields(cls)}[name]
    raw = raw.strip()
    try:
        if isinstance(default, tuple):
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if default is None:
            return None if raw.lower() in ("", "none") else float(raw)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"[{cls.__name__}] {name} = {raw!r} is not a valid value") from None


def _section(cls, items: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(items) - known
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__}: {', '.join(sorted(unknown))}")
    return cls(**{k: _convert(cls, k, v) for k, v in items.items()})


def validate(cfg: RunConfig) -> RunConfig:
    checks = [
        (cfg.threads >= 1, "threads must be at least 1"),
        (cfg.seed >= 0, "seed must be non-negative"),
        (cfg.spectrum.flux_points >= 1 and cfg.spectrum.zoom_points >= 1, "grids need at least one point"),
        (0 <= cfg.spectrum.flux_min <= cfg.spectrum.flux_max < 0.5, "flux range must lie within [0, 0.5)"),
        (cfg.spectrum.bracket_lo < cfg.spectrum.bracket_hi, "crossing bracket must be increasing"),
        (cfg.trajectories.n_traj >= 1, "n_traj must be at least 1"),
        (cfg.dynamics.dt_ns > 0 and cfg.trajectories.dt_ns > 0, "time steps must be positive"),
        (all(0 <= e <= 1 for e in cfg.trajectories.etas + cfg.liouvillian.etas), "efficiencies must lie in [0, 1]"),
        (cfg.liouvillian.frame in ("lab", "interaction"), "liouvillian frame must be lab or interaction"),
        (cfg.dynamics.initial_state in STATES, "initial_state must be one of gg, ge, eg, ee"),
        (cfg.trajectories.initial_state in STATES, "initial_state must be one of gg, ge, eg, ee"),
        (cfg.liouvillian.initial_state in STATES, "initial_state must be one of gg, ge, eg, ee"),
    ]
    rates = [getattr(sec, name) for sec in (cfg.dynamics, cfg.trajectories, cfg.liouvillian)
             for name in ("gamma_a10", "gamma_b10")]
    checks.append((all(r >= 0 for r in rates), "decay rates must be non-negative"))
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
    return cfg


def default_out_dir() -> str:
    return os.environ.get(OUT_ENV) or DEFAULT_OUT


def load_config(path: str | os.PathLike | None = None, **overrides) -> RunConfig:
    """Read ``path`` (optional) and apply keyword overrides (None is ignored)."""
    parser = configparser.ConfigParser()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} does not exist")
        try:
            parser.read(p)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {p}: {exc}") from exc
    unknown = set(parser.sections()) - set(SECTIONS) - {"run"}
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    parts = {name: _section(cls, dict(parser[name]) if parser.has_section(name) else {})
             for name, cls in SECTIONS.items()}
    run = dict(parser["run"]) if parser.has_section("run") else {}
    bad = set(run) - {"seed", "threads", "out_dir"}
    if bad:
        raise ConfigError(f"unknown keys in [run]: {', '.join(sorted(bad))}")
    try:
        top = {
            "seed": int(run.get("seed", RunConfig.seed)),
            "threads": int(run.get("threads", RunConfig.threads)),
            "out_dir": run.get("out_dir") or default_out_dir(),
        }
    except ValueError as exc:
        raise ConfigError(f"[run] {exc}") from None
    top.update({k: v for k, v in overrides.items() if v is not None})
    return validate(RunConfig(**parts, **top))
