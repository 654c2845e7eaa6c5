"""Experiment configuration: built-in presets, INI files and overrides.

A configuration is a set of sections holding ``key = value`` pairs::

    [scene]
    R = 5.0
    t_grid = 0:600:60      # inclusive range start:stop:step

    [sweep]
    seeds = 0, 1, 2

Values are parsed to the type of the preset default.  Lists are
comma-separated and may contain ``start:stop:step`` ranges.
"""
from __future__ import annotations

import configparser
import copy
import math
from dataclasses import dataclass
from pathlib import Path

from .geometry import SceneGeometry, case_boundary_time
from .macsim import SimConfig
from .markov import BackoffParams, PopulationMix, ThroughputInputs, TimingParams

PAPER_2023 = {
    "scene": {"R": 5.0, "r": 0.1, "H": 0.05, "v_kmh": 18.0},
    "backoff": {"W": 64, "m": 4, "P_hp": 1.0},
    "timing": {"rts": 4.5, "cts": 3.2, "rcts": 3.2, "sifs": 10.0, "difs": 28.0, "sigma": 9.0},
    "payload": {"E_P": 27000.0, "M": 13, "r_tr": 36e6},
    "population": {"N": 100, "quantize": "floor", "seed": 2023},
    "montecarlo": {"num_points": 100000, "seed": 0},
    "sim": {
        "duration": 1.0,
        "n_scf": 0,
        "freeze_slots": 0,
        "mode_assignment": "fixed-split",
        "p_scf": -1.0,
        "vemac_frame_slots": 100,
        "vemac_slot_us": 0.0,
        "a2a_channels": -1,
    },
    "sweep": {
        "dims": [1, 2, 3],
        "d_grid": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5],
        "t_grid": [float(t) for t in range(0, 601, 60)],
        "freeze_t_grid": [120.0, 360.0, 600.0],
        "F_grid": [0, 25, 50, 100],
        "n_scf_grid": [0, 2, 5, 10, 20, 30],
        "seeds": list(range(10)),
        "protocols": ["UD-MAC", "VeMAC"],
    },
    "output": {"dir": "results"},
}

PRESETS = {"paper-2023": PAPER_2023}

# sentinel values meaning "not set" in the flat key=value format
_UNSET = {"p_scf": -1.0, "vemac_slot_us": 0.0, "a2a_channels": -1}


class ConfigError(ValueError):
    pass


def _parse_list(text: str, elem_type: type) -> list:
    out = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if ":" in part and elem_type is not str:
            bits = part.split(":")
            if len(bits) != 3:
                raise ConfigError(f"range must be start:stop:step, got {part!r}")
            start, stop, step = (float(b) for b in bits)
            if step <= 0:
                raise ConfigError(f"range step must be positive, got {part!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            out.extend(elem_type(round(start + i * step, 12)) for i in range(count))
        else:
            out.append(elem_type(part))
    return out


def _parse_value(text: str, default):
    text = text.strip()
    try:
        if isinstance(default, list):
            elem = type(default[0]) if default else str
            return _parse_list(text, elem)
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc}") from None
    return text


def apply_overrides(cfg: dict, items) -> dict:
    """Apply ``(section.key, text)`` pairs to a config dict, type-checked against it."""
    cfg = copy.deepcopy(cfg)
    for dotted, text in items:
        if "." not in dotted:
            raise ConfigError(f"override key must look like section.key, got {dotted!r}")
        section, key = dotted.split(".", 1)
        if section not in cfg or key not in cfg[section]:
            raise ConfigError(f"unknown config key {dotted!r}")
        cfg[section][key] = _parse_value(text, cfg[section][key])
    return cfg


def load_config(path: str | Path | None = None, preset: str = "paper-2023", overrides=()) -> dict:
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r} (known: {', '.join(PRESETS)})")
    cfg = copy.deepcopy(PRESETS[preset])
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        items = [(f"{s}.{k}", v) for s in parser.sections() for k, v in parser.items(s)]
        cfg = apply_overrides(cfg, items)
    return apply_overrides(cfg, overrides)


def dump_config(cfg: dict) -> str:
    lines = []
    for section, values in cfg.items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            if isinstance(value, list):
                value = ", ".join(str(v) for v in value)
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def _opt(cfg: dict, section: str, key: str):
    value = cfg[section][key]
    return None if key in _UNSET and value == _UNSET[key] else value


def geometry(cfg: dict, dim: int) -> SceneGeometry:
    s = cfg["scene"]
    return SceneGeometry.from_kmh(R=s["R"], r=s["r"], v_kmh=s["v_kmh"], dim=dim, H=s["H"])


def backoff(cfg: dict) -> BackoffParams:
    return BackoffParams(**cfg["backoff"])


def timing(cfg: dict) -> TimingParams:
    return TimingParams(**cfg["timing"])


def payload(cfg: dict) -> ThroughputInputs:
    return ThroughputInputs(**cfg["payload"])


@dataclass(frozen=True)
class SweepSpec:
    dims: tuple
    d_grid: tuple
    t_grid: tuple
    F_grid: tuple
    N: int
    seeds: tuple
    protocols: tuple
    out: str | None = None

    def __post_init__(self):
        for name in ("dims", "d_grid", "t_grid", "F_grid", "seeds", "protocols"):
            if not getattr(self, name):
                raise ConfigError(f"sweep grid {name!r} is empty")
        if any(d not in (1, 2, 3) for d in self.dims):
            raise ConfigError(f"dims must be drawn from 1, 2, 3, got {self.dims}")
        if any(t < 0 for t in self.t_grid):
            raise ConfigError("t_grid entries must be non-negative")
        if any(f < 0 for f in self.F_grid):
            raise ConfigError("F_grid entries must be non-negative")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative")
        unknown = [p for p in self.protocols if p not in ("UD-MAC", "VeMAC")]
        if unknown:
            raise ConfigError(f"unknown protocol(s) {unknown}; choose from UD-MAC, VeMAC")
        if self.N < 1:
            raise ConfigError("N must be >= 1")


def sweep_spec(cfg: dict, out: str | None = None, t_key: str = "t_grid") -> SweepSpec:
    """Build and validate the sweep; every (dim, d) pair is checked against the scene."""
    s = cfg["sweep"]
    spec = SweepSpec(
        dims=tuple(s["dims"]),
        d_grid=tuple(s["d_grid"]),
        t_grid=tuple(s[t_key]),
        F_grid=tuple(s["F_grid"]),
        N=cfg["population"]["N"],
        seeds=tuple(s["seeds"]),
        protocols=tuple(s["protocols"]),
        out=out,
    )
    for dim in spec.dims:
        geom = geometry(cfg, dim)
        for d in spec.d_grid:
            case_boundary_time(geom, d)
    return spec


def sim_config(cfg: dict, n_scf: int | None = None, **changes) -> SimConfig:
    s = cfg["sim"]
    p_scf = _opt(cfg, "sim", "p_scf")
    k = s["n_scf"] if n_scf is None else n_scf
    mix = PopulationMix(cfg["population"]["N"], k, p_scf)
    base = dict(
        population=mix,
        backoff=backoff(cfg),
        timing=timing(cfg),
        tin=payload(cfg),
        freeze_slots=s["freeze_slots"],
        mode_assignment=s["mode_assignment"],
        duration=s["duration"],
        vemac_frame_slots=s["vemac_frame_slots"],
        vemac_slot_us=_opt(cfg, "sim", "vemac_slot_us"),
        a2a_channels=_opt(cfg, "sim", "a2a_channels"),
    )
    base.update(changes)
    return SimConfig(**base)
