"""Sweeps behind the CLI subcommands.

Each ``cmd_*`` function takes a resolved config dict plus a ``SweepSpec`` and
returns ``(columns, rows)``; writing is left to :func:`write_csv`.  Simulation
runs are keyed by (protocol, N_scf, F, seed) so sweep points that map to the
same population reuse one run.
"""
from __future__ import annotations

import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from . import config as C
from .geometry import case_boundary_time, probability_at
from .macsim import UDMAC, VEMAC, SimConfig, SimStats, run, vemac_expected_successes
from .markov import PopulationMix, nscf_from_positions, throughput
from .montecarlo import (
    SamplerConfig,
    estimate_scf_probability,
    sample_returning_positions,
    sample_uav_positions,
    uav_position,
)


def _pool_map(fn: Callable, items: Sequence, jobs: int) -> list:
    # Executor.map yields in submission order, so output order never depends on scheduling
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))


def compare(
    base: SimConfig,
    protocols: Iterable[str],
    n_scf_values: Iterable[int],
    seeds: Iterable[int],
    jobs: int = 1,
    freeze_values: Iterable[int] | None = None,
) -> dict:
    """Run every (protocol, N_scf, F, seed) combination; returns {key: SimStats}."""
    freezes = list(freeze_values) if freeze_values is not None else [base.freeze_slots]
    keys = []
    for proto in protocols:
        for k in n_scf_values:
            for f in freezes if proto == UDMAC else [0]:
                for s in seeds:
                    key = (proto, int(k), int(f), int(s))
                    if key not in keys:
                        keys.append(key)
    cfgs = [
        replace(
            base,
            protocol=p,
            population=base.population if k == base.population.N_scf else PopulationMix(base.population.N, k),
            freeze_slots=f,
            seed=s,
        )
        for p, k, f, s in keys
    ]
    return dict(zip(keys, _pool_map(run, cfgs, jobs)))


def analytic_udmac(cfg: dict, n_scf: int) -> float:
    mix = PopulationMix(cfg["population"]["N"], n_scf)
    return throughput(C.backoff(cfg), mix, C.timing(cfg), C.payload(cfg)).S


def analytic_vemac(cfg: dict, n_scf: int) -> float:
    sim = cfg["sim"]
    L = sim["vemac_frame_slots"]
    slot = C._opt(cfg, "sim", "vemac_slot_us") or C.timing(cfg).T_s
    per_frame = vemac_expected_successes(cfg["population"]["N"], n_scf, L)
    return per_frame * cfg["payload"]["E_P"] / (L * slot * 1e-6)


def _population_nscf(cfg: dict, spec: C.SweepSpec, dim: int) -> list[tuple[float, float, int]]:
    geom = C.geometry(cfg, dim)
    positions = sample_uav_positions(geom, spec.N, cfg["population"]["seed"])
    mode = cfg["population"]["quantize"]
    return [(t, *nscf_from_positions(geom, positions, t, mode)) for t in spec.t_grid]


# --- validate-prob -----------------------------------------------------------

VALIDATE_COLUMNS = ["dim", "d_km", "t_s", "seed", "case", "p_closed_form", "p_mc", "stderr", "abs_err"]
SUMMARY_COLUMNS = ["dim", "points", "max_abs_err", "max_p_closed_form", "frac_within_4se"]


def cmd_validate_probability(cfg: dict, spec: C.SweepSpec, jobs: int = 1):
    """Closed form vs Monte Carlo on the (dim, d, t) grid.

    Returns ``(columns, rows, summary_columns, summary_rows)``.  All closed
    forms are evaluated first, so a bad grid point fails before any sampling.
    """
    seed = cfg["montecarlo"]["seed"]
    n = cfg["montecarlo"]["num_points"]
    points = []
    for dim in spec.dims:
        geom = C.geometry(cfg, dim)
        for d in spec.d_grid:
            for t in spec.t_grid:
                p = probability_at(geom, d, t)
                case = 1 if t <= case_boundary_time(geom, d) else 2
                points.append((dim, d, t, case, p))

    rows, summary = [], []
    for dim in spec.dims:
        geom = C.geometry(cfg, dim)
        sampler = SamplerConfig(geom, num_points=n, seed=seed)
        mine = [pt for pt in points if pt[0] == dim]
        # one shared scatter per dimension; the scatter does not depend on (d, t)
        positions = sample_returning_positions(sampler)
        ests = [
            estimate_scf_probability(geom, uav_position(geom, d), t, sampler, positions)
            for _, d, t, _, _ in mine
        ]
        errs = []
        within = 0
        for (_, d, t, case, p), est in zip(mine, ests):
            err = abs(p - est.p_hat)
            errs.append(err)
            se = math.sqrt(p * (1.0 - p) / n)
            within += err <= 4.0 * se + 1e-15
            rows.append([dim, d, t, seed, case, p, est.p_hat, est.stderr, err])
        summary.append([dim, len(mine), max(errs), max(p for *_, p in mine), within / len(mine)])
    return VALIDATE_COLUMNS, rows, SUMMARY_COLUMNS, summary


# --- throughput ----------------------------------------------------------------

def throughput_columns(protocols: Sequence[str]) -> list[str]:
    cols = ["dim", "t_s", "n_scf_real", "n_scf", "seed", "S_analytic", "S_classical", "S_vemac_analytic"]
    if UDMAC in protocols:
        cols += ["S_sim_udmac", "analytic_rel_err", "scf_share_udmac", "mh_share_udmac"]
    if VEMAC in protocols:
        cols += ["S_sim_vemac", "scf_share_vemac"]
    if UDMAC in protocols and VEMAC in protocols:
        cols += ["improvement"]
    return cols


def cmd_throughput(cfg: dict, spec: C.SweepSpec, jobs: int = 1):
    """Analytic and simulated throughput per (dim, t, seed); N_scf comes from a fixed population."""
    grid = {dim: _population_nscf(cfg, spec, dim) for dim in spec.dims}
    n_values = sorted({k for g in grid.values() for *_, k in g})
    base = C.sim_config(cfg, n_scf=0, freeze_slots=0)
    sims = compare(base, spec.protocols, n_values, spec.seeds, jobs)
    classical = analytic_udmac(cfg, 0)
    analytic = {k: analytic_udmac(cfg, k) for k in n_values}
    vemac = {k: analytic_vemac(cfg, k) for k in n_values}

    cols = throughput_columns(spec.protocols)
    rows = []
    for dim in spec.dims:
        for t, real, k in grid[dim]:
            for seed in spec.seeds:
                row = [dim, t, real, k, seed, analytic[k], classical, vemac[k]]
                if UDMAC in spec.protocols:
                    u = sims[(UDMAC, k, 0, seed)]
                    rel = abs(u.throughput_total - analytic[k]) / analytic[k]
                    row += [u.throughput_total, rel, u.scf_share, 1.0 - u.scf_share]
                if VEMAC in spec.protocols:
                    v = sims[(VEMAC, k, 0, seed)]
                    row += [v.throughput_total, v.scf_share]
                if UDMAC in spec.protocols and VEMAC in spec.protocols:
                    row += [u.throughput_total / v.throughput_total - 1.0]
                rows.append(row)
    return cols, rows


# --- freeze-tradeoff -------------------------------------------------------------

FREEZE_COLUMNS = ["dim", "t_s", "n_scf", "F", "seed", "S_total", "S_scf", "S_mh", "scf_share", "mh_share"]


def cmd_freeze_tradeoff(cfg: dict, spec: C.SweepSpec, jobs: int = 1):
    """UD-MAC throughput split by mode for every (t, F, seed)."""
    grid = {dim: _population_nscf(cfg, spec, dim) for dim in spec.dims}
    n_values = sorted({k for g in grid.values() for *_, k in g})
    base = C.sim_config(cfg, n_scf=0)
    sims = compare(base, [UDMAC], n_values, spec.seeds, jobs, freeze_values=spec.F_grid)
    rows = []
    for dim in spec.dims:
        for t, _, k in grid[dim]:
            for f in spec.F_grid:
                for seed in spec.seeds:
                    s = sims[(UDMAC, k, f, seed)]
                    rows.append([
                        dim, t, k, f, seed, s.throughput_total, s.throughput_scf, s.throughput_mh,
                        s.scf_share, 1.0 - s.scf_share,
                    ])
    return FREEZE_COLUMNS, rows


# --- sim / compare ----------------------------------------------------------------

SIM_COLUMNS = [
    "protocol", "n_scf", "F", "seed", "sim_time", "successes_scf", "successes_mh", "collisions_scf",
    "collisions_mh", "blocked_scf", "blocked_mh", "idle_slots", "S_total", "S_scf", "S_mh", "scf_share",
]


def _stats_row(key, s: SimStats) -> list:
    proto, k, f, seed = key
    return [
        proto, k, f, seed, s.sim_time, s.successes_scf, s.successes_mh, s.collisions_scf, s.collisions_mh,
        s.blocked_scf, s.blocked_mh, s.idle_slots, s.throughput_total, s.throughput_scf, s.throughput_mh,
        s.scf_share,
    ]


def cmd_sim(cfg: dict, spec: C.SweepSpec, jobs: int = 1):
    """One simulation per (protocol, seed) at the configured N_scf and F."""
    base = C.sim_config(cfg)
    sims = compare(base, spec.protocols, [base.population.N_scf], spec.seeds, jobs)
    return SIM_COLUMNS, [_stats_row(k, s) for k, s in sims.items()]


COMPARE_COLUMNS = ["protocol", "n_scf", "seed", "S_sim", "S_analytic", "rel_err", "scf_share"]


def cmd_compare(cfg: dict, spec: C.SweepSpec, jobs: int = 1):
    """Protocols side by side over the ``sweep.n_scf_grid`` list of N_scf values."""
    n_values = list(dict.fromkeys(int(k) for k in cfg["sweep"]["n_scf_grid"]))
    if not n_values:
        raise C.ConfigError("sweep grid 'n_scf_grid' is empty")
    base = C.sim_config(cfg, n_scf=0)
    sims = compare(base, spec.protocols, n_values, spec.seeds, jobs)
    rows = []
    for (proto, k, _, seed), s in sims.items():
        ref = analytic_udmac(cfg, k) if proto == UDMAC else analytic_vemac(cfg, k)
        rows.append([proto, k, seed, s.throughput_total, ref, abs(s.throughput_total - ref) / ref, s.scf_share])
    return COMPARE_COLUMNS, rows


# --- output ------------------------------------------------------------------------

def format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value in result row: {x}")
        return format(float(x), ".12g")
    return str(x)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    # hand-rolled so the bytes never depend on locale or csv dialect defaults
    lines = [",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        lines.append(",".join(format_cell(x) for x in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(path: Path, command: str, cfg: dict, spec: C.SweepSpec, outputs: Sequence[Path]) -> None:
    manifest = {
        "command": command,
        "config": cfg,
        "seeds": list(spec.seeds),
        "outputs": [p.name for p in outputs],
        "versions": {
            "udmac": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
