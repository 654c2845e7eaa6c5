"""Monte Carlo check of the closed-form SCF probabilities.

Returning UAVs are scattered uniformly over the activity space outside the
GU's range.  A returning UAV flies straight towards the GU (towards the
point above the GU for the 1-D/2-D scenes) and covers at most ``v_bar * t``
within the waiting time; the non-returning UAV is served if that path
segment passes within ``r`` of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import SceneGeometry, uav_distance
from .rng import POPULATION_STREAM, SCATTER_STREAM, make_rng

__all__ = [
    "SamplerConfig",
    "McEstimate",
    "sample_returning_positions",
    "sample_uav_positions",
    "is_red",
    "estimate_scf_probability",
    "uav_position",
]


@dataclass(frozen=True)
class SamplerConfig:
    geom: SceneGeometry
    num_points: int = 100_000
    seed: int = 0
    stream: tuple = ()

    def __post_init__(self):
        if self.num_points < 1:
            raise ValueError(f"num_points must be >= 1, got {self.num_points}")


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    stderr: float
    hits: int
    n: int


def _open_low_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    # uniform on (0, 1]
    return 1.0 - rng.random(n)


def _uniform_positions(geom: SceneGeometry, n: int, rng: np.random.Generator, lo: float) -> np.ndarray:
    # uniform over in-plane radius (lo, outer_reach] (1-D/2-D) or the shell lo < |p| <= R, z >= 0
    hi = geom.outer_reach
    out = np.empty((n, 3))
    if geom.dim == 1:
        mag = lo + _open_low_uniform(rng, n) * (hi - lo)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        out[:, 0] = sign * mag
        out[:, 1] = 0.0
        out[:, 2] = geom.H
    elif geom.dim == 2:
        rho = np.sqrt(lo * lo + _open_low_uniform(rng, n) * (hi * hi - lo * lo))
        phi = rng.random(n) * 2.0 * math.pi
        out[:, 0] = rho * np.cos(phi)
        out[:, 1] = rho * np.sin(phi)
        out[:, 2] = geom.H
    else:
        rho = np.cbrt(lo**3 + _open_low_uniform(rng, n) * (hi**3 - lo**3))
        cos_polar = rng.random(n)
        sin_polar = np.sqrt(1.0 - cos_polar * cos_polar)
        phi = rng.random(n) * 2.0 * math.pi
        out[:, 0] = rho * sin_polar * np.cos(phi)
        out[:, 1] = rho * sin_polar * np.sin(phi)
        out[:, 2] = rho * cos_polar
    return out


def sample_returning_positions(cfg: SamplerConfig) -> np.ndarray:
    """Uniform positions over the activity space minus the GU range, shape (n, 3)."""
    rng = make_rng(cfg.seed, SCATTER_STREAM, cfg.geom.dim, *cfg.stream)
    return _uniform_positions(cfg.geom, cfg.num_points, rng, cfg.geom.inner_reach)


def sample_uav_positions(geom: SceneGeometry, n: int, seed: int) -> np.ndarray:
    """Non-returning UAV positions, uniform over the region where the closed forms apply
    (in-plane distance from the GU axis beyond ``r``)."""
    rng = make_rng(seed, POPULATION_STREAM, geom.dim)
    return _uniform_positions(geom, n, rng, geom.r)


def is_red(geom: SceneGeometry, uav, returning, t: float):
    """Whether returning UAV(s) come within ``r`` of ``uav`` within ``t`` seconds.

    ``returning`` may be a single position or an (n, 3) array; the result is a
    bool or a bool array to match.
    """
    u = np.asarray(uav, dtype=float)
    pts = np.asarray(returning, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)

    target = np.array([0.0, 0.0, geom.H if geom.planar else 0.0])
    rel = pts - target
    dist_to_target = np.linalg.norm(rel, axis=1)
    travel = np.minimum(geom.v_bar * t, dist_to_target)
    with np.errstate(invalid="ignore", divide="ignore"):
        heading = np.where(dist_to_target[:, None] > 0, -rel / dist_to_target[:, None], 0.0)

    # closest point on the segment pts -> pts + travel * heading
    offset = u - pts
    s = np.clip(np.einsum("ij,ij->i", offset, heading), 0.0, travel)
    closest = pts + s[:, None] * heading
    gap = np.linalg.norm(u - closest, axis=1)
    red = gap <= geom.r
    return bool(red[0]) if single else red


def uav_position(geom: SceneGeometry, d: float) -> tuple[float, float, float]:
    """Canonical position of a non-returning UAV at distance ``d`` from the GU.

    1-D/2-D: on the x-axis of the activity plane.  3-D: straight above the GU,
    so its red region lies entirely in the upper half-space.
    """
    if geom.planar:
        return (math.sqrt(d * d - geom.H * geom.H), 0.0, geom.H)
    return (0.0, 0.0, d)


def estimate_scf_probability(
    geom: SceneGeometry,
    uav: Sequence[float],
    t: float,
    cfg: SamplerConfig,
    positions: np.ndarray | None = None,
) -> McEstimate:
    uav_distance(geom, uav)
    if positions is None:
        positions = sample_returning_positions(cfg)
    hits = int(np.count_nonzero(is_red(geom, uav, positions, t)))
    n = len(positions)
    p_hat = hits / n
    return McEstimate(p_hat=p_hat, stderr=math.sqrt(p_hat * (1.0 - p_hat) / n), hits=hits, n=n)
