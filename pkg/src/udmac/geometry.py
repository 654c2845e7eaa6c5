"""Closed-form probability that a non-returning UAV is in SCF mode.

The scene is a disk (1-D line / 2-D plane at height ``H``) or a hemisphere
(3-D) of radius ``R`` centred on the ground unit (GU).  A non-returning UAV
at distance ``d`` from the GU waits up to ``t`` seconds for a returning UAV
to pass within communication range ``r``.  The probability is the measure
of the "red region" (returning-UAV positions that lead to an encounter)
over the measure of the activity space outside the GU's range.

Units: distances in km, speed in km/s, time in s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

__all__ = [
    "DomainError",
    "SceneGeometry",
    "ScfQuery",
    "RedRegionBreakdown",
    "case_boundary_time",
    "scf_probability_1d",
    "scf_probability_2d",
    "scf_probability_3d",
    "scf_probability",
    "probability_at",
    "uav_distance",
]

DEFAULT_HEIGHT_KM = 0.05


class DomainError(ValueError):
    """Raised when a geometry or query lies outside the model's domain."""


@dataclass(frozen=True)
class SceneGeometry:
    R: float
    r: float
    H: float = DEFAULT_HEIGHT_KM
    v_bar: float = 0.005
    dim: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not 0 < self.r < self.R:
            raise DomainError(f"need 0 < r < R, got r={self.r}, R={self.R}")
        if self.v_bar <= 0:
            raise DomainError(f"v_bar must be positive, got {self.v_bar}")
        if self.dim in (1, 2) and not 0 <= self.H < self.r:
            raise DomainError(
                f"need 0 <= H < r for a {self.dim}-D scene, got H={self.H}, r={self.r}"
            )

    @classmethod
    def from_kmh(cls, R: float, r: float, v_kmh: float, dim: int, H: float = DEFAULT_HEIGHT_KM):
        """Build a geometry with the speed given in km/h."""
        return cls(R=R, r=r, H=H, v_bar=v_kmh / 3600.0, dim=dim)

    @property
    def planar(self) -> bool:
        return self.dim in (1, 2)

    @property
    def outer_reach(self) -> float:
        """Largest in-plane (or 3-D) distance from the GU axis inside the scene."""
        if self.planar:
            return math.sqrt(self.R**2 - self.H**2)
        return self.R

    @property
    def inner_reach(self) -> float:
        """In-plane (or 3-D) radius of the GU communication range."""
        if self.planar:
            return math.sqrt(self.r**2 - self.H**2)
        return self.r

    def space_measure(self) -> float:
        """Length / area / volume of the activity space outside GU range."""
        if self.dim == 1:
            return 2.0 * (self.outer_reach - self.inner_reach)
        if self.dim == 2:
            return math.pi * (self.R**2 - self.r**2)
        return 2.0 / 3.0 * math.pi * (self.R**3 - self.r**3)


@dataclass(frozen=True)
class ScfQuery:
    d: float
    t: float


@dataclass(frozen=True)
class RedRegionBreakdown:
    theta: float
    alpha: float
    parts: dict = field(default_factory=dict)
    region_measure: float = 0.0
    space_measure: float = 1.0
    case_branch: str = "I"

    @property
    def probability(self) -> float:
        return self.region_measure / self.space_measure


def _horizontal(geom: SceneGeometry, d: float) -> float:
    # in-plane distance for 1-D/2-D, full distance for 3-D
    if geom.planar:
        return math.sqrt(d * d - geom.H * geom.H)
    return d


def _check_query(geom: SceneGeometry, d: float, t: float = 0.0) -> None:
    if not math.isfinite(d) or not math.isfinite(t):
        raise DomainError("d and t must be finite")
    if t < 0:
        raise DomainError(f"waiting time must be non-negative, got t={t}")
    if not geom.r < d <= geom.R:
        raise DomainError(f"need r < d <= R, got d={d} (r={geom.r}, R={geom.R})")
    if geom.planar and d * d - geom.H * geom.H < geom.r * geom.r:
        raise DomainError(
            f"in-plane distance sqrt(d^2-H^2) must be >= r (d={d}, H={geom.H}, r={geom.r})"
        )


def case_boundary_time(geom: SceneGeometry, d: float) -> float:
    """Largest waiting time for which the red region stays inside the scene."""
    _check_query(geom, d)
    boundary_reach = geom.outer_reach - _horizontal(geom, d)
    t = (boundary_reach - geom.r) / geom.v_bar
    if t <= 0.0:
        return 0.0
    # snap to the last float where the case test still selects case I, so that
    # "t > t*" and the branch choice agree exactly
    slack = 1e-9 * max(t, 1.0)
    lo, hi = max(0.0, t - slack), t + slack
    if not _is_case_one(geom, d, lo):
        if not _is_case_one(geom, d, 0.0):
            return 0.0
        lo = 0.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo
        if _is_case_one(geom, d, mid):
            lo = mid
        else:
            hi = mid


def _is_case_one(geom: SceneGeometry, d: float, t: float) -> bool:
    return geom.r + geom.v_bar * t <= geom.outer_reach - _horizontal(geom, d)


def _angles(geom: SceneGeometry, d: float, t: float) -> tuple[float, float]:
    # theta: half-angle of the tangent cone from the GU; alpha: cos(alpha) = r / (r + v t)
    theta = math.asin(min(1.0, geom.r / _horizontal(geom, d)))
    alpha = math.acos(geom.r / (geom.r + geom.v_bar * t))
    return theta, alpha


def _require_dim(geom: SceneGeometry, dim: int) -> None:
    if geom.dim != dim:
        raise DomainError(f"expected a {dim}-D geometry, got dim={geom.dim}")


def scf_probability_1d(geom: SceneGeometry, q: ScfQuery) -> RedRegionBreakdown:
    _require_dim(geom, 1)
    _check_query(geom, q.d, q.t)
    theta, alpha = _angles(geom, q.d, q.t)
    x = _horizontal(geom, q.d)
    if _is_case_one(geom, q.d, q.t):
        length, branch = 2.0 * geom.r + geom.v_bar * q.t, "I"
    else:
        length, branch = geom.r + geom.outer_reach - x, "II"
    return RedRegionBreakdown(
        theta=theta,
        alpha=alpha,
        parts={"S1": length},
        region_measure=length,
        space_measure=geom.space_measure(),
        case_branch=branch,
    )


def scf_probability_2d(geom: SceneGeometry, q: ScfQuery) -> RedRegionBreakdown:
    """Planar red region, built from the three sub-areas of one symmetric half."""
    _require_dim(geom, 2)
    _check_query(geom, q.d, q.t)
    theta, alpha = _angles(geom, q.d, q.t)
    r = geom.r
    reach = r + geom.v_bar * q.t
    s1 = (0.25 - theta / (2.0 * math.pi)) * math.pi * r * r
    if _is_case_one(geom, q.d, q.t):
        s2 = 0.5 * r * reach * math.sin(alpha)
        s3 = (math.pi / 2.0 + theta - alpha) / (2.0 * math.pi) * math.pi * reach * reach
        region, branch = 2.0 * (s1 + s2 + s3), "I"
    else:
        x = _horizontal(geom, q.d)
        s2 = theta / (2.0 * math.pi) * math.pi * (geom.R**2 - geom.H**2)
        s3 = 0.5 * r * x * math.cos(theta)
        region, branch = 2.0 * (s1 + s2 - s3), "II"
    return RedRegionBreakdown(
        theta=theta,
        alpha=alpha,
        parts={"S1": s1, "S2": s2, "S3": s3},
        region_measure=region,
        space_measure=geom.space_measure(),
        case_branch=branch,
    )


def scf_probability_3d(geom: SceneGeometry, q: ScfQuery) -> RedRegionBreakdown:
    """Spatial red region: a cap of the UAV's own ball plus a frustum and a far cap
    (interior case) or the tangent cone clipped by the scene (boundary case)."""
    _require_dim(geom, 3)
    _check_query(geom, q.d, q.t)
    theta, alpha = _angles(geom, q.d, q.t)
    r, d, R = geom.r, q.d, geom.R
    reach = r + geom.v_bar * q.t
    v1 = math.pi / 3.0 * r**3 * (1.0 - r / d) ** 2 * (2.0 + r / d)
    if _is_case_one(geom, d, q.t):
        tilt = alpha - theta
        height = r * math.sin(theta) + reach * math.sin(tilt)
        a, b = r * math.cos(theta), reach * math.cos(tilt)
        v2 = math.pi / 3.0 * height * (a * a + b * b + a * b)
        v3 = math.pi / 3.0 * reach**3 * (1.0 - math.sin(tilt)) ** 2 * (2.0 + math.sin(tilt))
        parts = {"V1": v1, "V2": v2, "V3": v3}
        branch = "I"
    else:
        v2 = (
            math.pi
            / 3.0
            * (2.0 * R**3 * d * d * (d - math.sqrt(d * d - r * r)) - r * r * (d * d - r * r) ** 2)
            / d**3
        )
        parts = {"V1": v1, "V2": v2}
        branch = "II"
    return RedRegionBreakdown(
        theta=theta,
        alpha=alpha,
        parts=parts,
        region_measure=sum(parts.values()),
        space_measure=geom.space_measure(),
        case_branch=branch,
    )


_BY_DIM = {1: scf_probability_1d, 2: scf_probability_2d, 3: scf_probability_3d}


def probability_at(geom: SceneGeometry, d: float, t: float) -> float:
    """Shortcut: the SCF probability at distance ``d`` after waiting ``t``."""
    return _BY_DIM[geom.dim](geom, ScfQuery(d, t)).probability


def uav_distance(geom: SceneGeometry, position: Sequence[float], tol: float = 1e-9) -> float:
    """Distance to the GU of a position, after checking it lies in the activity region."""
    x, y, z = (float(c) for c in position)
    if geom.dim == 1 and (abs(y) > tol or abs(z - geom.H) > tol):
        raise DomainError(f"1-D positions must have y=0 and z=H, got {position}")
    if geom.dim == 2 and abs(z - geom.H) > tol:
        raise DomainError(f"2-D positions must have z=H, got {position}")
    if geom.dim == 3 and z < -tol:
        raise DomainError(f"3-D positions must have z >= 0, got {position}")
    return math.sqrt(x * x + y * y + z * z)


def scf_probability(geom: SceneGeometry, position: Sequence[float]) -> Callable[[float], float]:
    """Return ``t -> p_t(x, y, z)`` for a UAV at ``position``."""
    d = uav_distance(geom, position)
    _check_query(geom, d)
    func = _BY_DIM[geom.dim]

    def p_t(t: float) -> float:
        return func(geom, ScfQuery(d, t)).probability

    return p_t
