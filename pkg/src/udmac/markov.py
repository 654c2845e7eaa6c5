"""Two-class saturation throughput model for UD-MAC.

SCF-mode UAVs contend after SIFS and therefore only collide with each
other; MH-mode UAVs wait DIFS and only get the control channel in slots
where no SCF UAV transmits.  Each class runs the usual bidimensional
exponential-backoff chain; SCF UAVs additionally pass through a
semi-active (freezing) state after a successful transmission.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .geometry import SceneGeometry, scf_probability
from .solver import ConvergenceError, solve_fixed_point

__all__ = [
    "BackoffParams",
    "PopulationMix",
    "TimingParams",
    "ThroughputInputs",
    "StationaryDistribution",
    "ClassSolution",
    "FixedPointSolution",
    "ThroughputReport",
    "InadmissiblePayloadError",
    "ConvergenceError",
    "tau_from_pc",
    "tau_eq19_printed",
    "stationary_distribution",
    "collision_scf",
    "collision_mh",
    "solve_scf_class",
    "solve_mh_class",
    "solve_contention",
    "throughput",
    "nscf_from_positions",
    "quantize_nscf",
]

SOLVER_TOL = 1e-12
SOLVER_MAX_ITER = 100_000


class InadmissiblePayloadError(ValueError):
    """E[P] exceeds the multi-channel bound T_s * M * r_tr."""


@dataclass(frozen=True)
class BackoffParams:
    W: int = 64
    m: int = 4
    P_hp: float = 1.0

    def __post_init__(self):
        if self.W < 1:
            raise ValueError(f"W must be >= 1, got {self.W}")
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if not 0.0 < self.P_hp <= 1.0:
            raise ValueError(f"P_hp must lie in (0, 1], got {self.P_hp}")

    def window(self, stage: int) -> int:
        return (2 ** min(stage, self.m)) * self.W


@dataclass(frozen=True)
class PopulationMix:
    N: int
    N_scf: int
    P_scf: float | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not 0 <= self.N_scf <= self.N:
            raise ValueError(f"need 0 <= N_scf <= N, got N_scf={self.N_scf}, N={self.N}")
        if self.P_scf is None:
            object.__setattr__(self, "P_scf", self.N_scf / self.N)
        if not 0.0 <= self.P_scf <= 1.0:
            raise ValueError(f"P_scf must lie in [0, 1], got {self.P_scf}")

    @property
    def N_mh(self) -> int:
        return self.N - self.N_scf

    @property
    def P_mh(self) -> float:
        return 1.0 - self.P_scf


@dataclass(frozen=True)
class TimingParams:
    """Control-channel durations in microseconds."""

    rts: float = 4.5
    cts: float = 3.2
    rcts: float = 3.2
    sifs: float = 10.0
    difs: float = 28.0
    sigma: float = 9.0

    def __post_init__(self):
        if min(self.rts, self.cts, self.rcts, self.sifs, self.difs, self.sigma) < 0:
            raise ValueError("durations must be non-negative")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not self.difs > self.sifs:
            raise ValueError(f"SCF priority needs DIFS > SIFS, got DIFS={self.difs}, SIFS={self.sifs}")

    @property
    def T_s(self) -> float:
        return self.rts + self.sifs + self.cts + self.sifs + self.rcts + self.difs

    @property
    def T_c(self) -> float:
        return self.rts + self.difs


@dataclass(frozen=True)
class ThroughputInputs:
    E_P: float = 27_000.0
    M: int = 13
    r_tr: float = 36e6

    def payload_bound(self, timing: TimingParams) -> float:
        """T_s * M * r_tr in bits."""
        return timing.T_s * 1e-6 * self.M * self.r_tr

    def check_admissible(self, timing: TimingParams) -> None:
        bound = self.payload_bound(timing)
        if self.E_P > bound:
            raise InadmissiblePayloadError(
                f"E[P]={self.E_P:g} bits exceeds T_s*M*r_tr={bound:.1f} bits "
                f"(T_s={timing.T_s:g} us, M={self.M}, r_tr={self.r_tr:g} b/s)"
            )


def _check_pc(pc: float) -> None:
    if not 0.0 <= pc < 1.0:
        raise ValueError(f"collision probability must lie in [0, 1), got {pc}")


def _backoff_sum(pc: float, bp: BackoffParams) -> float:
    # (W+1) + pc*W*sum_{i<m} (2 pc)^i, i.e. ((1-2pc)(W+1) + pc W (1-(2pc)^m)) / (1-2pc)
    # with the pc = 1/2 singularity cancelled
    geo = sum((2.0 * pc) ** i for i in range(bp.m))
    return (bp.W + 1) + pc * bp.W * geo


def tau_from_pc(pc: float, bp: BackoffParams, p_scf: float) -> float:
    """Per-slot transmission probability given the conditional collision probability.

    Obtained by eliminating b_00 between the normalisation condition and
    tau = b_00 / (1 - pc).  The semi-active state carries mass
    p_scf * b_00 = p_scf * (1 - pc) * tau.
    """
    _check_pc(pc)
    if not 0.0 <= p_scf <= 1.0:
        raise ValueError(f"p_scf must lie in [0, 1], got {p_scf}")
    return _tau(pc, bp, p_scf)


def _tau(pc: float, bp: BackoffParams, p_scf: float) -> float:
    # also evaluated at pc = 1 as the right end of the solver bracket
    busy_share = (2.0 * bp.P_hp - 1.0) / bp.P_hp
    if busy_share <= 0.0:
        raise ValueError(
            f"P_hp={bp.P_hp} leaves no probability mass for the backoff chain "
            "(the printed idle-state term is only consistent for P_hp > 1/2)"
        )
    return busy_share * 2.0 / (_backoff_sum(pc, bp) + 2.0 * (1.0 - pc) * p_scf)


def tau_eq19_printed(pc: float, bp: BackoffParams, p_scf: float) -> float:
    """Literal transcription of the published closed form for tau (comparison only)."""
    _check_pc(pc)
    x = 1.0 - 2.0 * pc
    num = 2.0 * x * (2.0 * bp.P_hp - 1.0)
    den = (
        bp.P_hp * x * (bp.W + 1)
        + pc * bp.W * (1.0 - (2.0 * pc) ** bp.m)
        + 2.0 * bp.P_hp * x * (2.0 * bp.P_hp - 1.0) * p_scf
    )
    return num / den


@dataclass(frozen=True)
class StationaryDistribution:
    b_00: float
    b_ik: tuple
    b_idle: float
    b_semiactive: float

    @property
    def tau(self) -> float:
        return sum(stage[0] for stage in self.b_ik)

    def total(self) -> float:
        return sum(math.fsum(stage) for stage in self.b_ik) + self.b_idle + self.b_semiactive


def stationary_distribution(pc: float, bp: BackoffParams, p_scf: float) -> StationaryDistribution:
    """Per-state probabilities of the backoff chain, normalised to one."""
    _check_pc(pc)
    m = bp.m
    # head-of-stage probabilities relative to b_00
    if m == 0:
        heads = [1.0]
    else:
        heads = [pc**i for i in range(m)] + [pc**m / (1.0 - pc)]
    entry = [0.0] * (m + 1)
    entry[0] = (1.0 - pc) * sum(heads)
    for i in range(1, m + 1):
        entry[i] = pc * (heads[i - 1] + (heads[m] if i == m else 0.0))
    if m == 0:
        entry[0] = 1.0
    rel = []
    for i in range(m + 1):
        w = bp.window(i)
        rel.append([(w - k) / w * entry[i] for k in range(w)])
    rel_total = sum(math.fsum(stage) for stage in rel)
    tau_rel = sum(stage[0] for stage in rel)
    # semi-active mass follows each successful transmission
    semi_rel = p_scf * (1.0 - pc) * tau_rel
    idle = (1.0 - bp.P_hp) / bp.P_hp
    b00 = (1.0 - idle) / (rel_total + semi_rel)
    if b00 <= 0.0:
        raise ValueError(f"P_hp={bp.P_hp} gives a non-positive b_00")
    b_ik = tuple(tuple(b00 * x for x in stage) for stage in rel)
    return StationaryDistribution(
        b_00=b_ik[0][0], b_ik=b_ik, b_idle=idle, b_semiactive=semi_rel * b00
    )


class ClassSolution(NamedTuple):
    tau: float
    p_c: float
    residual: float
    present: bool


@dataclass(frozen=True)
class FixedPointSolution:
    tau_scf: float
    tau_mh: float
    p_c1: float
    p_c2: float
    residual: float
    has_scf: bool = True
    has_mh: bool = True


def collision_scf(tau_scf: float, n_scf: int) -> float:
    """P_c1: some other SCF UAV transmits in the same slot."""
    return 1.0 - (1.0 - tau_scf) ** (n_scf - 1) if n_scf > 1 else 0.0


def collision_mh(tau_scf: float, tau_mh: float, n_scf: int, n: int) -> float:
    """P_c2: no SCF UAV transmits (else MH defers) and some other MH UAV does."""
    n_mh = n - n_scf
    if n_mh <= 1:
        return 0.0
    return (1.0 - tau_scf) ** n_scf * (1.0 - (1.0 - tau_mh) ** (n_mh - 1))


def solve_scf_class(bp: BackoffParams, mix: PopulationMix) -> ClassSolution:
    """tau_scf and P_c1 = 1 - (1 - tau_scf)^(N_scf - 1)."""
    n = mix.N_scf
    if n == 0:
        return ClassSolution(0.0, 0.0, 0.0, False)
    if n == 1:
        return ClassSolution(tau_from_pc(0.0, bp, 1.0), 0.0, 0.0, True)

    def update(tau: float) -> float:
        return _tau(collision_scf(tau, n), bp, 1.0)

    tau, res = solve_fixed_point(update, 0.0, 1.0, SOLVER_TOL, SOLVER_MAX_ITER)
    return ClassSolution(tau, collision_scf(tau, n), res, True)


def solve_mh_class(bp: BackoffParams, mix: PopulationMix, tau_scf: float) -> ClassSolution:
    """tau_mh and P_c2 = (1 - tau_scf)^N_scf * [1 - (1 - tau_mh)^(N - N_scf - 1)]."""
    n = mix.N_mh
    if n == 0:
        return ClassSolution(0.0, 0.0, 0.0, False)
    if n == 1:
        return ClassSolution(tau_from_pc(0.0, bp, 0.0), 0.0, 0.0, True)

    def pc_of(tau: float) -> float:
        return collision_mh(tau_scf, tau, mix.N_scf, mix.N)

    tau, res = solve_fixed_point(lambda x: _tau(pc_of(x), bp, 0.0), 0.0, 1.0, SOLVER_TOL, SOLVER_MAX_ITER)
    return ClassSolution(tau, pc_of(tau), res, True)


def solve_contention(bp: BackoffParams, mix: PopulationMix) -> FixedPointSolution:
    scf = solve_scf_class(bp, mix)
    mh = solve_mh_class(bp, mix, scf.tau)
    return FixedPointSolution(
        tau_scf=scf.tau,
        tau_mh=mh.tau,
        p_c1=scf.p_c,
        p_c2=mh.p_c,
        residual=max(scf.residual, mh.residual),
        has_scf=scf.present,
        has_mh=mh.present,
    )


@dataclass(frozen=True)
class ThroughputReport:
    solution: FixedPointSolution
    p_tr: float
    p_s: float
    S: float
    S_scf: float
    S_mh: float
    success_scf: float
    success_mh: float
    T_s: float
    T_c: float
    mean_slot: float


def throughput(
    bp: BackoffParams,
    mix: PopulationMix,
    timing: TimingParams,
    tin: ThroughputInputs,
    solution: FixedPointSolution | None = None,
) -> ThroughputReport:
    """Saturation throughput in bit/s, split into the SCF and MH contributions."""
    tin.check_admissible(timing)
    sol = solution or solve_contention(bp, mix)
    k, n_mh = mix.N_scf, mix.N_mh
    none_scf = (1.0 - sol.tau_scf) ** k
    p_tr = 1.0 - none_scf * (1.0 - sol.tau_mh) ** n_mh
    # per-slot probabilities of a lone SCF sender / lone MH sender with no SCF sender
    succ_scf = k * sol.tau_scf * (1.0 - sol.tau_scf) ** (k - 1) if k else 0.0
    succ_mh = n_mh * sol.tau_mh * none_scf * (1.0 - sol.tau_mh) ** (n_mh - 1) if n_mh else 0.0
    p_s = (succ_scf + succ_mh) / p_tr if p_tr > 0 else 0.0

    sigma, t_s, t_c = timing.sigma * 1e-6, timing.T_s * 1e-6, timing.T_c * 1e-6
    mean_slot = (1.0 - p_tr) * sigma + p_tr * p_s * t_s + p_tr * (1.0 - p_s) * t_c
    scale = tin.E_P / mean_slot
    return ThroughputReport(
        solution=sol,
        p_tr=p_tr,
        p_s=p_s,
        S=p_s * p_tr * scale,
        S_scf=succ_scf * scale,
        S_mh=succ_mh * scale,
        success_scf=succ_scf,
        success_mh=succ_mh,
        T_s=timing.T_s,
        T_c=timing.T_c,
        mean_slot=mean_slot,
    )


def quantize_nscf(value: float, mode: str = "floor") -> int:
    if mode == "floor":
        return int(math.floor(value))
    if mode == "round":
        return int(math.floor(value + 0.5))
    if mode == "ceil":
        return int(math.ceil(value))
    raise ValueError(f"unknown quantization mode {mode!r}")


def nscf_from_positions(
    geom: SceneGeometry, positions: Sequence, t: float, quantize: str = "floor"
) -> tuple[float, int]:
    """Expected number of SCF-mode UAVs, sum of p_t over the positions, and its quantisation."""
    total = math.fsum(scf_probability(geom, pos)(t) for pos in positions)
    return total, quantize_nscf(total, quantize)
