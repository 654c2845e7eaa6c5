"""Slot-accurate simulation of UD-MAC control-channel contention, plus a
VeMAC-style slotted baseline.

The UD-MAC run advances in contention rounds.  Every round opens with the
control channel idle; each active UAV's backoff counter ticks at that idle
boundary and UAVs whose counter has reached zero send an RTS.  A round is
therefore either one empty slot (sigma), a successful RTS/CTS/RCTS exchange
(T_s) or a collision (T_c).  SCF-mode UAVs only wait SIFS, so whenever at
least one SCF UAV fires, MH UAVs that were about to fire sense the channel
busy and defer with a fresh stage-0 backoff.

Instead of ticking every counter each round, each UAV keeps the absolute
round at which it will next fire; the event queue jumps straight over runs
of empty rounds.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .markov import BackoffParams, PopulationMix, ThroughputInputs, TimingParams
from .rng import SIM_STREAM, VEMAC_STREAM, make_rng

__all__ = [
    "SimConfig",
    "SimStats",
    "UavState",
    "SimConfigError",
    "run",
    "run_udmac",
    "run_vemac",
    "UDMAC",
    "VEMAC",
]

UDMAC = "UD-MAC"
VEMAC = "VeMAC"
SCF = "SCF"
MH = "MH"


class SimConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    population: PopulationMix
    backoff: BackoffParams = field(default_factory=BackoffParams)
    timing: TimingParams = field(default_factory=TimingParams)
    tin: ThroughputInputs = field(default_factory=ThroughputInputs)
    freeze_slots: int = 0
    mode_assignment: str = "fixed-split"
    duration: float = 1.0
    seed: int = 0
    protocol: str = UDMAC
    vemac_frame_slots: int = 100
    # None: one control-channel handshake (T_s) per VeMAC slot
    vemac_slot_us: float | None = None
    # None: all M data channels form one shared pool; otherwise MH forwards use
    # this many A2A channels and SCF deliveries the remaining A2G channels
    a2a_channels: int | None = None

    def __post_init__(self):
        if not self.duration > 0:
            raise SimConfigError(f"duration must be positive, got {self.duration}")
        if self.freeze_slots < 0:
            raise SimConfigError(f"freeze_slots must be >= 0, got {self.freeze_slots}")
        if self.mode_assignment not in ("fixed-split", "bernoulli"):
            raise SimConfigError(f"unknown mode_assignment {self.mode_assignment!r}")
        if self.protocol not in (UDMAC, VEMAC):
            raise SimConfigError(f"unknown protocol {self.protocol!r}")
        if self.vemac_frame_slots < 1:
            raise SimConfigError("vemac_frame_slots must be >= 1")
        if self.vemac_slot_us is not None and self.vemac_slot_us <= 0:
            raise SimConfigError("vemac_slot_us must be positive")
        if self.a2a_channels is not None and not 0 <= self.a2a_channels <= self.tin.M:
            raise SimConfigError(f"a2a_channels must lie in [0, M={self.tin.M}]")
        if self.seed < 0:
            raise SimConfigError("seed must be non-negative")

    def with_nscf(self, n_scf: int) -> "SimConfig":
        return replace(self, population=PopulationMix(self.population.N, n_scf))


@dataclass(frozen=True)
class SimStats:
    protocol: str
    sim_time: float
    successes_scf: int
    successes_mh: int
    collisions_scf: int
    collisions_mh: int
    idle_slots: int
    idle_time: float
    success_time: float
    collision_time: float
    delivered_bits_scf: float
    delivered_bits_mh: float
    blocked_scf: int = 0
    blocked_mh: int = 0
    rts_scf: int = 0
    rts_mh: int = 0
    rounds: int = 0

    @property
    def busy_time(self) -> float:
        return self.success_time + self.collision_time

    @property
    def delivered_bits(self) -> float:
        return self.delivered_bits_scf + self.delivered_bits_mh

    @property
    def throughput_scf(self) -> float:
        return self.delivered_bits_scf / self.sim_time

    @property
    def throughput_mh(self) -> float:
        return self.delivered_bits_mh / self.sim_time

    @property
    def throughput_total(self) -> float:
        return self.delivered_bits / self.sim_time

    @property
    def scf_share(self) -> float:
        total = self.delivered_bits
        return self.delivered_bits_scf / total if total else 0.0


@dataclass
class UavState:
    id: int
    mode: str
    lifecycle: str = "active"
    backoff_stage: int = 0
    next_attempt: int = 0
    freeze_until: int = 0  # global idle-slot count at which the freeze ends

    def backoff_counter(self, now: int) -> int:
        return self.next_attempt - now


class _ChannelPool:
    def __init__(self, size: int):
        self.free_at = [0.0] * size

    def acquire(self, start: float, hold: float) -> bool:
        if not self.free_at:
            return False
        i = min(range(len(self.free_at)), key=self.free_at.__getitem__)
        if self.free_at[i] > start + 1e-15:
            return False
        self.free_at[i] = start + hold
        return True


def _initial_modes(cfg: SimConfig, rng: np.random.Generator) -> list[str]:
    pop = cfg.population
    if cfg.mode_assignment == "bernoulli":
        draws = rng.random(pop.N)
        return [SCF if u < pop.P_scf else MH for u in draws]
    return [SCF] * pop.N_scf + [MH] * pop.N_mh


def run(cfg: SimConfig, trace: list | None = None) -> SimStats:
    if cfg.protocol == UDMAC:
        return run_udmac(cfg, trace)
    return run_vemac(cfg)


def run_udmac(cfg: SimConfig, trace: list | None = None) -> SimStats:
    """Simulate UD-MAC for ``cfg.duration`` seconds.

    If ``trace`` is a list, events are appended to it:
    ``("draw", round, uav, stage, counter)``, ``("rts", round, scf_ids, mh_ids)``,
    ``("defer", round, mh_ids)``, ``("freeze", round, uav, idle_until)`` and
    ``("wake", round, uav)``.
    """
    if cfg.protocol != UDMAC:
        raise SimConfigError(f"run_udmac needs protocol={UDMAC!r}, got {cfg.protocol!r}")
    rng = make_rng(cfg.seed, SIM_STREAM)
    bp, timing, tin = cfg.backoff, cfg.timing, cfg.tin
    tin.check_admissible(timing)
    sigma, t_s, t_c = timing.sigma * 1e-6, timing.T_s * 1e-6, timing.T_c * 1e-6
    hold = tin.E_P / tin.r_tr
    if cfg.a2a_channels is None:
        shared = _ChannelPool(tin.M)
        pools = {SCF: shared, MH: shared}
    else:
        pools = {MH: _ChannelPool(cfg.a2a_channels), SCF: _ChannelPool(tin.M - cfg.a2a_channels)}
    F = cfg.freeze_slots
    p_scf = cfg.population.P_scf
    bernoulli = cfg.mode_assignment == "bernoulli"

    uavs = [UavState(i, mode) for i, mode in enumerate(_initial_modes(cfg, rng))]
    queue: list[tuple[int, int]] = []
    frozen: list[tuple[int, int]] = []

    def schedule(u: UavState, from_round: int) -> None:
        counter = int(rng.integers(bp.window(u.backoff_stage)))
        u.next_attempt = from_round + counter
        if trace is not None:
            trace.append(("draw", from_round, u.id, u.backoff_stage, counter))
        heapq.heappush(queue, (u.next_attempt, u.id))

    for u in uavs:
        schedule(u, 0)

    now = 0  # index of the next contention round
    idle = 0
    clock = 0.0
    idle_time = success_time = collision_time = 0.0
    succ = {SCF: 0, MH: 0}
    coll = {SCF: 0, MH: 0}
    bits = {SCF: 0.0, MH: 0.0}
    blocked = {SCF: 0, MH: 0}
    rts = {SCF: 0, MH: 0}
    rounds = 0

    while clock < cfg.duration:
        nxt = queue[0][0] if queue else math.inf
        if frozen and frozen[0][0] <= idle + (nxt - now):
            until, uid = heapq.heappop(frozen)
            u = uavs[uid]
            wake = now + (until - idle)
            u.lifecycle = "active"
            if bernoulli:
                u.mode = SCF if rng.random() < p_scf else MH
            if trace is not None:
                trace.append(("wake", wake, uid))
            schedule(u, wake)
            continue

        gap = nxt - now
        if clock + gap * sigma >= cfg.duration:
            n_idle = max(1, math.ceil((cfg.duration - clock) / sigma - 1e-9))
            idle += n_idle
            idle_time += n_idle * sigma
            clock += n_idle * sigma
            rounds += n_idle
            break
        idle += gap
        idle_time += gap * sigma
        clock += gap * sigma
        rounds += gap + 1

        firing = []
        while queue and queue[0][0] == nxt:
            firing.append(uavs[heapq.heappop(queue)[1]])
        scf_tx = [u for u in firing if u.mode == SCF]
        mh_tx = [u for u in firing if u.mode == MH]
        now = nxt + 1

        if scf_tx and mh_tx:
            # SIFS beats DIFS: MH UAVs find the channel taken and back off afresh
            if trace is not None:
                trace.append(("defer", nxt, [u.id for u in mh_tx]))
            for u in mh_tx:
                u.backoff_stage = 0
                schedule(u, now)
            mh_tx = []
        senders = scf_tx or mh_tx
        mode = senders[0].mode
        rts[mode] += len(senders)
        if trace is not None:
            trace.append(("rts", nxt, [u.id for u in scf_tx], [u.id for u in mh_tx]))

        if len(senders) == 1:
            u = senders[0]
            clock += t_s
            success_time += t_s
            succ[mode] += 1
            if pools[mode].acquire(clock, hold):
                bits[mode] += tin.E_P
            else:
                blocked[mode] += 1
            u.backoff_stage = 0
            if mode == SCF and F > 0:
                u.lifecycle = "semi-active"
                u.freeze_until = idle + F
                heapq.heappush(frozen, (u.freeze_until, u.id))
                if trace is not None:
                    trace.append(("freeze", nxt, u.id, u.freeze_until))
            else:
                if mode == SCF and bernoulli:
                    u.mode = SCF if rng.random() < p_scf else MH
                schedule(u, now)
        else:
            clock += t_c
            collision_time += t_c
            coll[mode] += 1
            for u in senders:
                u.backoff_stage = min(u.backoff_stage + 1, bp.m)
                schedule(u, now)

    return SimStats(
        protocol=UDMAC,
        sim_time=clock,
        successes_scf=succ[SCF],
        successes_mh=succ[MH],
        collisions_scf=coll[SCF],
        collisions_mh=coll[MH],
        idle_slots=idle,
        idle_time=idle_time,
        success_time=success_time,
        collision_time=collision_time,
        delivered_bits_scf=bits[SCF],
        delivered_bits_mh=bits[MH],
        blocked_scf=blocked[SCF],
        blocked_mh=blocked[MH],
        rts_scf=rts[SCF],
        rts_mh=rts[MH],
        rounds=rounds,
    )


def vemac_partition(n: int, n_scf: int, frame_slots: int) -> tuple[int, int]:
    """Slots per frame for the SCF and MH sets, proportional to their sizes."""
    scf_slots = math.ceil(frame_slots * n_scf / n) if n else 0
    mh_slots = frame_slots - scf_slots
    if n_scf > 0 and scf_slots == 0 or n - n_scf > 0 and mh_slots == 0:
        raise SimConfigError(
            f"empty VeMAC partition: {frame_slots} slots for {n_scf} SCF / {n - n_scf} MH UAVs"
        )
    return scf_slots, mh_slots


def _claims(rng: np.random.Generator, frames: int, claimants: int, slots: int) -> np.ndarray:
    """Claimants per (frame, slot) when each claimant picks one slot per frame."""
    if claimants == 0 or slots == 0:
        return np.zeros((frames, slots), dtype=np.int64)
    picks = rng.integers(0, slots, size=(frames, claimants))
    flat = picks + (np.arange(frames) * slots)[:, None]
    return np.bincount(flat.ravel(), minlength=frames * slots).reshape(frames, slots)


def run_vemac(cfg: SimConfig) -> SimStats:
    """Frame-by-frame VeMAC baseline: every UAV picks one slot of its set per frame."""
    if cfg.protocol != VEMAC:
        raise SimConfigError(f"run_vemac needs protocol={VEMAC!r}, got {cfg.protocol!r}")
    rng = make_rng(cfg.seed, VEMAC_STREAM)
    modes = _initial_modes(cfg, rng)
    n = len(modes)
    n_scf = modes.count(SCF)
    L = cfg.vemac_frame_slots
    scf_slots, mh_slots = vemac_partition(n, n_scf, L)
    slot = (cfg.vemac_slot_us if cfg.vemac_slot_us is not None else cfg.timing.T_s) * 1e-6
    frames = max(1, math.ceil(cfg.duration / (L * slot) - 1e-9))

    scf_claims = _claims(rng, frames, n_scf, scf_slots)
    mh_claims = _claims(rng, frames, n - n_scf, mh_slots)
    s_scf = int(np.count_nonzero(scf_claims == 1))
    s_mh = int(np.count_nonzero(mh_claims == 1))
    c_scf = int(np.count_nonzero(scf_claims > 1))
    c_mh = int(np.count_nonzero(mh_claims > 1))
    total_slots = frames * L
    empty = total_slots - s_scf - s_mh - c_scf - c_mh
    return SimStats(
        protocol=VEMAC,
        sim_time=total_slots * slot,
        successes_scf=s_scf,
        successes_mh=s_mh,
        collisions_scf=c_scf,
        collisions_mh=c_mh,
        idle_slots=empty,
        idle_time=empty * slot,
        success_time=(s_scf + s_mh) * slot,
        collision_time=(c_scf + c_mh) * slot,
        delivered_bits_scf=s_scf * cfg.tin.E_P,
        delivered_bits_mh=s_mh * cfg.tin.E_P,
        rts_scf=frames * n_scf,
        rts_mh=frames * (n - n_scf),
        rounds=total_slots,
    )


def vemac_expected_successes(n: int, n_scf: int, frame_slots: int) -> float:
    """Balls-in-bins expectation of single-claimant slots per frame."""
    scf_slots, mh_slots = vemac_partition(n, n_scf, frame_slots)
    total = 0.0
    for k, s in ((n_scf, scf_slots), (n - n_scf, mh_slots)):
        if k:
            total += k * (1.0 - 1.0 / s) ** (k - 1)
    return total
