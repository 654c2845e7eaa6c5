import math

import pytest

from udmac.macsim import (
    VEMAC,
    SimConfig,
    SimConfigError,
    run,
    run_udmac,
    run_vemac,
    vemac_expected_successes,
    vemac_partition,
)
from udmac.markov import BackoffParams, PopulationMix, ThroughputInputs, throughput


def cfg(n=20, k=5, **kw):
    return SimConfig(population=PopulationMix(n, k), **kw)


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(duration=0.0),
            dict(freeze_slots=-1),
            dict(mode_assignment="roundrobin"),
            dict(protocol="CSMA"),
            dict(vemac_frame_slots=0),
            dict(vemac_slot_us=0.0),
            dict(a2a_channels=14),
            dict(seed=-1),
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(SimConfigError):
            cfg(**kw)

    def test_population_bound(self):
        with pytest.raises(ValueError):
            PopulationMix(10, 11)

    def test_wrong_runner(self):
        with pytest.raises(SimConfigError):
            run_vemac(cfg())
        with pytest.raises(SimConfigError):
            run_udmac(cfg(protocol=VEMAC))

    def test_inadmissible_payload(self):
        with pytest.raises(ValueError, match="T_s"):
            run(cfg(tin=ThroughputInputs(E_P=30000)))


class TestUdmac:
    def test_deterministic(self):
        c = cfg(duration=0.2, seed=4, freeze_slots=10)
        assert run(c) == run(c)

    def test_seed_changes_outcome(self):
        assert run(cfg(duration=0.2, seed=1)) != run(cfg(duration=0.2, seed=2))

    @pytest.mark.parametrize("k,F", [(0, 0), (5, 0), (20, 25), (20, 0)])
    def test_conservation(self, k, F):
        s = run(cfg(k=k, freeze_slots=F, duration=0.3))
        assert s.idle_time + s.success_time + s.collision_time == pytest.approx(s.sim_time, abs=9e-6)
        assert s.throughput_total == pytest.approx(s.delivered_bits / s.sim_time, rel=1e-15)
        assert s.throughput_total <= ThroughputInputs().M * ThroughputInputs().r_tr

    def test_priority_preemption(self):
        trace = []
        run_udmac(cfg(n=30, k=10, duration=0.2, seed=3), trace)
        rts = {ev[1]: ev for ev in trace if ev[0] == "rts"}
        assert rts
        for ev in rts.values():
            assert not (ev[2] and ev[3])
        defers = [ev for ev in trace if ev[0] == "defer"]
        assert defers, "expected at least one SCF/MH clash at this density"
        for _, rnd, ids in defers:
            assert rts[rnd][2] and not set(ids) & set(rts[rnd][2])

    def test_frozen_silence(self):
        trace = []
        F = 40
        run_udmac(cfg(n=10, k=10, freeze_slots=F, duration=0.1, seed=5), trace)
        frozen_since = {}
        windows = []
        for ev in trace:
            if ev[0] == "freeze":
                frozen_since[ev[2]] = ev[1]
            elif ev[0] == "wake":
                windows.append((ev[2], frozen_since.pop(ev[2]), ev[1]))
        assert windows
        for uid, start, end in windows:
            assert end - start > F
            for ev in trace:
                if ev[0] == "rts" and start < ev[1] < end:
                    assert uid not in ev[2] and uid not in ev[3]

    def test_backoff_legality(self):
        bp = BackoffParams(W=8, m=3)
        trace = []
        run_udmac(cfg(n=25, k=5, backoff=bp, duration=0.2, seed=8), trace)
        outcome = {}
        last_stage = {}
        for ev in trace:
            if ev[0] == "rts":
                senders = ev[2] or ev[3]
                for u in senders:
                    outcome[u] = "collision" if len(senders) > 1 else "success"
            elif ev[0] == "defer":
                for u in ev[2]:
                    outcome[u] = "defer"
            elif ev[0] == "draw":
                _, _, u, stage, counter = ev
                assert 0 <= stage <= bp.m
                assert 0 <= counter <= bp.window(stage) - 1
                if u in last_stage:
                    expected = min(last_stage[u] + 1, bp.m) if outcome.get(u) == "collision" else 0
                    assert stage == expected
                last_stage[u] = stage

    def test_single_station(self):
        c = cfg(n=1, k=0, duration=20.0, seed=1)
        s = run(c)
        t = c.timing
        expected = c.tin.E_P / ((t.T_s + (c.backoff.W - 1) / 2 * t.sigma) * 1e-6)
        assert s.throughput_total == pytest.approx(expected, rel=0.02)
        assert s.collisions_mh == 0

    def test_matches_analytic(self):
        c = cfg(n=100, k=20, duration=2.0, seed=0)
        s = run(c)
        ref = throughput(c.backoff, c.population, c.timing, c.tin).S
        assert s.throughput_total == pytest.approx(ref, rel=0.03)

    def test_starvation(self):
        base = run(cfg(n=10, k=10, duration=0.5)).throughput_total
        starved = run(cfg(n=10, k=10, freeze_slots=10**9, duration=0.5)).throughput_total
        assert starved < 0.01 * base

    def test_split_pool_blocks(self):
        s = run(cfg(n=20, k=5, a2a_channels=0, duration=0.1))
        assert s.successes_mh > 0 and s.blocked_mh == s.successes_mh
        assert s.delivered_bits_mh == 0.0 and s.blocked_scf == 0

    def test_bernoulli_mode(self):
        c = SimConfig(PopulationMix(50, 0, 0.3), mode_assignment="bernoulli", duration=0.3, seed=2)
        s = run(c)
        assert s.successes_scf > 0 and s.successes_mh > 0
        assert run(c) == s


class TestVemac:
    def test_partition(self):
        assert vemac_partition(100, 23, 100) == (23, 77)
        assert vemac_partition(100, 1, 100) == (1, 99)
        assert vemac_partition(100, 0, 100) == (0, 100)
        with pytest.raises(SimConfigError):
            vemac_partition(100, 50, 1)

    def test_lone_claimant(self):
        c = cfg(n=1, k=0, protocol=VEMAC, duration=1.0)
        s = run(c)
        slot = c.timing.T_s * 1e-6
        assert s.throughput_total == pytest.approx(c.tin.E_P / (100 * slot), rel=1e-12)
        assert s.collisions_mh == 0

    def test_balls_in_bins(self):
        c = cfg(n=100, k=0, protocol=VEMAC, duration=10.0, seed=6)
        s = run(c)
        frames = round(s.sim_time / (100 * c.timing.T_s * 1e-6))
        per_frame = s.successes_mh / frames
        mean = vemac_expected_successes(100, 0, 100)
        assert mean == pytest.approx(100 * 0.99**99, rel=1e-12)
        # the mean bounds the per-frame variance of singleton slots, so this band is conservative
        assert abs(per_frame - mean) <= 3 * math.sqrt(mean / frames)

    def test_slot_override(self):
        a = run(cfg(protocol=VEMAC, duration=0.5))
        b = run(cfg(protocol=VEMAC, duration=0.5, vemac_slot_us=2 * 58.9))
        assert b.throughput_total == pytest.approx(a.throughput_total / 2, rel=0.05)

    def test_deterministic(self):
        c = cfg(protocol=VEMAC, seed=3)
        assert run(c) == run(c)
