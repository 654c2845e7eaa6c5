import math

import numpy as np
import pytest

from udmac.geometry import SceneGeometry, probability_at
from udmac.montecarlo import (
    SamplerConfig,
    estimate_scf_probability,
    is_red,
    sample_returning_positions,
    sample_uav_positions,
    uav_position,
)

D_GRID = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5]
T_GRID = [float(t) for t in range(0, 601, 60)]


def geom(dim, H=0.05):
    return SceneGeometry(R=5.0, r=0.1, H=H, v_bar=0.005, dim=dim)


class TestSampler:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            SamplerConfig(geom(1), num_points=0)

    def test_3d_support(self):
        g = geom(3)
        pts = sample_returning_positions(SamplerConfig(g, 100_000, seed=7))
        norms = np.linalg.norm(pts, axis=1)
        assert np.all(norms > g.r) and np.all(norms <= g.R * (1 + 1e-12))
        assert np.all(pts[:, 2] >= 0.0)

    @pytest.mark.parametrize("dim", [1, 2])
    def test_planar_support(self, dim):
        g = geom(dim)
        pts = sample_returning_positions(SamplerConfig(g, 50_000, seed=7))
        rho = np.hypot(pts[:, 0], pts[:, 1])
        assert np.all(pts[:, 2] == g.H)
        assert np.all(rho > g.inner_reach) and np.all(rho <= g.outer_reach * (1 + 1e-12))
        if dim == 1:
            assert np.all(pts[:, 1] == 0.0)

    def test_1d_uses_both_sides(self):
        pts = sample_returning_positions(SamplerConfig(geom(1), 10_000, seed=1))
        share = np.mean(pts[:, 0] > 0)
        assert abs(share - 0.5) < 4 * math.sqrt(0.25 / 10_000)

    def test_1d_mean_abs_x(self):
        g = geom(1)
        n = 100_000
        x = np.abs(sample_returning_positions(SamplerConfig(g, n, seed=3))[:, 0])
        lo, hi = g.inner_reach, g.outer_reach
        se = (hi - lo) / math.sqrt(12 * n)
        assert abs(x.mean() - 0.5 * (lo + hi)) <= 3 * se

    def test_2d_radius_is_area_uniform(self):
        g = geom(2)
        pts = sample_returning_positions(SamplerConfig(g, 100_000, seed=4))
        rho2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        lo, hi = g.inner_reach**2, g.outer_reach**2
        se = (hi - lo) / math.sqrt(12 * len(rho2))
        assert abs(rho2.mean() - 0.5 * (lo + hi)) <= 4 * se

    def test_deterministic(self):
        cfg = SamplerConfig(geom(2), 1000, seed=11)
        assert np.array_equal(sample_returning_positions(cfg), sample_returning_positions(cfg))

    def test_streams_differ(self):
        g = geom(2)
        a = sample_returning_positions(SamplerConfig(g, 1000, seed=11))
        b = sample_returning_positions(SamplerConfig(g, 1000, seed=11, stream=(1,)))
        assert not np.array_equal(a, b)

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_population_outside_range(self, dim):
        g = geom(dim)
        pts = sample_uav_positions(g, 2000, seed=5)
        planar = np.hypot(pts[:, 0], pts[:, 1])
        if dim == 3:
            assert np.all(np.linalg.norm(pts, axis=1) > g.r)
        else:
            assert np.all(planar > g.r)


class TestIsRed:
    def test_within_range_at_t0(self):
        g = geom(2)
        u = uav_position(g, 2.5)
        assert is_red(g, u, (u[0] + 0.05, u[1] + 0.05, g.H), 0.0)

    def test_1d_far_side_threshold(self):
        g = geom(1, H=0.0)
        t, eps = 100.0, 1e-9
        xu = 2.0
        u = (xu, 0.0, 0.0)
        edge = xu + g.r + g.v_bar * t
        assert not is_red(g, u, (edge + eps, 0.0, 0.0), t)
        assert is_red(g, u, (edge - eps, 0.0, 0.0), t)

    def test_gu_side_moving_away(self):
        g = geom(1, H=0.0)
        u = (2.0, 0.0, 0.0)
        # returning UAV between the GU and the uav heads toward the GU, away from the uav
        assert not is_red(g, u, (1.5, 0.0, 0.0), 1000.0)
        assert not is_red(g, u, (-1.0, 0.0, 0.0), 1000.0)

    def test_3d_radial_approach(self):
        g = geom(3)
        u = (0.0, 0.0, 2.0)
        assert is_red(g, u, (0.0, 0.0, 3.0), 200.0)  # travels 1 km, reaches within r
        assert not is_red(g, u, (0.0, 0.0, 3.0), 100.0)  # travels 0.5 km only

    def test_vectorised_matches_scalar(self):
        g = geom(2)
        u = uav_position(g, 2.5)
        pts = sample_returning_positions(SamplerConfig(g, 500, seed=2))
        vec = is_red(g, u, pts, 300.0)
        assert list(vec) == [is_red(g, u, p, 300.0) for p in pts]

    def test_monotone_in_t(self):
        g = geom(3)
        u = uav_position(g, 2.0)
        pts = sample_returning_positions(SamplerConfig(g, 20_000, seed=9))
        prev = is_red(g, u, pts, 0.0)
        for t in (50.0, 200.0, 600.0, 2000.0):
            cur = is_red(g, u, pts, t)
            assert np.all(cur[prev])
            prev = cur


class TestEstimate:
    def test_t0_2d(self):
        g = geom(2)
        cfg = SamplerConfig(g, 200_000, seed=21)
        est = estimate_scf_probability(g, uav_position(g, 2.5), 0.0, cfg)
        expected = g.r**2 / (g.R**2 - g.r**2)
        assert abs(est.p_hat - expected) <= 3 * math.sqrt(expected * (1 - expected) / est.n)
        assert est.hits <= est.n and 0 <= est.p_hat <= 1

    def test_deterministic(self):
        g = geom(1)
        cfg = SamplerConfig(g, 10_000, seed=5)
        u = uav_position(g, 2.0)
        assert estimate_scf_probability(g, u, 60.0, cfg) == estimate_scf_probability(g, u, 60.0, cfg)

    def test_stderr_scaling(self):
        g = geom(1)
        u = uav_position(g, 2.5)
        a = estimate_scf_probability(g, u, 300.0, SamplerConfig(g, 25_000, seed=1))
        b = estimate_scf_probability(g, u, 300.0, SamplerConfig(g, 100_000, seed=1))
        assert b.stderr / a.stderr == pytest.approx(0.5, rel=0.05)

    def test_rejects_bad_uav(self):
        g = geom(2)
        with pytest.raises(ValueError):
            estimate_scf_probability(g, (2.0, 0.0, 0.0), 0.0, SamplerConfig(g, 10))

    @pytest.mark.parametrize("dim", [1, 2])
    def test_four_sigma_consistency(self, dim):
        g = geom(dim)
        cfg = SamplerConfig(g, 100_000, seed=0)
        pts = sample_returning_positions(cfg)
        inside = total = 0
        for d in D_GRID:
            u = uav_position(g, d)
            for t in T_GRID:
                est = estimate_scf_probability(g, u, t, cfg, pts)
                p = probability_at(g, d, t)
                se = math.sqrt(p * (1 - p) / est.n)
                inside += abs(est.p_hat - p) <= 4 * se
                total += 1
        assert inside / total >= 0.99
