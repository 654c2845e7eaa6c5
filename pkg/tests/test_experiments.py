from statistics import mean

import pytest

from udmac import config
from udmac import experiments as X
from udmac.macsim import UDMAC, VEMAC


@pytest.fixture(scope="module")
def preset():
    return config.load_config()


def test_3d_probabilities_near_zero(preset):
    cfg = config.apply_overrides(preset, [("sweep.dims", "3"), ("montecarlo.num_points", "1000")])
    cols, rows, _, summary = X.cmd_validate_probability(cfg, config.sweep_spec(cfg))
    assert max(r[cols.index("p_closed_form")] for r in rows) <= 0.01
    assert summary[0][0] == 3


def test_case_column(preset):
    cfg = config.apply_overrides(preset, [("sweep.dims", "1"), ("montecarlo.num_points", "100")])
    cols, rows, _, _ = X.cmd_validate_probability(cfg, config.sweep_spec(cfg))
    case = {(r[1], r[2]): r[cols.index("case")] for r in rows}
    assert case[(2.5, 0.0)] == 1 and case[(2.5, 600.0)] == 2 and case[(4.5, 0.0)] == 1 and case[(4.5, 120.0)] == 2


def test_nscf_zero_equals_classical(preset):
    cfg = config.apply_overrides(preset, [("sweep.dims", "2"), ("sweep.seeds", "0"), ("sim.duration", "0.05")])
    cols, rows = X.cmd_throughput(cfg, config.sweep_spec(cfg))
    rows = [dict(zip(cols, r)) for r in rows]
    assert all(r["n_scf"] == 0 for r in rows)
    assert all(r["S_analytic"] == r["S_classical"] for r in rows)


def test_population_fixed_across_t(preset):
    grid = X._population_nscf(preset, config.sweep_spec(preset), 1)
    counts = [k for _, _, k in grid]
    assert counts == sorted(counts) and counts[0] < counts[-1]


def test_compare_keys_and_order(preset):
    base = config.sim_config(preset, duration=0.02)
    out = X.compare(base, [UDMAC, VEMAC], [0, 5], [1, 0], freeze_values=[0, 10])
    keys = list(out)
    assert keys[0] == (UDMAC, 0, 0, 1)
    # VeMAC has no freezing period, so it is run once per (N_scf, seed)
    assert sum(k[0] == VEMAC for k in keys) == 4
    assert len(keys) == 8 + 4


def test_freeze_trends(preset):
    cfg = config.apply_overrides(
        preset,
        [("sweep.dims", "1"), ("sweep.freeze_t_grid", "120, 600"), ("sweep.F_grid", "0, 100"), ("sweep.seeds", "0:4:1")],
    )
    cols, rows = X.cmd_freeze_tradeoff(cfg, config.sweep_spec(cfg, t_key="freeze_t_grid"))
    rows = [dict(zip(cols, r)) for r in rows]

    def avg(key, **where):
        return mean(r[key] for r in rows if all(r[k] == v for k, v in where.items()))

    # SCF share grows with t; the long freeze pushes the bits toward MH
    assert avg("scf_share", t_s=600.0, F=0) >= avg("scf_share", t_s=120.0, F=0)
    for t in (120.0, 600.0):
        assert avg("mh_share", t_s=t, F=100) > avg("mh_share", t_s=t, F=0)
        assert avg("S_total", t_s=t, F=0) > avg("S_total", t_s=t, F=100)


def test_compare_command_rows(preset):
    cfg = config.apply_overrides(preset, [("sweep.seeds", "0"), ("sim.duration", "0.2"), ("sweep.n_scf_grid", "0, 10")])
    cols, rows = X.cmd_compare(cfg, config.sweep_spec(cfg))
    assert [(r[0], r[1]) for r in rows] == [(UDMAC, 0), (UDMAC, 10), (VEMAC, 0), (VEMAC, 10)]
    assert all(r[cols.index("rel_err")] < 0.05 for r in rows)


def test_compare_rejects_empty_grid(preset):
    cfg = config.apply_overrides(preset, [("sweep.n_scf_grid", "")])
    with pytest.raises(config.ConfigError):
        X.cmd_compare(cfg, config.sweep_spec(cfg))
