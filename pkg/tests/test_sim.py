"""Tests for the Monte Carlo simulation harness."""

import numpy as np
import pytest

from stepfdr.sim import (
    PROCEDURES,
    SIM_ROW_FIELDS,
    SimConfig,
    TruthAssignment,
    gen_binomial_pair,
    gen_copula_uniforms,
    gen_poisson_pair,
    run_cell,
    run_grid,
    summaries_to_rows,
)


def bt_config(**kwargs):
    base = dict(test="bt", pi0=0.5, alpha=0.05, eta=3.0, m=20, reps=3, seed=0)
    base.update(kwargs)
    return SimConfig(**base)


def fet_config(**kwargs):
    base = dict(test="fet", pi0=0.5, alpha=0.05, n=10, m=20, reps=3, seed=0)
    base.update(kwargs)
    return SimConfig(**base)


class TestSimConfigValidation:
    def test_bt_requires_eta_and_no_n(self):
        with pytest.raises(ValueError):
            SimConfig(test="bt", pi0=0.5, alpha=0.05, m=20)
        with pytest.raises(ValueError):
            SimConfig(test="bt", pi0=0.5, alpha=0.05, m=20, eta=3.0, n=10)

    def test_fet_requires_n_and_no_eta(self):
        with pytest.raises(ValueError):
            SimConfig(test="fet", pi0=0.5, alpha=0.05, m=20)
        with pytest.raises(ValueError):
            SimConfig(test="fet", pi0=0.5, alpha=0.05, m=20, n=10, eta=3.0)

    def test_unknown_test_rejected(self):
        with pytest.raises(ValueError):
            SimConfig(test="tt", pi0=0.5, alpha=0.05, m=20, eta=3.0)

    def test_pi0_m_must_be_integral(self):
        with pytest.raises(ValueError):
            bt_config(pi0=0.33, m=20)
        cfg = bt_config(pi0=0.45, m=20)
        assert cfg.m0 == 9
        assert cfg.m1 == 11

    def test_alpha_bounds(self):
        for bad in (0.0, 1.0, -0.2):
            with pytest.raises(ValueError):
                bt_config(alpha=bad)

    def test_block_geometry_must_match_m(self):
        with pytest.raises(ValueError):
            bt_config(dependence="block", blocks=3, block_size=10, m=20)
        cfg = bt_config(dependence="block", blocks=4, block_size=5, m=20)
        assert cfg.blocks * cfg.block_size == cfg.m

    def test_choice_fields(self):
        with pytest.raises(ValueError):
            bt_config(dependence="equicorrelated")
        with pytest.raises(ValueError):
            bt_config(copula_sharing="both")
        with pytest.raises(ValueError):
            bt_config(reps=0)
        with pytest.raises(ValueError):
            bt_config(seed=-1)


def test_truth_assignment_layout():
    truth = TruthAssignment(m=200, m0=100)
    assert truth.m1 == 100
    assert np.array_equal(truth.null_indices, np.arange(100))


def test_gen_binomial_pair_theta_pattern():
    cfg = fet_config(m=200, pi0=0.5)
    rng = np.random.default_rng(5)
    theta, counts, truth = gen_binomial_pair(cfg, rng)
    assert truth.m0 == 100 and truth.m1 == 100
    assert np.array_equal(theta[:100, 0], theta[:100, 1])
    assert np.all((theta[:100, 0] >= 0.2) & (theta[:100, 0] <= 0.3))
    assert np.all(theta[100:150] == (0.3, 0.75))
    assert np.all(theta[150:200] == (0.75, 0.3))
    assert counts.dtype == np.int64
    assert counts.shape == (200, 2)
    assert np.all((counts >= 0) & (counts <= cfg.n))


def test_gen_poisson_pair_theta_pattern():
    cfg = bt_config(m=200, pi0=0.5, eta=4.5)
    rng = np.random.default_rng(6)
    theta, counts, truth = gen_poisson_pair(cfg, rng)
    assert np.all(theta >= 4.5)
    assert np.array_equal(theta[:100, 0], theta[:100, 1])
    ratio_hi = theta[100:150, 1] / theta[100:150, 0]
    ratio_lo = theta[150:200, 0] / theta[150:200, 1]
    for ratio in (ratio_hi, ratio_lo):
        assert np.all((ratio >= 3.0) & (ratio <= 5.5))
    assert counts.dtype == np.int64
    assert np.all(counts >= 0)


def test_gen_pair_rejects_wrong_test():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        gen_poisson_pair(fet_config(), rng)
    with pytest.raises(ValueError):
        gen_binomial_pair(bt_config(), rng)


def test_copula_correlation_structure():
    rng = np.random.default_rng(7)
    draws = np.array([gen_copula_uniforms(2, 10, 0.2, rng)
                      for _ in range(4000)])
    assert draws.shape == (4000, 20)
    assert np.all((draws > 0) & (draws < 1))
    corr = np.corrcoef(draws, rowvar=False)
    within = corr[0, 1:10]
    across = corr[0, 10:]
    # Spearman-style correlation of the uniforms under rho = 0.2 is about
    # (6 / pi) * arcsin(rho / 2) = 0.191.
    assert within.mean() == pytest.approx(0.191, abs=0.04)
    assert abs(across.mean()) < 0.04


def test_copula_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        gen_copula_uniforms(0, 10, 0.2, rng)
    with pytest.raises(ValueError):
        gen_copula_uniforms(2, 10, 1.0, rng)


def test_run_cell_deterministic():
    cfg = fet_config(m=40, pi0=0.5, reps=4, seed=11)
    s1 = run_cell(cfg)
    s2 = run_cell(cfg)
    assert s1.reps == 4
    for name in PROCEDURES:
        assert s1.stats[name] == s2.stats[name]


def test_run_cell_stats_are_sane():
    cfg = fet_config(m=40, pi0=0.5, n=30, alpha=0.2, reps=6, seed=2)
    summary = run_cell(cfg)
    for name in PROCEDURES:
        st = summary.stats[name]
        assert 0.0 <= st.fdr <= 1.0
        assert 0.0 <= st.power <= 1.0
        assert st.fdp_sd >= 0.0 and st.tdp_sd >= 0.0
    # Strong alternatives at n = 30 should be detected at least sometimes.
    assert summary.stats["BH+"].power > 0.0


def test_run_cell_single_rep_sd_is_zero():
    summary = run_cell(fet_config(reps=1))
    for name in PROCEDURES:
        assert summary.stats[name].fdp_sd == 0.0
        assert summary.stats[name].tdp_sd == 0.0


def test_run_cell_all_null_has_zero_power():
    summary = run_cell(fet_config(pi0=1.0, m=20, n=10, reps=5))
    for name in PROCEDURES:
        assert summary.stats[name].power == 0.0


def test_run_grid_matches_run_cell_bitwise():
    grid = run_grid("fet", pi0s=(0.5, 0.8), alphas=(0.05, 0.2), ns=(10,),
                    etas=(), m=20, reps=3, seed=9)
    assert len(grid) == 4
    for summary in grid:
        single = run_cell(summary.config)
        for name in PROCEDURES:
            assert summary.stats[name] == single.stats[name]


def test_run_grid_order_is_pi0_param_alpha():
    grid = run_grid("bt", pi0s=(0.5, 0.9), alphas=(0.05, 0.1),
                    etas=(3.0, 6.0), ns=(), m=20, reps=1, seed=0)
    keys = [(s.config.pi0, s.config.eta, s.config.alpha) for s in grid]
    assert keys == [
        (0.5, 3.0, 0.05), (0.5, 3.0, 0.1),
        (0.5, 6.0, 0.05), (0.5, 6.0, 0.1),
        (0.9, 3.0, 0.05), (0.9, 3.0, 0.1),
        (0.9, 6.0, 0.05), (0.9, 6.0, 0.1),
    ]


def test_run_grid_workers_do_not_change_output():
    kwargs = dict(pi0s=(0.5, 0.8), alphas=(0.1,), ns=(10,), etas=(),
                  m=20, reps=3, seed=4)
    serial = run_grid("fet", **kwargs, workers=1)
    parallel = run_grid("fet", **kwargs, workers=2)
    assert len(serial) == len(parallel)
    for a, b in zip(serial, parallel):
        assert a.config == b.config
        for name in PROCEDURES:
            assert a.stats[name] == b.stats[name]


def test_block_dependence_runs_both_sharing_modes():
    for sharing in ("shared", "per-group"):
        cfg = fet_config(m=20, dependence="block", blocks=2, block_size=10,
                         copula_sharing=sharing, reps=2, seed=3)
        summary = run_cell(cfg)
        assert set(summary.stats) == set(PROCEDURES)


def test_summaries_to_rows_layout():
    grid = run_grid("fet", pi0s=(0.5,), alphas=(0.05,), ns=(10,), etas=(),
                    m=20, reps=2, seed=1)
    rows = summaries_to_rows(grid)
    assert len(rows) == 3
    assert [r["procedure"] for r in rows] == list(PROCEDURES)
    for row in rows:
        assert tuple(row) == SIM_ROW_FIELDS
        assert row["eta"] == ""
        assert row["n"] == 10
        assert row["test"] == "fet"
        assert row["reps"] == 2


def test_bt_rows_blank_out_n():
    summary = run_cell(bt_config(reps=1))
    row = summaries_to_rows([summary])[0]
    assert row["eta"] == 3.0
    assert row["n"] == ""
