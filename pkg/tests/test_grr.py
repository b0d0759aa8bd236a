"""Boosted randomized response: probabilities, local-DP bound, estimators.

Oracles: closed-form probability identities computed independently, the
exhaustive transition-matrix ratio check, exact expectation algebra for the
estimators, and seeded Monte-Carlo for the sampling paths.
"""

import logging
import math

import numpy as np
import pytest

from conftest import rng
from pbdp.grr import (
    FrequencyReport,
    GRRSpec,
    confidence,
    estimate_category,
    estimate_value,
    frequency_report,
    grr_params,
    load_adult_ages,
    mse_sweep,
    perturb,
    perturb_many,
    region_members,
    synthetic_ages,
    transition_matrix,
    verify_ldp,
)


# ---------------------------------------------------------------------------
# Report probabilities
# ---------------------------------------------------------------------------


def test_worked_probability_values():
    # Age-style domain of 91 values, windows of 10 (sliding: 91 is not a
    # multiple of 10), local budget 5.
    spec = grr_params(91, 10, 5.0, 5.0, region_map="sliding")
    assert spec.p == pytest.approx(0.62250405833816518, abs=1e-16)
    boosted = grr_params(91, 10, 5.0, 1.0, region_map="sliding")
    assert boosted.p == pytest.approx(0.2059016063020858, abs=1e-16)
    assert boosted.p_s / boosted.p_bar == pytest.approx(math.exp(4.0), rel=1e-12)


def test_probability_identities_over_random_specs():
    g = rng(61)
    for _ in range(300):
        n = int(g.integers(2, 200))
        s = int(g.integers(1, n + 1))
        eps = float(g.uniform(0.05, 6.0))
        eps0 = float(g.uniform(0.0, eps))
        spec = grr_params(n, s, eps, eps0, region_map="sliding")
        total = spec.p + (s - 1) * spec.p_s + (n - s) * spec.p_bar
        assert total == pytest.approx(1.0, abs=1e-12)
        assert spec.p / spec.p_s == pytest.approx(math.exp(eps0), rel=1e-12)
        assert spec.p / spec.p_bar == pytest.approx(math.exp(eps), rel=1e-12)
        assert spec.p >= spec.p_s >= spec.p_bar > 0.0


def test_zero_boost_knob_recovers_classic_randomized_response():
    n, eps = 20, 1.5
    spec = grr_params(n, 4, eps, eps)
    assert spec.p_s == spec.p_bar  # exp(eps - eps) == 1 exactly
    assert spec.p == pytest.approx(math.exp(eps) / (math.exp(eps) + n - 1), rel=1e-15)
    classic = np.full((n, n), spec.p_bar)
    np.fill_diagonal(classic, spec.p)
    assert np.array_equal(transition_matrix(spec), classic)


def test_confidence_worked_example():
    # Three values, windows of two, budget ln 3 with no boost: reports stay
    # in-window with probability (3 + 1) / (3 + 1 + 1).
    spec = grr_params(3, 2, math.log(3.0), math.log(3.0), region_map="sliding")
    assert confidence(spec) == pytest.approx(0.8, rel=1e-15)
    # Full boost at eps0 = 0 pushes the window mass to its maximum.
    boosted = grr_params(3, 2, math.log(3.0), 0.0, region_map="sliding")
    assert confidence(boosted) > confidence(spec)


def test_parameter_validation():
    with pytest.raises(ValueError):
        grr_params(10, 3, 2.0, 2.5)  # eps0 > eps
    with pytest.raises(ValueError):
        grr_params(10, 3, -1.0, 0.0)
    with pytest.raises(ValueError):
        grr_params(10, 11, 2.0, 1.0)  # region larger than domain
    with pytest.raises(ValueError, match="pad the domain"):
        grr_params(10, 3, 2.0, 1.0)  # partition needs divisibility
    with pytest.raises(ValueError):
        GRRSpec(10, 2, 1.0, 0.5, p=0.0, p_s=0.1, p_bar=0.1)
    with pytest.raises(ValueError):
        GRRSpec(10, 2, 1.0, 0.5, p=0.5, p_s=0.1, p_bar=0.1, region_map="mosaic")


# ---------------------------------------------------------------------------
# Region maps and transition matrix
# ---------------------------------------------------------------------------


def test_partition_blocks():
    spec = grr_params(12, 4, 2.0, 1.0)
    assert region_members(spec, 5).tolist() == [4, 5, 6, 7]
    assert region_members(spec, 0).tolist() == [0, 1, 2, 3]
    assert region_members(spec, 11).tolist() == [8, 9, 10, 11]
    with pytest.raises(ValueError):
        region_members(spec, 12)


def test_sliding_windows_clip_inward_keeping_size():
    spec = grr_params(20, 5, 2.0, 1.0, region_map="sliding")
    assert region_members(spec, 10).tolist() == [8, 9, 10, 11, 12]
    assert region_members(spec, 0).tolist() == [0, 1, 2, 3, 4]
    assert region_members(spec, 19).tolist() == [15, 16, 17, 18, 19]
    for v in range(20):
        members = region_members(spec, v)
        assert members.size == 5 and v in members


def test_transition_matrix_rows_are_distributions():
    for spec in (
        grr_params(12, 3, 2.0, 0.8),
        grr_params(15, 5, 1.0, 1.0),
        grr_params(9, 4, 3.0, 0.5, region_map="sliding"),
    ):
        P = transition_matrix(spec)
        assert P.shape == (spec.domain_size, spec.domain_size)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
        for v in range(spec.domain_size):
            row = P[v]
            assert row[v] == spec.p
            members = region_members(spec, v)
            others = np.setdiff1d(members, [v])
            assert np.all(row[others] == spec.p_s)
            outside = np.setdiff1d(np.arange(spec.domain_size), members)
            assert np.all(row[outside] == spec.p_bar)


def test_local_dp_bound_is_tight_for_partitions():
    spec = grr_params(12, 3, 2.0, 0.8)
    assert verify_ldp(spec) == pytest.approx(math.exp(2.0), rel=1e-12)
    # A single all-covering block can only ever pay the boost budget.
    whole = grr_params(6, 6, 3.0, 1.2)
    assert verify_ldp(whole) == pytest.approx(math.exp(1.2), rel=1e-12)
    flat = grr_params(8, 2, 0.0, 0.0)
    assert verify_ldp(flat) == 1.0


def test_local_dp_bound_holds_for_sliding_windows():
    g = rng(62)
    for _ in range(25):
        n = int(g.integers(3, 40))
        s = int(g.integers(2, n + 1))
        eps = float(g.uniform(0.2, 5.0))
        eps0 = float(g.uniform(0.0, eps))
        spec = grr_params(n, s, eps, eps0, region_map="sliding")
        assert verify_ldp(spec) <= math.exp(eps) * (1.0 + 1e-12)
    # Far-apart windows realize the full ratio.
    wide = grr_params(30, 5, 2.5, 1.0, region_map="sliding")
    assert verify_ldp(wide) == pytest.approx(math.exp(2.5), rel=1e-12)


# ---------------------------------------------------------------------------
# Randomization
# ---------------------------------------------------------------------------


def test_perturb_is_deterministic_per_seed():
    spec = grr_params(8, 2, 1.5, 0.5)
    outs = [perturb(spec, 3, seed) for seed in range(30)]
    assert outs == [perturb(spec, 3, seed) for seed in range(30)]
    assert all(0 <= o < 8 for o in outs)
    with pytest.raises(ValueError):
        perturb(spec, 8, 0)


def test_perturb_many_matches_the_transition_row():
    spec = grr_params(8, 2, 1.5, 0.5)
    n = 20_000
    reports = perturb_many(spec, np.full(n, 3), rng(63))
    row = transition_matrix(spec)[3]
    freq = np.bincount(reports, minlength=8) / n
    se = np.sqrt(row * (1 - row) / n)
    assert np.all(np.abs(freq - row) <= 3 * se + 1e-9)
    with pytest.raises(ValueError):
        perturb_many(spec, [0, 9], rng(0))


# ---------------------------------------------------------------------------
# Frequency estimators
# ---------------------------------------------------------------------------


def test_estimator_algebra_is_unbiased_in_exact_expectation():
    spec = grr_params(12, 3, 1.7, 0.6)
    P = transition_matrix(spec)
    g = rng(64)
    counts = g.integers(0, 50, size=12).astype(float)
    n = counts.sum()
    expected_reports = counts @ P
    s = spec.region_size
    denom = spec.p + (s - 1) * spec.p_s - s * spec.p_bar
    for anchor in (0, 4, 11):
        members = region_members(spec, anchor)
        est_cat = (expected_reports[members].sum() - n * s * spec.p_bar) / denom
        assert est_cat == pytest.approx(counts[members].sum(), rel=1e-10, abs=1e-8)
        value = int(members[0])
        est_val = (
            expected_reports[value]
            - counts[members].sum() * (spec.p_s - spec.p_bar)
            - n * spec.p_bar
        ) / (spec.p - spec.p_s)
        assert est_val == pytest.approx(counts[value], rel=1e-10, abs=1e-8)


def test_estimators_recover_counts_when_noise_is_negligible():
    spec = grr_params(10, 2, 50.0, 50.0)
    truth = np.repeat(np.arange(10), 40)
    reports = perturb_many(spec, truth, rng(65))
    assert np.array_equal(np.sort(reports), np.sort(truth))  # p is ~1 - 4e-21
    f_s = estimate_category(spec, reports, 4)
    assert f_s == pytest.approx(80.0, rel=1e-12)
    assert estimate_value(spec, reports, f_s, 4) == pytest.approx(40.0, rel=1e-12)


def test_estimator_functions_are_unbiased_under_sampling():
    spec = grr_params(10, 2, 2.0, 1.0)
    truth = np.repeat(np.arange(10), [400, 50, 30, 300, 10, 60, 25, 80, 20, 25])
    g = rng(166)
    cats, vals = [], []
    for _ in range(300):
        reports = perturb_many(spec, truth, g)
        cats.append(estimate_category(spec, reports, 0))
        f_s3 = estimate_category(spec, reports, 3)
        vals.append(estimate_value(spec, reports, f_s3, 3))
    for series, true_count in ((cats, 450.0), (vals, 300.0)):
        arr = np.asarray(series)
        se = arr.std(ddof=1) / math.sqrt(arr.size)
        assert abs(arr.mean() - true_count) < 3 * se


def test_single_value_regions_reduce_to_classic_randomized_response():
    spec = grr_params(10, 1, 1.2, 1.2)
    g = rng(67)
    truth = g.integers(0, 10, size=400)
    reports = perturb_many(spec, truth, g)
    for v in (0, 7):
        classic = (int((reports == v).sum()) - 400 * spec.p_bar) / (spec.p - spec.p_bar)
        assert estimate_category(spec, reports, v) == pytest.approx(classic, rel=1e-12)


def test_frequency_report_matches_single_estimators():
    spec = grr_params(12, 4, 1.5, 0.7)
    g = rng(68)
    truth = g.integers(0, 12, size=500)
    reports = perturb_many(spec, truth, g)
    rep = frequency_report(spec, reports)
    assert isinstance(rep, FrequencyReport)
    assert rep.n_users == 500 and rep.value_counts.sum() == 500
    for c in range(3):
        anchor = 4 * c
        assert rep.f_hat_category[c] == pytest.approx(
            estimate_category(spec, reports, anchor), abs=1e-9
        )
    for x in (0, 5, 11):
        f_s = estimate_category(spec, reports, x)
        assert rep.f_hat_value[x] == pytest.approx(
            estimate_value(spec, reports, f_s, x), abs=1e-9
        )


def test_estimator_degeneracies_raise_or_mark():
    flat = grr_params(12, 4, 0.0, 0.0)
    with pytest.raises(ValueError, match="degenerate"):
        estimate_category(flat, [0, 1, 2], 0)
    uniform_boost = grr_params(12, 4, 1.5, 0.0)
    # Category estimation still works; value-level is impossible.
    assert math.isfinite(estimate_category(uniform_boost, [0, 1, 2], 0))
    with pytest.raises(ValueError, match="impossible"):
        estimate_value(uniform_boost, [0, 1, 2], 1.0, 0)
    assert np.isnan(frequency_report(uniform_boost, [0, 1, 2]).f_hat_value).all()
    sliding = grr_params(12, 4, 1.5, 0.7, region_map="sliding")
    for fn in (
        lambda: estimate_category(sliding, [0, 1], 0),
        lambda: estimate_value(sliding, [0, 1], 1.0, 0),
        lambda: frequency_report(sliding, [0, 1]),
    ):
        with pytest.raises(ValueError, match="partition"):
            fn()
    with pytest.raises(ValueError):
        estimate_category(grr_params(12, 4, 1.0, 0.5), [], 0)


# ---------------------------------------------------------------------------
# MSE sweep experiment and data loading
# ---------------------------------------------------------------------------


def test_mse_sweep_is_deterministic_and_pads_the_domain():
    data = synthetic_ages(400, seed=3)
    kwargs = dict(
        region_size=10,
        eps=3.0,
        eps0_grid=[1.0, 2.0, 3.0],
        trials=3,
        seed=11,
        domain_min=10,
        domain_max=100,  # span 91 -> padded to 100 so the partition is even
    )
    rows1 = mse_sweep(data, **kwargs)
    rows2 = mse_sweep(data, **kwargs)
    assert rows1 == rows2
    assert [r[0] for r in rows1] == [1.0, 2.0, 3.0]
    for _, mse_cat, mse_val in rows1:
        assert math.isfinite(mse_cat) and mse_cat > 0.0
        assert math.isfinite(mse_val) and mse_val > 0.0


def test_mse_sweep_validates_inputs():
    with pytest.raises(ValueError):
        mse_sweep([], 10, 3.0, [1.0], trials=1, seed=0)
    with pytest.raises(ValueError):
        mse_sweep([5, 200], 10, 3.0, [1.0], trials=1, seed=0, domain_min=10, domain_max=100)


def test_synthetic_ages_are_bounded_plausible_and_deterministic():
    ages = synthetic_ages(2000, seed=9)
    assert ages.dtype.kind == "i" and ages.size == 2000
    assert ages.min() >= 10 and ages.max() <= 100
    assert 20.0 < ages.mean() < 50.0 and ages.std() > 5.0
    assert np.array_equal(ages, synthetic_ages(2000, seed=9))


def test_load_ages_headerless_census_format(tmp_path, caplog):
    f = tmp_path / "adult.data"
    f.write_text("39, State-gov, 77516\n50, Self-emp, 83311\nbad, x, y\n7, a, b\n105, c, d\n.\n")
    with caplog.at_level(logging.INFO, logger="pbdp.grr"):
        ages = load_adult_ages(str(f))
    assert ages == [39, 50, 10, 100]  # clamped to [10, 100]
    assert "dropped 1" in caplog.text


def test_load_ages_with_header_column(tmp_path):
    f = tmp_path / "people.csv"
    f.write_text("workclass,age\nx,33\ny,61\n")
    assert load_adult_ages(str(f)) == [33, 61]


def test_load_ages_rejects_unusable_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("\n\n")
    with pytest.raises(ValueError):
        load_adult_ages(str(empty))
    junk = tmp_path / "junk.csv"
    junk.write_text("foo, bar\nbaz, qux\n")
    with pytest.raises(ValueError):
        load_adult_ages(str(junk))
