"""Region geometry, boosting rate, boosted distribution and samplers.

Oracles: mpmath region-mass closed forms, adaptive quadrature of the boosted
pdf (normalization, cdf, in-region mass), and seeded empirical-CDF checks
with binomial standard errors for both samplers.
"""

import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from conftest import random_kernel, random_region, random_rho, rng
from pbdp.boost import (
    Q_CAP,
    BoostParams,
    RegionSpec,
    boost_params,
    boosted_region_mass,
    boosting_rate,
    pb_cdf,
    pb_pdf,
    pb_quantile,
    pb_sample,
    region_bounds,
    region_mass,
    verify_utility,
    worst_case_mass,
)
from pbdp.kernels import KernelSpec

mp.mp.dps = 50


def quad_pb(k, r, q, qx, lo, hi):
    pts = [p for p in region_bounds(r, qx) if lo < p < hi]
    val, _ = integrate.quad(
        lambda y: float(pb_pdf(k, r, q, qx, y)), lo, hi, points=pts, limit=300,
        epsabs=1e-12, epsrel=1e-12,
    )
    return val


def wide_bounds(k, r, qx):
    lo, hi = region_bounds(r, qx)
    reach = 50.0 * k.scale
    return min(lo, qx) - reach, max(hi, qx) + reach


# ---------------------------------------------------------------------------
# Region geometry and rates
# ---------------------------------------------------------------------------


def test_region_bounds_per_kind():
    assert region_bounds(RegionSpec(kind="relative", theta=0.0, tau=1.0), 0.0) == (-1.0, 1.0)
    assert region_bounds(RegionSpec(kind="relative", theta=0.5, tau=1.0), 2.0) == (0.0, 4.0)
    assert region_bounds(RegionSpec(kind="relative", theta=0.5, tau=1.0), -2.0) == (-4.0, 0.0)
    assert region_bounds(RegionSpec(kind="absolute", tau=2.0), 10.0) == (8.0, 12.0)
    fixed = RegionSpec(kind="fixed", tau_l=-3.0, tau_u=5.0)
    assert region_bounds(fixed, 0.0) == (-3.0, 5.0)
    assert region_bounds(fixed, 99.0) == (-3.0, 5.0)


def test_region_mass_gaussian_frozen():
    k = KernelSpec("gaussian", 1.0, 1.0)
    r = RegionSpec(kind="absolute", tau=1.0)
    assert abs(region_mass(k, r, 0.0) - 0.6826894921370859) < 1e-15
    assert abs(region_mass(k, r, 7.3) - 0.6826894921370859) < 1e-15


def test_region_mass_matches_mpmath():
    g = rng(201)
    for _ in range(8):
        k = random_kernel(g)
        r = random_region(g, k)
        qx = float(g.uniform(-3, 3))
        lo, hi = region_bounds(r, qx)
        zlo = mp.mpf(lo - qx) / mp.mpf(k.scale)
        zhi = mp.mpf(hi - qx) / mp.mpf(k.scale)
        if k.family == "gaussian":
            want = mp.ncdf(zhi) - mp.ncdf(zlo)
        else:
            F = lambda z: mp.exp(z) / 2 if z < 0 else 1 - mp.exp(-z) / 2  # noqa: E731
            want = F(zhi) - F(zlo)
        assert abs(region_mass(k, r, qx) - float(want)) < 1e-14


def test_worst_case_mass_location():
    g = rng(202)
    for _ in range(6):
        k = random_kernel(g)
        rel = RegionSpec(kind="relative", theta=float(g.uniform(0.05, 0.5)), tau=1.0)
        m0, star = worst_case_mass(k, rel)
        assert star == 0.0
        for qx in (-2.0, -0.5, 0.7, 3.0):
            assert region_mass(k, rel, qx) >= m0 - 1e-12

        fixed = RegionSpec(kind="fixed", tau_l=-1.0, tau_u=2.5)
        m0, star = worst_case_mass(k, fixed)
        assert star == fixed.tau_l
        # Worst case over answers inside the declared region of interest.
        for qx in np.linspace(fixed.tau_l, fixed.tau_u, 21):
            assert region_mass(k, fixed, float(qx)) >= m0 - 1e-12
        assert abs(region_mass(k, fixed, fixed.tau_u) - m0) < 1e-14  # symmetric kernels

    absr = RegionSpec(kind="absolute", tau=1.3)
    k = KernelSpec("laplace", 0.9, 1.0)
    m0, star = worst_case_mass(k, absr)
    assert star == 0.0 and abs(m0 - region_mass(k, absr, 4.2)) < 1e-15


def test_boosting_rate_frozen_and_properties():
    k = KernelSpec("gaussian", 1.0, 1.0)
    m = region_mass(k, RegionSpec(kind="absolute", tau=2.0), 0.0)
    assert abs(boosting_rate(m, 0.99) - 0.78810207567684011) < 1e-15
    m_rel = region_mass(k, RegionSpec(kind="relative", theta=0.1, tau=1.0), 0.0)
    assert abs(boosting_rate(m_rel, 0.9) - 0.76094586805173588) < 1e-15

    assert boosting_rate(0.95, 0.9) == 0.0  # target already met
    assert boosting_rate(0.5, 1.0) == 1.0  # certainty needs the full boost
    g = rng(203)
    for _ in range(20):
        m = float(g.uniform(0.01, 0.99))
        rho = random_rho(g, m)
        q = boosting_rate(m, rho)
        assert 0.0 < q < 1.0
        # Defining property: boosted worst-case mass hits the target exactly.
        assert abs(m / (1.0 - (1.0 - m) * q) - rho) < 1e-12
    with pytest.raises(ValueError):
        boosting_rate(0.5, 0.0)
    with pytest.raises(ValueError):
        boosting_rate(1.5, 0.9)


def test_boost_params_and_validation():
    k = KernelSpec("gaussian", 1.0, 1.0)
    r = RegionSpec(kind="absolute", tau=2.0)
    bp = boost_params(k, r, 0.99)
    assert abs(bp.q - 0.78810207567684011) < 1e-15
    assert bp.min_pS == region_mass(k, r, 0.0)
    with pytest.raises(ValueError):
        BoostParams(rho=0.0, q=0.5, min_pS=0.5)
    with pytest.raises(ValueError):
        BoostParams(rho=0.9, q=1.5, min_pS=0.5)
    assert 0.0 < Q_CAP < 1.0


def test_region_spec_validation():
    with pytest.raises(ValueError):
        RegionSpec(kind="oval")
    with pytest.raises(ValueError):
        RegionSpec(kind="relative", theta=1.5, tau=1.0)
    with pytest.raises(ValueError):
        RegionSpec(kind="relative", theta=0.5, tau=0.0)
    with pytest.raises(ValueError):
        RegionSpec(kind="absolute", tau=-1.0)
    with pytest.raises(ValueError):
        RegionSpec(kind="fixed", tau_l=2.0, tau_u=2.0)


# ---------------------------------------------------------------------------
# Boosted distribution
# ---------------------------------------------------------------------------


def test_pb_pdf_piecewise_shape_and_normalization():
    g = rng(204)
    for _ in range(12):
        k = random_kernel(g)
        r = random_region(g, k)
        min_pS, qx_star = worst_case_mass(k, r)
        q = boosting_rate(min_pS, random_rho(g, min_pS))
        qx = float(g.uniform(-2, 2))
        lo, hi = region_bounds(r, qx)
        p = region_mass(k, r, qx)
        c = 1.0 - (1.0 - p) * q
        from pbdp.kernels import kernel_pdf

        inside = 0.5 * (lo + hi)
        outside = hi + 1.7 * k.scale
        assert pb_pdf(k, r, q, qx, inside) == pytest.approx(
            float(kernel_pdf(k, qx, inside)) / c, rel=1e-14
        )
        assert pb_pdf(k, r, q, qx, outside) == pytest.approx(
            float(kernel_pdf(k, qx, outside)) * (1.0 - q) / c, rel=1e-14
        )
        wlo, whi = wide_bounds(k, r, qx)
        assert abs(quad_pb(k, r, q, qx, wlo, whi) - 1.0) < 1e-8


def test_pb_pdf_jump_factor_at_region_edge():
    k = KernelSpec("gaussian", 1.0, 1.0)
    r = RegionSpec(kind="absolute", tau=1.0)
    q = 0.6
    h = 1e-9
    hi = region_bounds(r, 0.0)[1]
    ratio = pb_pdf(k, r, q, 0.0, hi - h) / pb_pdf(k, r, q, 0.0, hi + h)
    assert abs(ratio - 1.0 / (1.0 - q)) < 1e-6


def test_pb_pdf_q_zero_is_kernel():
    from pbdp.kernels import kernel_pdf

    k = KernelSpec("laplace", 1.2, 0.8)
    r = RegionSpec(kind="absolute", tau=1.0)
    ys = np.linspace(-4, 4, 17)
    assert np.allclose(pb_pdf(k, r, 0.0, 0.3, ys), kernel_pdf(k, 0.3, ys), rtol=0, atol=0)


def test_boosted_mass_hits_target_at_worst_case():
    g = rng(205)
    for _ in range(10):
        k = random_kernel(g)
        r = random_region(g, k)
        min_pS, qx_star = worst_case_mass(k, r)
        rho = random_rho(g, min_pS)
        q = boosting_rate(min_pS, rho)
        assert abs(boosted_region_mass(k, r, q, qx_star) - rho) < 1e-12
        for qx in (-1.5, 0.4, 2.2):
            mass = boosted_region_mass(k, r, q, qx)
            if r.kind != "fixed":
                assert mass >= rho - 1e-12
        # Quadrature agrees with the closed-form boosted in-region mass.
        qx = float(g.uniform(-1, 1))
        lo, hi = region_bounds(r, qx)
        assert abs(quad_pb(k, r, q, qx, lo, hi) - boosted_region_mass(k, r, q, qx)) < 1e-9


def test_pb_cdf_matches_quadrature_and_limits():
    g = rng(206)
    for _ in range(6):
        k = random_kernel(g)
        r = random_region(g, k)
        min_pS, _ = worst_case_mass(k, r)
        q = boosting_rate(min_pS, random_rho(g, min_pS))
        qx = float(g.uniform(-1.5, 1.5))
        wlo, whi = wide_bounds(k, r, qx)
        lo, hi = region_bounds(r, qx)
        for y in (lo - 0.7 * k.scale, 0.5 * (lo + hi), hi + 0.3 * k.scale):
            want = quad_pb(k, r, q, qx, wlo, y)
            assert abs(pb_cdf(k, r, q, qx, y) - want) < 1e-8
        assert pb_cdf(k, r, q, qx, wlo) < 1e-12
        assert pb_cdf(k, r, q, qx, whi) > 1.0 - 1e-12
        ys = np.linspace(wlo, whi, 101)
        vals = pb_cdf(k, r, q, qx, ys)
        assert np.all(np.diff(vals) >= -1e-15)


def test_pb_quantile_round_trip():
    g = rng(207)
    for _ in range(8):
        k = random_kernel(g)
        r = random_region(g, k)
        min_pS, _ = worst_case_mass(k, r)
        q = boosting_rate(min_pS, random_rho(g, min_pS))
        qx = float(g.uniform(-1.5, 1.5))
        u = np.concatenate([g.uniform(1e-9, 1 - 1e-9, 100), [1e-12, 1 - 1e-12]])
        y = pb_quantile(k, r, q, qx, u)
        back = pb_cdf(k, r, q, qx, y)
        assert np.max(np.abs(back - u)) < 1e-9
    with pytest.raises(ValueError):
        pb_quantile(k, r, q, qx, 0.0)
    with pytest.raises(ValueError):
        pb_pdf(k, r, 1.5, 0.0, 0.0)


def _empirical_cdf_check(k, r, q, qx, draws, seed_msg):
    n = draws.size
    lo, hi = region_bounds(r, qx)
    for y in (lo - 0.5 * k.scale, lo + 1e-9, 0.5 * (lo + hi), hi - 1e-9, hi + 0.8 * k.scale):
        F = float(pb_cdf(k, r, q, qx, y))
        emp = float(np.mean(draws <= y))
        se = math.sqrt(max(F * (1 - F), 1e-12) / n)
        assert abs(emp - F) < 3 * se + 1e-4, seed_msg


def test_inverse_sampler_distribution_and_determinism():
    k = KernelSpec("gaussian", 1.0, 1.0)
    r = RegionSpec(kind="relative", theta=0.1, tau=1.0)
    q = boosting_rate(worst_case_mass(k, r)[0], 0.9)
    draws = pb_sample(k, r, q, 0.0, seed=11, n=100_000)
    assert np.array_equal(draws, pb_sample(k, r, q, 0.0, seed=11, n=100_000))
    _empirical_cdf_check(k, r, q, 0.0, draws, "inverse sampler drifted")


def test_rejection_sampler_matches_inverse_distribution():
    g = rng(208)
    for trial in range(3):
        k = random_kernel(g)
        r = random_region(g, k)
        min_pS, qx_star = worst_case_mass(k, r)
        rho = random_rho(g, min_pS)
        q = boosting_rate(min_pS, rho)
        qx = float(g.uniform(-1, 1))
        draws = pb_sample(k, r, q, qx, seed=300 + trial, n=100_000, method="rejection")
        _empirical_cdf_check(k, r, q, qx, draws, f"rejection sampler drifted (trial {trial})")
        lo, hi = region_bounds(r, qx)
        frac = float(np.mean((draws >= lo) & (draws <= hi)))
        mass = boosted_region_mass(k, r, q, qx)
        se = math.sqrt(mass * (1 - mass) / draws.size)
        assert abs(frac - mass) < 3 * se + 1e-4


def test_pb_sample_validation():
    k = KernelSpec("gaussian", 1.0, 1.0)
    r = RegionSpec(kind="absolute", tau=1.0)
    with pytest.raises(ValueError):
        pb_sample(k, r, 0.5, 0.0, seed=1, n=0)
    with pytest.raises(ValueError):
        pb_sample(k, r, 0.5, 0.0, seed=1, n=10, method="mcmc")


# ---------------------------------------------------------------------------
# Utility verification
# ---------------------------------------------------------------------------


def test_verify_utility_passes_for_calibrated_rate():
    k = KernelSpec("gaussian", 1.0, 1.0)
    r = RegionSpec(kind="relative", theta=0.1, tau=1.0)
    rho = 0.9
    q = boosting_rate(worst_case_mass(k, r)[0], rho)
    report = verify_utility(k, r, q, np.linspace(-5, 5, 50), rho)
    assert report.ok and not report.failures
    assert report.worst_gap <= 1e-9
    assert report.qx_star == 0.0


def test_verify_utility_fails_when_rate_tampered():
    k = KernelSpec("gaussian", 1.0, 1.0)
    r = RegionSpec(kind="relative", theta=0.1, tau=1.0)
    rho = 0.9
    q = boosting_rate(worst_case_mass(k, r)[0], rho)
    report = verify_utility(k, r, q * 0.5, np.linspace(-5, 5, 50), rho)
    assert not report.ok
    assert report.failures  # grid points fell below the confidence target
    assert report.worst_gap > 1e-6


def test_verify_utility_zero_rate_paths():
    k = KernelSpec("gaussian", 1.0, 1.0)
    r = RegionSpec(kind="absolute", tau=3.0)  # mass ~0.9973, above rho
    ok_report = verify_utility(k, r, 0.0, [0.0, 1.0], 0.99)
    assert ok_report.ok
    bad_report = verify_utility(k, r, 0.0, [0.0, 1.0], 0.999)
    assert not bad_report.ok and bad_report.failures
    with pytest.raises(ValueError):
        verify_utility(k, r, 0.0, [], 0.9)
