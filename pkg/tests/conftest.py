"""Shared test helpers: seeded generators, numeric oracles, summary hook.

The acceptance tests record one pass/fail line per criterion through
``record_criterion``; a terminal-summary hook reprints all recorded lines
after the run so they are visible even with output capture enabled.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from pbdp.accounting import dominating_pair
from pbdp.boost import RegionSpec, region_bounds
from pbdp.kernels import KernelSpec, kernel_pdf

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------------------
# Random configuration generators (deterministic under the caller's rng)
# ---------------------------------------------------------------------------


def random_kernel(r: np.random.Generator, families=("gaussian", "laplace")) -> KernelSpec:
    family = families[int(r.integers(len(families)))]
    scale = float(np.exp(r.uniform(np.log(0.3), np.log(5.0))))
    sensitivity = float(r.uniform(0.2, 3.0))
    return KernelSpec(family=family, scale=scale, sensitivity=sensitivity)


def random_region(
    r: np.random.Generator,
    kernel: KernelSpec,
    kinds=("relative", "absolute", "fixed"),
) -> RegionSpec:
    """A region valid for the kernel (loss-event masses stay below one)."""
    from pbdp.accounting import leakage_params

    for _ in range(100):
        kind = kinds[int(r.integers(len(kinds)))]
        if kind == "relative":
            region = RegionSpec(
                kind="relative",
                theta=float(r.uniform(0.0, 0.5)),
                tau=float(r.uniform(0.5, 4.0) * kernel.scale),
            )
        elif kind == "absolute":
            lo = 0.5 * kernel.sensitivity + 0.05
            region = RegionSpec(kind="absolute", tau=float(lo + r.uniform(0.0, 4.0) * kernel.scale))
        else:
            tau_l = float(r.uniform(-4.0, 0.0) * kernel.scale)
            width = float(r.uniform(1.0, 8.0) * kernel.scale)
            region = RegionSpec(kind="fixed", tau_l=tau_l, tau_u=tau_l + width)
        try:
            leakage_params(kernel, region, 0.5)
        except ValueError:
            continue
        return region
    raise AssertionError("could not draw a valid region in 100 attempts")


def random_rho(r: np.random.Generator, min_pS: float, lo: float = 0.05, hi: float = 0.9) -> float:
    """A confidence target strictly above the worst-case mass (q > 0)."""
    return float(min_pS + (1.0 - min_pS) * r.uniform(lo, hi))


def rho_for_rate(min_pS: float, q_target: float) -> float:
    """Confidence target whose calibrated boosting rate equals ``q_target``."""
    return min_pS / (1.0 - q_target * (1.0 - min_pS))


# ---------------------------------------------------------------------------
# Numeric oracles (quadrature; independent of the closed forms under test)
# ---------------------------------------------------------------------------


def quad_mass(k: KernelSpec, qx: float, lo: float, hi: float) -> float:
    """Kernel mass of [lo, hi] around qx by adaptive quadrature."""
    if hi <= lo:
        return 0.0
    val, _ = integrate.quad(
        lambda y: float(kernel_pdf(k, qx, y)), lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200
    )
    return val


def numeric_region_mass(k: KernelSpec, r: RegionSpec, qx: float) -> float:
    lo, hi = region_bounds(r, qx)
    return quad_mass(k, qx, lo, hi)


def numeric_leakage(k: KernelSpec, r: RegionSpec, q: float) -> tuple[float, float, float, float]:
    """(L1, L2, W1, W2) by quadrature at the dominating pair.

    L1 evaluates the general normalization-ratio definition from integrated
    region masses; the mass weights integrate the kernel density over the
    per-family region-edge strips.  This shares no code with the closed
    forms in ``leakage_params`` beyond the kernel pdf itself.
    """
    qx1, qx2 = dominating_pair(k, r)

    def norm_const(qx: float) -> float:
        return 1.0 - (1.0 - numeric_region_mass(k, r, qx)) * q

    l1 = abs(math.log(norm_const(qx2) / norm_const(qx1)))
    l2 = -math.log1p(-q)
    d = k.sensitivity
    if r.kind == "relative":
        w1 = quad_mass(k, 0.0, r.tau, r.theta * d + r.tau)
        w2 = quad_mass(k, 0.0, -r.tau, r.theta * d - r.tau)
    elif r.kind == "absolute":
        w1 = w2 = quad_mass(k, 0.0, -r.tau, d - r.tau)
    else:
        w1 = w2 = 0.0
    return l1, l2, w1, w2
