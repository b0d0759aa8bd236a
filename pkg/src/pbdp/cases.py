"""One-stop resolution of a boosted-mechanism configuration.

A thin facade over :mod:`pbdp.boost` and :mod:`pbdp.accounting`: given a
region, a kernel and a confidence target it produces the fully-resolved
configuration (worst-case mass, boosting rate, leakage constants) through the
exact same code paths those modules use, so there is a single source of truth
for the per-case formulas.
"""

from __future__ import annotations

import dataclasses

from .accounting import LeakageParams, dominating_pair, leakage_params
from .boost import RegionSpec, boosting_rate, worst_case_mass
from .kernels import KernelSpec


@dataclasses.dataclass(frozen=True)
class CaseConfig:
    """A resolved configuration: inputs plus every derived constant."""

    region: RegionSpec
    kernel: KernelSpec
    rho: float
    min_pS: float
    qx_star: float
    q: float
    leakage: LeakageParams
    pair: tuple[float, float]


def resolve_case(region: RegionSpec, kernel: KernelSpec, rho: float) -> CaseConfig:
    """Resolve worst-case mass, boosting rate and leakage for a config."""
    min_pS, qx_star = worst_case_mass(kernel, region)
    q = boosting_rate(min_pS, rho)
    lp = leakage_params(kernel, region, q)
    return CaseConfig(
        region=region,
        kernel=kernel,
        rho=rho,
        min_pS=min_pS,
        qx_star=qx_star,
        q=q,
        leakage=lp,
        pair=dominating_pair(kernel, region),
    )
