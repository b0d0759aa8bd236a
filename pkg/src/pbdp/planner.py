"""Budget planning: find the kernel budget eps0 minimizing total leakage.

Splitting the privacy budget between the kernel (more noise = smaller eps0)
and the boost (less in-region mass = larger q = more extra leakage) trades
two monotone effects against each other, giving a single interior optimum.
``optimize_eps0`` locates it by ternary search after a unimodality pre-scan,
and always also considers the zero-boost threshold (the smallest eps0 whose
kernel already meets the confidence target), so the planned mechanism never
does worse than kernel-only calibration.  ``invert_rho`` / ``invert_region``
are the reverse mappings: the best confidence (or narrowest region)
affordable under a total budget.
"""

from __future__ import annotations

import dataclasses
import logging
import math

from scipy import optimize

from .accounting import (
    LeakageParams,
    PrivacyPoint,
    invert_profile,
    leakage_params,
    pb_profile,
    pb_rdp,
)
from .boost import Q_CAP, RegionSpec, boosting_rate, worst_case_mass
from .kernels import KernelSpec, calibrate_kernel, kernel_rdp

logger = logging.getLogger(__name__)

PRESCAN_POINTS = 16
GRID_FALLBACK_POINTS = 500


@dataclasses.dataclass(frozen=True)
class PlanRequest:
    """What to plan for: kernel family, region, confidence, privacy mode."""

    kernel_family: str
    region: RegionSpec
    rho: float
    mode: str = "dp"  # "dp" (eps, delta) or "rdp" (alpha)
    delta: float = 1e-5
    alpha: float = 2.0
    sensitivity: float = 1.0
    eps_max: float = 20.0
    tol: float = 1e-4
    calibration: str = "analytic"

    def __post_init__(self) -> None:
        if self.mode not in ("dp", "rdp"):
            raise ValueError(f"mode must be 'dp' or 'rdp', got {self.mode!r}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0,1), got {self.rho}")
        if not 0.0 < self.tol < self.eps_max:
            raise ValueError("need 0 < tol < eps_max")
        if self.sensitivity <= 0:
            raise ValueError("sensitivity must be positive")
        if self.mode == "rdp" and not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")


@dataclasses.dataclass(frozen=True)
class PlanResult:
    """Planned budget split and its total leakage."""

    feasible: bool
    eps0_opt: float
    q_opt: float
    total: PrivacyPoint
    leakage: LeakageParams | None
    kernel: KernelSpec | None
    min_pS: float
    qx_star: float


def _kernel_at(req: PlanRequest, eps0: float) -> KernelSpec:
    """Calibrate the kernel to budget eps0 under the request's mode."""
    if req.mode == "dp":
        return calibrate_kernel(
            req.kernel_family, eps0, req.delta, req.sensitivity, req.calibration
        )
    if req.kernel_family == "gaussian":
        scale = req.sensitivity * math.sqrt(req.alpha / (2.0 * eps0))
        return KernelSpec(req.kernel_family, scale, req.sensitivity, req.delta, eps0, "analytic")

    def gap(log_scale: float) -> float:
        k = KernelSpec(req.kernel_family, math.exp(log_scale), req.sensitivity)
        return kernel_rdp(k, req.alpha) - eps0

    log_scale = optimize.brentq(gap, -30.0, 30.0, xtol=1e-13)
    return KernelSpec(
        req.kernel_family, math.exp(log_scale), req.sensitivity, req.delta, eps0, "analytic"
    )


def _infeasible_point(req: PlanRequest) -> PrivacyPoint:
    if req.mode == "dp":
        return PrivacyPoint(mode="approx_dp", eps=math.inf, delta=req.delta)
    return PrivacyPoint(mode="rdp", eps=math.inf, alpha=req.alpha)


def total_leakage(req: PlanRequest, eps0: float) -> PrivacyPoint:
    """Total privacy cost of the boosted mechanism at kernel budget eps0.

    Calibrates the kernel, recomputes the boosting rate for the worst-case
    mass at that noise level, and returns the inverted profile (dp mode) or
    the RDP curve value (rdp mode).  Budgets whose boosting rate would reach
    the feasibility cap report eps = inf.
    """
    if not 0.0 < eps0 <= req.eps_max:
        raise ValueError(f"eps0 must lie in (0, eps_max], got {eps0}")
    k = _kernel_at(req, eps0)
    min_pS, _ = worst_case_mass(k, req.region)
    q = boosting_rate(min_pS, req.rho)
    if q >= Q_CAP:
        return _infeasible_point(req)
    if req.mode == "dp":
        eps = invert_profile(
            lambda e: pb_profile(k, req.region, q, e), req.delta, req.tol * 1e-2
        )
        return PrivacyPoint(mode="approx_dp", eps=eps, delta=req.delta)
    return PrivacyPoint(mode="rdp", eps=pb_rdp(k, req.region, q, req.alpha), alpha=req.alpha)


def _result_at(req: PlanRequest, eps0: float) -> PlanResult:
    k = _kernel_at(req, eps0)
    min_pS, qx_star = worst_case_mass(k, req.region)
    q = boosting_rate(min_pS, req.rho)
    if q >= Q_CAP:
        return PlanResult(
            feasible=False,
            eps0_opt=eps0,
            q_opt=q,
            total=_infeasible_point(req),
            leakage=None,
            kernel=k,
            min_pS=min_pS,
            qx_star=qx_star,
        )
    return PlanResult(
        feasible=True,
        eps0_opt=eps0,
        q_opt=q,
        total=total_leakage(req, eps0),
        leakage=leakage_params(k, req.region, q),
        kernel=k,
        min_pS=min_pS,
        qx_star=qx_star,
    )


def zero_boost_eps0(req: PlanRequest) -> float | None:
    """Smallest eps0 whose calibrated kernel meets rho without boosting.

    This is also the kernel-only baseline budget: at this eps0 the worst-case
    in-region mass equals rho exactly and q = 0.  Returns None when even
    eps_max cannot reach the target.
    """

    def mass_at(eps0: float) -> float:
        k = _kernel_at(req, eps0)
        return worst_case_mass(k, req.region)[0]

    lo, hi = req.tol * 1e-3, req.eps_max
    if mass_at(hi) < req.rho:
        return None
    if mass_at(lo) >= req.rho:
        return lo
    for _ in range(200):
        if hi - lo <= req.tol * 1e-2:
            break
        mid = 0.5 * (lo + hi)
        if mass_at(mid) >= req.rho:
            hi = mid
        else:
            lo = mid
    return hi


def zero_boost_kernel(req: PlanRequest) -> KernelSpec | None:
    """Kernel of the no-boost baseline (threshold budget), None if unreachable."""
    eps0 = zero_boost_eps0(req)
    return None if eps0 is None else _kernel_at(req, eps0)


def kernel_only_eps(req: PlanRequest) -> float:
    """Total eps of the kernel-only mechanism meeting (region, rho).

    dp mode: the calibrated budget at the zero-boost threshold; rdp mode: the
    RDP curve of the threshold kernel at the request's alpha.  inf when no
    budget within eps_max meets the target.
    """
    eps0 = zero_boost_eps0(req)
    if eps0 is None:
        return math.inf
    if req.mode == "dp":
        # Report the tight profile inversion of the threshold kernel; with
        # analytic calibration this equals eps0 up to the search tolerances.
        k = _kernel_at(req, eps0)
        return invert_profile(
            lambda e: pb_profile(k, req.region, 0.0, e), req.delta, req.tol * 1e-2
        )
    return kernel_rdp(_kernel_at(req, eps0), req.alpha)


def _eps_of(point: PrivacyPoint) -> float:
    return point.eps


def optimize_eps0(req: PlanRequest) -> PlanResult:
    """Minimize total leakage over the kernel budget eps0 in (0, eps_max].

    Runs a 16-point pre-scan (unimodality check + seed candidate), then
    ternary search; plateau comparisons shrink both ends.  The returned plan
    is the best of {ternary midpoint, pre-scan best, zero-boost threshold},
    so it never exceeds the kernel-only baseline.  If the pre-scan sees a
    non-unimodal shape, falls back to a dense grid scan and logs the event.
    """
    grid = [req.eps_max * (i + 1) / PRESCAN_POINTS for i in range(PRESCAN_POINTS)]
    values = [_eps_of(total_leakage(req, e)) for e in grid]
    candidates: list[float] = []
    finite = [(e, v) for e, v in zip(grid, values) if math.isfinite(v)]
    if finite:
        candidates.append(min(finite, key=lambda t: t[1])[0])
    if not _unimodal(values, req.tol):
        logger.warning(
            "pre-scan of total leakage is not unimodal; falling back to a "
            "%d-point grid scan",
            GRID_FALLBACK_POINTS,
        )
        dense = [req.eps_max * (i + 1) / GRID_FALLBACK_POINTS for i in range(GRID_FALLBACK_POINTS)]
        dense_vals = [_eps_of(total_leakage(req, e)) for e in dense]
        best = min(zip(dense, dense_vals), key=lambda t: t[1])
        if math.isfinite(best[1]):
            candidates.append(best[0])
    else:
        lo, hi = 0.0, req.eps_max
        while hi - lo > req.tol:
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            v1 = _eps_of(total_leakage(req, m1)) if m1 > 0 else math.inf
            v2 = _eps_of(total_leakage(req, m2))
            if math.isinf(v1) and math.isinf(v2):
                lo = m1  # feasibility improves with larger budgets
            elif v1 > v2:
                lo = m1
            elif v1 < v2:
                hi = m2
            else:
                lo, hi = m1, m2
        candidates.append(0.5 * (lo + hi))
    threshold = zero_boost_eps0(req)
    if threshold is not None:
        candidates.append(threshold)
    best_result: PlanResult | None = None
    for eps0 in candidates:
        if not 0.0 < eps0 <= req.eps_max:
            continue
        res = _result_at(req, eps0)
        if best_result is None or res.total.eps < best_result.total.eps:
            best_result = res
    if best_result is None or not best_result.feasible:
        fallback = best_result if best_result is not None else _result_at(req, req.eps_max)
        return fallback
    return best_result


def _unimodal(values, tol: float) -> bool:
    """True when the finite suffix of ``values`` descends then ascends.

    Infeasible (inf) prefixes are allowed; a descent after an ascent beyond
    ``tol`` marks a second valley.
    """
    finite = [v for v in values if math.isfinite(v)]
    if len(finite) < 3:
        return True
    ascended = False
    for prev, cur in zip(finite, finite[1:]):
        if cur > prev + tol:
            ascended = True
        elif ascended and cur < prev - tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Inverse mappings
# ---------------------------------------------------------------------------


def invert_rho(
    region: RegionSpec,
    kernel_family: str,
    eps_budget: float,
    mode: str = "dp",
    delta: float = 1e-5,
    alpha: float = 2.0,
    sensitivity: float = 1.0,
    eps_max: float = 20.0,
    tol: float = 1e-4,
    calibration: str = "analytic",
) -> float:
    """Largest confidence rho affordable under a total budget (binary search)."""
    if eps_budget <= 0:
        raise ValueError("eps_budget must be positive")

    def total_at(rho: float) -> float:
        req = PlanRequest(
            kernel_family=kernel_family,
            region=region,
            rho=rho,
            mode=mode,
            delta=delta,
            alpha=alpha,
            sensitivity=sensitivity,
            eps_max=eps_max,
            tol=tol,
            calibration=calibration,
        )
        return optimize_eps0(req).total.eps

    lo, hi = 1e-6, 1.0 - 1e-9
    total_lo = total_at(lo)
    if total_lo > eps_budget:
        raise ValueError(
            f"budget {eps_budget} is below the kernel-only minimum even as rho -> 0"
        )
    # Converge in rho-width and also in achieved budget, since the leakage
    # slope in rho can be steep near high confidence targets.
    for _ in range(80):
        if hi - lo <= tol and eps_budget - total_lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        total_mid = total_at(mid)
        if total_mid <= eps_budget:
            lo, total_lo = mid, total_mid
        else:
            hi = mid
    return lo


def invert_region(
    rho: float,
    kernel_family: str,
    eps_budget: float,
    region_kind: str = "absolute",
    mode: str = "dp",
    delta: float = 1e-5,
    alpha: float = 2.0,
    sensitivity: float = 1.0,
    eps_max: float = 20.0,
    tol: float = 1e-4,
    calibration: str = "analytic",
) -> RegionSpec:
    """Smallest region half-width tau meeting the budget at confidence rho."""
    if region_kind not in ("absolute", "fixed-symmetric"):
        raise ValueError("region_kind must be 'absolute' or 'fixed-symmetric'")
    if eps_budget <= 0:
        raise ValueError("eps_budget must be positive")

    def make_region(tau: float) -> RegionSpec:
        if region_kind == "absolute":
            return RegionSpec(kind="absolute", tau=tau)
        return RegionSpec(kind="fixed", tau_l=-tau, tau_u=tau)

    def total_at(tau: float) -> float:
        req = PlanRequest(
            kernel_family=kernel_family,
            region=make_region(tau),
            rho=rho,
            mode=mode,
            delta=delta,
            alpha=alpha,
            sensitivity=sensitivity,
            eps_max=eps_max,
            tol=tol,
            calibration=calibration,
        )
        return optimize_eps0(req).total.eps

    hi = max(sensitivity, 1.0)
    for _ in range(60):
        if total_at(hi) <= eps_budget:
            break
        hi *= 2.0
        if hi > 1e9:
            raise ValueError(f"budget {eps_budget} unreachable at confidence {rho}")
    else:
        raise ValueError(f"budget {eps_budget} unreachable at confidence {rho}")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= 0.0 or total_at(mid) > eps_budget:
            lo = mid
        else:
            hi = mid
    return make_region(hi)
