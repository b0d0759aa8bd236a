"""Kernel noise mechanisms and their privacy objects.

A *kernel* is a standard additive-noise DP mechanism (Gaussian or Laplace)
described by a :class:`KernelSpec`.  This module exposes the kernel's
distributional functions (pdf / cdf / quantile / sampling) and its privacy
objects:

  * ``kernel_profile``  -- the privacy profile delta_Z(eps),
  * ``kernel_rdp``      -- the Renyi-DP curve eps0(alpha),
  * ``kernel_pld``      -- the privacy-loss distribution (PLD), either the
    analytic Gaussian form or a discretized grid of (loss, mass) atoms,
  * ``composed_kernel_profile`` -- the T-fold composed profile,
  * calibration helpers mapping an (eps0, delta0) target to a noise scale.

Everything here is a pure function of its inputs and safe to share across
threads.
"""

from __future__ import annotations

import dataclasses
import functools
import math

import numpy as np
from scipy import optimize, special

FAMILIES = ("gaussian", "laplace")
CALIBRATIONS = ("classical", "analytic", "explicit-scale")

# Grid PLDs truncate where the cumulative tail mass drops below this; the
# truncated mass is folded into the nearest endpoint atom.
GRID_TAIL_MASS = 1e-12
DEFAULT_GRID_STEP = 1e-3


@dataclasses.dataclass(frozen=True)
class KernelSpec:
    """An additive-noise mechanism: family, noise scale and query sensitivity.

    Attributes:
      family: "gaussian" or "laplace".
      scale: noise scale (sigma for gaussian, b for laplace), > 0.
      sensitivity: worst-case query change between neighboring datasets, >= 0
        (zero is permitted only as the degenerate identical-distribution
        limit used by the PLD).
      delta0: the kernel's fixed delta used for (eps0, delta0) calibration.
      eps0: kernel budget the scale was calibrated to (0 when the scale was
        given explicitly).
      calibration: "classical", "analytic" or "explicit-scale".
    """

    family: str
    scale: float
    sensitivity: float
    delta0: float = 1e-5
    eps0: float = 0.0
    calibration: str = "explicit-scale"

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family: {self.family!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not (self.sensitivity >= 0 and math.isfinite(self.sensitivity)):
            raise ValueError(f"sensitivity must be >= 0, got {self.sensitivity}")
        if not 0.0 <= self.delta0 <= 1.0:
            raise ValueError(f"delta0 must lie in [0,1], got {self.delta0}")
        if self.eps0 < 0:
            raise ValueError(f"eps0 must be >= 0, got {self.eps0}")
        if self.calibration not in CALIBRATIONS:
            raise ValueError(f"unknown calibration mode: {self.calibration!r}")


@dataclasses.dataclass(frozen=True, eq=False)
class PLDRepr:
    """A privacy-loss distribution.

    Either analytic Gaussian (``kind="analytic_gaussian"``, loss ~
    N(gauss_mean, gauss_var) with gauss_var = 2*gauss_mean) or a grid
    (``kind="grid"``) of atoms at ``losses`` with probabilities ``masses``
    plus an atom at +infinity of probability ``inf_mass`` (outputs that are
    impossible under the neighboring dataset).
    """

    kind: str
    gauss_mean: float = 0.0
    gauss_var: float = 0.0
    losses: np.ndarray | None = None
    masses: np.ndarray | None = None
    inf_mass: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("analytic_gaussian", "grid"):
            raise ValueError(f"unknown PLD kind: {self.kind!r}")
        if self.kind == "grid":
            if self.losses is None or self.masses is None:
                raise ValueError("grid PLD requires losses and masses")
            if len(self.losses) != len(self.masses):
                raise ValueError("losses and masses must have equal length")
        if not 0.0 <= self.inf_mass <= 1.0:
            raise ValueError(f"inf_mass must lie in [0,1], got {self.inf_mass}")

    def total_mass(self) -> float:
        if self.kind == "analytic_gaussian":
            return 1.0
        return float(np.sum(self.masses)) + self.inf_mass


# ---------------------------------------------------------------------------
# Distribution functions
# ---------------------------------------------------------------------------


def kernel_pdf(k: KernelSpec, center: float, y):
    """Density of the mechanism's output at ``y`` when the true answer is ``center``."""
    if k.family == "gaussian":
        z = (np.asarray(y, dtype=float) - center) / k.scale
        return np.exp(-0.5 * z * z) / (k.scale * math.sqrt(2.0 * math.pi))
    z = np.abs(np.asarray(y, dtype=float) - center) / k.scale
    return np.exp(-z) / (2.0 * k.scale)


def kernel_cdf(k: KernelSpec, center: float, y):
    """CDF of the mechanism's output at ``y``; ``kernel_cdf(k, 0, t)`` is the
    noise CDF centered at zero used by the region-mass formulas."""
    z = (np.asarray(y, dtype=float) - center) / k.scale
    if k.family == "gaussian":
        return special.ndtr(z)
    return np.where(z < 0, 0.5 * np.exp(z), 1.0 - 0.5 * np.exp(-z))


def kernel_quantile(k: KernelSpec, center: float, u):
    """Inverse CDF; ``u`` must lie strictly inside (0, 1)."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("quantile argument must lie in the open interval (0,1)")
    if k.family == "gaussian":
        return center + k.scale * special.ndtri(u)
    return center - k.scale * np.sign(u - 0.5) * np.log1p(-2.0 * np.abs(u - 0.5))


def kernel_sample(k: KernelSpec, center: float, rng: np.random.Generator, n: int):
    """Draw ``n`` outputs from the kernel mechanism using ``rng``."""
    if k.family == "gaussian":
        return rng.normal(center, k.scale, size=n)
    return rng.laplace(center, k.scale, size=n)


# ---------------------------------------------------------------------------
# Privacy profile
# ---------------------------------------------------------------------------


def gaussian_profile(ratio: float, eps: float) -> float:
    """Profile of a Gaussian mechanism with noise ratio ``ratio`` = sensitivity/scale.

    delta(eps) = Phi(r/2 - eps/r) - e^eps * Phi(-r/2 - eps/r), evaluated in
    log space on the second term so large eps cannot overflow.
    """
    if ratio == 0.0:
        return max(0.0, -math.expm1(eps)) if eps < 0 else 0.0
    a = 0.5 * ratio - eps / ratio
    b = -0.5 * ratio - eps / ratio
    log_term = eps + special.log_ndtr(b)
    term = math.exp(log_term) if log_term > -745.0 else 0.0
    return min(1.0, max(0.0, float(special.ndtr(a)) - term))


def kernel_profile(k: KernelSpec, eps: float) -> float:
    """The kernel's privacy profile delta_Z(eps).

    Gaussian kernels use the tight analytic conversion; Laplace kernels
    evaluate the profile integral over their grid PLD.
    """
    if k.family == "gaussian":
        return gaussian_profile(k.sensitivity / k.scale, eps)
    return profile_from_pld(kernel_pld(k), eps)


def composed_kernel_profile(k: KernelSpec, T: int, eps: float) -> float:
    """Profile of the T-fold homogeneous composition of the kernel itself.

    Gaussian composition stays Gaussian (loss mean T*eta, variance 2*T*eta,
    i.e. noise ratio sqrt(T)*r); other kernels compose by grid-PLD
    self-convolution.
    """
    if T < 0:
        raise ValueError("composition count must be >= 0")
    if T == 0:
        return max(0.0, -math.expm1(eps)) if eps < 0 else 0.0
    if k.family == "gaussian":
        return gaussian_profile(math.sqrt(T) * k.sensitivity / k.scale, eps)
    return profile_from_pld(self_compose_pld(kernel_pld(k), T), eps)


# ---------------------------------------------------------------------------
# Renyi DP
# ---------------------------------------------------------------------------


def kernel_rdp(k: KernelSpec, alpha: float) -> float:
    """Renyi-DP curve eps0(alpha) of the kernel, for alpha > 1."""
    if not alpha > 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if k.family == "gaussian":
        return alpha * k.sensitivity**2 / (2.0 * k.scale**2)
    lam = k.sensitivity / k.scale
    # Renyi divergence between Laplace(0,b) and Laplace(sensitivity,b),
    # combined in log space so large alpha cannot overflow.
    terms = np.array(
        [
            math.log(alpha / (2.0 * alpha - 1.0)) + (alpha - 1.0) * lam,
            math.log((alpha - 1.0) / (2.0 * alpha - 1.0)) - alpha * lam,
        ]
    )
    return float(special.logsumexp(terms)) / (alpha - 1.0)


# ---------------------------------------------------------------------------
# Privacy-loss distributions
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def kernel_pld(k: KernelSpec, grid_step: float = DEFAULT_GRID_STEP) -> PLDRepr:
    """PLD of the kernel for the dominating shift ``sensitivity``.

    Gaussian kernels return the analytic representation; Laplace kernels a
    grid whose bin masses are exact kernel-CDF differences (atoms placed at
    bin midpoints, the two constant-loss lobes at exactly +-sensitivity/scale).
    Results are cached; callers must treat the returned arrays as read-only.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    if k.sensitivity == 0.0:
        return PLDRepr(
            kind="grid", losses=np.array([0.0]), masses=np.array([1.0]), inf_mass=0.0
        )
    if k.family == "gaussian":
        eta = k.sensitivity**2 / (2.0 * k.scale**2)
        return PLDRepr(kind="analytic_gaussian", gauss_mean=eta, gauss_var=2.0 * eta)
    return _laplace_grid_pld(k, grid_step)


def _laplace_grid_pld(k: KernelSpec, step: float) -> PLDRepr:
    """Grid PLD of Laplace(center 0) vs Laplace(center sensitivity).

    The loss gamma(y) = (|y - sensitivity| - |y|)/b equals +lam for y <= 0,
    -lam for y >= sensitivity (lam = sensitivity/b) and falls linearly in
    between, so bin masses on (-lam, lam) are exact CDF differences through
    the inverse map y(z) = (sensitivity - b*z)/2.
    """
    b = k.scale
    delta_q = k.sensitivity
    lam = delta_q / b
    n_bins = max(1, int(math.ceil(2.0 * lam / step)))
    edges = np.linspace(-lam, lam, n_bins + 1)
    y_at = (delta_q - b * edges) / 2.0  # decreasing in the loss value
    cdf_at = kernel_cdf(k, 0.0, y_at)
    interior = cdf_at[:-1] - cdf_at[1:]
    losses = np.concatenate(([-lam], 0.5 * (edges[:-1] + edges[1:]), [lam]))
    masses = np.concatenate(
        ([1.0 - float(kernel_cdf(k, 0.0, delta_q))], interior, [float(kernel_cdf(k, 0.0, 0.0))])
    )
    return PLDRepr(kind="grid", losses=losses, masses=masses, inf_mass=0.0)


def pld_to_grid(pld: PLDRepr, step: float = DEFAULT_GRID_STEP) -> PLDRepr:
    """Discretize an analytic-Gaussian PLD to a grid (grids pass through).

    Support is truncated where the cumulative tail mass is below
    ``GRID_TAIL_MASS``; truncated mass is folded into the endpoint atoms.
    """
    if pld.kind == "grid":
        return pld
    mean, std = pld.gauss_mean, math.sqrt(pld.gauss_var)
    if std == 0.0:
        return PLDRepr(kind="grid", losses=np.array([mean]), masses=np.array([1.0]))
    half = -std * float(special.ndtri(GRID_TAIL_MASS))
    n_bins = max(1, int(math.ceil(2.0 * half / step)))
    edges = np.linspace(mean - half, mean + half, n_bins + 1)
    cdf = special.ndtr((edges - mean) / std)
    masses = np.diff(cdf)
    masses[0] += cdf[0]
    masses[-1] += 1.0 - cdf[-1]
    losses = 0.5 * (edges[:-1] + edges[1:])
    return PLDRepr(kind="grid", losses=losses, masses=masses, inf_mass=pld.inf_mass)


def profile_from_pld(pld: PLDRepr, eps: float) -> float:
    """Hockey-stick profile integral E[max(0, 1 - e^(eps - Gamma))] + inf mass."""
    if pld.kind == "analytic_gaussian":
        pld = pld_to_grid(pld)
    losses, masses = pld.losses, pld.masses
    above = losses > eps
    if not np.any(above):
        return min(1.0, max(0.0, pld.inf_mass))
    val = float(np.sum((1.0 - np.exp(eps - losses[above])) * masses[above]))
    return min(1.0, max(0.0, val + pld.inf_mass))


def convolve_plds(p1: PLDRepr, p2: PLDRepr, step: float = DEFAULT_GRID_STEP) -> PLDRepr:
    """PLD of the composition of two independent mechanisms (grid route).

    Non-uniform atom lists (e.g. the exact Laplace grid with its endpoint
    lobes) are first re-gridded onto a uniform lattice by mass splitting
    between neighboring lattice points, which preserves total mass exactly
    and the mean to machine precision.
    """
    g1 = _regrid_uniform(pld_to_grid(p1, step), step)
    g2 = _regrid_uniform(pld_to_grid(p2, step), step)
    s1 = _grid_step_of(g1)
    s2 = _grid_step_of(g2)
    if s1 is None:  # single atom: pure shift
        return _shift_grid(g2, float(g1.losses[0]), extra_inf=g1.inf_mass)
    if s2 is None:
        return _shift_grid(g1, float(g2.losses[0]), extra_inf=g2.inf_mass)
    from scipy.signal import fftconvolve

    masses = fftconvolve(g1.masses, g2.masses)
    masses = np.clip(masses, 0.0, None)
    start = float(g1.losses[0]) + float(g2.losses[0])
    losses = start + s1 * np.arange(masses.size)
    inf_mass = 1.0 - (1.0 - g1.inf_mass) * (1.0 - g2.inf_mass)
    return _fold_tails(PLDRepr(kind="grid", losses=losses, masses=masses, inf_mass=inf_mass))


def self_compose_pld(pld: PLDRepr, T: int) -> PLDRepr:
    """T-fold self-composition of a PLD by binary exponentiation."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if pld.kind == "analytic_gaussian":
        return PLDRepr(
            kind="analytic_gaussian",
            gauss_mean=T * pld.gauss_mean,
            gauss_var=T * pld.gauss_var,
            inf_mass=1.0 - (1.0 - pld.inf_mass) ** T,
        )
    result: PLDRepr | None = None
    power = pld
    t = T
    while t:
        if t & 1:
            result = power if result is None else convolve_plds(result, power)
        t >>= 1
        if t:
            power = convolve_plds(power, power)
    return result


def _grid_step_of(g: PLDRepr) -> float | None:
    if g.losses.size < 2:
        return None
    return float(g.losses[1] - g.losses[0])


def _regrid_uniform(g: PLDRepr, step: float) -> PLDRepr:
    """Snap an atom list onto the uniform lattice {k*step}, splitting each
    atom's mass linearly between its two neighboring lattice points."""
    diffs = np.diff(g.losses)
    if diffs.size == 0:
        return g
    if np.all(np.abs(diffs - step) <= 1e-12 * max(1.0, step)):
        offset = g.losses[0] / step
        if abs(offset - round(offset)) < 1e-9:
            return g
    n0 = int(math.floor(float(np.min(g.losses)) / step))
    n1 = int(math.ceil(float(np.max(g.losses)) / step))
    masses = np.zeros(n1 - n0 + 2)
    idx = g.losses / step - n0
    lo = np.floor(idx).astype(int)
    frac = idx - lo
    np.add.at(masses, lo, g.masses * (1.0 - frac))
    np.add.at(masses, lo + 1, g.masses * frac)
    losses = (n0 + np.arange(masses.size)) * step
    keep = slice(0, masses.size - 1 if masses[-1] == 0.0 else masses.size)
    return PLDRepr(
        kind="grid", losses=losses[keep], masses=masses[keep], inf_mass=g.inf_mass
    )


def _shift_grid(g: PLDRepr, shift: float, extra_inf: float = 0.0) -> PLDRepr:
    inf_mass = 1.0 - (1.0 - g.inf_mass) * (1.0 - extra_inf)
    return PLDRepr(kind="grid", losses=g.losses + shift, masses=g.masses, inf_mass=inf_mass)


def _fold_tails(g: PLDRepr) -> PLDRepr:
    """Drop grid tails below the truncation mass, folding them into endpoints."""
    masses = g.masses
    csum = np.cumsum(masses)
    total = csum[-1]
    lo = int(np.searchsorted(csum, GRID_TAIL_MASS))
    hi = int(np.searchsorted(csum, total - GRID_TAIL_MASS))
    hi = min(hi, masses.size - 1)
    lo = min(lo, hi)
    kept = masses[lo : hi + 1].copy()
    kept[0] += csum[lo] - masses[lo]
    kept[-1] += total - csum[hi]
    return PLDRepr(
        kind="grid", losses=g.losses[lo : hi + 1], masses=kept, inf_mass=g.inf_mass
    )


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


def classical_gaussian_scale(eps0: float, delta0: float, sensitivity: float) -> float:
    """Classical Gaussian bound: sigma = sqrt(2 ln(1.25/delta0)) * sensitivity / eps0."""
    if eps0 <= 0 or not 0 < delta0 < 1 or sensitivity <= 0:
        raise ValueError("classical calibration needs eps0 > 0, 0 < delta0 < 1, sensitivity > 0")
    return math.sqrt(2.0 * math.log(1.25 / delta0)) * sensitivity / eps0


def analytic_gaussian_scale(eps0: float, delta0: float, sensitivity: float) -> float:
    """Smallest sigma whose analytic profile satisfies delta(eps0) <= delta0."""
    if eps0 <= 0 or not 0 < delta0 < 1 or sensitivity <= 0:
        raise ValueError("analytic calibration needs eps0 > 0, 0 < delta0 < 1, sensitivity > 0")

    def gap(log_r: float) -> float:
        return gaussian_profile(math.exp(log_r), eps0) - delta0

    lo, hi = -40.0, 40.0
    log_r = optimize.brentq(gap, lo, hi, xtol=1e-14, rtol=8.9e-16)
    return sensitivity / math.exp(log_r)


def laplace_scale(eps0: float, delta0: float, sensitivity: float, pure: bool = False) -> float:
    """Laplace scale meeting (eps0, delta0)-DP.

    ``pure=True`` gives the textbook pure-DP scale b = sensitivity/eps0
    (classical mode); otherwise the smallest b with profile delta(eps0) <=
    delta0, using the closed-form Laplace profile
    delta(eps) = 1 - exp(-(lam - eps)/2) for 0 <= eps < lam = sensitivity/b.
    """
    if eps0 <= 0 or sensitivity <= 0:
        raise ValueError("calibration needs eps0 > 0 and sensitivity > 0")
    if pure or delta0 <= 0:
        return sensitivity / eps0
    if not delta0 < 1:
        raise ValueError("delta0 must be < 1")
    lam = eps0 - 2.0 * math.log1p(-delta0)
    return sensitivity / lam


def calibrate_kernel(
    family: str,
    eps0: float,
    delta0: float,
    sensitivity: float,
    calibration: str = "analytic",
    scale: float | None = None,
) -> KernelSpec:
    """Build a KernelSpec whose scale meets the (eps0, delta0) target.

    ``explicit-scale`` bypasses calibration and requires ``scale``.
    """
    if calibration == "explicit-scale":
        if scale is None:
            raise ValueError("explicit-scale calibration requires a scale")
        return KernelSpec(family, scale, sensitivity, delta0, eps0, calibration)
    if family == "gaussian":
        fn = classical_gaussian_scale if calibration == "classical" else analytic_gaussian_scale
        s = fn(eps0, delta0, sensitivity)
    elif family == "laplace":
        s = laplace_scale(eps0, delta0, sensitivity, pure=(calibration == "classical"))
    else:
        raise ValueError(f"unknown kernel family: {family!r}")
    return KernelSpec(family, s, sensitivity, delta0, eps0, calibration)
