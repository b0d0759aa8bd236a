"""Flat ``key = value`` text configs for kernel and region specifications.

The config format is a plain text file of one assignment per line; blank
lines and ``#`` comments are ignored.  Kernel keys are ``family``, ``scale``,
``sensitivity``, ``delta0``, ``eps0`` and ``calibration``; region keys are
namespaced as ``region.kind``, ``region.theta``, ``region.tau``,
``region.tau_l`` and ``region.tau_u``.  Unrelated keys are preserved so a
single file can also carry experiment settings for the CLI.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from .boost import RegionSpec
from .kernels import KernelSpec, calibrate_kernel

KERNEL_KEYS = ("family", "scale", "sensitivity", "delta0", "eps0", "calibration")
REGION_KEYS = ("region.kind", "region.theta", "region.tau", "region.tau_l", "region.tau_u")


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into an ordered string map.

    Args:
      text: config file contents.

    Returns:
      Mapping of stripped keys to stripped raw values, in file order.

    Raises:
      ValueError: a non-blank, non-comment line has no ``=``.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        out[key] = value.strip()
    return out


def read_config(path: str | Path) -> dict[str, str]:
    """Read and parse a ``key = value`` config file."""
    return parse_kv_text(Path(path).read_text(encoding="utf-8"))


def format_kv(pairs: Mapping[str, object]) -> str:
    """Render a mapping back to ``key = value`` lines (floats at 17 digits)."""
    lines = []
    for key, value in pairs.items():
        if isinstance(value, float):
            lines.append(f"{key} = {value:.17g}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def kernel_from_config(cfg: Mapping[str, str]) -> KernelSpec:
    """Build a KernelSpec from config keys.

    ``calibration`` defaults to ``explicit-scale`` when a ``scale`` is given
    and ``analytic`` otherwise; calibrated kernels require ``eps0``.

    Raises:
      ValueError: missing or inconsistent keys.
    """
    family = cfg.get("family", "gaussian")
    scale = float(cfg["scale"]) if "scale" in cfg else None
    calibration = cfg.get("calibration", "explicit-scale" if scale is not None else "analytic")
    sensitivity = float(cfg.get("sensitivity", "1.0"))
    delta0 = float(cfg.get("delta0", "1e-5"))
    eps0 = float(cfg.get("eps0", "0.0"))
    if calibration != "explicit-scale" and eps0 <= 0.0:
        raise ValueError(f"calibration {calibration!r} requires a positive eps0 key")
    return calibrate_kernel(family, eps0, delta0, sensitivity, calibration, scale)


def kernel_to_config(k: KernelSpec) -> dict[str, object]:
    """Serialize a KernelSpec to its config keys."""
    return {
        "family": k.family,
        "scale": k.scale,
        "sensitivity": k.sensitivity,
        "delta0": k.delta0,
        "eps0": k.eps0,
        "calibration": k.calibration,
    }


def region_from_config(cfg: Mapping[str, str]) -> RegionSpec:
    """Build a RegionSpec from ``region.*`` config keys.

    Raises:
      ValueError: ``region.kind`` missing or the kind's parameters invalid.
    """
    if "region.kind" not in cfg:
        raise ValueError("config is missing the region.kind key")
    kind = cfg["region.kind"]
    return RegionSpec(
        kind=kind,
        theta=float(cfg.get("region.theta", "0.0")),
        tau=float(cfg.get("region.tau", "0.0")),
        tau_l=float(cfg.get("region.tau_l", "0.0")),
        tau_u=float(cfg.get("region.tau_u", "0.0")),
    )


def region_to_config(r: RegionSpec) -> dict[str, object]:
    """Serialize a RegionSpec to its namespaced config keys."""
    out: dict[str, object] = {"region.kind": r.kind}
    if r.kind == "relative":
        out["region.theta"] = r.theta
        out["region.tau"] = r.tau
    elif r.kind == "absolute":
        out["region.tau"] = r.tau
    else:
        out["region.tau_l"] = r.tau_l
        out["region.tau_u"] = r.tau_u
    return out
