"""Command-line harness for the privacy-boosting toolkit.

Subcommands: ``plan`` (budget-split optimization), ``sweep`` (boosted vs
kernel-only epsilon across region sizes or confidence levels), ``compose``
(T-fold composition curves), ``feasibility`` (boosted vs hard-bounded
profiles plus confidence-vs-extra-leakage curves), ``bench`` (sampler
timings), ``ldp`` (randomized-response MSE sweep), ``sample`` (draws from the
boosted mechanism) and ``verify`` (utility / privacy / local-DP checks).

All data files are CSV with an exact header, comma delimiter, no trailing
delimiter and LF line endings; reruns with identical flags and seeds are
byte-identical (benchmark timings excepted).  Report commands also render a
companion PNG next to each CSV unless ``--no-plot`` is given.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .accounting import (
    invert_compose_profile,
    invert_profile,
    leakage_params,
    mc_privacy_check,
    pb_profile,
    truncated_profile,
)
from .boost import (
    Q_CAP,
    RegionSpec,
    boost_params,
    boosting_rate,
    pb_sample,
    verify_utility,
    worst_case_mass,
)
from .cases import resolve_case
from .grr import grr_params, load_adult_ages, mse_sweep, synthetic_ages, verify_ldp
from .kernels import KernelSpec, calibrate_kernel, composed_kernel_profile, kernel_sample
from .planner import PlanRequest, kernel_only_eps, optimize_eps0, zero_boost_kernel

logger = logging.getLogger(__name__)

DEFAULT_OUT = {
    "sweep": "pbdp_sweep.csv",
    "compose": "pbdp_compose.csv",
    "feasibility": "pbdp_feasibility.csv",
    "bench": "pbdp_bench.csv",
    "ldp": "pbdp_ldp.csv",
}


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    """Format one CSV cell: strings pass through, numbers at 12 digits."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def write_csv(path: str | Path, header: tuple[str, ...], rows) -> None:
    """Write rows as CSV: exact header, comma delimiter, LF endings."""
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    logger.info("wrote %s (%d rows)", path, len(lines) - 1)


def _png_path(csv_path: str | Path, suffix: str = "") -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + suffix + ".png")


def _render_plot(png_path: Path, draw, no_plot: bool) -> None:
    """Render a companion figure unless plotting is disabled."""
    if no_plot:
        return
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    draw(ax)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    logger.info("rendered %s", png_path)


def _masked(values) -> np.ndarray:
    """Replace non-finite values with NaN so plots show gaps, not spikes."""
    arr = np.asarray(values, dtype=float)
    return np.where(np.isfinite(arr), arr, np.nan)


def _pool_map(fn, items) -> list:
    """Run fn over items in a bounded worker pool, results in input order."""
    items = list(items)
    workers = min(8, os.cpu_count() or 1, len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _parse_float_list(text: str) -> list[float]:
    values = [float(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise ValueError(f"expected a comma-separated list, got {text!r}")
    return values


def _parse_int_list(text: str) -> list[int]:
    return [int(round(v)) for v in _parse_float_list(text)]


# ---------------------------------------------------------------------------
# Flag / config resolution
# ---------------------------------------------------------------------------


def _load_cfg(args) -> dict[str, str]:
    return cfgmod.read_config(args.config) if args.config else {}


def _pick(args, cfg, name, default, cast=float):
    """CLI flag beats config key beats default."""
    value = getattr(args, name.replace(".", "_"), None)
    if value is not None:
        return value
    if name in cfg:
        return cast(cfg[name])
    return default


@dataclasses.dataclass(frozen=True)
class Settings:
    """Resolved global options shared by every command."""

    seed: int
    mode: str
    delta: float
    alpha: float
    out: str | None
    no_plot: bool


def _settings(args, cfg) -> Settings:
    return Settings(
        seed=int(_pick(args, cfg, "seed", 1, int)),
        mode=str(_pick(args, cfg, "mode", "dp", str)),
        delta=float(_pick(args, cfg, "delta", 1e-5)),
        alpha=float(_pick(args, cfg, "alpha", 2.0)),
        out=args.out if args.out is not None else cfg.get("out"),
        no_plot=args.no_plot,
    )


def _resolve_region(args, cfg) -> RegionSpec:
    merged = {k: v for k, v in cfg.items() if k.startswith("region.")}
    flag_map = (
        ("region_kind", "region.kind"),
        ("theta", "region.theta"),
        ("tau", "region.tau"),
        ("tau_l", "region.tau_l"),
        ("tau_u", "region.tau_u"),
    )
    for attr, key in flag_map:
        value = getattr(args, attr, None)
        if value is not None:
            merged[key] = value if isinstance(value, str) else format(value, ".17g")
    if "region.kind" not in merged:
        raise ValueError("no region given: set --region-kind or region.kind in the config")
    return cfgmod.region_from_config(merged)


def _resolve_kernel(args, cfg) -> KernelSpec:
    merged = {k: v for k, v in cfg.items() if k in cfgmod.KERNEL_KEYS}
    for key in cfgmod.KERNEL_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value if isinstance(value, str) else format(value, ".17g")
    return cfgmod.kernel_from_config(merged)


def _add_region_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--region-kind", choices=("relative", "absolute", "fixed"), default=None)
    p.add_argument("--theta", type=float, default=None, help="relative-region slope in [0,1]")
    p.add_argument("--tau", type=float, default=None, help="region half-width offset")
    p.add_argument("--tau-l", type=float, default=None, help="fixed-window lower edge")
    p.add_argument("--tau-u", type=float, default=None, help="fixed-window upper edge")


def _add_kernel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=("gaussian", "laplace"), default=None)
    p.add_argument("--sensitivity", type=float, default=None)
    p.add_argument("--scale", type=float, default=None, help="explicit noise scale")
    p.add_argument("--eps0", type=float, default=None, help="kernel budget for calibration")
    p.add_argument("--delta0", type=float, default=None)
    p.add_argument(
        "--calibration", choices=("classical", "analytic", "explicit-scale"), default=None
    )


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------


def _plan_request(args, cfg, s: Settings) -> PlanRequest:
    return PlanRequest(
        kernel_family=str(_pick(args, cfg, "family", "gaussian", str)),
        region=_resolve_region(args, cfg),
        rho=float(_pick(args, cfg, "rho", 0.9)),
        mode=s.mode,
        delta=s.delta,
        alpha=s.alpha,
        sensitivity=float(_pick(args, cfg, "sensitivity", 1.0)),
        eps_max=float(_pick(args, cfg, "eps_max", 20.0)),
        tol=float(_pick(args, cfg, "tol", 1e-4)),
        calibration=str(_pick(args, cfg, "calibration", "analytic", str)),
    )


def cmd_plan(args) -> int:
    """Optimize the kernel-vs-boost budget split and print the plan record."""
    cfg = _load_cfg(args)
    s = _settings(args, cfg)
    req = _plan_request(args, cfg, s)
    res = optimize_eps0(req)
    record: dict[str, object] = {
        "feasible": "true" if res.feasible else "false",
        "mode": req.mode,
        "rho": req.rho,
        "eps0_opt": res.eps0_opt,
        "q": res.q_opt,
        "min_pS": res.min_pS,
        "qx_star": res.qx_star,
        "total_eps": res.total.eps,
    }
    if req.mode == "dp":
        record["delta"] = req.delta
    else:
        record["alpha"] = req.alpha
    if res.leakage is not None:
        record["L1"] = res.leakage.L1
        record["L2"] = res.leakage.L2
        record["W1"] = res.leakage.W1
        record["W2"] = res.leakage.W2
    if res.kernel is not None:
        record.update(cfgmod.kernel_to_config(res.kernel))
    record.update(cfgmod.region_to_config(req.region))
    text = cfgmod.format_kv(record)
    if s.out:
        with open(s.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        logger.info("wrote %s", s.out)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    """Boosted vs kernel-only total epsilon across sizes or confidences."""
    cfg = _load_cfg(args)
    s = _settings(args, cfg)
    family = str(_pick(args, cfg, "family", "gaussian", str))
    sensitivity = float(_pick(args, cfg, "sensitivity", 1.0))
    calibration = str(_pick(args, cfg, "calibration", "analytic", str))
    eps_max = float(_pick(args, cfg, "eps_max", 20.0))
    tol = float(_pick(args, cfg, "tol", 1e-4))
    rho = float(_pick(args, cfg, "rho", 0.9))
    size = float(_pick(args, cfg, "size", 10.0))
    points = int(_pick(args, cfg, "points", 11, int))
    variable = args.sweep

    if variable == "size":
        xs = np.linspace(args.size_min, args.size_max, points)
    else:
        xs = np.linspace(args.rho_min, args.rho_max, points)

    def job(x: float) -> tuple[float, float, float]:
        width = x if variable == "size" else size
        point_rho = rho if variable == "size" else x
        req = PlanRequest(
            kernel_family=family,
            region=RegionSpec(kind="absolute", tau=width / 2.0),
            rho=point_rho,
            mode=s.mode,
            delta=s.delta,
            alpha=s.alpha,
            sensitivity=sensitivity,
            eps_max=eps_max,
            tol=tol,
            calibration=calibration,
        )
        return (float(x), optimize_eps0(req).total.eps, kernel_only_eps(req))

    results = _pool_map(job, xs)
    out = s.out or DEFAULT_OUT["sweep"]
    rows = [(x, pb, ke, s.mode) for x, pb, ke in results]
    write_csv(out, ("x", "eps_pb", "eps_kernel", "mode"), rows)

    def draw(ax):
        ax.plot(xs, _masked([r[1] for r in results]), marker="o", label="boosted")
        ax.plot(xs, _masked([r[2] for r in results]), marker="s", label="kernel-only")
        ax.set_xlabel("region width" if variable == "size" else "confidence")
        ax.set_ylabel("total epsilon")
        ax.legend()

    _render_plot(_png_path(out), draw, s.no_plot)
    gaps = [ke - pb for _, pb, ke in results if math.isfinite(pb) and math.isfinite(ke)]
    print(f"sweep over {variable}: {len(results)} points -> {out}")
    if gaps:
        print(f"max epsilon saving {max(gaps):.6g}, min {min(gaps):.6g}")
    return 0


# ---------------------------------------------------------------------------
# compose
# ---------------------------------------------------------------------------


def _composed_pair(
    kernel: KernelSpec,
    baseline: KernelSpec,
    region: RegionSpec,
    q: float,
    T: int,
    delta: float,
) -> tuple[float, float]:
    eps_pb = invert_compose_profile(kernel, region, q, T, delta)
    eps_kernel = invert_profile(lambda e: composed_kernel_profile(baseline, T, e), delta)
    return eps_pb, eps_kernel


def _reoptimized_compose_eps(req: PlanRequest, T: int) -> float:
    """Best composed epsilon when the budget split may depend on T."""

    def total_at(eps0: float) -> float:
        k = calibrate_kernel(req.kernel_family, eps0, req.delta, req.sensitivity, req.calibration)
        min_pS, _ = worst_case_mass(k, req.region)
        q = boosting_rate(min_pS, req.rho)
        if q >= Q_CAP:
            return math.inf
        return invert_compose_profile(k, req.region, q, T, req.delta)

    grid = [req.eps_max * (i + 1) / 24 for i in range(24)]
    values = [total_at(e) for e in grid]
    best_i = int(np.argmin(values))
    lo = grid[max(0, best_i - 1)]
    hi = grid[min(len(grid) - 1, best_i + 1)]
    for _ in range(30):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if total_at(m1) > total_at(m2):
            lo = m1
        else:
            hi = m2
    return min(min(values), total_at(0.5 * (lo + hi)))


def cmd_compose(args) -> int:
    """T-fold composition: boosted vs kernel-only epsilon at fixed delta/alpha."""
    cfg = _load_cfg(args)
    s = _settings(args, cfg)
    t_list = _parse_int_list(args.t_list)
    rho = float(_pick(args, cfg, "rho", 0.9))
    size = float(_pick(args, cfg, "size", 10.0))
    sensitivity = float(_pick(args, cfg, "sensitivity", 3.0))
    family = str(_pick(args, cfg, "family", "gaussian", str))
    calibration = str(_pick(args, cfg, "calibration", "analytic", str))
    region = RegionSpec(kind="absolute", tau=size / 2.0)
    req = PlanRequest(
        kernel_family=family,
        region=region,
        rho=rho,
        mode="dp",
        delta=s.delta,
        alpha=s.alpha,
        sensitivity=sensitivity,
        eps_max=float(_pick(args, cfg, "eps_max", 20.0)),
        tol=float(_pick(args, cfg, "tol", 1e-4)),
        calibration=calibration,
    )
    base = optimize_eps0(req)
    baseline = zero_boost_kernel(req)
    if not base.feasible or base.kernel is None or baseline is None:
        sys.stderr.write("error: composition configuration is infeasible\n")
        return 2

    def dp_job(T: int) -> tuple[int, float, float]:
        eps_pb, eps_kernel = _composed_pair(base.kernel, baseline, region, base.q_opt, T, s.delta)
        if args.reoptimize:
            eps_pb = min(eps_pb, _reoptimized_compose_eps(req, T))
        return (T, eps_pb, eps_kernel)

    dp_rows = _pool_map(dp_job, t_list)
    out = s.out or DEFAULT_OUT["compose"]
    write_csv(out, ("T", "eps_pb", "eps_kernel"), dp_rows)

    rdp_curves = {}
    for alpha in _parse_float_list(args.alphas):
        req_a = dataclasses.replace(req, mode="rdp", alpha=alpha)
        per_fold_pb = optimize_eps0(req_a).total.eps
        per_fold_kernel = kernel_only_eps(req_a)
        rows = [(T, T * per_fold_pb, T * per_fold_kernel) for T in t_list]
        path = Path(out).with_name(Path(out).stem + f"_rdp_a{alpha:g}.csv")
        write_csv(path, ("T", "eps_pb", "eps_kernel"), rows)
        rdp_curves[alpha] = rows

    def draw(ax):
        ax.loglog(t_list, _masked([r[1] for r in dp_rows]), marker="o", label="boosted")
        ax.loglog(t_list, _masked([r[2] for r in dp_rows]), marker="s", label="kernel-only")
        for alpha, rows in rdp_curves.items():
            ax.loglog(t_list, _masked([r[1] for r in rows]), "--", label=f"boosted rdp a={alpha:g}")
        ax.set_xlabel("compositions T")
        ax.set_ylabel("total epsilon")
        ax.legend()

    _render_plot(_png_path(out), draw, s.no_plot)
    print(f"compose over T={t_list} -> {out}")
    return 0


# ---------------------------------------------------------------------------
# feasibility
# ---------------------------------------------------------------------------


def cmd_feasibility(args) -> int:
    """Boosted vs hard-bounded profile curves plus extra-leakage-vs-confidence."""
    cfg = _load_cfg(args)
    s = _settings(args, cfg)
    rho = float(_pick(args, cfg, "rho", 0.8))
    tau = float(_pick(args, cfg, "tau", 10.0))
    sensitivity = float(_pick(args, cfg, "sensitivity", 1.0))
    eps0 = float(_pick(args, cfg, "eps0", 0.1))
    family = str(_pick(args, cfg, "family", "gaussian", str))
    calibration = str(_pick(args, cfg, "calibration", "analytic", str))
    kernel = calibrate_kernel(family, eps0, s.delta, sensitivity, calibration)
    region = RegionSpec(kind="absolute", tau=tau)
    params = boost_params(kernel, region, rho)
    eps_grid = np.linspace(args.eps_min, args.eps_max_grid, args.points)

    rows = [("boosted", e, pb_profile(kernel, region, params.q, float(e))) for e in eps_grid]
    rows += [("bounded", e, truncated_profile(kernel, region, float(e))) for e in eps_grid]
    out = s.out or DEFAULT_OUT["feasibility"]
    write_csv(out, ("curve", "eps", "delta"), rows)

    sigma = float(_pick(args, cfg, "sigma", 10.0))
    rho_grid = np.linspace(args.rho_min, args.rho_max, args.rho_points)
    l1_rows = []
    for halfwidth in _parse_float_list(args.l1_halfwidths):
        for sens in _parse_float_list(args.l1_sensitivities):
            window = RegionSpec(kind="fixed", tau_l=-halfwidth, tau_u=halfwidth)
            k_fixed = KernelSpec(family="gaussian", scale=sigma, sensitivity=sens)
            for alpha in _parse_float_list(args.l1_alphas):
                for r in rho_grid:
                    p = boost_params(k_fixed, window, float(r))
                    l1 = leakage_params(k_fixed, window, p.q).L1
                    l1_rows.append((float(r), l1, alpha, halfwidth, sens))
    l1_path = Path(out).with_name(Path(out).stem + "_l1.csv")
    write_csv(l1_path, ("rho", "l1", "alpha", "halfwidth", "sensitivity"), l1_rows)

    def draw_profiles(ax):
        half = len(eps_grid)
        ax.semilogy(eps_grid, _masked([r[2] for r in rows[:half]]), label="boosted")
        ax.semilogy(eps_grid, _masked([r[2] for r in rows[half:]]), label="hard-bounded")
        ax.set_xlabel("epsilon")
        ax.set_ylabel("delta")
        ax.legend()

    def draw_l1(ax):
        per_combo = len(rho_grid)
        for i in range(0, len(l1_rows), per_combo):
            block = l1_rows[i : i + per_combo]
            _, _, alpha, hw, sens = block[0]
            ax.plot(
                rho_grid,
                [b[1] for b in block],
                label=f"hw={hw:g} sens={sens:g} a={alpha:g}",
            )
        ax.set_xlabel("confidence")
        ax.set_ylabel("extra leakage L1")
        ax.legend(fontsize=7)

    _render_plot(_png_path(out), draw_profiles, s.no_plot)
    _render_plot(_png_path(l1_path), draw_l1, s.no_plot)

    boosted = np.array([r[2] for r in rows[: len(eps_grid)]])
    bounded = np.array([r[2] for r in rows[len(eps_grid) :]])
    gap = bounded - boosted
    best = int(np.argmax(gap))
    print(f"feasibility curves -> {out}; extra-leakage curves -> {l1_path}")
    print(
        f"largest delta gap below bounded baseline: {gap[best]:.6g} "
        f"at eps={eps_grid[best]:.4g}"
    )
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def run_bench(
    sizes,
    batch: int,
    iters: int,
    warmup: int,
    sigma: float,
    rho: float,
    family: str,
    sensitivity: float,
    seed: int,
) -> list[tuple[float, float, float, float]]:
    """Mean per-batch sampling time (ns) for the three samplers per size."""
    kernel = KernelSpec(family=family, scale=sigma, sensitivity=sensitivity)

    def timed(fn) -> float:
        for i in range(warmup):
            fn(i)
        start = time.perf_counter_ns()
        for i in range(iters):
            fn(i)
        return (time.perf_counter_ns() - start) / iters

    rows = []
    for size in sizes:
        region = RegionSpec(kind="absolute", tau=float(size) / 2.0)
        q = boost_params(kernel, region, rho).q
        kernel_ns = timed(
            lambda i: kernel_sample(
                kernel, 0.0, np.random.Generator(np.random.PCG64(seed + i)), batch
            )
        )
        reject_ns = timed(
            lambda i: pb_sample(kernel, region, q, 0.0, seed + i, batch, method="rejection")
        )
        inverse_ns = timed(
            lambda i: pb_sample(kernel, region, q, 0.0, seed + i, batch, method="inverse")
        )
        rows.append((float(size), kernel_ns, reject_ns, inverse_ns))
    return rows


def cmd_bench(args) -> int:
    """Wall-clock comparison of kernel, rejection and inverse samplers."""
    cfg = _load_cfg(args)
    s = _settings(args, cfg)
    sizes = _parse_float_list(args.sizes)
    rows = run_bench(
        sizes=sizes,
        batch=args.batch,
        iters=args.iters,
        warmup=args.warmup,
        sigma=float(_pick(args, cfg, "sigma", 25.0)),
        rho=float(_pick(args, cfg, "rho", 0.9)),
        family=str(_pick(args, cfg, "family", "gaussian", str)),
        sensitivity=float(_pick(args, cfg, "sensitivity", 1.0)),
        seed=s.seed,
    )
    out = s.out or DEFAULT_OUT["bench"]
    write_csv(out, ("S", "kernel_ns", "pb_reject_ns", "pb_inverse_ns"), rows)

    def draw(ax):
        ax.plot(sizes, [r[1] for r in rows], marker="o", label="kernel")
        ax.plot(sizes, [r[2] for r in rows], marker="s", label="boosted rejection")
        ax.plot(sizes, [r[3] for r in rows], marker="^", label="boosted inverse")
        ax.set_xlabel("region width")
        ax.set_ylabel("mean ns per batch")
        ax.legend()

    _render_plot(_png_path(out), draw, s.no_plot)
    print(f"bench over widths {sizes} -> {out}")
    return 0


# ---------------------------------------------------------------------------
# ldp
# ---------------------------------------------------------------------------


def cmd_ldp(args) -> int:
    """Randomized-response estimator MSE across the category budget."""
    cfg = _load_cfg(args)
    s = _settings(args, cfg)
    eps = float(_pick(args, cfg, "eps", 5.0))
    points = int(_pick(args, cfg, "points", 10, int))
    trials = int(_pick(args, cfg, "trials", 20, int))
    if args.data:
        values = np.asarray(load_adult_ages(args.data))
        source = args.data
    else:
        values = synthetic_ages(args.synthetic_n, s.seed)
        source = f"synthetic({args.synthetic_n})"
    grid = np.linspace(eps / points, eps, points)
    out = s.out or DEFAULT_OUT["ldp"]
    print(f"ldp sweep on {source}: eps={eps:g}, eps0 grid of {points} points")
    for size in _parse_int_list(args.sizes):
        rows = mse_sweep(
            values,
            region_size=size,
            eps=eps,
            eps0_grid=grid,
            trials=trials,
            seed=s.seed + size,
            domain_min=args.domain_min,
            domain_max=args.domain_max,
        )
        path = Path(out).with_name(Path(out).stem + f"_s{size}.csv")
        write_csv(path, ("eps0", "mse_category", "mse_value"), rows)
        cats = np.array([r[1] for r in rows])
        vals = np.array([r[2] for r in rows])
        combined = cats / cats.max() + vals / vals.max()
        print(
            f"size {size}: category-MSE argmin eps0={grid[int(np.argmin(cats))]:.4g}, "
            f"value-MSE argmin eps0={grid[int(np.argmin(vals))]:.4g}, "
            f"combined argmin eps0={grid[int(np.argmin(combined))]:.4g} -> {path}"
        )

        def draw(ax, cats=cats, vals=vals):
            ax.semilogy(grid, cats, marker="o", label="category MSE")
            ax.semilogy(grid, vals, marker="s", label="value MSE")
            ax.axvline(grid[int(np.argmin(cats))], ls="--", alpha=0.5)
            ax.axvline(grid[int(np.argmin(vals))], ls=":", alpha=0.5)
            ax.set_xlabel("category budget eps0")
            ax.set_ylabel("MSE")
            ax.legend()

        _render_plot(_png_path(path), draw, s.no_plot)
    return 0


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    """Draw outputs of the boosted mechanism, one value per line."""
    cfg = _load_cfg(args)
    s = _settings(args, cfg)
    kernel = _resolve_kernel(args, cfg)
    region = _resolve_region(args, cfg)
    rho = float(_pick(args, cfg, "rho", 0.9))
    case = resolve_case(region, kernel, rho)
    qx = args.qx if args.qx is not None else case.qx_star
    draws = pb_sample(kernel, region, case.q, qx, s.seed, args.n, method=args.method)
    text = "".join(format(v, ".17g") + "\n" for v in draws)
    if s.out:
        with open(s.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        logger.info("wrote %d samples to %s", args.n, s.out)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _utility_grid(kernel: KernelSpec, region: RegionSpec, n: int) -> np.ndarray:
    if region.kind == "fixed":
        return np.linspace(region.tau_l, region.tau_u, n)
    span = 4.0 * kernel.scale + 4.0 * region.tau + 4.0 * kernel.sensitivity
    return np.linspace(-span, span, n)


def cmd_verify(args) -> int:
    """Check utility, privacy, or the local-DP bound; exit 1 on failure."""
    cfg = _load_cfg(args)
    s = _settings(args, cfg)
    if args.check == "ldp":
        spec = grr_params(
            args.domain_size, args.region_size, args.ldp_eps, args.ldp_eps0, args.region_map
        )
        ratio = verify_ldp(spec)
        target = math.exp(spec.eps)
        gap = abs(ratio - target)
        ok = ratio <= target * (1.0 + 1e-9)
        if spec.region_map == "partition":
            ok = ok and gap <= 1e-9 * target
        print(f"ldp ratio {ratio:.12g} vs e^eps {target:.12g} (|gap| {gap:.3g})")
        print("PASS" if ok else "FAIL")
        return 0 if ok else 1

    kernel = _resolve_kernel(args, cfg)
    region = _resolve_region(args, cfg)
    rho = float(_pick(args, cfg, "rho", 0.9))
    case = resolve_case(region, kernel, rho)
    q = min(case.q * args.q_scale, 1.0 - 1e-12)
    if args.check == "utility":
        grid = _utility_grid(kernel, region, args.grid_points)
        report = verify_utility(kernel, region, q, grid, rho)
        print(
            f"utility: worst-case boosted mass {report.worst_mass:.9f} "
            f"(target {rho:g}, gap {report.worst_gap:.3g}), "
            f"{len(report.failures)} grid failures"
        )
        print("PASS" if report.ok else "FAIL")
        return 0 if report.ok else 1

    eps_values = _parse_float_list(args.eps_list)
    curve = mc_privacy_check(kernel, region, q, args.n, s.seed, eps_values)
    ok = True
    for eps, d_hat, se in zip(curve.eps, curve.delta_hat, curve.se):
        d_formula = pb_profile(kernel, region, q, eps)
        margin = abs(d_hat - d_formula)
        bound = 3.0 * se + 1e-12
        line_ok = margin <= bound
        ok = ok and line_ok
        print(
            f"eps={eps:g}: delta_mc={d_hat:.6g} delta_formula={d_formula:.6g} "
            f"|diff|={margin:.3g} allowed={bound:.3g} {'ok' if line_ok else 'FAIL'}"
        )
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common_parser(for_subparser: bool) -> argparse.ArgumentParser:
    """Shared global options.

    Subparsers re-declare them with SUPPRESS defaults so that values parsed
    by the top-level parser (flags placed before the subcommand) survive the
    subparser's namespace merge instead of being reset to the default.
    """
    d = argparse.SUPPRESS if for_subparser else None
    d_flag = argparse.SUPPRESS if for_subparser else False
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", default=d, help="key = value config file")
    g.add_argument("--seed", type=int, default=d, help="PRNG seed (default 1)")
    g.add_argument("--out", default=d, help="output path (default per command)")
    g.add_argument("--mode", choices=("dp", "rdp"), default=d, help="accounting mode")
    g.add_argument("--delta", type=float, default=d, help="approx-DP delta (default 1e-5)")
    g.add_argument("--alpha", type=float, default=d, help="Renyi order (default 2)")
    g.add_argument("--no-plot", action="store_true", default=d_flag, help="skip PNG figures")
    g.add_argument("-v", "--verbose", action="store_true", default=d_flag, help="debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser(for_subparser=True)
    parser = argparse.ArgumentParser(
        prog="pbdp",
        description="Privacy-boosted DP: planning, accounting, sampling, verification.",
        parents=[_common_parser(for_subparser=False)],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("plan", parents=[common], help="optimize the kernel/boost budget split")
    _add_region_args(p)
    p.add_argument("--family", choices=("gaussian", "laplace"), default=None)
    p.add_argument("--sensitivity", type=float, default=None)
    p.add_argument("--calibration", choices=("classical", "analytic"), default=None)
    p.add_argument("--rho", type=float, default=None, help="in-region confidence target")
    p.add_argument("--eps-max", type=float, default=None, dest="eps_max")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", parents=[common], help="epsilon vs region size or confidence")
    p.add_argument("--sweep", choices=("size", "rho"), default="size")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--size", type=float, default=None, help="fixed width for the rho sweep")
    p.add_argument("--size-min", type=float, default=10.0)
    p.add_argument("--size-max", type=float, default=50.0)
    p.add_argument("--rho-min", type=float, default=0.6)
    p.add_argument("--rho-max", type=float, default=0.995)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--family", choices=("gaussian", "laplace"), default=None)
    p.add_argument("--sensitivity", type=float, default=None)
    p.add_argument("--calibration", choices=("classical", "analytic"), default=None)
    p.add_argument("--eps-max", type=float, default=None, dest="eps_max")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compose", parents=[common], help="T-fold composition curves")
    p.add_argument("--t-list", default="1,10,100,1000", dest="t_list")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--size", type=float, default=None)
    p.add_argument("--sensitivity", type=float, default=None)
    p.add_argument("--family", choices=("gaussian", "laplace"), default=None)
    p.add_argument("--calibration", choices=("classical", "analytic"), default=None)
    p.add_argument("--alphas", default="2,20", help="Renyi orders for companion files")
    p.add_argument("--eps-max", type=float, default=None, dest="eps_max")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--reoptimize", action="store_true", help="re-split the budget per T")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser(
        "feasibility", parents=[common], help="boosted vs hard-bounded profiles; leakage vs rho"
    )
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--tau", type=float, default=None, help="absolute region half-width")
    p.add_argument("--sensitivity", type=float, default=None)
    p.add_argument("--eps0", type=float, default=None, help="kernel calibration budget")
    p.add_argument("--family", choices=("gaussian", "laplace"), default=None)
    p.add_argument("--calibration", choices=("classical", "analytic"), default=None)
    p.add_argument("--eps-min", type=float, default=0.0)
    p.add_argument("--eps-max-grid", type=float, default=3.0)
    p.add_argument("--points", type=int, default=31)
    p.add_argument("--sigma", type=float, default=None, help="fixed scale for the L1 curves")
    p.add_argument("--rho-min", type=float, default=0.7)
    p.add_argument("--rho-max", type=float, default=0.995)
    p.add_argument("--rho-points", type=int, default=25)
    p.add_argument("--l1-halfwidths", default="10,50")
    p.add_argument("--l1-sensitivities", default="1,30")
    p.add_argument("--l1-alphas", default="2,10")
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("bench", parents=[common], help="sampler wall-clock comparison")
    p.add_argument("--sizes", default="10,20,30,40,50")
    p.add_argument("--batch", type=int, default=10_000)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--family", choices=("gaussian", "laplace"), default=None)
    p.add_argument("--sensitivity", type=float, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ldp", parents=[common], help="randomized-response MSE sweep")
    p.add_argument("--data", default=None, help="ages CSV (headerless UCI layout or age column)")
    p.add_argument("--synthetic-n", type=int, default=45_222)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--sizes", default="10,5")
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--domain-min", type=int, default=10)
    p.add_argument("--domain-max", type=int, default=100)
    p.set_defaults(func=cmd_ldp)

    p = sub.add_parser("sample", parents=[common], help="draw boosted-mechanism outputs")
    _add_region_args(p)
    _add_kernel_args(p)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--qx", type=float, default=None, help="true answer (default worst case)")
    p.add_argument("--method", choices=("inverse", "rejection"), default="inverse")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", parents=[common], help="utility / privacy / ldp checks")
    p.add_argument("--check", choices=("utility", "privacy", "ldp"), required=True)
    _add_region_args(p)
    _add_kernel_args(p)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--q-scale", type=float, default=1.0, help="tamper hook: scales q")
    p.add_argument("--grid-points", type=int, default=50)
    p.add_argument("--n", type=int, default=200_000, help="Monte-Carlo draws (privacy check)")
    p.add_argument("--eps-list", default="0,0.5,1,1.5,2", dest="eps_list")
    p.add_argument("--domain-size", type=int, default=90)
    p.add_argument("--region-size", type=int, default=10)
    p.add_argument("--ldp-eps", type=float, default=5.0)
    p.add_argument("--ldp-eps0", type=float, default=2.5)
    p.add_argument("--region-map", choices=("partition", "sliding"), default="partition")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
