"""Batch experiment front-end.

``run`` executes a whole config-driven pipeline (phantom, projection,
optional noise, reconstruction, metrics, export); ``compare`` runs
several configs against the same phantom and geometry and tabulates the
metrics; the remaining subcommands expose single pipeline stages as
file-to-file transforms.

Exit codes: 0 success, 2 config parse error (malformed JSON, unknown or
missing keys, wrong types), 3 validation error (values violating module
invariants), 4 I/O error, 5 numeric failure (non-finite iterates).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dcar import (
    DcarConfig,
    LineSearchConfig,
    NumericalError,
    dcar_reconstruct,
    sart_wtv_baseline,
)
from .fbp import fbp_reconstruct
from .geometry import FanBeamGeometry, make_short_scan_geometry, partition_angles
from .grid import (
    DEFAULT_GRID,
    DEFAULT_PNG_WINDOW_HU,
    GridSpec,
    HuScale,
    ImageGrid,
    export_png,
    load_image,
    save_image,
)
from .metrics import residual_stats, rmse_hu
from .prior import CorruptionSpec, PriorContext, PriorSource, resolve_prior
from .projector import Sinogram, forward_project, load_sinogram, save_sinogram
from .simulate import EllipseSpec, NoiseModel, add_poisson_noise, random_abdomen_phantom, render_phantom

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
EXIT_NUMERIC = 5

METHODS = ("fbp", "sart-wtv", "dcar")


class ConfigError(Exception):
    """Structural config problem: unknown/missing keys or wrong types."""


# ---------------------------------------------------------------------------
# Strict config parsing
# ---------------------------------------------------------------------------

def _check_keys(block: dict, allowed: dict[str, bool], where: str) -> None:
    """allowed maps key -> required; anything else is an error."""
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")
    missing = [k for k, required in allowed.items() if required and k not in block]
    if missing:
        raise ConfigError(f"missing key(s) {missing} in {where}")


def _num(block: dict, key: str, where: str, default=None):
    if key not in block:
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    return float(v)


def _int(block: dict, key: str, where: str, default=None):
    if key not in block:
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {v!r}")
    return int(v)


def _bool(block: dict, key: str, where: str, default=None):
    if key not in block:
        return default
    v = block[key]
    if not isinstance(v, bool):
        raise ConfigError(f"{where}.{key} must be a boolean, got {v!r}")
    return v


def _str(block: dict, key: str, where: str, default=None):
    if key not in block:
        return default
    v = block[key]
    if not isinstance(v, str):
        raise ConfigError(f"{where}.{key} must be a string, got {v!r}")
    return v


def _pair(block: dict, key: str, where: str) -> tuple[float, float]:
    v = block.get(key)
    if (
        not isinstance(v, (list, tuple))
        or len(v) != 2
        or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)
    ):
        raise ConfigError(f"{where}.{key} must be a pair of numbers, got {v!r}")
    return float(v[0]), float(v[1])


def _parse_geometry(block: dict) -> FanBeamGeometry:
    _check_keys(
        block,
        {
            "sid_mm": True,
            "sdd_mm": True,
            "nBins": True,
            "binSize_mm": True,
            "startDeg": True,
            "endDeg": True,
            "stepDeg": True,
        },
        "geometry",
    )
    return make_short_scan_geometry(
        sid=_num(block, "sid_mm", "geometry"),
        sdd=_num(block, "sdd_mm", "geometry"),
        n_bins=_int(block, "nBins", "geometry"),
        bin_size=_num(block, "binSize_mm", "geometry"),
        start_deg=_num(block, "startDeg", "geometry"),
        end_deg=_num(block, "endDeg", "geometry"),
        step_deg=_num(block, "stepDeg", "geometry"),
    )


def _parse_grid(block: dict) -> GridSpec:
    _check_keys(block, {"nx": True, "ny": True, "dx_mm": True, "dy_mm": True}, "grid")
    return GridSpec(
        nx=_int(block, "nx", "grid"),
        ny=_int(block, "ny", "grid"),
        dx=_num(block, "dx_mm", "grid"),
        dy=_num(block, "dy_mm", "grid"),
    )


def _parse_hu_scale(block: dict | None) -> HuScale:
    if block is None:
        return HuScale()
    _check_keys(block, {"muWater": True}, "huScale")
    return HuScale(mu_water=_num(block, "muWater", "huScale"))


def _parse_ellipse(entry: dict, where: str) -> EllipseSpec:
    _check_keys(
        entry,
        {"center_mm": True, "semiAxes_mm": True, "rotationDeg": True, "delta": True},
        where,
    )
    return EllipseSpec(
        center=_pair(entry, "center_mm", where),
        semi_axes=_pair(entry, "semiAxes_mm", where),
        rotation_deg=_num(entry, "rotationDeg", where),
        delta=_num(entry, "delta", where),
    )


def _parse_phantom(block: dict, grid: GridSpec, base_dir: Path) -> ImageGrid:
    _check_keys(
        block, {"kind": True, "seed": False, "specs": False, "path": False}, "phantom"
    )
    kind = _str(block, "kind", "phantom")
    if kind == "seed":
        seed = _int(block, "seed", "phantom")
        if seed is None:
            raise ConfigError("phantom.seed is required for kind=seed")
        return random_abdomen_phantom(seed, grid)
    if kind == "ellipses":
        specs = block.get("specs")
        if not isinstance(specs, list) or not specs:
            raise ConfigError("phantom.specs must be a non-empty list")
        ellipses = [
            _parse_ellipse(e, f"phantom.specs[{i}]") for i, e in enumerate(specs)
        ]
        return render_phantom(ellipses, grid)
    if kind == "file":
        path = _str(block, "path", "phantom")
        if not path:
            raise ConfigError("phantom.path is required for kind=file")
        img = load_image(base_dir / path)
        if img.spec != grid:
            raise ValueError(f"phantom file grid {img.spec} does not match config grid {grid}")
        return img
    raise ConfigError(f"phantom.kind must be one of seed|ellipses|file, got {kind!r}")


def _parse_measured(block: dict) -> tuple[float, float]:
    _check_keys(block, {"startDeg": True, "endDeg": True}, "measured")
    return _num(block, "startDeg", "measured"), _num(block, "endDeg", "measured")


def _parse_noise(block: dict | None) -> NoiseModel | None:
    if block is None:
        return None
    _check_keys(block, {"enabled": True, "i0": False, "seed": False}, "noise")
    if not _bool(block, "enabled", "noise"):
        return None
    i0 = _num(block, "i0", "noise", default=1e5)
    seed = _int(block, "seed", "noise", default=0)
    return NoiseModel(i0=i0, seed=seed)


def _parse_prior(block: dict | None, base_dir: Path) -> PriorSource:
    if block is None:
        raise ConfigError("method=dcar requires a prior block")
    _check_keys(block, {"kind": True, "path": False, "corruptions": False}, "prior")
    kind = _str(block, "kind", "prior")
    path = _str(block, "path", "prior")
    corruptions: list[CorruptionSpec] = []
    for i, entry in enumerate(block.get("corruptions", [])):
        where = f"prior.corruptions[{i}]"
        _check_keys(
            entry,
            {"center_mm": True, "semiAxes_mm": True, "rotationDeg": True, "deltaHu": True},
            where,
        )
        corruptions.append(
            CorruptionSpec(
                center=_pair(entry, "center_mm", where),
                semi_axes=_pair(entry, "semiAxes_mm", where),
                rotation_deg=_num(entry, "rotationDeg", where),
                delta_hu=_num(entry, "deltaHu", where),
            )
        )
    return PriorSource(
        kind=kind,
        path=str(base_dir / path) if path else None,
        corruptions=tuple(corruptions),
    )


def _parse_line_search(block: dict | None) -> LineSearchConfig:
    if block is None:
        return LineSearchConfig()
    _check_keys(
        block,
        {"initialStep": False, "shrink": False, "sufficientDecrease": False, "maxBacktracks": False},
        "solver.lineSearch",
    )
    defaults = LineSearchConfig()
    return LineSearchConfig(
        initial_step=_num(block, "initialStep", "solver.lineSearch", defaults.initial_step),
        shrink=_num(block, "shrink", "solver.lineSearch", defaults.shrink),
        sufficient_decrease=_num(
            block, "sufficientDecrease", "solver.lineSearch", defaults.sufficient_decrease
        ),
        max_backtracks=_int(block, "maxBacktracks", "solver.lineSearch", defaults.max_backtracks),
    )


def _parse_solver(block: dict | None, method: str) -> DcarConfig:
    default_outer = 100 if method == "sart-wtv" else 50
    if block is None:
        return DcarConfig(outer_iterations=default_outer)
    _check_keys(
        block,
        {
            "e1": False,
            "e2": False,
            "lambda": False,
            "epsilonHu": False,
            "outerIterations": False,
            "tvStepsPerOuter": False,
            "lineSearch": False,
            "enforceNonnegativity": False,
        },
        "solver",
    )
    defaults = DcarConfig()
    return DcarConfig(
        e1=_num(block, "e1", "solver", defaults.e1),
        e2=_num(block, "e2", "solver", defaults.e2),
        relaxation=_num(block, "lambda", "solver", defaults.relaxation),
        epsilon_hu=_num(block, "epsilonHu", "solver", defaults.epsilon_hu),
        outer_iterations=_int(block, "outerIterations", "solver", default_outer),
        tv_steps_per_outer=_int(block, "tvStepsPerOuter", "solver", defaults.tv_steps_per_outer),
        line_search=_parse_line_search(block.get("lineSearch")),
        enforce_nonnegativity=_bool(
            block, "enforceNonnegativity", "solver", defaults.enforce_nonnegativity
        ),
    )


_TOP_KEYS = {
    "geometry": True,
    "grid": True,
    "phantom": True,
    "measured": True,
    "method": True,
    "output": True,
    "noise": False,
    "prior": False,
    "solver": False,
    "huScale": False,
}


def _load_config(path: Path) -> dict:
    text = path.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    _check_keys(cfg, _TOP_KEYS, "config")
    method = _str(cfg, "method", "config")
    if method not in METHODS:
        raise ConfigError(f"config.method must be one of {METHODS}, got {method!r}")
    if not isinstance(cfg.get("output"), str):
        raise ConfigError("config.output must be a string path")
    return cfg


def _solver_echo(cfg: DcarConfig) -> dict:
    return {
        "e1": cfg.e1,
        "e2": cfg.e2,
        "lambda": cfg.relaxation,
        "epsilonHu": cfg.epsilon_hu,
        "outerIterations": cfg.outer_iterations,
        "tvStepsPerOuter": cfg.tv_steps_per_outer,
        "lineSearch": {
            "initialStep": cfg.line_search.initial_step,
            "shrink": cfg.line_search.shrink,
            "sufficientDecrease": cfg.line_search.sufficient_decrease,
            "maxBacktracks": cfg.line_search.max_backtracks,
        },
        "enforceNonnegativity": cfg.enforce_nonnegativity,
    }


def run_experiment(cfg: dict, base_dir: Path) -> dict:
    """Execute one parsed config; returns the summary record."""
    geometry = _parse_geometry(cfg["geometry"])
    grid = _parse_grid(cfg["grid"])
    scale = _parse_hu_scale(cfg.get("huScale"))
    meas_lo, meas_hi = _parse_measured(cfg["measured"])
    partition = partition_angles(geometry, meas_lo, meas_hi)
    method = cfg["method"]
    solver_cfg = _parse_solver(cfg.get("solver"), method)
    noise = _parse_noise(cfg.get("noise"))
    out_dir = base_dir / cfg["output"]
    out_dir.mkdir(parents=True, exist_ok=True)

    artifacts: list[str] = []

    def _save_img(img: ImageGrid, name: str, png: bool = True) -> None:
        save_image(img, out_dir / name)
        artifacts.extend([name, name + ".json"])
        if png:
            png_name = name.rsplit(".", 1)[0] + ".png"
            export_png(img, out_dir / png_name, scale=scale)
            artifacts.append(png_name)

    truth = _parse_phantom(cfg["phantom"], grid, base_dir)
    measured = forward_project(truth, geometry, partition.measured)
    _save_img(truth, "truth.raw")
    save_sinogram(measured, out_dir / "measured.raw")
    artifacts.extend(["measured.raw", "measured.raw.json"])
    if noise is not None:
        measured = add_poisson_noise(measured, noise)
        save_sinogram(measured, out_dir / "measured_noisy.raw")
        artifacts.extend(["measured_noisy.raw", "measured_noisy.raw.json"])

    report = None
    prior_img = None
    if method == "fbp":
        recon = fbp_reconstruct(measured, geometry, partition.measured, grid)
    elif method == "sart-wtv":
        recon, report = sart_wtv_baseline(
            measured, geometry, partition, solver_cfg, grid=grid, reference=truth, hu_scale=scale
        )
    else:
        source = _parse_prior(cfg.get("prior"), base_dir)
        context = PriorContext(
            measured_sino=measured,
            geometry=geometry,
            measured_indices=partition.measured,
            grid=grid,
            ground_truth=truth,
            hu_scale=scale,
        )
        prior_img = resolve_prior(source, context)
        _save_img(prior_img, "prior.raw")
        recon, report = dcar_reconstruct(
            measured, prior_img, geometry, partition, solver_cfg, reference=truth, hu_scale=scale
        )

    _save_img(recon, "recon.raw")
    if report is not None:
        (out_dir / "report.csv").write_text(report.to_csv())
        artifacts.append("report.csv")

    stats = residual_stats(recon, measured, geometry, partition.measured, threshold=solver_cfg.e1)
    summary = {
        "method": method,
        "metrics": {
            "rmse_hu": rmse_hu(recon, truth, scale),
            "residual_rms": stats.rms,
            "residual_max_abs": stats.max_abs,
            "residual_frac_above_e1": stats.frac_above,
        },
        "solver": _solver_echo(solver_cfg),
        "nAnglesMeasured": int(partition.measured.size),
        "nAnglesUnmeasured": int(partition.unmeasured.size),
        "artifacts": sorted(artifacts + ["summary.json"]),
        "config": cfg,
    }
    if prior_img is not None:
        summary["metrics"]["prior_rmse_hu"] = rmse_hu(prior_img, truth, scale)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _cmd_run(args) -> int:
    path = Path(args.config)
    cfg = _load_config(path)
    summary = run_experiment(cfg, path.parent)
    m = summary["metrics"]
    print(
        f"{summary['method']}: rmse_hu={m['rmse_hu']:.3f} residual_rms={m['residual_rms']:.6g} "
        f"frac_above_e1={m['residual_frac_above_e1']:.4f}"
    )
    return EXIT_OK


def _cmd_compare(args) -> int:
    if not args.configs:
        raise ValueError("compare needs at least one config")
    parsed = []
    for c in args.configs:
        path = Path(c)
        parsed.append((path, _load_config(path)))
    first = parsed[0][1]
    for path, cfg in parsed[1:]:
        if cfg["phantom"] != first["phantom"]:
            raise ValueError(f"config {path} has a different phantom block")
        if cfg["geometry"] != first["geometry"]:
            raise ValueError(f"config {path} has a different geometry block")
    rows = []
    for path, cfg in parsed:
        summary = run_experiment(cfg, path.parent)
        m = summary["metrics"]
        rows.append(
            {
                "method": summary["method"],
                "rmse_hu": m["rmse_hu"],
                "residual_rms": m["residual_rms"],
                "residual_max_abs": m["residual_max_abs"],
                "residual_frac_above_e1": m["residual_frac_above_e1"],
            }
        )
    header = ["method", "rmse_hu", "residual_rms", "residual_max_abs", "residual_frac_above_e1"]
    lines = [",".join(header)]
    for r in rows:
        lines.append(
            f"{r['method']},{r['rmse_hu']:.9g},{r['residual_rms']:.9g},"
            f"{r['residual_max_abs']:.9g},{r['residual_frac_above_e1']:.9g}"
        )
    table = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(table)
    print(table, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Stage subcommands
# ---------------------------------------------------------------------------

def _add_grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nx", type=int, default=DEFAULT_GRID.nx)
    p.add_argument("--ny", type=int, default=DEFAULT_GRID.ny)
    p.add_argument("--dx", type=float, default=DEFAULT_GRID.dx, help="pixel size x, mm")
    p.add_argument("--dy", type=float, default=DEFAULT_GRID.dy, help="pixel size y, mm")


def _add_geometry_args(p: argparse.ArgumentParser, with_arc: bool = True) -> None:
    p.add_argument("--sid", type=float, default=600.0, help="source-isocenter distance, mm")
    p.add_argument("--sdd", type=float, default=1200.0, help="source-detector distance, mm")
    if with_arc:
        p.add_argument("--nbins", type=int, default=310)
        p.add_argument("--bin-size", type=float, default=2.0, help="detector bin size, mm")
        p.add_argument("--start", type=float, default=0.0, help="first angle, deg")
        p.add_argument("--end", type=float, default=210.0, help="last angle, deg")
        p.add_argument("--step", type=float, default=1.0, help="angular step, deg")


def _grid_from_args(args) -> GridSpec:
    return GridSpec(nx=args.nx, ny=args.ny, dx=args.dx, dy=args.dy)


def _geometry_from_args(args) -> FanBeamGeometry:
    return make_short_scan_geometry(
        sid=args.sid,
        sdd=args.sdd,
        n_bins=args.nbins,
        bin_size=args.bin_size,
        start_deg=args.start,
        end_deg=args.end,
        step_deg=args.step,
    )


def _cmd_phantom(args) -> int:
    grid = _grid_from_args(args)
    if args.specs:
        try:
            entries = json.loads(Path(args.specs).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{args.specs} is not valid JSON: {e}") from e
        if not isinstance(entries, list) or not entries:
            raise ConfigError(f"{args.specs} must hold a non-empty JSON list")
        specs = [_parse_ellipse(e, f"specs[{i}]") for i, e in enumerate(entries)]
        img = render_phantom(specs, grid)
    else:
        img = random_abdomen_phantom(args.seed, grid)
    save_image(img, args.out)
    if args.png:
        export_png(img, args.png)
    return EXIT_OK


def _cmd_project(args) -> int:
    geometry = _geometry_from_args(args)
    img = load_image(args.image)
    if args.measured_start is not None or args.measured_end is not None:
        if args.measured_start is None or args.measured_end is None:
            raise ValueError("--measured-start and --measured-end must be given together")
        idx = partition_angles(geometry, args.measured_start, args.measured_end).measured
    else:
        idx = None
    sino = forward_project(img, geometry, idx)
    save_sinogram(sino, args.out)
    return EXIT_OK


def _cmd_noise(args) -> int:
    sino = load_sinogram(args.sino)
    noisy = add_poisson_noise(sino, NoiseModel(i0=args.i0, seed=args.seed))
    save_sinogram(noisy, args.out)
    return EXIT_OK


def _geometry_from_sinogram(sino: Sinogram, sid: float, sdd: float) -> FanBeamGeometry:
    return FanBeamGeometry(
        sid=sid,
        sdd=sdd,
        n_bins=sino.n_bins,
        bin_size=sino.bin_size,
        angles_deg=sino.angles_deg,
    )


def _cmd_fbp(args) -> int:
    sino = load_sinogram(args.sino)
    geometry = _geometry_from_sinogram(sino, args.sid, args.sdd)
    recon = fbp_reconstruct(sino, geometry, None, _grid_from_args(args))
    save_image(recon, args.out)
    if args.png:
        export_png(recon, args.png)
    return EXIT_OK


def _cmd_dcar(args) -> int:
    sino = load_sinogram(args.sino)
    prior = load_image(args.prior)
    geometry = _geometry_from_args(args)
    partition = partition_angles(geometry, args.measured_start, args.measured_end)
    if sino.n_angles != partition.measured.size or not np.allclose(
        sino.angles_deg, partition.measured_deg
    ):
        raise ValueError("sinogram angles do not match the measured range")
    config = DcarConfig(
        e1=args.e1,
        e2=args.e2,
        relaxation=getattr(args, "lambda"),
        epsilon_hu=args.epsilon_hu,
        outer_iterations=args.iterations,
        tv_steps_per_outer=args.tv_steps,
    )
    recon, report = dcar_reconstruct(sino, prior, geometry, partition, config)
    save_image(recon, args.out)
    if args.png:
        export_png(recon, args.png)
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(report.to_csv())
    return EXIT_OK


def _cmd_metrics(args) -> int:
    image = load_image(args.image)
    reference = load_image(args.reference)
    value = rmse_hu(image, reference, HuScale(mu_water=args.mu_water))
    print(f"rmse_hu={value:.6f}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps({"rmse_hu": value}, indent=2) + "\n")
    return EXIT_OK


def _cmd_export_png(args) -> int:
    image = load_image(args.image)
    export_png(image, args.out, window_hu=(args.window[0], args.window[1]))
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcarct", description="limited-angle CT reconstruction experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute one experiment config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="run several configs and tabulate metrics")
    p.add_argument("configs", nargs="*")
    p.add_argument("--out", help="write the combined CSV table here")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("phantom", help="write a synthetic phantom image")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--specs", help="JSON file with an ellipse list")
    p.add_argument("--png")
    _add_grid_args(p)
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("project", help="forward project an image")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--measured-start", type=float)
    p.add_argument("--measured-end", type=float)
    _add_geometry_args(p)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("noise", help="apply photon-counting noise to a sinogram")
    p.add_argument("--sino", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--i0", type=float, default=1e5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("fbp", help="filtered backprojection of a sinogram")
    p.add_argument("--sino", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--png")
    _add_geometry_args(p, with_arc=False)
    _add_grid_args(p)
    p.set_defaults(func=_cmd_fbp)

    p = sub.add_parser("dcar", help="solve from a measured sinogram and a prior image")
    p.add_argument("--sino", required=True, help="measured-range sinogram")
    p.add_argument("--prior", required=True, help="prior image (raw + sidecar)")
    p.add_argument("--out", required=True)
    p.add_argument("--png")
    p.add_argument("--report", help="write the per-iteration CSV here")
    p.add_argument("--measured-start", type=float, required=True)
    p.add_argument("--measured-end", type=float, required=True)
    p.add_argument("--e1", type=float, default=0.001)
    p.add_argument("--e2", type=float, default=0.5)
    p.add_argument("--lambda", type=float, default=0.8)
    p.add_argument("--epsilon-hu", type=float, default=5.0)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--tv-steps", type=int, default=5)
    _add_geometry_args(p)
    p.set_defaults(func=_cmd_dcar)

    p = sub.add_parser("metrics", help="RMSE between two images, in HU")
    p.add_argument("--image", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--mu-water", type=float, default=0.02)
    p.add_argument("--out", help="optional JSON output")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("export-png", help="16-bit grayscale PNG with an HU window")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=float, nargs=2, default=list(DEFAULT_PNG_WINDOW_HU), metavar=("LO", "HI"))
    p.set_defaults(func=_cmd_export_png)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
