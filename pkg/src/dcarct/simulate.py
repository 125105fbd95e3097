"""Synthetic phantoms and the projection-domain Poisson noise model.

Phantoms are sums of rotated ellipses evaluated at pixel centers. Noise
draws are counter-based: one hash per (seed, angle row, bin) feeds an
inverse-CDF Poisson draw, so results are bit-reproducible and independent
of traversal order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .grid import DEFAULT_GRID, DEFAULT_HU_SCALE, GridSpec, ImageGrid
from .projector import Sinogram


@dataclass(frozen=True)
class EllipseSpec:
    """One additive ellipse: attenuation delta inside, zero outside."""

    center: tuple[float, float]      # mm
    semi_axes: tuple[float, float]   # mm
    rotation_deg: float
    delta: float                     # mm^-1, additive

    def __post_init__(self):
        if self.semi_axes[0] <= 0 or self.semi_axes[1] <= 0:
            raise ValueError(f"semi-axes must be positive, got {self.semi_axes}")


@dataclass(frozen=True)
class NoiseModel:
    """Photon-counting noise: i0 photons per bin before attenuation."""

    i0: float
    seed: int

    def __post_init__(self):
        if self.i0 <= 0:
            raise ValueError(f"i0 must be positive, got {self.i0}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")


def render_phantom(specs: list[EllipseSpec], grid: GridSpec) -> ImageGrid:
    """Pixel value = sum of deltas of all ellipses containing the pixel center."""
    xs = grid.pixel_centers_x()[None, :]
    ys = grid.pixel_centers_y()[:, None]
    values = np.zeros((grid.ny, grid.nx))
    for e in specs:
        th = np.deg2rad(e.rotation_deg)
        c, s = np.cos(th), np.sin(th)
        px = xs - e.center[0]
        py = ys - e.center[1]
        xr = px * c + py * s
        yr = -px * s + py * c
        inside = (xr / e.semi_axes[0]) ** 2 + (yr / e.semi_axes[1]) ** 2 <= 1.0
        values += np.where(inside, e.delta, 0.0)
    return ImageGrid(grid, values)


def shepp_logan_specs(half_extent_mm: float = 150.0, delta_scale: float = 0.01) -> list[EllipseSpec]:
    """Classic head phantom ellipse table, scaled to physical size.

    The published intensities (2.0 skull, -0.98 interior, ...) are
    multiplied by ``delta_scale`` so the interior lands near soft tissue
    when delta_scale = 0.01 mm^-1.
    """
    table = [
        ((0.0, 0.0), (0.69, 0.92), 0.0, 2.0),
        ((0.0, -0.0184), (0.6624, 0.874), 0.0, -0.98),
        ((0.22, 0.0), (0.11, 0.31), -18.0, -0.02),
        ((-0.22, 0.0), (0.16, 0.41), 18.0, -0.02),
        ((0.0, 0.35), (0.21, 0.25), 0.0, 0.01),
        ((0.0, 0.1), (0.046, 0.046), 0.0, 0.01),
        ((0.0, -0.1), (0.046, 0.046), 0.0, 0.01),
        ((-0.08, -0.605), (0.046, 0.023), 0.0, 0.01),
        ((0.0, -0.605), (0.023, 0.023), 0.0, 0.01),
        ((0.06, -0.605), (0.023, 0.046), 0.0, 0.01),
    ]
    r = half_extent_mm
    return [
        EllipseSpec((cx * r, cy * r), (a * r, b * r), rot, g * delta_scale)
        for (cx, cy), (a, b), rot, g in table
    ]


# bounds of the random abdomen generator, mm^-1
_ABDOMEN_DELTA_LO = -0.004
_ABDOMEN_DELTA_HI = 0.02
_ABDOMEN_MU_MAX = 0.06


def random_abdomen_phantom(seed: int, grid: GridSpec = DEFAULT_GRID) -> ImageGrid:
    """Water-equivalent body ellipse with 5 to 15 internal soft-tissue
    ellipses; deterministic in the seed, values clamped to [0, 0.06] mm^-1.
    """
    rng = np.random.default_rng(seed)
    half_w, half_h = grid.width_mm / 2.0, grid.height_mm / 2.0
    body_a = half_w * rng.uniform(0.72, 0.85)
    body_b = half_h * rng.uniform(0.55, 0.70)
    body_rot = rng.uniform(-10.0, 10.0)
    body_c = (rng.uniform(-0.03, 0.03) * half_w, rng.uniform(-0.03, 0.03) * half_h)
    specs = [EllipseSpec(body_c, (body_a, body_b), body_rot, DEFAULT_HU_SCALE.mu_water)]
    for _ in range(int(rng.integers(5, 16))):
        phi = rng.uniform(0.0, 2.0 * np.pi)
        rad = 0.7 * np.sqrt(rng.uniform(0.0, 1.0))
        center = (body_c[0] + rad * body_a * np.cos(phi), body_c[1] + rad * body_b * np.sin(phi))
        axes = (rng.uniform(4.0, 0.3 * body_a), rng.uniform(4.0, 0.3 * body_b))
        specs.append(EllipseSpec(center, axes, rng.uniform(0.0, 180.0), rng.uniform(_ABDOMEN_DELTA_LO, _ABDOMEN_DELTA_HI)))
    img = render_phantom(specs, grid)
    return ImageGrid(grid, np.clip(img.values, 0.0, _ABDOMEN_MU_MAX))


# ---------------------------------------------------------------------------
# Poisson noise
# ---------------------------------------------------------------------------

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MIX2 = np.uint64(0x94D049BB133111EB)


def _counter_uniform(seed: int, counters: np.ndarray) -> np.ndarray:
    """splitmix64 stream element ``counters`` of stream ``seed``, mapped
    to a double in the open interval (0, 1)."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed % 2**64) + (counters.astype(np.uint64) + np.uint64(1)) * _SM_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _SM_MIX1
        z = (z ^ (z >> np.uint64(27))) * _SM_MIX2
        z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52


def add_poisson_noise(sino: Sinogram, model: NoiseModel) -> Sinogram:
    """Expose each ray, draw a photon count, and re-take the log.

    Per ray: N ~ Poisson(i0 * exp(-p)); output p' = -ln(max(N, 1) / i0).
    The count is clamped to at least one photon so the log stays finite.
    Each ray's draw depends only on (seed, row, bin).
    """
    if np.any(sino.values < 0):
        raise ValueError("noise model requires nonnegative line integrals")
    counters = np.arange(sino.n_angles * sino.n_bins).reshape(sino.values.shape)
    u = _counter_uniform(model.seed, counters)
    lam = model.i0 * np.exp(-sino.values)
    counts = stats.poisson.ppf(u, lam)
    noisy = -np.log(np.maximum(counts, 1.0) / model.i0)
    return Sinogram(noisy, sino.angles_deg.copy(), sino.bin_size)
