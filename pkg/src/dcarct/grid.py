"""2-D image container with physical spacing, HU conversion, and file I/O.

Images are stored as attenuation coefficients (mm^-1) on a regular pixel
grid. Pixel (0, 0) sits at the image corner and the isocenter coincides
with the geometric center of the grid, so pixel (ix, iy) has physical
center coordinates

    x = (ix - (nx - 1) / 2) * dx,    y = (iy - (ny - 1) / 2) * dy.

Hounsfield units appear only at the metrics/export boundary.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MU_UNIT = "mm^-1"
HU_UNIT = "HU"

DEFAULT_PNG_WINDOW_HU = (-1000.0, 1000.0)


@dataclass(frozen=True)
class HuScale:
    """Linear attenuation of water, used for the HU <-> mu mapping."""

    mu_water: float = 0.02  # mm^-1

    def __post_init__(self):
        if not (self.mu_water > 0):
            raise ValueError(f"mu_water must be positive, got {self.mu_water}")


@dataclass(frozen=True)
class GridSpec:
    """Shape and spacing of a pixel grid, without pixel data."""

    nx: int
    ny: int
    dx: float  # mm
    dy: float  # mm

    def __post_init__(self):
        if self.nx <= 0 or self.ny <= 0:
            raise ValueError(f"pixel counts must be positive, got nx={self.nx}, ny={self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError(f"pixel spacing must be positive, got dx={self.dx}, dy={self.dy}")

    @property
    def width_mm(self) -> float:
        return self.nx * self.dx

    @property
    def height_mm(self) -> float:
        return self.ny * self.dy

    def pixel_centers_x(self) -> np.ndarray:
        return (np.arange(self.nx) - (self.nx - 1) / 2.0) * self.dx

    def pixel_centers_y(self) -> np.ndarray:
        return (np.arange(self.ny) - (self.ny - 1) / 2.0) * self.dy


@dataclass
class ImageGrid:
    """2-D image with physical spacing; values are row-major (ny, nx)."""

    spec: GridSpec
    values: np.ndarray
    unit: str = MU_UNIT

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.spec.ny, self.spec.nx):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"(ny={self.spec.ny}, nx={self.spec.nx})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("image values must be finite")
        if self.unit not in (MU_UNIT, HU_UNIT):
            raise ValueError(f"unknown image unit {self.unit!r}")

    @property
    def nx(self) -> int:
        return self.spec.nx

    @property
    def ny(self) -> int:
        return self.spec.ny

    @property
    def dx(self) -> float:
        return self.spec.dx

    @property
    def dy(self) -> float:
        return self.spec.dy

    def copy(self) -> "ImageGrid":
        return ImageGrid(self.spec, self.values.copy(), self.unit)

    def with_values(self, values: np.ndarray, unit: str | None = None) -> "ImageGrid":
        return ImageGrid(self.spec, values, self.unit if unit is None else unit)


def zeros_image(spec: GridSpec, unit: str = MU_UNIT) -> ImageGrid:
    return ImageGrid(spec, np.zeros((spec.ny, spec.nx)), unit)


def mu_to_hu(image: ImageGrid, scale: HuScale = HuScale()) -> ImageGrid:
    """Convert attenuation (mm^-1) to Hounsfield units.

    HU = 1000 * (mu - mu_water) / mu_water; shape and spacing preserved.
    """
    if image.unit != MU_UNIT:
        raise ValueError(f"expected image in {MU_UNIT}, got {image.unit}")
    hu = 1000.0 * (image.values - scale.mu_water) / scale.mu_water
    return ImageGrid(image.spec, hu, HU_UNIT)


def hu_to_mu(image: ImageGrid, scale: HuScale = HuScale()) -> ImageGrid:
    """Exact inverse of :func:`mu_to_hu`."""
    if image.unit != HU_UNIT:
        raise ValueError(f"expected image in {HU_UNIT}, got {image.unit}")
    mu = scale.mu_water * (1.0 + image.values / 1000.0)
    return ImageGrid(image.spec, mu, MU_UNIT)


def hu_delta_to_mu(delta_hu: float, scale: HuScale = HuScale()) -> float:
    """Convert an HU difference (or gradient) to the mu-difference scale."""
    return delta_hu * scale.mu_water / 1000.0


# ---------------------------------------------------------------------------
# File I/O: little-endian float32 raw + JSON sidecar
# ---------------------------------------------------------------------------

def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".json")


def save_image(image: ImageGrid, path: str | Path) -> None:
    """Write a raw little-endian float32 image plus its JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image.values.astype("<f4").tofile(path)
    meta = {
        "nx": image.nx,
        "ny": image.ny,
        "dx_mm": image.dx,
        "dy_mm": image.dy,
        "unit": image.unit,
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def load_image(path: str | Path) -> ImageGrid:
    """Read a raw image written by :func:`save_image`."""
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    spec = GridSpec(int(meta["nx"]), int(meta["ny"]), float(meta["dx_mm"]), float(meta["dy_mm"]))
    values = np.fromfile(path, dtype="<f4")
    if values.size != spec.nx * spec.ny:
        raise ValueError(
            f"raw file {path} holds {values.size} floats, expected {spec.nx * spec.ny}"
        )
    unit = meta.get("unit", MU_UNIT)
    if unit not in (MU_UNIT, HU_UNIT):
        raise ValueError(f"unknown unit {unit!r} in sidecar {sidecar_path(path)}")
    return ImageGrid(spec, values.reshape(spec.ny, spec.nx).astype(np.float64), unit)


def export_png(
    image: ImageGrid,
    path: str | Path,
    window_hu: tuple[float, float] = DEFAULT_PNG_WINDOW_HU,
    scale: HuScale = HuScale(),
) -> None:
    """Export as 16-bit grayscale PNG with a linear HU window mapping."""
    from PIL import Image

    lo, hi = window_hu
    if not hi > lo:
        raise ValueError(f"window must satisfy hi > lo, got {window_hu}")
    hu = image.values if image.unit == HU_UNIT else mu_to_hu(image, scale).values
    frac = np.clip((hu - lo) / (hi - lo), 0.0, 1.0)
    gray = np.round(frac * 65535.0).astype(np.uint16)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(gray).save(path)


# defaults shared by higher-level modules
DEFAULT_HU_SCALE = HuScale()
DEFAULT_GRID = GridSpec(nx=128, ny=128, dx=2.5, dy=2.5)
