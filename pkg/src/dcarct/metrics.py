"""Quantitative evaluation: HU-domain error and projection residuals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import FanBeamGeometry
from .grid import HU_UNIT, HuScale, ImageGrid, mu_to_hu
from .projector import Sinogram, forward_project


@dataclass(frozen=True)
class EvalMask:
    """Boolean inclusion mask over image pixels."""

    include: np.ndarray

    def __post_init__(self):
        inc = np.asarray(self.include, dtype=bool)
        if not inc.any():
            raise ValueError("evaluation mask excludes every pixel")
        object.__setattr__(self, "include", inc)


def _as_hu(image: ImageGrid, scale: HuScale) -> np.ndarray:
    return image.values if image.unit == HU_UNIT else mu_to_hu(image, scale).values


def rmse_hu(
    image: ImageGrid,
    reference: ImageGrid,
    scale: HuScale = HuScale(),
    mask: EvalMask | None = None,
) -> float:
    """Root-mean-square HU difference over the mask (default: all pixels)."""
    if image.values.shape != reference.values.shape:
        raise ValueError(
            f"shape mismatch: {image.values.shape} vs {reference.values.shape}"
        )
    diff = _as_hu(image, scale) - _as_hu(reference, scale)
    if mask is not None:
        if mask.include.shape != diff.shape:
            raise ValueError("mask shape does not match images")
        diff = diff[mask.include]
    return float(np.sqrt(np.mean(np.square(diff))))


@dataclass(frozen=True)
class ResidualStats:
    rms: float
    max_abs: float
    frac_above: float


def residual_stats(
    image: ImageGrid,
    sino: Sinogram,
    geometry: FanBeamGeometry,
    angle_indices,
    threshold: float = np.inf,
) -> ResidualStats:
    """Statistics of sino - forward(image) per ray over the angle subset."""
    proj = forward_project(image, geometry, angle_indices)
    if proj.values.shape != sino.values.shape:
        raise ValueError(
            f"sinogram shape {sino.values.shape} does not match subset {proj.values.shape}"
        )
    res = sino.values - proj.values
    return ResidualStats(
        rms=float(np.sqrt(np.mean(np.square(res)))),
        max_abs=float(np.max(np.abs(res))),
        frac_above=float(np.mean(np.abs(res) > threshold)),
    )
