"""Prior image providers for the reconstruction solver.

The solver only needs some estimate of the artifact-free image to seed
iteration and to synthesize projections for the unmeasured arc. Sources:
a file produced elsewhere (e.g. by a trained network), a zero image, the
limited-angle filtered backprojection itself, or the ground truth with
deliberate ellipse corruptions (a controllable stand-in for network
failure modes).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fbp import fbp_reconstruct
from .geometry import FanBeamGeometry
from .grid import MU_UNIT, GridSpec, HuScale, ImageGrid, hu_delta_to_mu, load_image, zeros_image
from .projector import Sinogram
from .simulate import EllipseSpec, render_phantom

PRIOR_KINDS = ("file", "zero", "limited-fbp", "oracle-corrupted")


@dataclass(frozen=True)
class CorruptionSpec:
    """An ellipse-shaped perturbation, offset given in HU."""

    center: tuple[float, float]      # mm
    semi_axes: tuple[float, float]   # mm
    rotation_deg: float
    delta_hu: float

    def __post_init__(self):
        if self.semi_axes[0] <= 0 or self.semi_axes[1] <= 0:
            raise ValueError(f"semi-axes must be positive, got {self.semi_axes}")


@dataclass(frozen=True)
class PriorSource:
    kind: str
    path: str | None = None
    corruptions: tuple[CorruptionSpec, ...] = ()

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}; expected one of {PRIOR_KINDS}")
        if self.kind == "file" and not self.path:
            raise ValueError("file prior needs a path")


@dataclass(frozen=True)
class PriorContext:
    """Everything a prior source may draw on."""

    measured_sino: Sinogram
    geometry: FanBeamGeometry
    measured_indices: np.ndarray
    grid: GridSpec
    ground_truth: ImageGrid | None = None
    hu_scale: HuScale = field(default_factory=HuScale)


def resolve_prior(source: PriorSource, context: PriorContext) -> ImageGrid:
    """Produce the prior image for the solver; deterministic per kind."""
    grid = context.grid
    if source.kind == "zero":
        return zeros_image(grid)
    if source.kind == "file":
        img = load_image(Path(source.path))
        if img.spec != grid:
            raise ValueError(
                f"prior file grid {img.spec} does not match reconstruction grid {grid}"
            )
        if img.unit != MU_UNIT:
            raise ValueError(f"prior file must store {MU_UNIT} values, got {img.unit}")
        return img
    if source.kind == "limited-fbp":
        return fbp_reconstruct(
            context.measured_sino, context.geometry, context.measured_indices, grid
        )
    # oracle-corrupted
    if context.ground_truth is None:
        raise ValueError("oracle-corrupted prior needs a ground-truth image in the context")
    truth = context.ground_truth
    if truth.spec != grid:
        raise ValueError("ground truth grid does not match reconstruction grid")
    ellipses = [
        EllipseSpec(c.center, c.semi_axes, c.rotation_deg, hu_delta_to_mu(c.delta_hu, context.hu_scale))
        for c in source.corruptions
    ]
    bump = render_phantom(ellipses, grid) if ellipses else zeros_image(grid)
    return ImageGrid(grid, truth.values + bump.values)
