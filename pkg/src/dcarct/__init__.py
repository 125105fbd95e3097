"""Limited-angle fan-beam CT reconstruction with data-consistent artifact reduction."""

from .dcar import (
    DcarConfig,
    LineSearchConfig,
    NumericalError,
    ReconReport,
    SartSystem,
    WtvState,
    dcar_reconstruct,
    sart_sweep,
    sart_wtv_baseline,
    soft_threshold,
    wtv_descent,
    wtv_value,
    wtv_weights,
)
from .fbp import RampFilter, fbp_reconstruct, ram_lak_kernel
from .geometry import (
    AngularPartition,
    FanBeamGeometry,
    make_short_scan_geometry,
    partition_angles,
)
from .grid import (
    DEFAULT_GRID,
    DEFAULT_HU_SCALE,
    DEFAULT_PNG_WINDOW_HU,
    HU_UNIT,
    MU_UNIT,
    GridSpec,
    HuScale,
    ImageGrid,
    export_png,
    hu_delta_to_mu,
    hu_to_mu,
    load_image,
    mu_to_hu,
    save_image,
    zeros_image,
)
from .metrics import EvalMask, ResidualStats, residual_stats, rmse_hu
from .prior import CorruptionSpec, PriorContext, PriorSource, resolve_prior
from .projector import (
    Sinogram,
    back_project,
    forward_project,
    load_sinogram,
    pixel_sums,
    ray_sums,
    save_sinogram,
)
from .simulate import (
    EllipseSpec,
    NoiseModel,
    add_poisson_noise,
    random_abdomen_phantom,
    render_phantom,
    shepp_logan_specs,
)

__version__ = "0.1.0"

__all__ = [
    "AngularPartition",
    "CorruptionSpec",
    "DcarConfig",
    "DEFAULT_GRID",
    "DEFAULT_HU_SCALE",
    "DEFAULT_PNG_WINDOW_HU",
    "HU_UNIT",
    "MU_UNIT",
    "EllipseSpec",
    "EvalMask",
    "FanBeamGeometry",
    "GridSpec",
    "HuScale",
    "ImageGrid",
    "LineSearchConfig",
    "NoiseModel",
    "NumericalError",
    "PriorContext",
    "PriorSource",
    "RampFilter",
    "ReconReport",
    "ResidualStats",
    "SartSystem",
    "Sinogram",
    "WtvState",
    "add_poisson_noise",
    "back_project",
    "dcar_reconstruct",
    "export_png",
    "fbp_reconstruct",
    "forward_project",
    "hu_delta_to_mu",
    "hu_to_mu",
    "load_image",
    "load_sinogram",
    "make_short_scan_geometry",
    "mu_to_hu",
    "partition_angles",
    "pixel_sums",
    "ram_lak_kernel",
    "random_abdomen_phantom",
    "ray_sums",
    "render_phantom",
    "residual_stats",
    "resolve_prior",
    "rmse_hu",
    "sart_sweep",
    "sart_wtv_baseline",
    "save_image",
    "save_sinogram",
    "shepp_logan_specs",
    "soft_threshold",
    "wtv_descent",
    "wtv_value",
    "wtv_weights",
    "zeros_image",
]
