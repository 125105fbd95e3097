"""Fan-beam acquisition geometry and measured/unmeasured angle partitions.

Conventions (fixed once, shared by projector and FBP):
  * flat detector with equally spaced bins, centered on the source-isocenter
    axis, at distance ``sdd`` from the source;
  * source rotation angles are in degrees, counterclockwise, with 0 degrees
    placing the source on the +x axis;
  * one ray per detector bin, through the bin center.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# tolerance for matching angles given in degrees (angles are exact grid
# multiples in practice; this only absorbs float round-off)
_ANGLE_EPS = 1e-9


@dataclass(frozen=True)
class FanBeamGeometry:
    """Fan-beam system: distances in mm, angles in degrees (ascending)."""

    sid: float                     # source-to-isocenter distance
    sdd: float                     # source-to-detector distance
    n_bins: int
    bin_size: float                # mm at the physical detector
    angles_deg: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "angles_deg", np.asarray(self.angles_deg, dtype=np.float64))
        if not (0 < self.sid < self.sdd):
            raise ValueError(f"need 0 < sid < sdd, got sid={self.sid}, sdd={self.sdd}")
        if self.n_bins <= 0:
            raise ValueError(f"n_bins must be positive, got {self.n_bins}")
        if not self.bin_size > 0:
            raise ValueError(f"bin_size must be positive, got {self.bin_size}")
        a = self.angles_deg
        if a.ndim != 1 or a.size == 0:
            raise ValueError("angles_deg must be a non-empty 1-D array")
        if np.any(np.diff(a) <= 0):
            raise ValueError("angles must be strictly increasing")
        if a[0] < 0.0 or a[-1] >= 360.0:
            raise ValueError("angles must lie within [0, 360) degrees")

    @property
    def n_angles(self) -> int:
        return int(self.angles_deg.size)

    def bin_centers(self) -> np.ndarray:
        """Detector bin center coordinates (mm) along the detector axis."""
        return (np.arange(self.n_bins) - (self.n_bins - 1) / 2.0) * self.bin_size

    def all_indices(self) -> np.ndarray:
        return np.arange(self.n_angles)


@dataclass(frozen=True)
class AngularPartition:
    """Split of a geometry's angles into measured and unmeasured subsets."""

    geometry: FanBeamGeometry
    measured: np.ndarray = field(repr=False)    # ascending indices into geometry.angles_deg
    unmeasured: np.ndarray = field(repr=False)

    def __post_init__(self):
        meas = np.asarray(self.measured, dtype=np.intp)
        unmeas = np.asarray(self.unmeasured, dtype=np.intp)
        object.__setattr__(self, "measured", meas)
        object.__setattr__(self, "unmeasured", unmeas)
        if meas.size == 0:
            raise ValueError("measured angle set must be non-empty")
        combined = np.sort(np.concatenate([meas, unmeas]))
        if not np.array_equal(combined, np.arange(self.geometry.n_angles)):
            raise ValueError("measured and unmeasured must partition the geometry angles")

    @property
    def measured_deg(self) -> np.ndarray:
        return self.geometry.angles_deg[self.measured]

    @property
    def unmeasured_deg(self) -> np.ndarray:
        return self.geometry.angles_deg[self.unmeasured]


def make_short_scan_geometry(
    sid: float,
    sdd: float,
    n_bins: int,
    bin_size: float,
    start_deg: float,
    end_deg: float,
    step_deg: float,
) -> FanBeamGeometry:
    """Build a geometry with angles start, start+step, ... up to end inclusive.

    The angle count is floor((end - start) / step) + 1; a degenerate range
    with start == end yields a single angle.
    """
    if step_deg <= 0:
        raise ValueError(f"step_deg must be positive, got {step_deg}")
    if end_deg < start_deg:
        raise ValueError(f"empty angular range [{start_deg}, {end_deg}]")
    count = int(np.floor((end_deg - start_deg) / step_deg + _ANGLE_EPS)) + 1
    angles = start_deg + step_deg * np.arange(count)
    return FanBeamGeometry(sid=sid, sdd=sdd, n_bins=n_bins, bin_size=bin_size, angles_deg=angles)


def partition_angles(
    geometry: FanBeamGeometry, meas_start_deg: float, meas_end_deg: float
) -> AngularPartition:
    """Partition the geometry angles at [meas_start, meas_end] inclusive."""
    a = geometry.angles_deg
    inside = (a >= meas_start_deg - _ANGLE_EPS) & (a <= meas_end_deg + _ANGLE_EPS)
    measured = np.nonzero(inside)[0]
    unmeasured = np.nonzero(~inside)[0]
    if measured.size == 0:
        raise ValueError(
            f"measured range [{meas_start_deg}, {meas_end_deg}] contains no geometry angle"
        )
    return AngularPartition(geometry=geometry, measured=measured, unmeasured=unmeasured)
