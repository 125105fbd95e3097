"""Fan-beam geometry construction and angular partitioning."""

import numpy as np
import pytest

import dcarct as d


def test_short_scan_angle_count_and_values():
    geo = d.make_short_scan_geometry(600, 1200, 310, 2.0, 0, 210, 1)
    assert geo.n_angles == 211
    assert geo.angles_deg[0] == 0.0
    assert geo.angles_deg[-1] == 210.0
    assert np.allclose(np.diff(geo.angles_deg), 1.0)


def test_step_that_does_not_divide_range():
    geo = d.make_short_scan_geometry(600, 1200, 8, 2.0, 0, 10, 3)
    assert np.allclose(geo.angles_deg, [0, 3, 6, 9])


def test_bin_centers_symmetric():
    geo = d.make_short_scan_geometry(600, 1200, 4, 2.0, 0, 90, 90)
    assert np.allclose(geo.bin_centers(), [-3.0, -1.0, 1.0, 3.0])
    odd = d.make_short_scan_geometry(600, 1200, 5, 2.0, 0, 90, 90)
    assert np.allclose(odd.bin_centers(), [-4.0, -2.0, 0.0, 2.0, 4.0])


def test_geometry_validation():
    with pytest.raises(ValueError):
        d.FanBeamGeometry(0.0, 1200.0, 128, 2.0, np.array([0.0]))
    with pytest.raises(ValueError):
        d.FanBeamGeometry(1200.0, 600.0, 128, 2.0, np.array([0.0]))
    with pytest.raises(ValueError):
        d.FanBeamGeometry(600.0, 1200.0, 128, 2.0, np.array([10.0, 5.0]))
    with pytest.raises(ValueError):
        d.FanBeamGeometry(600.0, 1200.0, 128, 2.0, np.array([0.0, 400.0]))


def test_partition_inclusive_bounds():
    geo = d.make_short_scan_geometry(600, 1200, 310, 2.0, 0, 210, 1)
    part = d.partition_angles(geo, 30.0, 150.0)
    assert len(part.measured) == 121
    assert len(part.unmeasured) == 90
    assert part.measured_deg[0] == 30.0
    assert part.measured_deg[-1] == 150.0


def test_partition_covers_all_angles_exactly():
    rng = np.random.default_rng(5)
    geo = d.make_short_scan_geometry(600, 1200, 64, 2.0, 0, 210, 1)
    for _ in range(20):
        lo, hi = np.sort(rng.uniform(0.0, 210.0, 2))
        if hi - lo < 1.0:
            continue
        part = d.partition_angles(geo, lo, hi)
        merged = np.sort(np.concatenate([part.measured, part.unmeasured]))
        assert np.array_equal(merged, geo.all_indices())
        assert np.all(part.measured_deg >= lo - 1e-9)
        assert np.all(part.measured_deg <= hi + 1e-9)


def test_partition_requires_measured_angles():
    geo = d.make_short_scan_geometry(600, 1200, 64, 2.0, 0, 210, 1)
    with pytest.raises(ValueError):
        d.partition_angles(geo, 211.0, 300.0)


def test_partition_rejects_overlap_and_gaps():
    geo = d.make_short_scan_geometry(600, 1200, 64, 2.0, 0, 10, 1)
    idx = geo.all_indices()
    with pytest.raises(ValueError):
        d.AngularPartition(geo, idx[:5], idx[4:])
    with pytest.raises(ValueError):
        d.AngularPartition(geo, idx[:5], idx[6:])
