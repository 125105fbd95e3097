"""Forward/backprojection against closed-form ray integrals."""

import json

import numpy as np
import pytest

import dcarct as d
from dcarct.projector import AngleOperator, pixel_sums, ray_sums

from conftest import analytic_sinogram, fan_ray, ray_box_length


GRID = d.GridSpec(nx=128, ny=128, dx=2.5, dy=2.5)


def small_geometry(n_bins=155, step=15.0):
    return d.make_short_scan_geometry(600, 1200, n_bins, 4.0, 0, 345, step)


# The oracle integrates the continuous ellipse; the projector integrates its
# pixel-center rasterization on the 2.5 mm grid. Near the rim the chord
# varies steeply with detector offset, so the achievable agreement there is
# set by rasterization, not by the projector. Bounds below were measured
# once on this fixed scene and frozen with headroom (disk: max 4.8%,
# mean 1.1%; ellipse: max 8.0%, mean 1.5%).

def test_disk_projection_matches_chord_oracle():
    geo = small_geometry()
    disk = d.EllipseSpec(center=(0.0, 0.0), semi_axes=(50.0, 50.0),
                         rotation_deg=0.0, delta=0.02)
    img = d.render_phantom([disk], GRID)
    sino = d.forward_project(img, geo)
    ref = analytic_sinogram(geo, [disk])
    mask = ref > 0.2  # rays with >10 mm chord
    rel = np.abs(sino.values[mask] - ref[mask]) / ref[mask]
    assert rel.max() < 0.06
    assert rel.mean() < 0.02
    assert np.abs(sino.values[~mask] - ref[~mask]).max() < 0.1


def test_rotated_ellipse_projection_matches_chord_oracle():
    geo = small_geometry()
    ell = d.EllipseSpec(center=(30.0, -20.0), semi_axes=(60.0, 25.0),
                        rotation_deg=35.0, delta=0.015)
    img = d.render_phantom([ell], GRID)
    sino = d.forward_project(img, geo)
    ref = analytic_sinogram(geo, [ell])
    mask = ref > 0.6  # clear of the grazing-incidence rim
    rel = np.abs(sino.values[mask] - ref[mask]) / ref[mask]
    assert rel.max() < 0.10
    assert rel.mean() < 0.025


def test_centered_disk_rows_are_angle_invariant():
    geo = small_geometry()
    disk = d.EllipseSpec((0.0, 0.0), (60.0, 60.0), 0.0, 0.02)
    sino = d.forward_project(d.render_phantom([disk], GRID), geo)
    spread = sino.values.max(axis=0) - sino.values.min(axis=0)
    vmax = sino.values.max()
    # rim bins inherit the rasterization error; interior bins must agree
    # across angles much more tightly
    u_iso = ((np.arange(geo.n_bins) - (geo.n_bins - 1) / 2.0)
             * geo.bin_size * geo.sid / geo.sdd)
    inner = np.abs(u_iso) < 0.8 * 60.0
    assert spread[inner].max() < 0.04 * vmax
    assert spread.max() < 0.08 * vmax


def test_linearity_and_zero_image():
    geo = small_geometry(n_bins=51, step=60.0)
    rng = np.random.default_rng(7)
    a = d.ImageGrid(GRID, rng.uniform(0, 0.03, (128, 128)))
    b = d.ImageGrid(GRID, rng.uniform(0, 0.03, (128, 128)))
    combo = d.ImageGrid(GRID, 2.0 * a.values - 0.5 * b.values)
    sa = d.forward_project(a, geo).values
    sb = d.forward_project(b, geo).values
    sc = d.forward_project(combo, geo).values
    assert np.allclose(sc, 2.0 * sa - 0.5 * sb, rtol=1e-12, atol=1e-12)
    zero = d.forward_project(d.zeros_image(GRID), geo)
    assert np.all(zero.values == 0.0)


def test_nonnegative_image_gives_nonnegative_finite_sinogram():
    geo = small_geometry(n_bins=51, step=30.0)
    rng = np.random.default_rng(13)
    for _ in range(5):
        img = d.ImageGrid(GRID, rng.uniform(0, 0.05, (128, 128)))
        vals = d.forward_project(img, geo).values
        assert np.all(vals >= 0.0)
        assert np.all(np.isfinite(vals))


def test_ray_sums_match_box_clipping_oracle():
    geo = small_geometry()
    sums = ray_sums(geo, geo.all_indices(), GRID)
    u_vals = geo.bin_centers()
    half = GRID.nx * GRID.dx / 2.0
    for row in range(0, geo.n_angles, 5):
        beta = geo.angles_deg[row]
        for col in range(0, geo.n_bins, 7):
            src, direction = fan_ray(geo, beta, u_vals[col])
            ref = ray_box_length(src, direction, half, half)
            got = sums[row, col]
            if ref > 20.0:
                assert abs(got - ref) / ref < 0.03
            else:
                assert abs(got - ref) < 2.0


def test_adjoint_inner_product_within_tolerance():
    from scipy.ndimage import gaussian_filter

    geo = small_geometry(n_bins=77, step=20.0)
    grid = d.GridSpec(64, 64, 4.0, 4.0)
    rng = np.random.default_rng(21)
    for _ in range(3):
        f = gaussian_filter(rng.normal(size=(64, 64)), 2.0)
        g = gaussian_filter(rng.normal(size=(geo.n_angles, geo.n_bins)), 2.0)
        img = d.ImageGrid(grid, f)
        sino = d.Sinogram(g, geo.angles_deg, geo.bin_size)
        lhs = np.sum(d.forward_project(img, geo).values * g)
        rhs = np.sum(d.back_project(sino, geo, geo.all_indices(), grid).values * f)
        assert abs(lhs - rhs) / max(abs(lhs), abs(rhs)) < 0.05


def test_angle_operator_matches_direct_path():
    geo = small_geometry(n_bins=51, step=45.0)
    rng = np.random.default_rng(3)
    img = d.ImageGrid(GRID, rng.uniform(0, 0.04, (128, 128)))
    for idx in range(geo.n_angles):
        beta = geo.angles_deg[idx]
        op = AngleOperator(GRID, geo, beta)
        direct = d.forward_project(img, geo, np.array([idx])).values[0]
        assert np.allclose(op.forward(img.values), direct, rtol=1e-12, atol=1e-14)
        row = rng.normal(size=geo.n_bins)
        sino = d.Sinogram(row[None, :], geo.angles_deg[idx:idx + 1], geo.bin_size)
        back = d.back_project(sino, geo, np.array([idx]), GRID).values
        assert np.allclose(op.back(row), back, rtol=1e-12, atol=1e-14)


def test_pixel_sums_footprint_bound():
    # geometry where the depth weighting stays near unity so the
    # intersection-footprint bound dx+dy is meaningful
    grid = d.GridSpec(16, 16, 1.0, 1.0)
    geo = d.make_short_scan_geometry(600, 1200, 41, 2.0, 0, 350, 10)
    for idx in range(geo.n_angles):
        ps = pixel_sums(geo, idx, grid)
        assert np.all(ps >= 0.0)
        assert np.all(np.isfinite(ps))
        assert ps.max() <= (grid.dx + grid.dy)


def test_sinogram_round_trip(tmp_path):
    geo = small_geometry(n_bins=11, step=70.0)
    rng = np.random.default_rng(9)
    sino = d.Sinogram(rng.uniform(0, 5, (geo.n_angles, 11)),
                      geo.angles_deg, geo.bin_size)
    path = tmp_path / "s.raw"
    d.save_sinogram(sino, path)
    meta = json.loads((tmp_path / "s.raw.json").read_text())
    assert meta["nAngles"] == geo.n_angles
    assert meta["nBins"] == 11
    assert meta["binSize_mm"] == 4.0
    assert meta["angles_deg"] == list(geo.angles_deg)
    loaded = d.load_sinogram(path)
    assert np.array_equal(loaded.values,
                          sino.values.astype("<f4").astype(np.float64))
    assert np.array_equal(loaded.angles_deg, sino.angles_deg)


def test_forward_project_rejects_bad_inputs():
    geo = small_geometry(n_bins=11, step=70.0)
    hu_img = d.ImageGrid(GRID, np.zeros((128, 128)), unit=d.HU_UNIT)
    with pytest.raises(ValueError):
        d.forward_project(hu_img, geo)
    img = d.zeros_image(GRID)
    with pytest.raises(ValueError):
        d.forward_project(img, geo, np.array([geo.n_angles]))
    with pytest.raises(ValueError):
        d.forward_project(img, geo, np.array([], dtype=int))
    tight = d.FanBeamGeometry(150.0, 1200.0, 11, 2.0, np.array([0.0]))
    with pytest.raises(ValueError):
        d.forward_project(img, tight)


def test_back_project_rejects_mismatched_rows():
    geo = small_geometry(n_bins=11, step=70.0)
    sino = d.Sinogram(np.zeros((2, 11)), geo.angles_deg[:2], geo.bin_size)
    with pytest.raises(ValueError):
        d.back_project(sino, geo, geo.all_indices(), GRID)
