"""Shared fixtures and closed-form oracles for the test suite.

The oracles here are independent of the library internals: ray/ellipse and
ray/box intersections are solved analytically, so projector tests compare
against geometry, not against the code under test.
"""

import numpy as np
import pytest

import dcarct as d


# ---------------------------------------------------------------------------
# Analytic ray oracles
# ---------------------------------------------------------------------------

def fan_ray(geometry: d.FanBeamGeometry, beta_deg: float, u: float):
    """Source point and unit direction of the fan ray hitting detector offset u."""
    b = np.deg2rad(beta_deg)
    c, s = np.cos(b), np.sin(b)
    src = np.array([geometry.sid * c, geometry.sid * s])
    w_hat = np.array([-c, -s])
    u_hat = np.array([-s, c])
    vec = geometry.sdd * w_hat + u * u_hat
    return src, vec / np.linalg.norm(vec)


def ray_ellipse_chord(src, direction, center, semi_axes, rotation_deg=0.0):
    """Chord length of a unit-direction ray through an ellipse, closed form."""
    phi = np.deg2rad(rotation_deg)
    rot = np.array([[np.cos(phi), np.sin(phi)], [-np.sin(phi), np.cos(phi)]])
    scale = np.diag([1.0 / semi_axes[0], 1.0 / semi_axes[1]])
    y0 = scale @ rot @ (np.asarray(src, dtype=float) - np.asarray(center, dtype=float))
    v = scale @ rot @ np.asarray(direction, dtype=float)
    a = v @ v
    b = y0 @ v
    c = y0 @ y0 - 1.0
    disc = b * b - a * c
    if disc <= 0.0:
        return 0.0
    return 2.0 * np.sqrt(disc) / a


def ray_box_length(src, direction, half_width, half_height):
    """Length of a unit-direction ray inside an axis-aligned centered box."""
    tmin, tmax = -np.inf, np.inf
    for axis, half in ((0, half_width), (1, half_height)):
        if abs(direction[axis]) < 1e-15:
            if abs(src[axis]) > half:
                return 0.0
            continue
        t1 = (-half - src[axis]) / direction[axis]
        t2 = (half - src[axis]) / direction[axis]
        tmin = max(tmin, min(t1, t2))
        tmax = min(tmax, max(t1, t2))
    return max(0.0, tmax - tmin)


def analytic_sinogram(geometry, ellipses, angle_indices=None):
    """Line integrals of a sum of constant ellipses, computed analytically."""
    if angle_indices is None:
        angle_indices = geometry.all_indices()
    u_vals = geometry.bin_centers()
    out = np.zeros((len(angle_indices), geometry.n_bins))
    for row, idx in enumerate(angle_indices):
        beta = geometry.angles_deg[idx]
        for col, u in enumerate(u_vals):
            src, direction = fan_ray(geometry, beta, u)
            total = 0.0
            for e in ellipses:
                total += e.delta * ray_ellipse_chord(
                    src, direction, e.center, e.semi_axes, e.rotation_deg)
            out[row, col] = total
    return out


# ---------------------------------------------------------------------------
# Standard scenario: the calibrated noise-free benchmark
# ---------------------------------------------------------------------------

CORRUPTION = d.CorruptionSpec(
    center=(20.0, -15.0), semi_axes=(30.0, 30.0), rotation_deg=0.0, delta_hu=-300.0)
PHANTOM_SEED = 7


def dark_spot_corruptions():
    """Noisy-case prior degradation: many strong dark spots plus the disk.

    Models a denoising prior that broke down under severe counting noise,
    leaving scattered dark artifacts across the body. Placement is drawn
    once from a fixed generator so the scenario is reproducible.
    """
    rng = np.random.default_rng(99)
    spots = []
    for _ in range(60):
        ang = rng.uniform(0.0, 2.0 * np.pi)
        rad = 110.0 * np.sqrt(rng.uniform())
        spots.append(d.CorruptionSpec(
            center=(rad * np.cos(ang), rad * np.sin(ang)),
            semi_axes=(10.0, 10.0), rotation_deg=0.0, delta_hu=-500.0))
    spots.append(CORRUPTION)
    return tuple(spots)


@pytest.fixture(scope="session")
def standard_geometry():
    return d.make_short_scan_geometry(
        sid=600.0, sdd=1200.0, n_bins=310, bin_size=2.0,
        start_deg=0.0, end_deg=210.0, step_deg=1.0)


@pytest.fixture(scope="session")
def standard_partition(standard_geometry):
    return d.partition_angles(standard_geometry, 30.0, 150.0)


@pytest.fixture(scope="session")
def standard_truth():
    return d.random_abdomen_phantom(PHANTOM_SEED, d.DEFAULT_GRID)


@pytest.fixture(scope="session")
def standard_measured(standard_geometry, standard_partition, standard_truth):
    return d.forward_project(standard_truth, standard_geometry,
                             standard_partition.measured)


@pytest.fixture(scope="session")
def standard_prior(standard_geometry, standard_partition, standard_truth,
                   standard_measured):
    ctx = d.PriorContext(standard_measured, standard_geometry,
                         standard_partition.measured, d.DEFAULT_GRID,
                         ground_truth=standard_truth)
    return d.resolve_prior(
        d.PriorSource(kind="oracle-corrupted", corruptions=(CORRUPTION,)), ctx)


@pytest.fixture(scope="session")
def standard_run(standard_geometry, standard_partition, standard_truth,
                 standard_measured, standard_prior):
    """Noise-free 50-iteration solver run on the calibrated benchmark."""
    config = d.DcarConfig()
    image, report = d.dcar_reconstruct(
        standard_measured, standard_prior, standard_geometry,
        standard_partition, config, reference=standard_truth)
    return {
        "image": image,
        "report": report,
        "config": config,
        "prior_rmse": d.rmse_hu(standard_prior, standard_truth),
        "dcar_rmse": d.rmse_hu(image, standard_truth),
    }


@pytest.fixture(scope="session")
def noisy_run(standard_geometry, standard_partition, standard_truth,
              standard_measured):
    """Noisy benchmark: Poisson counting noise, dead zone widened to match,
    and a prior degraded the way denoising priors degrade under heavy noise
    (scattered dark spots on top of the structural error)."""
    ctx = d.PriorContext(standard_measured, standard_geometry,
                         standard_partition.measured, d.DEFAULT_GRID,
                         ground_truth=standard_truth)
    prior = d.resolve_prior(
        d.PriorSource(kind="oracle-corrupted", corruptions=dark_spot_corruptions()),
        ctx)
    noisy = d.add_poisson_noise(standard_measured, d.NoiseModel(i0=1e5, seed=20260825))
    config = d.DcarConfig(e1=0.01)
    image, report = d.dcar_reconstruct(
        noisy, prior, standard_geometry, standard_partition,
        config, reference=standard_truth)
    return {
        "image": image,
        "report": report,
        "prior_rmse": d.rmse_hu(prior, standard_truth),
        "dcar_rmse": d.rmse_hu(image, standard_truth),
    }
