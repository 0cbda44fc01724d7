"""Grid and field diagnostics against closed-form Gaussian integrals."""

import math

import numpy as np
import pytest

from dnls import (
    Field,
    GridSpec,
    PhysParams,
    augmented_energy,
    boundary_mass_fraction,
    energy,
    gaussian_data,
    grad_norm,
    h1_norm,
    l2_distance,
    load_field,
    lp_norm,
    mass,
    record,
    save_field,
    weighted_norm,
)
from conftest import band_limited_field

SQRT_PI = math.sqrt(math.pi)


def standard_gaussian(n=2048, half_width=20.0):
    return gaussian_data(GridSpec(1, n, half_width), 1.0, 1.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(3, 64, 10.0)
    with pytest.raises(ValueError):
        GridSpec(1, 100, 10.0)
    with pytest.raises(ValueError):
        GridSpec(1, 4, 10.0)
    with pytest.raises(ValueError):
        GridSpec(1, 64, 0.0)
    g = GridSpec(2, 64, 10.0)
    assert g.shape == (64, 64)
    assert g.npoints == 64 * 64
    assert math.isclose(g.cell, g.dx ** 2, rel_tol=1e-15)


def test_grid_coords_and_wavenumbers():
    g = GridSpec(1, 8, 4.0)
    x = g.axis_coords()
    assert x[0] == -4.0 and x[-1] == 4.0 - g.dx
    k = g.wavenumbers()
    assert k[0] == 0.0
    assert math.isclose(k[1], math.pi / 4.0, rel_tol=1e-15)
    assert np.all(g.k_squared() >= 0)
    # zeroing the unpaired mode only touches the Nyquist entry
    k_sym = g.wavenumbers(zero_nyquist=True)
    assert k_sym[g.n // 2] == 0.0
    assert np.array_equal(np.delete(k, g.n // 2), np.delete(k_sym, g.n // 2))


def test_field_validation():
    g = GridSpec(1, 64, 10.0)
    with pytest.raises(ValueError):
        Field(g, np.zeros(63, dtype=complex))
    bad = np.zeros(64, dtype=complex)
    bad[3] = complex(math.nan, 0.0)
    with pytest.raises(ValueError):
        Field(g, bad)
    f = Field(g, np.ones((64,), dtype=complex), time_tag=2.5)
    assert f.time_tag == 2.5
    assert f.values.ndim == 1


def test_gaussian_data_validation():
    g = GridSpec(1, 64, 10.0)
    with pytest.raises(ValueError):
        gaussian_data(g, 1.0, 0.0)
    with pytest.raises(ValueError):
        gaussian_data(g, 1.0, 2.0)  # 6*width exceeds the half width
    with pytest.raises(ValueError):
        gaussian_data(g, 1.0, 1.0, momentum=(1.0, 2.0))


def test_gaussian_norms_match_closed_forms():
    f = standard_gaussian()
    assert math.isclose(mass(f), SQRT_PI, rel_tol=1e-12)
    assert math.isclose(grad_norm(f) ** 2, SQRT_PI / 2.0, rel_tol=1e-12)
    assert math.isclose(weighted_norm(f) ** 2, SQRT_PI / 2.0, rel_tol=1e-12)
    assert math.isclose(weighted_norm(f, 2) ** 2, 0.75 * SQRT_PI, rel_tol=1e-12)
    assert math.isclose(lp_norm(f, 1.0), math.sqrt(2.0 * math.pi), rel_tol=1e-12)
    assert math.isclose(lp_norm(f, 2.0), math.pi ** 0.25, rel_tol=1e-12)
    assert math.isclose(lp_norm(f, 3.0) ** 3, math.sqrt(2.0 * math.pi / 3.0),
                        rel_tol=1e-12)
    assert math.isclose(lp_norm(f, 4.0) ** 4, math.sqrt(math.pi / 2.0),
                        rel_tol=1e-12)
    assert math.isclose(h1_norm(f) ** 2, 1.5 * SQRT_PI, rel_tol=1e-12)


def test_gaussian_norms_2d():
    f = gaussian_data(GridSpec(2, 256, 15.0), 1.0, 1.0)
    assert math.isclose(mass(f), math.pi, rel_tol=1e-12)
    assert math.isclose(grad_norm(f) ** 2, math.pi, rel_tol=1e-12)
    assert math.isclose(weighted_norm(f) ** 2, math.pi, rel_tol=1e-12)


def test_momentum_shifts_gradient_not_mass():
    g = GridSpec(1, 2048, 20.0)
    base = gaussian_data(g, 1.0, 1.0)
    kicked = gaussian_data(g, 1.0, 1.0, momentum=(3.0,))
    assert math.isclose(mass(kicked), mass(base), rel_tol=1e-13)
    expected = 9.0 * mass(base) + grad_norm(base) ** 2
    assert math.isclose(grad_norm(kicked) ** 2, expected, rel_tol=1e-11)


def test_plane_wave_gradient_exact():
    g = GridSpec(1, 256, 10.0)
    xi = g.wavenumbers()[5]
    f = Field(g, np.exp(1j * xi * g.axis_coords()))
    assert math.isclose(grad_norm(f), abs(xi) * math.sqrt(mass(f)), rel_tol=1e-12)
    flat = Field(g, np.ones(g.n, dtype=complex))
    assert grad_norm(flat) == 0.0


def test_parseval_against_direct_fft():
    rng = np.random.default_rng(42)
    for d, n in ((1, 256), (2, 32)):
        f = band_limited_field(rng, d=d, n=n, half_width=15.0)
        hat = np.fft.fftn(f.shaped())
        spectral = np.sum(np.abs(hat) ** 2) / f.grid.npoints * f.grid.cell
        assert math.isclose(mass(f), float(spectral), rel_tol=1e-12)


def test_norm_homogeneity_random_fields():
    rng = np.random.default_rng(11)
    for _ in range(100):
        f = band_limited_field(rng, n=256, half_width=15.0)
        c = complex(rng.normal(), rng.normal())
        if abs(c) < 1e-6:
            continue
        g = Field(f.grid, c * f.values)
        assert math.isclose(mass(g), abs(c) ** 2 * mass(f), rel_tol=1e-12)
        assert math.isclose(grad_norm(g), abs(c) * grad_norm(f), rel_tol=1e-12)
        r = float(rng.uniform(1.0, 6.0))
        assert math.isclose(lp_norm(g, r), abs(c) * lp_norm(f, r), rel_tol=1e-12)
        assert math.isclose(weighted_norm(g), abs(c) * weighted_norm(f),
                            rel_tol=1e-12)


def test_lp_norm_validation():
    f = standard_gaussian(n=64, half_width=10.0)
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)
    with pytest.raises(ValueError):
        weighted_norm(f, 0)
    with pytest.raises(ValueError):
        weighted_norm(f, 1.5)


def test_l2_distance():
    g = GridSpec(1, 64, 10.0)
    f1 = gaussian_data(g, 1.0, 1.0)
    f2 = gaussian_data(g, 2.0, 1.0)
    assert math.isclose(l2_distance(f1, f2), math.sqrt(mass(f1)), rel_tol=1e-12)
    assert l2_distance(f1, f1) == 0.0
    with pytest.raises(ValueError):
        l2_distance(f1, gaussian_data(GridSpec(1, 128, 10.0), 1.0, 1.0))


def test_energy_closed_form():
    f = standard_gaussian()
    params = PhysParams(1, 3, -1.0, -0.5)
    expected = 0.25 * SQRT_PI - 0.25 * math.sqrt(math.pi / 2.0)
    assert math.isclose(energy(f, params), expected, rel_tol=1e-12)
    # the augmented variant shifts by gamma * mass and rejects negative gamma
    assert math.isclose(augmented_energy(f, params, 2.0),
                        expected + 2.0 * SQRT_PI, rel_tol=1e-12)
    with pytest.raises(ValueError):
        augmented_energy(f, params, -0.1)


def test_boundary_mass_fraction():
    g = GridSpec(1, 1024, 20.0)
    assert boundary_mass_fraction(gaussian_data(g, 1.0, 1.0)) < 1e-10
    assert boundary_mass_fraction(Field(g, np.zeros(g.n, dtype=complex))) == 0.0
    ones = np.ones(g.shape, dtype=complex)
    shell_only = np.where(g.shell_mask(), ones, 0.0)
    assert boundary_mass_fraction(Field(g, shell_only)) == 1.0
    flat_fraction = boundary_mass_fraction(Field(g, ones))
    assert math.isclose(flat_fraction, float(g.shell_mask().mean()), rel_tol=1e-15)
    # the shell is the outer tenth of each axis
    assert abs(flat_fraction - 0.1) < 2.0 / g.n


def test_shell_mask_2d_is_axis_band():
    g = GridSpec(2, 64, 10.0)
    m = g.shell_mask()
    x = np.abs(g.axis_coords())
    expected = (x[:, None] >= 0.9 * g.half_width) | (x[None, :] >= 0.9 * g.half_width)
    assert np.array_equal(m, expected)


def test_record_bundles_consistent_diagnostics():
    f = standard_gaussian()
    params = PhysParams(1, 2, -1.0, -1.0)
    r = record(f, params, gammas=(0.0, 1.0, 2.5))
    assert math.isclose(r.mass, mass(f), rel_tol=1e-15)
    assert math.isclose(r.l2 ** 2, r.mass, rel_tol=1e-14)
    assert math.isclose(r.grad, grad_norm(f), rel_tol=1e-15)
    assert math.isclose(r.lp1, lp_norm(f, 3.0), rel_tol=1e-15)
    assert math.isclose(r.lq, lp_norm(f, 1.0), rel_tol=1e-15)
    assert math.isclose(r.weighted, weighted_norm(f), rel_tol=1e-15)
    assert set(r.eaug) == {0.0, 1.0, 2.5}
    assert math.isclose(r.eaug[0.0], r.energy, rel_tol=1e-15)
    assert math.isclose(r.eaug[2.5], r.energy + 2.5 * r.mass, rel_tol=1e-14)
    assert r.boundary_mass_fraction < 1e-10


def test_record_zero_field():
    g = GridSpec(1, 64, 10.0)
    r = record(Field(g, np.zeros(g.n, dtype=complex)), PhysParams(1, 2, -1.0, -1.0))
    assert r.mass == r.l2 == r.grad == r.lp1 == r.energy == 0.0
    assert r.boundary_mass_fraction == 0.0


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    for d, n in ((1, 128), (2, 32)):
        f = band_limited_field(rng, d=d, n=n, half_width=12.0)
        f = Field(f.grid, f.values, time_tag=1.75)
        path = tmp_path / f"field_{d}.bin"
        save_field(f, path)
        g = load_field(path)
        assert g.grid == f.grid
        assert g.time_tag == f.time_tag
        assert np.array_equal(g.values, f.values)


def test_load_rejects_truncated_file(tmp_path):
    f = standard_gaussian(n=64, half_width=10.0)
    path = tmp_path / "field.bin"
    save_field(f, path)
    data = path.read_bytes()
    path.write_bytes(data[:-16])
    with pytest.raises(ValueError):
        load_field(path)
