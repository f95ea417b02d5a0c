"""Core spectral representation: multipliers, norms, transforms, snapshots."""

import numpy as np
import pytest

from sqgnudge.spectral import (
    FourierField,
    GridMismatchError,
    PhysicalField,
    SnapshotFormatError,
    field_from_function,
    fractional_laplacian,
    lp_norm,
    partial_x,
    partial_y,
    random_band_limited,
    read_snapshot,
    refine,
    riesz_perp,
    sobolev_norm,
    to_physical,
    to_spectral,
    wave_grid,
    write_snapshot,
    zero_field,
)


@pytest.fixture
def grid():
    return wave_grid(32)


def random_fields(grid, count, seed=0, kmax=None):
    rng = np.random.default_rng(seed)
    kmax = kmax or grid.n // 3
    return [random_band_limited(grid, kmax=kmax, rng=rng) for _ in range(count)]


class TestWaveGrid:
    def test_rejects_non_power_of_two(self):
        for bad in (0, 7, 12, 48):
            with pytest.raises(ValueError):
                wave_grid(bad).n if bad not in (12, 48) else wave_grid(bad)

    def test_rejects_too_small(self):
        with pytest.raises(ValueError):
            wave_grid(4)

    def test_wavevector_magnitudes(self, grid):
        assert grid.kmag[0, 0] == 0.0
        assert np.all(grid.kmag.ravel()[1:] >= 0)
        assert np.count_nonzero(grid.kmag == 0) == 1

    def test_instances_shared(self):
        assert wave_grid(32) is wave_grid(32)


class TestFractionalLaplacian:
    def test_unit_wavenumber_fixed_point(self, grid):
        f = field_from_function(grid, lambda x, y: np.cos(x))
        for s in (0.3, 1.0, 1.5, -0.5):
            out = fractional_laplacian(f, s)
            assert np.allclose(out.coeffs, f.coeffs, atol=1e-14)

    def test_single_mode_multiplier(self, grid):
        f = field_from_function(grid, lambda x, y: np.cos(2 * x))
        out = to_physical(fractional_laplacian(f, 1.5))
        assert np.allclose(out.values, 2**1.5 * np.cos(grid.x), atol=1e-12)

    def test_riesz_potential_single_mode(self, grid):
        f = field_from_function(grid, lambda x, y: np.sin(3 * y))
        out = to_physical(fractional_laplacian(f, -1.0))
        assert np.allclose(out.values, np.sin(3 * grid.y) / 3.0, atol=1e-13)

    def test_semigroup_property(self, grid):
        for phi in random_fields(grid, 10, seed=3):
            left = fractional_laplacian(fractional_laplacian(phi, 0.7), 0.8)
            right = fractional_laplacian(phi, 1.5)
            ref = sobolev_norm(right, 0.0)
            assert sobolev_norm(left - right, 0.0) <= 1e-12 * ref


class TestRieszPerp:
    def test_cos_x(self, grid):
        u1, u2 = riesz_perp(field_from_function(grid, lambda x, y: np.cos(x)))
        assert np.allclose(to_physical(u1).values, 0.0, atol=1e-14)
        assert np.allclose(to_physical(u2).values, np.sin(grid.x), atol=1e-13)

    def test_cos_y(self, grid):
        u1, u2 = riesz_perp(field_from_function(grid, lambda x, y: np.cos(y)))
        assert np.allclose(to_physical(u1).values, -np.sin(grid.y), atol=1e-13)
        assert np.allclose(to_physical(u2).values, 0.0, atol=1e-14)

    def test_divergence_free_and_isometric(self, grid):
        for theta in random_fields(grid, 20, seed=1):
            u1, u2 = riesz_perp(theta)
            div = partial_x(u1) + partial_y(u2)
            norm = sobolev_norm(theta, 0.0)
            assert sobolev_norm(div, 0.0) <= 1e-12 * norm
            speed = np.hypot(sobolev_norm(u1, 0.0), sobolev_norm(u2, 0.0))
            assert abs(speed - norm) <= 1e-12 * norm


class TestNorms:
    def test_cos_x_l2(self, grid):
        f = field_from_function(grid, lambda x, y: np.cos(x))
        assert sobolev_norm(f, 0.0) == pytest.approx(np.sqrt(2) * np.pi, rel=1e-13)

    def test_cos_2x_h1(self, grid):
        f = field_from_function(grid, lambda x, y: np.cos(2 * x))
        assert sobolev_norm(f, 1.0) == pytest.approx(2 * np.sqrt(2) * np.pi,
                                                     rel=1e-13)

    def test_zero_field(self, grid):
        for s in (-1.0, 0.0, 0.8, 2.0):
            assert sobolev_norm(zero_field(grid), s) == 0.0

    def test_quadrature_oracle_cross_check(self, grid):
        # independent quadrature of int cos^2 over the grid
        vals = np.cos(grid.x)
        integral = np.sum(vals**2) * grid.dx**2
        f = field_from_function(grid, lambda x, y: np.cos(x))
        assert sobolev_norm(f, 0.0) == pytest.approx(np.sqrt(integral), rel=1e-12)

    def test_lp_zero(self, grid):
        zero = PhysicalField(grid, np.zeros((grid.n, grid.n)))
        assert lp_norm(zero, 4.0) == 0.0

    def test_l2_matches_plancherel(self, grid):
        f = field_from_function(grid, lambda x, y: np.cos(x))
        assert lp_norm(to_physical(f), 2.0) == pytest.approx(
            sobolev_norm(f, 0.0), rel=1e-10)

    def test_l4_of_cos(self, grid):
        f = PhysicalField(grid, np.cos(grid.x))
        expected = (3 * np.pi**2 / 2) ** 0.25  # int cos^4 = 4 pi^2 * 3/8
        assert lp_norm(f, 4.0) == pytest.approx(expected, rel=1e-12)
        # fine-grid quadrature oracle
        fine = wave_grid(128)
        oracle = (np.sum(np.cos(fine.x) ** 4) * fine.dx**2) ** 0.25
        assert lp_norm(f, 4.0) == pytest.approx(oracle, rel=1e-12)

    def test_linf(self, grid):
        f = PhysicalField(grid, 0.25 * np.cos(grid.x))
        assert lp_norm(f, np.inf) == pytest.approx(0.25, rel=1e-12)

    def test_invalid_p(self, grid):
        with pytest.raises(ValueError):
            lp_norm(PhysicalField(grid, np.zeros((grid.n, grid.n))), 0.5)

    def test_poincare_constant_one(self, grid):
        # |k| >= 1 on the zero-mean class makes this exact
        pairs = [(-1.0, 0.0), (0.0, 1.0), (0.25, 0.8), (-0.5, 1.5)]
        for phi in random_fields(grid, 100, seed=7):
            for lo, hi in pairs:
                assert sobolev_norm(phi, lo) <= sobolev_norm(phi, hi) * (1 + 1e-12)


class TestTransforms:
    def test_round_trip_random(self, grid):
        for phi in random_fields(grid, 5, seed=2):
            values = to_physical(phi).values
            back = to_physical(to_spectral(PhysicalField(grid, values))).values
            assert np.max(np.abs(back - values)) <= 1e-12 * np.max(np.abs(values))

    def test_constant_projects_to_zero(self, grid):
        const = PhysicalField(grid, np.ones((grid.n, grid.n)))
        assert np.all(to_spectral(const).coeffs == 0)

    def test_two_mode_field_coefficients(self, grid):
        f = field_from_function(grid, lambda x, y: np.cos(x) + np.sin(2 * y))
        c = f.coeffs.copy()
        # cos x -> 1/2 at (k1, k2) = (+-1, 0); sin 2y -> -+ i/2 at (0, +-2)
        assert c[0, 1] == pytest.approx(0.5, abs=1e-14)
        assert c[0, -1] == pytest.approx(0.5, abs=1e-14)
        assert c[2, 0] == pytest.approx(-0.5j, abs=1e-14)
        assert c[-2, 0] == pytest.approx(0.5j, abs=1e-14)
        c[0, 1] = c[0, -1] = c[2, 0] = c[-2, 0] = 0
        assert np.max(np.abs(c)) < 1e-13

    def test_hermitian_symmetry_and_zero_mean_enforced(self, grid):
        rng = np.random.default_rng(11)
        raw = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
        f = FourierField(grid, raw)
        c = f.coeffs
        assert c[0, 0] == 0
        mirrored = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
        assert np.allclose(c, np.conj(mirrored), atol=1e-14)
        assert np.all(c[grid.nyquist] == 0)

    def test_grid_mismatch(self):
        a = zero_field(wave_grid(32))
        b = zero_field(wave_grid(64))
        with pytest.raises(GridMismatchError):
            _ = a + b

    def test_refine_preserves_coefficients(self, grid):
        phi = random_fields(grid, 1, seed=4)[0]
        big = refine(phi, 64)
        assert sobolev_norm(big, 0.0) == pytest.approx(sobolev_norm(phi, 0.0),
                                                       rel=1e-13)
        assert sobolev_norm(big, 1.3) == pytest.approx(sobolev_norm(phi, 1.3),
                                                       rel=1e-13)


class TestSnapshotFormat:
    def test_bit_exact_round_trip(self, grid, tmp_path):
        rng = np.random.default_rng(9)
        phys = PhysicalField(grid, rng.standard_normal((grid.n, grid.n)))
        path = tmp_path / "state.sqgf"
        write_snapshot(path, phys, 12.5)
        loaded, time = read_snapshot(path)
        assert time == 12.5
        assert loaded.values.tobytes() == phys.values.tobytes()
        # and the file itself round-trips bit-exactly
        write_snapshot(tmp_path / "again.sqgf", loaded, time)
        assert (tmp_path / "again.sqgf").read_bytes() == path.read_bytes()

    def test_header_layout(self, grid, tmp_path):
        phys = PhysicalField(grid, np.zeros((grid.n, grid.n)))
        path = tmp_path / "state.sqgf"
        write_snapshot(path, phys, 3.0)
        blob = path.read_bytes()
        assert blob[:4] == b"SQGF"
        assert int.from_bytes(blob[4:8], "little") == 1
        assert int.from_bytes(blob[8:12], "little") == grid.n
        assert len(blob) == 20 + 8 * grid.n * grid.n

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.sqgf"
        path.write_bytes(b"NOPE" + bytes(16))
        with pytest.raises(SnapshotFormatError):
            read_snapshot(path)

    def test_truncated_rejected(self, grid, tmp_path):
        path = tmp_path / "trunc.sqgf"
        write_snapshot(path, PhysicalField(grid, np.zeros((grid.n, grid.n))), 0.0)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(SnapshotFormatError):
            read_snapshot(path)
