"""Mean-zero scalar fields on the 2*pi-periodic torus, stored spectrally.

The domain is fixed at [-pi, pi]^2, so wavevectors are the integer lattice
and every operator of interest (fractional Laplacian, Riesz transforms,
derivatives) is a diagonal multiplier on the Fourier coefficients.

Conventions:

* ``FourierField.coeffs[j, i]`` is the analytic Fourier coefficient
  ``(1/4pi^2) int exp(-i k.x) phi(x) dx`` at wavevector ``k = (k1[i], k2[j])``,
  so that ``phi(x) = sum_k coeffs(k) exp(i k.x)``.  Axis 0 is y, axis 1 is x,
  matching the row-major (y outer, x inner) physical layout.
* Fields are real valued (Hermitian coefficient symmetry) and mean zero
  (``coeffs[0, 0] == 0`` exactly).
* The Nyquist row/column ``k = -n/2`` is always zeroed; it cannot be assigned
  a symmetric partner and would pollute odd derivatives.

Fields are immutable once constructed and all operations are pure functions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft


class GridMismatchError(ValueError):
    """Two fields from different grids were combined."""


class SnapshotFormatError(ValueError):
    """An SQGF snapshot file is malformed."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class WaveGrid:
    """Square collocation/wavevector grid with cached spectral multipliers.

    Do not construct directly in loops: use :func:`wave_grid`, which caches
    one instance per size so grid identity can be checked with ``is``.
    """

    def __init__(self, n: int):
        if not _is_power_of_two(n) or n < 8:
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")
        self.n = n
        k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        self.k1 = k[np.newaxis, :] * np.ones((n, 1), dtype=np.int64)  # x wavenumber
        self.k2 = k[:, np.newaxis] * np.ones((1, n), dtype=np.int64)  # y wavenumber
        self.kmag = np.hypot(self.k1, self.k2)
        # (-1)^(k1+k2) converts between FFT-of-samples on [-pi,pi) and
        # analytic coefficients; n is even so index parity equals k parity.
        self.phase = np.where((self.k1 + self.k2) % 2 == 0, 1.0, -1.0)
        self.nyquist = (self.k1 == -n // 2) | (self.k2 == -n // 2)
        self.dx = 2.0 * np.pi / n
        x = -np.pi + self.dx * np.arange(n)
        self.x, self.y = np.meshgrid(x, x)  # [j, i] = (y_j, x_i)
        self._multipliers: dict[float, np.ndarray] = {}
        for arr in (self.k1, self.k2, self.kmag, self.phase, self.nyquist,
                    self.x, self.y):
            arr.flags.writeable = False

    def multiplier(self, s: float) -> np.ndarray:
        """|k|^s with the k=0 entry set to zero (Riesz convention for s<0)."""
        s = float(s)
        cached = self._multipliers.get(s)
        if cached is None:
            with np.errstate(divide="ignore"):
                cached = np.where(self.kmag > 0, self.kmag, 1.0) ** s
            cached[0, 0] = 0.0
            cached.flags.writeable = False
            self._multipliers[s] = cached
        return cached

    def __repr__(self):
        return f"WaveGrid(n={self.n})"


_GRIDS: dict[int, WaveGrid] = {}


def wave_grid(n: int) -> WaveGrid:
    """Shared grid instance for size ``n``."""
    grid = _GRIDS.get(n)
    if grid is None:
        grid = _GRIDS.setdefault(n, WaveGrid(n))
    return grid


def _check_same_grid(a, b):
    if a.grid is not b.grid and a.grid.n != b.grid.n:
        raise GridMismatchError(f"grid sizes differ: {a.grid.n} vs {b.grid.n}")


def _hermitize(c: np.ndarray) -> np.ndarray:
    """Project onto Hermitian-symmetric arrays: c(-k) = conj(c(k))."""
    mirrored = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
    return 0.5 * (c + np.conj(mirrored))


@dataclass(frozen=True)
class FourierField:
    """Immutable real-valued, mean-zero field in spectral representation."""

    grid: WaveGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"coefficient array must be {self.grid.n}x{self.grid.n}")
        c = _hermitize(c)
        c[self.grid.nyquist] = 0.0
        c[0, 0] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @staticmethod
    def _wrap(grid: WaveGrid, coeffs: np.ndarray) -> "FourierField":
        """Fast path for arrays already satisfying the invariants."""
        field = object.__new__(FourierField)
        coeffs.flags.writeable = False
        object.__setattr__(field, "grid", grid)
        object.__setattr__(field, "coeffs", coeffs)
        return field

    def __add__(self, other: "FourierField") -> "FourierField":
        _check_same_grid(self, other)
        return FourierField._wrap(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "FourierField") -> "FourierField":
        _check_same_grid(self, other)
        return FourierField._wrap(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "FourierField":
        return FourierField._wrap(self.grid, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "FourierField":
        return FourierField._wrap(self.grid, -self.coeffs)


@dataclass(frozen=True)
class PhysicalField:
    """Real samples on the uniform n x n collocation grid (y outer, x inner)."""

    grid: WaveGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"value array must be {self.grid.n}x{self.grid.n}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def zero_field(grid: WaveGrid) -> FourierField:
    return FourierField._wrap(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))


# -- transforms ------------------------------------------------------------

def _coeffs_to_values(grid: WaveGrid, coeffs: np.ndarray) -> np.ndarray:
    return np.real(_fft.ifft2(coeffs * grid.phase, norm="forward"))


def _values_to_coeffs(grid: WaveGrid, values: np.ndarray) -> np.ndarray:
    return _fft.fft2(values, norm="forward") * grid.phase


def to_physical(field: FourierField) -> PhysicalField:
    """Inverse transform to collocation samples."""
    return PhysicalField(field.grid, _coeffs_to_values(field.grid, field.coeffs))


def to_spectral(phys: PhysicalField) -> FourierField:
    """Forward transform; projects the mean to zero and enforces symmetry."""
    return FourierField(phys.grid, _values_to_coeffs(phys.grid, phys.values))


def field_from_function(grid: WaveGrid, fn) -> FourierField:
    """Sample ``fn(x, y)`` on the grid and transform."""
    return to_spectral(PhysicalField(grid, fn(grid.x, grid.y)))


# -- spectral operators ------------------------------------------------------

def fractional_laplacian(field: FourierField, s: float) -> FourierField:
    """Apply the multiplier |k|^s (Riesz potential for s < 0)."""
    return FourierField._wrap(field.grid, field.coeffs * field.grid.multiplier(s))


def partial_x(field: FourierField) -> FourierField:
    return FourierField._wrap(field.grid, 1j * field.grid.k1 * field.coeffs)


def partial_y(field: FourierField) -> FourierField:
    return FourierField._wrap(field.grid, 1j * field.grid.k2 * field.coeffs)


def riesz_perp(field: FourierField) -> tuple[FourierField, FourierField]:
    """Divergence-free velocity (-R2, R1) applied to a scalar field.

    The Riesz transform R_j has multiplier -i k_j/|k|, so the components are
    u1_hat = i k2/|k| theta_hat and u2_hat = -i k1/|k| theta_hat, which
    preserve the pointwise coefficient modulus.
    """
    grid = field.grid
    inv = grid.multiplier(-1.0)
    u1 = FourierField._wrap(grid, 1j * grid.k2 * inv * field.coeffs)
    u2 = FourierField._wrap(grid, -1j * grid.k1 * inv * field.coeffs)
    return u1, u2


# -- norms -------------------------------------------------------------------

def sobolev_norm(field: FourierField, s: float) -> float:
    """Homogeneous Sobolev norm sqrt(4 pi^2 sum_k |k|^(2s) |coeff|^2)."""
    w = field.grid.multiplier(2.0 * s)
    return float(np.sqrt(4.0 * np.pi**2 * np.sum(w * np.abs(field.coeffs) ** 2)))


def lp_norm(phys: PhysicalField, p: float) -> float:
    """Lebesgue norm by uniform-grid quadrature (cell area (2 pi/n)^2)."""
    if p == np.inf:
        return float(np.max(np.abs(phys.values)))
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    cell = phys.grid.dx**2
    return float((np.sum(np.abs(phys.values) ** p) * cell) ** (1.0 / p))


def inner_product(a: PhysicalField, b: PhysicalField) -> float:
    """L2 pairing int a*b dx by grid quadrature."""
    _check_same_grid(a, b)
    return float(np.sum(a.values * b.values) * a.grid.dx**2)


def refine(field: FourierField, n_target: int) -> FourierField:
    """Re-express a field on a finer grid by zero-padding its spectrum.

    Exact (no interpolation error): the field is a trigonometric polynomial
    and keeps the same coefficients.
    """
    n = field.grid.n
    if n_target < n:
        raise ValueError("refine target must be at least the current size")
    if n_target == n:
        return field
    big_grid = wave_grid(n_target)
    half = n // 2
    c = np.zeros((n_target, n_target), dtype=np.complex128)
    c[:half, :half] = field.coeffs[:half, :half]
    c[:half, n_target - half:] = field.coeffs[:half, half:]
    c[n_target - half:, :half] = field.coeffs[half:, :half]
    c[n_target - half:, n_target - half:] = field.coeffs[half:, half:]
    return FourierField._wrap(big_grid, c)


# -- random band-limited fields ----------------------------------------------

def random_band_limited(grid: WaveGrid, kmax: int, rng: np.random.Generator,
                        kmin: int = 1, norm: float | None = 1.0) -> FourierField:
    """Random zero-mean field supported on kmin <= |k| <= kmax.

    Coefficients are complex Gaussian with a mild 1/|k| falloff; if ``norm``
    is given the field is rescaled to that L2 norm.
    """
    n = grid.n
    c = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    band = (grid.kmag >= kmin) & (grid.kmag <= kmax) & ~grid.nyquist
    c = np.where(band, c / np.maximum(grid.kmag, 1.0), 0.0)
    field = FourierField(grid, c)
    if norm is not None:
        current = sobolev_norm(field, 0.0)
        if current == 0.0:
            raise ValueError("empty band: no modes with kmin <= |k| <= kmax")
        field = field * (norm / current)
    return field


# -- SQGF snapshot format ------------------------------------------------------
#
# bytes 0-3   magic "SQGF"
# bytes 4-7   u32 little-endian version (1)
# bytes 8-11  u32 little-endian n
# bytes 12-19 f64 little-endian time
# then n*n f64 little-endian physical values, row-major (y outer, x inner)

_SQGF_MAGIC = b"SQGF"
_SQGF_VERSION = 1
_SQGF_HEADER = struct.Struct("<4sIId")


def write_snapshot(path, phys: PhysicalField, time: float) -> None:
    """Write a bit-exact SQGF snapshot of a physical field."""
    with open(path, "wb") as fh:
        fh.write(_SQGF_HEADER.pack(_SQGF_MAGIC, _SQGF_VERSION, phys.grid.n, time))
        fh.write(np.ascontiguousarray(phys.values, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[PhysicalField, float]:
    """Read an SQGF snapshot, returning the field and its timestamp."""
    with open(path, "rb") as fh:
        header = fh.read(_SQGF_HEADER.size)
        if len(header) != _SQGF_HEADER.size:
            raise SnapshotFormatError(f"{path}: truncated header")
        magic, version, n, time = _SQGF_HEADER.unpack(header)
        if magic != _SQGF_MAGIC:
            raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
        if version != _SQGF_VERSION:
            raise SnapshotFormatError(f"{path}: unsupported version {version}")
        payload = fh.read(8 * n * n)
    if len(payload) != 8 * n * n:
        raise SnapshotFormatError(f"{path}: truncated payload")
    values = np.frombuffer(payload, dtype="<f8").reshape(n, n).astype(np.float64)
    return PhysicalField(wave_grid(n), values), time
