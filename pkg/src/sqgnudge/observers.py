"""Interpolant observation operators at spatial resolution h.

Two families are provided:

* ``SpectralProjection`` -- zero every coefficient with max(|k1|, |k2|) > K.
  The resolution-to-cutoff map is K(h) = ceil(1/h), which makes the
  approximation-of-identity bound hold with constant exactly one.
* ``VolumeElements`` / ``ShiftedVolumeElements`` -- weighted local averages
  against a smooth partition of unity on an h-grid of squares.  Each bump is
  the indicator of its square mollified by a compactly supported smooth
  kernel of radius eps = h/10, sampled on the collocation grid and
  renormalized so the pointwise sum is exactly one.  The shifted variant
  replaces each bump by its mean-free part so the output is mean zero by
  construction.

Operators are immutable after construction and ``apply`` is pure.  For the
observation buffers they also expose a compact encoding (``observe`` /
``reconstruct``): retained spectral modes for the projection, per-square
weights for volume elements.  Both are linear, so time averages can be taken
on the encodings.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .spectral import (
    FourierField,
    PhysicalField,
    WaveGrid,
    sobolev_norm,
    to_physical,
    to_spectral,
)

log = logging.getLogger(__name__)


class GridAlignmentError(ValueError):
    """The square size h does not align with the collocation grid."""


class HypothesisViolationError(ValueError):
    """A configuration violates one of the standing hypotheses."""


# -- partition of unity --------------------------------------------------------

@dataclass(frozen=True)
class PartitionOfUnity:
    """Smooth bumps on an m x m grid of squares of side h = 2 pi / m.

    Only the canonical bump (square at the corner of the domain) is stored;
    every other bump is an exact grid translate of it, and the pointwise sum
    of all translates is one by construction.
    """

    grid: WaveGrid
    m: int
    h: float
    epsilon: float
    base: np.ndarray        # normalized bump for square alpha = (0, 0)
    square_integral: float  # common value of int psi_alpha dx

    @property
    def block(self) -> int:
        """Grid points per square side."""
        return self.grid.n // self.m

    @property
    def n_squares(self) -> int:
        return self.m * self.m

    def bump(self, i: int, j: int) -> np.ndarray:
        """Sampled psi_alpha for square alpha = (i, j), i along x, j along y."""
        return np.roll(self.base, (j * self.block, i * self.block), axis=(0, 1))

    def sum_of_bumps(self) -> np.ndarray:
        """Pointwise sum over all squares (should be identically one)."""
        b = self.block
        folded = self.base.reshape(self.m, b, self.m, b).sum(axis=(0, 2))
        return np.tile(folded, (self.m, self.m))


def build_partition(h: float, grid: WaveGrid, *,
                    allow_large_h: bool = False) -> PartitionOfUnity:
    """Construct the partition of unity for squares of side h = 2 pi / m.

    Requires m >= 3 and m | n so square boundaries fall on grid lines.  The
    standing hypotheses need h < pi/4; pass ``allow_large_h=True`` to build
    coarser partitions for diagnostics anyway.
    """
    m = int(round(2.0 * np.pi / h))
    if m < 3 or abs(2.0 * np.pi / m - h) > 1e-12 * h:
        raise GridAlignmentError(f"h={h} is not 2*pi/m for an integer m >= 3")
    if grid.n % m != 0:
        raise GridAlignmentError(f"m={m} does not divide the grid size n={grid.n}")
    if h >= np.pi / 4 and not allow_large_h:
        raise HypothesisViolationError(
            f"h={h:.6g} >= pi/4 violates the observation-resolution hypothesis")

    n = grid.n
    block = n // m
    eps = h / 10.0
    dx = grid.dx

    indicator = np.zeros((n, n))
    indicator[:block, :block] = 1.0

    # smooth bump kernel exp(-1/(1-(r/eps)^2)) truncated at r = eps, sampled
    # at torus offsets; degenerates to a delta when eps < dx
    off = dx * np.minimum(np.arange(n), n - np.arange(n))
    r2 = (off[:, None] ** 2 + off[None, :] ** 2) / eps**2
    with np.errstate(divide="ignore", over="ignore"):
        kernel = np.where(r2 < 1.0, np.exp(-1.0 / np.maximum(1.0 - r2, 1e-300)), 0.0)
    if kernel.sum() == 0.0:
        kernel[0, 0] = 1.0
    kernel /= kernel.sum()

    base = _fft.irfft2(_fft.rfft2(indicator) * _fft.rfft2(kernel), s=(n, n))
    base = np.clip(base, 0.0, 1.0)

    # renormalize by the (block-periodic) sum over all translates
    folded = base.reshape(m, block, m, block).sum(axis=(0, 2))
    base = base / np.tile(folded, (m, m))
    base.flags.writeable = False

    return PartitionOfUnity(grid=grid, m=m, h=2.0 * np.pi / m, epsilon=eps,
                            base=base, square_integral=float(base.sum() * dx**2))


# -- operators -----------------------------------------------------------------

class InterpolantOperator:
    """Base class: linear observation operator J_h on torus fields."""

    h: float
    variant: str

    def apply(self, field: FourierField) -> FourierField:
        raise NotImplementedError

    def apply_physical(self, phys: PhysicalField) -> PhysicalField:
        raise NotImplementedError

    def observe(self, field: FourierField) -> np.ndarray:
        """Compact linear encoding of J_h(field) for buffering."""
        raise NotImplementedError

    def reconstruct(self, vec: np.ndarray) -> FourierField:
        """Invert :meth:`observe` back to a full spectral field."""
        raise NotImplementedError

    def describe(self) -> dict[str, str]:
        raise NotImplementedError


class SpectralProjection(InterpolantOperator):
    """Projection onto modes with max(|k1|, |k2|) <= K; h = 1/K."""

    variant = "spectral"

    def __init__(self, cutoff: int, grid: WaveGrid):
        if cutoff < 1 or 2 * cutoff + 1 > grid.n:
            raise ValueError(f"cutoff must satisfy 1 <= K < n/2, got {cutoff}")
        self.cutoff = cutoff
        self.grid = grid
        self.h = 1.0 / cutoff
        self._keep = ((np.abs(grid.k1) <= cutoff)
                      & (np.abs(grid.k2) <= cutoff)).astype(np.float64)
        self._idx = np.concatenate([np.arange(cutoff + 1),
                                    np.arange(grid.n - cutoff, grid.n)])

    def apply(self, field: FourierField) -> FourierField:
        return FourierField._wrap(field.grid, field.coeffs * self._keep)

    def apply_physical(self, phys: PhysicalField) -> PhysicalField:
        c = _fft.fft2(phys.values, norm="forward") * self._keep
        return PhysicalField(phys.grid, np.real(_fft.ifft2(c, norm="forward")))

    def observe(self, field: FourierField) -> np.ndarray:
        return field.coeffs[np.ix_(self._idx, self._idx)].copy()

    def reconstruct(self, vec: np.ndarray) -> FourierField:
        c = np.zeros((self.grid.n, self.grid.n), dtype=np.complex128)
        c[np.ix_(self._idx, self._idx)] = vec
        c[0, 0] = 0.0
        return FourierField._wrap(self.grid, c)

    def describe(self) -> dict[str, str]:
        return {"operator": self.variant, "cutoff_k": str(self.cutoff),
                "h": repr(self.h)}


class VolumeElements(InterpolantOperator):
    """Smooth volume-element interpolant sum_a (phi weighted-average_a) psi_a.

    The spectral-field output is re-projected to zero mean so downstream
    norms stay in the homogeneous scale; ``removes_mean`` records this.
    ``apply_physical`` is the raw (pre-mean-removal) path.
    """

    variant = "volume"
    removes_mean = True

    def __init__(self, pou: PartitionOfUnity):
        self.pou = pou
        self.grid = pou.grid
        self.h = pou.h
        self._base_f = _fft.rfft2(pou.base)
        log.debug("volume-element interpolant re-projects output to zero mean")

    def _weights(self, values: np.ndarray) -> np.ndarray:
        corr = _fft.irfft2(_fft.rfft2(values) * np.conj(self._base_f),
                           s=(self.grid.n, self.grid.n))
        b = self.pou.block
        return corr[::b, ::b] * self.grid.dx**2 / self.pou.square_integral

    def _synthesize(self, weights: np.ndarray) -> np.ndarray:
        b = self.pou.block
        lattice = np.zeros((self.grid.n, self.grid.n))
        lattice[::b, ::b] = weights
        return _fft.irfft2(_fft.rfft2(lattice) * self._base_f,
                           s=(self.grid.n, self.grid.n))

    def apply(self, field: FourierField) -> FourierField:
        return to_spectral(self.apply_physical(to_physical(field)))

    def apply_physical(self, phys: PhysicalField) -> PhysicalField:
        return PhysicalField(self.grid, self._synthesize(self._weights(phys.values)))

    def observe(self, field: FourierField) -> np.ndarray:
        return self._weights(to_physical(field).values)

    def reconstruct(self, vec: np.ndarray) -> FourierField:
        return to_spectral(PhysicalField(self.grid, self._synthesize(vec)))

    def describe(self) -> dict[str, str]:
        return {"operator": self.variant, "squares_m": str(self.pou.m),
                "h": repr(self.h), "epsilon_rule": "h/10"}


class ShiftedVolumeElements(VolumeElements):
    """Volume elements with mean-free bumps; output mean zero exactly."""

    variant = "shifted_volume"
    removes_mean = False

    def apply_physical(self, phys: PhysicalField) -> PhysicalField:
        w = self._weights(phys.values)
        out = self._synthesize(w)
        bump_mean = self.pou.square_integral / (4.0 * np.pi**2)
        return PhysicalField(self.grid, out - bump_mean * w.sum())

    def describe(self) -> dict[str, str]:
        d = super().describe()
        d["operator"] = self.variant
        return d


def approx_identity_error(op: InterpolantOperator, phi: FourierField,
                          beta: float) -> tuple[float, float]:
    """L2 distance ||phi - J_h phi|| and its ratio to h^beta ||phi||_{H^beta}."""
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    denom = op.h**beta * sobolev_norm(phi, beta)
    if denom == 0.0:
        raise ValueError("phi must have a positive H^beta norm")
    error = sobolev_norm(phi - op.apply(phi), 0.0)
    return error, error / denom


def measure_identity_constants(op: InterpolantOperator, fields,
                               betas=(0.0, 0.5, 1.0)) -> dict[float, float]:
    """Empirical operator-norm ratios over a field sample.

    beta = 0 measures the L2 stability constant sup ||J phi|| / ||phi||; for
    beta > 0 it is the approximation-of-identity ratio.  Diagnostic only.
    """
    worst = {float(b): 0.0 for b in betas}
    for phi in fields:
        norm0 = sobolev_norm(phi, 0.0)
        for b in betas:
            if b == 0.0:
                if norm0 > 0:
                    ratio = sobolev_norm(op.apply(phi), 0.0) / norm0
                else:
                    ratio = 0.0
            else:
                _, ratio = approx_identity_error(op, phi, b)
            worst[b] = max(worst[b], ratio)
    return worst
