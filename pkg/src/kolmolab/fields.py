"""Sampled fields on a periodic box with dual physical/frequency representations.

The box is [-L, L]^d with N points per axis; frequency modes live on the
lattice (pi/L) * {-N/2, ..., N/2 - 1}.  The transform is unitary, so the
Plancherel identity holds with constant 1 in the weighted quadrature norms
used throughout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import BlockRangeError, RepresentationError

PHYSICAL = "physical"
FREQUENCY = "frequency"

_MAGIC = b"KLF1"


@dataclass(frozen=True)
class BoxGrid:
    """Uniform periodic grid on [-L, L]^d."""

    dim: int
    half_length: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dim}")
        n = self.points_per_axis
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"points per axis must be a power of two >= 8, got {n}")
        if self.half_length <= 0:
            raise ValueError("half length must be positive")

    @property
    def n_total(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def dv(self) -> float:
        return 2.0 * self.half_length / self.points_per_axis

    @property
    def dxi(self) -> float:
        """Mode spacing pi / L."""
        return np.pi / self.half_length

    @property
    def nyquist(self) -> float:
        """Largest resolvable frequency magnitude per axis."""
        return self.dxi * self.points_per_axis / 2

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @cached_property
    def axis_points(self) -> np.ndarray:
        n = self.points_per_axis
        return -self.half_length + 2.0 * self.half_length * np.arange(n) / n

    @cached_property
    def axis_freqs(self) -> np.ndarray:
        """Frequencies in FFT order."""
        n = self.points_per_axis
        return 2.0 * np.pi * np.fft.fftfreq(n, d=self.dv)

    def coord_mesh(self, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis] = self.points_per_axis
        return self.axis_points.reshape(shape)

    def freq_mesh(self, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis] = self.points_per_axis
        return self.axis_freqs.reshape(shape)

    @cached_property
    def phys_radius(self) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for ax in range(self.dim):
            r2 = r2 + self.coord_mesh(ax) ** 2
        return np.sqrt(r2)

    @cached_property
    def freq_radius(self) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for ax in range(self.dim):
            r2 = r2 + self.freq_mesh(ax) ** 2
        return np.sqrt(r2)

    def phys_weight(self, l: float) -> np.ndarray:
        """Polynomial weight <v>^l = (1 + |v|^2)^(l/2) at the grid points."""
        return (1.0 + self.phys_radius**2) ** (l / 2.0)

    def freq_weight(self, m: float) -> np.ndarray:
        return (1.0 + self.freq_radius**2) ** (m / 2.0)

    @cached_property
    def _alt_phase(self) -> np.ndarray:
        """Product of per-axis (-1)^m factors linking the FFT to the box transform."""
        n = self.points_per_axis
        sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        out = np.ones(self.shape)
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = n
            out = out * sign.reshape(shape)
        return out


@dataclass(frozen=True)
class SpectralField:
    """Immutable complex-valued field with a representation tag."""

    grid: BoxGrid
    samples: np.ndarray
    representation: str = PHYSICAL
    declared_real: bool = False

    def __post_init__(self):
        if self.representation not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown representation {self.representation!r}")
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.shape != self.grid.shape:
            raise ValueError(f"samples shape {arr.shape} != grid shape {self.grid.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def cell(self) -> float:
        g = self.grid
        return (g.dv if self.representation == PHYSICAL else g.dxi) ** g.dim

    def with_samples(self, samples: np.ndarray, representation: str | None = None) -> "SpectralField":
        return replace(
            self,
            samples=samples,
            representation=self.representation if representation is None else representation,
        )


def require_representation(field: SpectralField, representation: str, op: str) -> None:
    if field.representation != representation:
        raise RepresentationError(
            f"{op} requires a {representation} field, got {field.representation}"
        )


def field_from_samples(grid: BoxGrid, samples: np.ndarray, real: bool = False) -> SpectralField:
    return SpectralField(grid, samples, PHYSICAL, declared_real=real)


def field_from_callable(grid: BoxGrid, fn: Callable[..., np.ndarray], real: bool = True) -> SpectralField:
    coords = [grid.coord_mesh(ax) for ax in range(grid.dim)]
    values = np.broadcast_to(fn(*coords), grid.shape)
    return SpectralField(grid, values, PHYSICAL, declared_real=real)


def gaussian_field(grid: BoxGrid, sigma: float = 1.0, amplitude: float = 1.0) -> SpectralField:
    values = amplitude * np.exp(-grid.phys_radius**2 / (2.0 * sigma**2))
    return SpectralField(grid, values, PHYSICAL, declared_real=True)


def zero_field(grid: BoxGrid) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape), PHYSICAL, declared_real=True)


def to_frequency(field: SpectralField) -> SpectralField:
    """Unitary transform to the frequency representation."""
    require_representation(field, PHYSICAL, "to_frequency")
    g = field.grid
    scale = (2.0 * np.pi) ** (-g.dim / 2.0) * g.dv**g.dim
    hat = g._alt_phase * np.fft.fftn(field.samples) * scale
    return field.with_samples(hat, FREQUENCY)


def to_physical(field: SpectralField) -> SpectralField:
    require_representation(field, FREQUENCY, "to_physical")
    g = field.grid
    scale = (2.0 * np.pi) ** (-g.dim / 2.0) * g.dxi**g.dim * g.n_total
    values = np.fft.ifftn(g._alt_phase * field.samples) * scale
    return field.with_samples(values, PHYSICAL)


def l2_norm(field: SpectralField) -> float:
    """L2 norm under the box quadrature (same value in either representation)."""
    return float(np.sqrt(np.sum(np.abs(field.samples) ** 2) * field.cell))


def inner_product(f: SpectralField, g: SpectralField) -> complex:
    if f.representation != g.representation:
        raise RepresentationError("inner product requires matching representations")
    return complex(np.sum(f.samples * np.conj(g.samples)) * f.cell)


def mass(field: SpectralField) -> complex:
    """Integral of the field over the box."""
    if field.representation == PHYSICAL:
        return complex(np.sum(field.samples) * field.cell)
    g = field.grid
    return complex(field.samples[(0,) * g.dim] * (2.0 * np.pi) ** (g.dim / 2.0))


def apply_weight(field: SpectralField, l: float) -> SpectralField:
    """Multiply pointwise by <v>^l."""
    require_representation(field, PHYSICAL, "apply_weight")
    return field.with_samples(field.samples * field.grid.phys_weight(l))


def spectral_derivative(field: SpectralField, alpha: tuple[int, ...]) -> SpectralField:
    """Exact derivative of the trigonometric interpolant, multi-index alpha."""
    require_representation(field, PHYSICAL, "spectral_derivative")
    g = field.grid
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != g.dim or any(a < 0 for a in alpha):
        raise ValueError(f"alpha must be a nonnegative multi-index of length {g.dim}")
    if sum(alpha) > 6:
        raise BlockRangeError(f"derivative order |alpha|={sum(alpha)} exceeds the supported 6")
    if sum(alpha) == 0:
        return field
    hat = to_frequency(field).samples.copy()
    for ax, a in enumerate(alpha):
        if a:
            hat = hat * (1j * g.freq_mesh(ax)) ** a
    return to_physical(field.with_samples(hat, FREQUENCY))


@dataclass(frozen=True)
class WeightedNormParams:
    """Regularity order m and polynomial weight exponent l."""

    m: float
    l: float


def sobolev_norm(field: SpectralField, params: WeightedNormParams) -> float:
    """Weighted Sobolev norm ||<D>^m (<v>^l f)||_{L2}.

    Weight applied in physical space, then the <xi>^m multiplier in
    frequency space; the value follows from Plancherel.
    """
    require_representation(field, PHYSICAL, "sobolev_norm")
    weighted = apply_weight(field, params.l)
    hat = to_frequency(weighted)
    g = field.grid
    wh = hat.samples * g.freq_weight(params.m)
    return float(np.sqrt(np.sum(np.abs(wh) ** 2) * g.dxi**g.dim))


def hermitian_residual(field: SpectralField) -> float:
    """Max deviation of frequency data from Hermitian symmetry, relative."""
    require_representation(field, FREQUENCY, "hermitian_residual")
    h = field.samples
    sym = h
    for ax in range(field.grid.dim):
        sym = np.roll(np.flip(sym, axis=ax), 1, axis=ax)
    scale = np.max(np.abs(h))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(h - np.conj(sym))) / scale)


def boundary_max(field: SpectralField) -> float:
    """Largest |f| on the outermost grid layer; monitors box wrap-around."""
    require_representation(field, PHYSICAL, "boundary_max")
    s = np.abs(field.samples)
    worst = 0.0
    for ax in range(field.grid.dim):
        sl_lo = [slice(None)] * field.grid.dim
        sl_lo[ax] = 0
        sl_hi = list(sl_lo)
        sl_hi[ax] = -1
        worst = max(worst, float(s[tuple(sl_lo)].max()), float(s[tuple(sl_hi)].max()))
    return worst


def save_field(field: SpectralField, path) -> None:
    """Flat binary container: header + little-endian complex64 payload."""
    g = field.grid
    rep = 0 if field.representation == PHYSICAL else 1
    header = _MAGIC + struct.pack(
        "<BIdBB", g.dim, g.points_per_axis, g.half_length, rep, int(field.declared_real)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.samples).astype("<c8").tobytes())


def load_field(path) -> SpectralField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad field container magic {magic!r}")
        dim, n, half_length, rep, real = struct.unpack("<BIdBB", fh.read(15))
        grid = BoxGrid(dim, half_length, n)
        payload = np.frombuffer(fh.read(), dtype="<c8").astype(np.complex128)
    samples = payload.reshape(grid.shape)
    representation = PHYSICAL if rep == 0 else FREQUENCY
    return SpectralField(grid, samples, representation, declared_real=bool(real))


def export_abs_slices_csv(field: SpectralField, path) -> None:
    """CSV of |f| along center-line cuts, one block per axis."""
    require_representation(field, PHYSICAL, "export_abs_slices_csv")
    g = field.grid
    mid = g.points_per_axis // 2
    lines = ["axis,coord,abs"]
    for ax in range(g.dim):
        idx = [mid] * g.dim
        for i, v in enumerate(g.axis_points):
            idx[ax] = i
            lines.append(f"{ax},{v!r},{abs(field.samples[tuple(idx)])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
