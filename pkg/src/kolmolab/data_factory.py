"""Constructors for rough, slowly decaying initial data.

The data are lacunary sums of wave packets: packet j oscillates at the
middle of dyadic frequency block j along the first axis and sits in the
phase shell just above radius 2^(a j), so its block energy lands at (j, k)
with k = floor(a j) + 1.  With
square-summable shell coefficients the sum stays bounded in the weighted
L^2_l norm while the divergence functional

    S_J = sum_{j<=J} sum_{l>a j} 2^{(2 l a + eps) j} ||F_j P_l f||^2

grows without bound: the quantitative signature of "rough and slowly
decaying".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .dyadic import (
    DEFAULT_PROFILE,
    DyadicProfile,
    block_energy_matrix,
    covering_phase_blocks,
    freq_multiplier,
    max_freq_block,
    max_phase_block,
    phase_multiplier,
)
from .errors import BlockRangeError
from .fields import (
    BoxGrid,
    SpectralField,
    field_from_samples,
    l2_norm,
    to_frequency,
)

AmplitudeLaw = Callable[[int], float]


def _default_law(decay: float, ratio: float) -> AmplitudeLaw:
    return lambda j: 2.0 ** (-decay * ratio * j) / j


def _critical_law(decay: float, ratio: float) -> AmplitudeLaw:
    """Borderline profile without the 1/j damping; used for pointwise fits."""
    return lambda j: 2.0 ** (-decay * ratio * j)


@dataclass(frozen=True)
class RoughDataSpec:
    """Parameters of a truncated rough slowly-decaying datum."""

    decay: float  # weighted-L2 exponent l
    eps: float  # roughness parameter in (0, 1)
    ratio: float  # phase/frequency ratio a
    trunc: int  # number of packets J
    width: float = 1.0  # envelope width (velocity units)
    amplitude: float = 1.0
    law: str = "default"  # 'default' (summable) or 'critical' (borderline)

    def __post_init__(self):
        if self.decay <= 0 or self.ratio <= 0 or self.width <= 0:
            raise ValueError("decay, ratio and width must be positive")
        if not (0.0 < self.eps < 1.0):
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.trunc < 1:
            raise ValueError("truncation must be >= 1")
        if self.law not in ("default", "critical"):
            raise ValueError(f"unknown amplitude law {self.law!r}")

    def coefficient(self, j: int) -> float:
        law = _default_law if self.law == "default" else _critical_law
        return self.amplitude * law(self.decay, self.ratio)(j)

    def shell_index(self, j: int) -> int:
        """Phase block holding packet j: the first integer above ratio * j."""
        return int(math.floor(self.ratio * j)) + 1

    def center(self, j: int) -> float:
        """Packet center 1.5 * 2^shell, the flat middle of its phase annulus."""
        return 1.5 * 2.0 ** self.shell_index(j)

    def carrier(self, j: int) -> float:
        """Carrier frequency 1.5 * 2^j: the flat middle of frequency block j.

        Sitting on the cutoff plateau makes the packet occupy exactly one
        frequency block; a carrier on the block edge would split between
        neighbours through the cutoff transition.
        """
        return 1.5 * 2.0**j


def partition_complete_radius(grid: BoxGrid, profile: DyadicProfile = DEFAULT_PROFILE) -> float:
    """Radius inside which the truncated phase partition sums exactly to 1."""
    k_cov = covering_phase_blocks(grid)
    return min(grid.half_length, profile.inner_edge * 2.0 ** (k_cov + 1))


def wave_packet(j: int, spec: RoughDataSpec, grid: BoxGrid) -> SpectralField:
    """Gaussian envelope of fixed width around the packet center, carrier 2^j e1.

    Peak amplitude is 1; callers scale and normalize.
    """
    if j < 1:
        raise ValueError("packet index must be >= 1")
    center = spec.center(j)
    w = spec.width
    if center + 6.0 * w > partition_complete_radius(grid):
        raise BlockRangeError(
            f"packet {j} (center {center:.1f}, width {w}) exceeds the usable box radius"
        )
    carrier = spec.carrier(j)
    if carrier + 4.0 / w > 0.95 * grid.nyquist:
        raise BlockRangeError(f"packet {j} carrier {carrier} too close to the Nyquist frequency")
    r2 = (grid.coord_mesh(0) - center) ** 2
    for ax in range(1, grid.dim):
        r2 = r2 + grid.coord_mesh(ax) ** 2
    envelope = np.exp(-r2 / (2.0 * w**2))
    phase = np.exp(1j * carrier * grid.coord_mesh(0))
    return field_from_samples(grid, envelope * phase)


def rough_data(spec: RoughDataSpec, grid: BoxGrid, nonneg: bool = False) -> SpectralField:
    """Truncated lacunary packet sum; optionally a nonnegative realization.

    Packets are L2-normalized before weighting so the shell coefficients
    control the weighted-norm increments directly.  The nonnegative mode
    takes the real part and adds a slowly decaying positive background that
    dominates the negative excursions without touching the high blocks.
    """
    total = np.zeros(grid.shape, dtype=np.complex128)
    for j in range(1, spec.trunc + 1):
        pkt = wave_packet(j, spec, grid)
        total = total + (spec.coefficient(j) / l2_norm(pkt)) * pkt.samples
    if not nonneg:
        return field_from_samples(grid, total)
    real_part = total.real
    background = (1.0 + grid.phys_radius**2) ** (-(spec.decay + grid.dim / 2.0 + 0.1) / 2.0)
    deficit = np.max(-real_part / background)
    amp = 1.05 * max(deficit, 0.0)
    values = real_part + amp * background
    return field_from_samples(grid, values, real=True)


def weighted_l2_norm(field: SpectralField, l: float) -> float:
    g = field.grid
    return float(
        np.sqrt(np.sum((g.phys_weight(l) * np.abs(field.samples)) ** 2) * g.dv**g.dim)
    )


def divergence_partial_sums(
    field: SpectralField,
    decay: float,
    eps: float,
    ratio: float,
    trunc: int,
    k_max: int | None = None,
    profile: DyadicProfile = DEFAULT_PROFILE,
) -> np.ndarray:
    """Partial sums S_1..S_J of the weighted block functional."""
    grid = field.grid
    if k_max is None:
        k_max = max_phase_block(grid)
    if trunc > max_freq_block(grid):
        raise BlockRangeError(f"truncation {trunc} beyond resolvable frequency blocks")
    spec = block_energy_matrix(field, trunc, k_max, profile)
    sums = np.zeros(trunc)
    running = 0.0
    for j in range(1, trunc + 1):
        weight = 2.0 ** ((2.0 * decay * ratio + eps) * j)
        tail = sum(spec.energy(j, l) for l in range(int(math.floor(ratio * j)) + 1, k_max + 1))
        running += weight * tail
        sums[j - 1] = running
    return sums


@dataclass(frozen=True)
class XModeSet:
    """Lacunary integer modes m_j = floor(2^((1-eps) j)) along the first axis."""

    eps: float
    trunc: int
    j_start: int
    modes: tuple[int, ...]

    @classmethod
    def build(cls, eps: float, trunc: int) -> "XModeSet":
        if not (0.0 < eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        j0 = 1
        while math.floor(2.0 ** ((1.0 - eps) * j0)) < 2:
            j0 += 1
        modes = tuple(math.floor(2.0 ** ((1.0 - eps) * j)) for j in range(j0, trunc + 1))
        if any(b <= a for a, b in zip(modes, modes[1:])):
            raise ValueError("mode sequence failed to be strictly increasing")
        return cls(eps, trunc, j0, modes)

    def mode(self, j: int) -> int:
        if j < self.j_start or j > self.trunc:
            raise ValueError(f"mode index {j} outside [{self.j_start}, {self.trunc}]")
        return self.modes[j - self.j_start]


def x_grid(n_points: int) -> BoxGrid:
    """Unit torus as a box of half-length 1/2; mode spacing is exactly 2*pi."""
    return BoxGrid(1, 0.5, n_points)


def lacunary_x_factor(trunc: int, eps: float, grid: BoxGrid) -> SpectralField:
    """Positive x-profile 100 + sum_j (ln m_j)^-2 * 2 cos(2 pi m_j x)."""
    if abs(grid.half_length - 0.5) > 1e-12 or grid.dim != 1:
        raise ValueError("x factor lives on the unit torus grid (dim 1, half length 1/2)")
    mode_set = XModeSet.build(eps, trunc)
    if mode_set.modes and mode_set.modes[-1] >= grid.points_per_axis // 2:
        raise BlockRangeError(
            f"largest mode {mode_set.modes[-1]} at or above the x Nyquist "
            f"{grid.points_per_axis // 2}"
        )
    x = grid.coord_mesh(0)
    values = np.full(grid.shape, 100.0)
    for m in mode_set.modes:
        values = values + (math.log(m)) ** (-2.0) * 2.0 * np.cos(2.0 * np.pi * m * x)
    return field_from_samples(grid, values, real=True)


def x_coefficient(field: SpectralField, m: int) -> complex:
    """Coefficient of e^{2 pi i m x} in the torus expansion of the field."""
    hat = to_frequency(field) if field.representation == "physical" else field
    n = field.grid.points_per_axis
    if not -n // 2 <= m < n // 2:
        raise BlockRangeError(f"mode {m} outside the resolvable lattice")
    return complex(hat.samples[m % n] * np.sqrt(2.0 * np.pi))


def random_band_limited_field(
    grid: BoxGrid,
    rng: np.random.Generator,
    j_range: Sequence[int] | None = None,
    k_range: Sequence[int] | None = None,
    equalize: bool = False,
) -> SpectralField:
    """Random superposition of dyadic-cell wave packets.

    One unit-norm packet per (j, k) cell, carrier near 1.5 * 2^j, envelope in
    the phase shell 2^k; amplitudes are lognormal unless `equalize` asks for
    identical cell energies.  These are the band-limited, phase-compact
    fields the block diagnostics are calibrated on.
    """
    if j_range is None:
        j_range = range(-1, max_freq_block(grid) + 1)
    if k_range is None:
        k_range = range(-1, max_phase_block(grid) + 1)
    total = np.zeros(grid.shape, dtype=np.complex128)
    for j in j_range:
        for k in k_range:
            carrier = 0.4 if j == -1 else 1.5 * 2.0**j
            radius = 0.0 if k == -1 else 1.5 * 2.0**k
            width = max(0.3 * 2.0 ** max(k, 0), 3.0 / 2.0 ** max(j, 0))
            direction = rng.standard_normal(grid.dim)
            direction /= np.linalg.norm(direction)
            center = radius * direction
            carrier_dir = rng.standard_normal(grid.dim)
            carrier_dir /= np.linalg.norm(carrier_dir)
            r2 = np.zeros(grid.shape)
            phase = np.zeros(grid.shape)
            for ax in range(grid.dim):
                r2 = r2 + (grid.coord_mesh(ax) - center[ax]) ** 2
                phase = phase + carrier * carrier_dir[ax] * grid.coord_mesh(ax)
            pkt = np.exp(-r2 / (2.0 * width**2)) * np.exp(1j * phase)
            norm = np.sqrt(np.sum(np.abs(pkt) ** 2) * grid.dv**grid.dim)
            if norm == 0.0:
                continue
            amp = 1.0 if equalize else rng.lognormal(0.0, 0.5)
            total = total + amp * np.exp(2j * np.pi * rng.random()) * pkt / norm
    return field_from_samples(grid, total)


def random_cell_noise_field(
    grid: BoxGrid,
    rng: np.random.Generator,
    j_range: Sequence[int],
    k_range: Sequence[int],
) -> SpectralField:
    """Sum of unit-norm doubly-localized white noise pieces P_k F_j w.

    Unlike the packet superposition, each piece fills its whole dyadic cell
    including the cutoff transition zones, which is where commutators act;
    every cell carries the same energy.
    """
    total = np.zeros(grid.shape, dtype=np.complex128)
    for j in j_range:
        for k in k_range:
            w = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
            hat = np.fft.fftn(w) * freq_multiplier(grid, j)
            piece = np.fft.ifftn(hat) * phase_multiplier(grid, k)
            norm = np.sqrt(np.sum(np.abs(piece) ** 2) * grid.dv**grid.dim)
            if norm > 0:
                total = total + piece / norm
    return field_from_samples(grid, total)


def scaled_tail(field_fn: Callable[[np.ndarray], np.ndarray], j: int, decay: float, grid: BoxGrid,
                profile: DyadicProfile = DEFAULT_PROFILE) -> SpectralField:
    """Dilated copy 2^(decay j) 2^(j d / 2) f(2^j v) with the unit ball removed."""
    scale = 2.0**j
    r2 = np.zeros(grid.shape)
    for ax in range(grid.dim):
        r2 = r2 + grid.coord_mesh(ax) ** 2
    r = np.sqrt(r2)
    values = 2.0 ** (decay * j) * 2.0 ** (j * grid.dim / 2.0) * field_fn(scale * r)
    values = values * (1.0 - profile.psi(r))
    return field_from_samples(grid, values)
