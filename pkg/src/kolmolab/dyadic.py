"""Dyadic localization in frequency and phase space.

A radial plateau function Psi (1 inside, 0 outside, smooth transition) is
telescoped into an exact partition of unity

    psi(x) + sum_{j>=0} phi(2^-j x) = 1,   phi(x) = Psi(x/2) - Psi(x),

with psi = Psi supported in the ball of radius 4/3 and phi supported in the
annulus [3/4, 8/3].  Frequency blocks F_j multiply the spectrum by these
cutoffs; phase blocks P_k multiply the samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BlockRangeError
from .fields import (
    FREQUENCY,
    PHYSICAL,
    BoxGrid,
    SpectralField,
    l2_norm,
    require_representation,
    to_frequency,
    to_physical,
)

_PLATEAU_CENTER = 25.0 / 24.0
_MAX_SMOOTHING = 1.0 / 8.0


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class DyadicProfile:
    """Radial bump pair (psi, phi) plus the plateau edges used to build them."""

    smoothing: float
    inner_edge: float
    outer_edge: float

    def plateau(self, r: np.ndarray) -> np.ndarray:
        """Psi: 1 for r <= inner_edge, 0 for r >= outer_edge."""
        r = np.abs(np.asarray(r, dtype=float))
        return _smoothstep((self.outer_edge - r) / (self.outer_edge - self.inner_edge))

    def psi(self, r: np.ndarray) -> np.ndarray:
        return self.plateau(r)

    def phi(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.plateau(r / 2.0) - self.plateau(r)

    @property
    def phi_support(self) -> tuple[float, float]:
        return (self.inner_edge, 2.0 * self.outer_edge)

    @property
    def annulus_plateau(self) -> tuple[float, float]:
        """Interval where phi is exactly 1."""
        return (self.outer_edge, 2.0 * self.inner_edge)


def build_profile(smoothing: float = 0.1) -> DyadicProfile:
    """Construct the partition pair for a given transition half-width."""
    if not (0.0 < smoothing < _MAX_SMOOTHING + 1e-15):
        raise ValueError(f"smoothing must lie in (0, 1/8], got {smoothing}")
    inner = _PLATEAU_CENTER - smoothing
    outer = _PLATEAU_CENTER + smoothing
    prof = DyadicProfile(smoothing, inner, outer)
    # Geometric sanity: psi inside B(4/3), phi inside [3/4, 8/3], annuli at
    # distance >= 2 disjoint.  Violations mean the construction is unusable.
    if not (outer <= 4.0 / 3.0 and inner >= 3.0 / 4.0 and 2.0 * outer <= 8.0 / 3.0):
        raise ValueError(f"smoothing {smoothing} pushes supports outside the mandated annuli")
    return prof


DEFAULT_PROFILE = build_profile(0.1)


def block_scale(j: int) -> float:
    """Weight scale for block j; the low block (-1) counts as scale 1."""
    return 2.0 ** max(j, 0)


def freq_multiplier(grid: BoxGrid, j: int, profile: DyadicProfile = DEFAULT_PROFILE) -> np.ndarray:
    r = grid.freq_radius
    if j == -1:
        return profile.psi(r)
    return profile.phi(r / 2.0**j)


def phase_multiplier(grid: BoxGrid, k: int, profile: DyadicProfile = DEFAULT_PROFILE) -> np.ndarray:
    r = grid.phys_radius
    if k == -1:
        return profile.psi(r)
    return profile.phi(r / 2.0**k)


def max_freq_block(grid: BoxGrid) -> int:
    """Largest j whose annulus 2^j [3/4, 8/3] fits under the axis Nyquist."""
    return int(np.floor(np.log2(grid.nyquist * 3.0 / 8.0)))


def max_phase_block(grid: BoxGrid) -> int:
    """Largest k whose annulus 2^k [3/4, 8/3] fits inside the box."""
    return int(np.floor(np.log2(grid.half_length * 3.0 / 8.0)))


def covering_freq_blocks(grid: BoxGrid) -> int:
    """Largest j whose multiplier intersects the frequency lattice at all."""
    corner = grid.nyquist * np.sqrt(grid.dim)
    return int(np.floor(np.log2(corner * 4.0 / 3.0)))


def covering_phase_blocks(grid: BoxGrid) -> int:
    corner = grid.half_length * np.sqrt(grid.dim)
    return int(np.floor(np.log2(corner * 4.0 / 3.0)))


def freq_project(
    field: SpectralField,
    j: int,
    profile: DyadicProfile = DEFAULT_PROFILE,
    strict: bool = True,
) -> SpectralField:
    """Frequency-side localization F_j f."""
    if j < -1:
        raise BlockRangeError(f"frequency block index {j} < -1")
    if strict and j > max_freq_block(field.grid):
        raise BlockRangeError(
            f"frequency block {j} exceeds the grid Nyquist (max {max_freq_block(field.grid)})"
        )
    if field.representation == PHYSICAL:
        hat = to_frequency(field)
        out = hat.with_samples(hat.samples * freq_multiplier(field.grid, j, profile))
        return to_physical(out)
    return field.with_samples(field.samples * freq_multiplier(field.grid, j, profile))


def phase_project(
    field: SpectralField,
    k: int,
    profile: DyadicProfile = DEFAULT_PROFILE,
    strict: bool = True,
) -> SpectralField:
    """Phase-side localization P_k f (pointwise multiplier)."""
    require_representation(field, PHYSICAL, "phase_project")
    if k < -1:
        raise BlockRangeError(f"phase block index {k} < -1")
    if strict and k > max_phase_block(field.grid):
        raise BlockRangeError(
            f"phase block {k} exceeds the box (max {max_phase_block(field.grid)})"
        )
    return field.with_samples(field.samples * phase_multiplier(field.grid, k, profile))


def partition_residual_freq(grid: BoxGrid, profile: DyadicProfile = DEFAULT_PROFILE) -> float:
    """Max |1 - psi - sum_j phi_j| over the frequency lattice."""
    total = freq_multiplier(grid, -1, profile)
    for j in range(0, covering_freq_blocks(grid) + 1):
        total = total + freq_multiplier(grid, j, profile)
    return float(np.max(np.abs(total - 1.0)))


def partition_residual_phase(grid: BoxGrid, profile: DyadicProfile = DEFAULT_PROFILE) -> float:
    total = phase_multiplier(grid, -1, profile)
    for k in range(0, covering_phase_blocks(grid) + 1):
        total = total + phase_multiplier(grid, k, profile)
    return float(np.max(np.abs(total - 1.0)))


@dataclass(frozen=True)
class BlockSpectrum:
    """Matrix of block energies ||F_j P_k f||^2 for j, k in {-1, ..., max}."""

    j_max: int
    k_max: int
    energies: np.ndarray  # shape (j_max + 2, k_max + 2); row/col 0 is block -1
    order: str = "FP"  # FP: F_j applied after P_k; PF: the reverse

    def energy(self, j: int, k: int) -> float:
        return float(self.energies[j + 1, k + 1])

    @property
    def total(self) -> float:
        return float(self.energies.sum())

    def j_indices(self) -> range:
        return range(-1, self.j_max + 1)

    def k_indices(self) -> range:
        return range(-1, self.k_max + 1)


def block_energy_matrix(
    field: SpectralField,
    j_max: int,
    k_max: int,
    profile: DyadicProfile = DEFAULT_PROFILE,
    order: str = "FP",
) -> BlockSpectrum:
    """Energies of the doubly-localized pieces of a physical field."""
    require_representation(field, PHYSICAL, "block_energy_matrix")
    grid = field.grid
    if j_max > max_freq_block(grid):
        raise BlockRangeError(f"j_max {j_max} beyond resolvable {max_freq_block(grid)}")
    if k_max > max_phase_block(grid):
        raise BlockRangeError(f"k_max {k_max} beyond resolvable {max_phase_block(grid)}")
    if order not in ("FP", "PF"):
        raise ValueError("order must be 'FP' or 'PF'")
    energies = np.zeros((j_max + 2, k_max + 2))
    if order == "FP":
        for k in range(-1, k_max + 1):
            pk = phase_project(field, k, profile)
            hat = to_frequency(pk)
            for j in range(-1, j_max + 1):
                piece = hat.samples * freq_multiplier(grid, j, profile)
                energies[j + 1, k + 1] = np.sum(np.abs(piece) ** 2) * grid.dxi**grid.dim
    else:
        for j in range(-1, j_max + 1):
            fj = freq_project(field, j, profile)
            for k in range(-1, k_max + 1):
                piece = fj.samples * phase_multiplier(grid, k, profile)
                energies[j + 1, k + 1] = np.sum(np.abs(piece) ** 2) * grid.dv**grid.dim
    return BlockSpectrum(j_max, k_max, energies, order)


def dyadic_sobolev_norm(
    field: SpectralField,
    m: float,
    l: float,
    j_max: int | None = None,
    k_max: int | None = None,
    profile: DyadicProfile = DEFAULT_PROFILE,
) -> float:
    """Block-sum surrogate (sum 2^{2jm} 2^{2kl} e[j][k])^(1/2) for the H^m_l norm.

    Blocks -1 carry unit weight: their content lives at scale <= O(1) in
    either variable, so scale 1 is the faithful normalizer.
    """
    grid = field.grid
    if j_max is None:
        j_max = max_freq_block(grid)
    if k_max is None:
        k_max = max_phase_block(grid)
    spec = block_energy_matrix(field, j_max, k_max, profile)
    total = 0.0
    for j in spec.j_indices():
        wj = block_scale(j) ** (2.0 * m)
        for k in spec.k_indices():
            total += wj * block_scale(k) ** (2.0 * l) * spec.energy(j, k)
    return float(np.sqrt(total))


def commutator_probe(
    field: SpectralField,
    j: int,
    k: int,
    profile: DyadicProfile = DEFAULT_PROFILE,
) -> float:
    """|| [P_k, F_j] f ||_{L2} = || P_k F_j f - F_j P_k f ||."""
    require_representation(field, PHYSICAL, "commutator_probe")
    a = phase_project(freq_project(field, j, profile), k, profile)
    b = freq_project(phase_project(field, k, profile), j, profile)
    return l2_norm(a.with_samples(a.samples - b.samples))


def neighborhood_energy(
    field: SpectralField,
    j: int,
    k: int,
    width: int = 2,
    profile: DyadicProfile = DEFAULT_PROFILE,
) -> float:
    """L2 norm of the field content in dyadic cells within `width` of (j, k)."""
    require_representation(field, PHYSICAL, "neighborhood_energy")
    grid = field.grid
    k_keep = np.zeros(grid.shape)
    for kk in range(max(k - width, -1), min(k + width, max_phase_block(grid)) + 1):
        k_keep = k_keep + phase_multiplier(grid, kk, profile)
    j_keep = np.zeros(grid.shape)
    for jj in range(max(j - width, -1), min(j + width, max_freq_block(grid)) + 1):
        j_keep = j_keep + freq_multiplier(grid, jj, profile)
    hat = to_frequency(field.with_samples(field.samples * k_keep))
    return l2_norm(hat.with_samples(hat.samples * j_keep))


def normalized_commutator_ratio(
    field: SpectralField,
    j: int,
    k: int,
    profile: DyadicProfile = DEFAULT_PROFILE,
) -> float:
    """Probe scaled by 2^{j+k} and the local field content near (j, k)."""
    local = neighborhood_energy(field, j, k, profile=profile)
    if local == 0.0:
        return 0.0
    return commutator_probe(field, j, k, profile) * 2.0 ** (j + k) / local


def bernstein_check(
    field: SpectralField,
    j: int,
    m: float,
    profile: DyadicProfile = DEFAULT_PROFILE,
) -> tuple[float, float]:
    """Ratios ||F_j f||_{H^m} / (2^{jm} ||F_j f||_{L2}) and its reciprocal."""
    block = freq_project(field, j, profile)
    base = l2_norm(block)
    if base == 0.0:
        raise BlockRangeError(f"block {j} carries no energy; Bernstein ratio undefined")
    hat = to_frequency(block)
    grid = field.grid
    hm = float(
        np.sqrt(np.sum(np.abs(hat.samples * grid.freq_weight(m)) ** 2) * grid.dxi**grid.dim)
    )
    ratio = hm / (block_scale(j) ** m * base)
    return ratio, 1.0 / ratio
