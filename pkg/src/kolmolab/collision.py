"""Dyadic-kernel collision operator: spectral evaluation and quadrature oracles.

The kernel |u|^gamma b(cos theta) is split over dyadic annuli via the same
cutoff pair used for the field decompositions.  Each annular piece Q_k is
evaluated two independent ways:

* spectrally, through the Fourier representation coupling modes eta and xi
  over the sphere via xi^- = (xi - |xi| sigma)/2 (exact in the mode sums for
  band-limited inputs; only the sphere quadrature and the radial kernel
  transform are approximate), and
* by direct quadrature in (r, u-hat, sigma) with trigonometric shifts, which
  evaluates the periodic extensions of the inputs exactly.

Both approximate the same bilinear form, so their difference measures pure
quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.special import j0, roots_jacobi

from .dyadic import DEFAULT_PROFILE, DyadicProfile
from .errors import BlockRangeError, CostCapError, LabError
from .fields import (
    PHYSICAL,
    BoxGrid,
    SpectralField,
    l2_norm,
    require_representation,
    sobolev_norm,
    to_frequency,
    to_physical,
    WeightedNormParams,
)


@dataclass(frozen=True)
class CollisionParams:
    """Kinetic exponents, angular cutoff and quadrature budgets."""

    gamma: float
    s: float
    eps_theta: float
    normalization: float = 1.0  # c in sin(theta) b(cos theta) = c theta^(-1-2s)
    k_max: int = 1
    n_theta: int = 32  # Gauss-Legendre nodes on [eps_theta, pi/2]
    n_radial: int = 48  # radial nodes of the direct oracle
    n_angular: int = 64  # u-hat nodes of the direct oracle (d = 2)
    dim: int = 2
    cost_cap: float = 4e9
    mc_samples: int = 200_000

    def __post_init__(self):
        if not (-3.0 < self.gamma < 0.0):
            raise ValueError(f"gamma must lie in (-3, 0), got {self.gamma}")
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not (-2.0 * self.s - 1.0 < self.gamma):
            raise ValueError(
                f"gamma={self.gamma} violates the soft-potential range gamma > -2s-1"
            )
        if not (0.0 < self.eps_theta < math.pi / 2):
            raise ValueError("angular cutoff must lie in (0, pi/2)")
        if self.dim not in (2, 3):
            raise ValueError("collision dimension must be 2 or 3")


def angular_kernel(params: CollisionParams, theta: np.ndarray) -> np.ndarray:
    """b(cos theta) = c theta^(-1-2s) / sin(theta) on the cutoff arc."""
    theta = np.asarray(theta, dtype=float)
    inside = (theta >= params.eps_theta) & (theta <= math.pi / 2)
    vals = np.zeros_like(theta)
    th = theta[inside]
    vals[inside] = params.normalization * th ** (-1.0 - 2.0 * params.s) / np.sin(th)
    return vals


def angular_nodes(params: CollisionParams) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for the deviation angle on [eps, pi/2]."""
    x, w = leggauss(params.n_theta)
    a, b = params.eps_theta, math.pi / 2
    theta = 0.5 * (b - a) * x + 0.5 * (a + b)
    return theta, 0.5 * (b - a) * w


def angular_mass(params: CollisionParams, eps_theta: float | None = None) -> float:
    """Integral of sin(theta) b(cos theta) over [eps, pi/2] (log-substituted GL)."""
    eps = params.eps_theta if eps_theta is None else eps_theta
    x, w = leggauss(96)
    a, b = math.log(eps), math.log(math.pi / 2)
    u = 0.5 * (b - a) * x + 0.5 * (a + b)
    # integrand sin(th) b dth = c th^(-1-2s) dth = c exp(-2 s u) du
    return float(params.normalization * np.sum(w * np.exp(-2.0 * params.s * u)) * 0.5 * (b - a))


def blowup_rate_fit(params: CollisionParams, eps_list) -> float:
    """Exponent p in mass(eps) ~ eps^{-p}, fitted from consecutive differences.

    Differences cancel the cutoff-independent offset, leaving the pure
    power-law part of the divergent integral.
    """
    masses = [angular_mass(params, e) for e in sorted(eps_list, reverse=True)]
    eps = sorted(eps_list, reverse=True)
    diffs = np.diff(masses)
    rates = []
    for i in range(len(diffs) - 1):
        rates.append(
            math.log(diffs[i + 1] / diffs[i]) / math.log(eps[i + 1] / eps[i + 2])
        )
    # d/d eps of eps^-p steps scale with the smaller endpoint
    return float(np.mean(rates))


def sphere_surface(dim: int) -> float:
    return 2.0 * math.pi if dim == 2 else 4.0 * math.pi


def total_angular_weight(params: CollisionParams) -> float:
    """Integral of b(e . sigma) over the sphere for any unit vector e."""
    theta, w = angular_nodes(params)
    b = angular_kernel(params, theta)
    if params.dim == 2:
        return float(2.0 * np.sum(w * b))  # both signed arcs
    return float(2.0 * math.pi * np.sum(w * b * np.sin(theta)))


@dataclass(frozen=True)
class KernelBlock:
    """Dyadic annular piece of |u|^gamma with its radial Fourier transform."""

    k: int
    gamma: float
    dim: int
    r_lo: float
    r_hi: float
    rho_max: float
    _spline: CubicSpline
    _profile: DyadicProfile

    def radial(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0
        rp = r[pos]
        if self.k == -1:
            cut = self._profile.psi(rp)
        else:
            cut = self._profile.phi(rp / 2.0**self.k)
        out[pos] = rp**self.gamma * cut
        return out

    def hat(self, rho: np.ndarray) -> np.ndarray:
        """Radial Fourier transform, from the precomputed spline."""
        return self._spline(np.minimum(np.abs(rho), self.rho_max))


def _radial_transform_nodes(k: int, gamma: float, dim: int, profile: DyadicProfile, n: int):
    """Quadrature nodes/weights absorbing the r^(gamma + dim - 1) factor."""
    if k >= 0:
        lo = profile.phi_support[0] * 2.0**k
        hi = profile.phi_support[1] * 2.0**k
        x, w = leggauss(n)
        r = 0.5 * (hi - lo) * x + 0.5 * (lo + hi)
        weight = 0.5 * (hi - lo) * w * r ** (gamma + dim - 1)
        cut = profile.phi(r / 2.0**k)
    else:
        hi = profile.outer_edge
        # Gauss-Jacobi with weight (1+x)^(gamma+dim-1) absorbs the r^gamma cusp.
        x, w = roots_jacobi(n, 0.0, gamma + dim - 1)
        r = hi * (x + 1.0) / 2.0
        weight = w * (hi / 2.0) ** (gamma + dim) * np.ones_like(r)
        cut = profile.psi(r)
    return r, weight * cut


def build_kernel_blocks(
    params: CollisionParams,
    grid: BoxGrid,
    profile: DyadicProfile = DEFAULT_PROFILE,
    n_transform: int = 200,
) -> list[KernelBlock]:
    """Annular kernel pieces for k = -1..k_max with tabulated transforms."""
    r_range = 2.0 * grid.half_length
    if 2.0**params.k_max * (8.0 / 3.0) > r_range:
        raise BlockRangeError(
            f"kernel block {params.k_max} exceeds the relative-velocity range {r_range:.3g}"
        )
    rho_max = 2.0 * math.sqrt(grid.dim) * grid.nyquist + 1.0
    blocks = []
    for k in range(-1, params.k_max + 1):
        r, w = _radial_transform_nodes(k, params.gamma, grid.dim, profile, n_transform)
        r_hi = profile.phi_support[1] * 2.0**k if k >= 0 else profile.outer_edge
        r_lo = profile.phi_support[0] * 2.0**k if k >= 0 else 0.0
        # spline sampling tied to the oscillation scale r_hi of the transform
        n_tab = max(4000, int(rho_max * r_hi * 16.0))
        rho = np.linspace(0.0, rho_max, n_tab)
        if grid.dim == 2:
            # (2 pi)^(-1) * 2 pi * int J0(rho r) Phi(r) r dr
            kern = j0(np.outer(rho, r))
            vals = kern @ w
        else:
            # sqrt(2/pi) * int sinc(rho r) Phi(r) r^2 dr
            arg = np.outer(rho, r)
            kern = np.sinc(arg / math.pi)
            vals = math.sqrt(2.0 / math.pi) * (kern @ w)
        spline = CubicSpline(rho, vals)
        blocks.append(
            KernelBlock(k, params.gamma, grid.dim, r_lo, r_hi, rho_max, spline, profile)
        )
    return blocks


def kernel_reconstruction_error(
    blocks: list[KernelBlock], radii: np.ndarray, gamma: float
) -> float:
    """Max relative error of sum_k Phi_k against r^gamma on the sampled range."""
    total = np.zeros_like(radii, dtype=float)
    for blk in blocks:
        total = total + blk.radial(radii)
    exact = radii**gamma
    return float(np.max(np.abs(total - exact) / exact))


def _lattice(grid: BoxGrid) -> tuple[np.ndarray, np.ndarray]:
    """Flattened integer mode vectors and frequency vectors (FFT order)."""
    n = grid.points_per_axis
    idx = np.fft.fftfreq(n, 1.0 / n).astype(int)
    mesh = np.meshgrid(*([idx] * grid.dim), indexing="ij")
    modes = np.stack([m.ravel() for m in mesh], axis=1)
    return modes, modes * grid.dxi


def _mode_product_matrix(grid: BoxGrid, g_hat: np.ndarray, h_hat: np.ndarray):
    """Pairing data for the spectral collision sum.

    Returns M[xi, eta] = g_hat(eta) h_hat(zeta) with zeta the lattice
    representative of xi - eta, plus the unwrapped output frequency
    xi_true = eta + zeta of each pair.  Grid sampling folds the product mode
    eta + zeta onto the lattice point xi; evaluating the kernel at the
    unwrapped frequency makes the spectral sum reproduce the grid-sampled
    operator exactly, in exact correspondence with the physical-space
    oracle.
    """
    n = grid.points_per_axis
    modes, _ = _lattice(grid)
    diff = modes[:, None, :] - modes[None, :, :]
    zeta = (diff + n // 2) % n - n // 2  # lattice representative per axis
    flat = np.zeros(diff.shape[:2], dtype=np.intp)
    for ax in range(grid.dim):
        flat = flat * n + (zeta[..., ax] % n)
    M = g_hat.ravel()[None, :] * h_hat.ravel()[flat]
    xi_true = (modes[None, :, :] + zeta) * grid.dxi
    return M, xi_true


def bobylev_apply(
    g: SpectralField,
    h: SpectralField,
    block: KernelBlock,
    params: CollisionParams,
) -> SpectralField:
    """Spectral evaluation of the annular collision piece Q_k(g, h).

    For each lattice frequency xi the sphere integral couples the input
    spectra through

        Q_hat(xi) = int b(xi^ . sigma) sum_eta [Phi_hat(eta - xi^-)
                    - Phi_hat(eta)] g_hat(eta) h_hat(xi - eta) dxi^d dsigma,

    with xi^- = (xi - |xi| sigma)/2.  The eta sum is exact for band-limited
    inputs; the only approximations are the sphere quadrature and the
    tabulated radial transform.
    """
    require_representation(g, PHYSICAL, "bobylev_apply")
    require_representation(h, PHYSICAL, "bobylev_apply")
    if g.grid != h.grid:
        raise LabError("collision inputs must share a grid")
    grid = g.grid
    if grid.dim != params.dim:
        raise LabError(f"params.dim={params.dim} does not match grid dim {grid.dim}")
    n_sigma = params.n_theta * (2 if grid.dim == 2 else params.n_angular)
    p_tot = grid.n_total
    estimate = float(p_tot) ** 2 * n_sigma * 12.0
    if estimate > params.cost_cap:
        raise CostCapError(estimate, params.cost_cap)

    g_hat = to_frequency(g).samples
    h_hat = to_frequency(h).samples
    M, xi_true = _mode_product_matrix(grid, g_hat, h_hat)
    _, lat = _lattice(grid)
    theta, w_theta = angular_nodes(params)
    b_vals = angular_kernel(params, theta)

    # sigma-independent loss part: B_tot * sum_eta Phi_hat(eta) M[xi, eta]
    phi_lat = block.hat(np.linalg.norm(lat, axis=1))
    loss = total_angular_weight(params) * (M @ phi_lat)

    gain = np.zeros(p_tot, dtype=np.complex128)
    chunk = max(1, int(2**21) // p_tot)
    for lo in range(0, p_tot, chunk):
        hi = min(lo + chunk, p_tot)
        xt = xi_true[lo:hi]  # (rows, P, d) unwrapped output frequencies
        eta = lat[None, :, :]
        Mc = M[lo:hi]
        if grid.dim == 2:
            perp = np.stack([-xt[..., 1], xt[..., 0]], axis=-1)
            for th, wq, bq in zip(theta, w_theta, b_vals):
                for sign in (1.0, -1.0):
                    xi_minus = 0.5 * (
                        (1.0 - math.cos(th)) * xt - sign * math.sin(th) * perp
                    )
                    rho = np.linalg.norm(eta - xi_minus, axis=-1)
                    gain[lo:hi] += wq * bq * np.einsum("pe,pe->p", block.hat(rho), Mc)
        else:
            norm = np.linalg.norm(xt, axis=-1, keepdims=True)
            ref = np.where(
                np.abs(xt[..., 2:3]) < 0.9 * np.maximum(norm, 1e-300),
                np.array([0.0, 0.0, 1.0]),
                np.array([1.0, 0.0, 0.0]),
            )
            e1 = np.cross(xt, ref)
            n1 = np.linalg.norm(e1, axis=-1, keepdims=True)
            n1[n1 == 0] = 1.0
            e1 = e1 / n1 * norm
            e2 = np.cross(xt, e1)
            n2 = np.linalg.norm(e2, axis=-1, keepdims=True)
            n2[n2 == 0] = 1.0
            e2 = e2 / n2 * norm
            n_phi = params.n_angular
            phis = 2.0 * math.pi * np.arange(n_phi) / n_phi
            w_phi = 2.0 * math.pi / n_phi
            for th, wq, bq in zip(theta, w_theta, b_vals):
                for ph in phis:
                    xi_sigma = math.cos(th) * xt + math.sin(th) * (
                        math.cos(ph) * e1 + math.sin(ph) * e2
                    )
                    rho = np.linalg.norm(eta - 0.5 * (xt - xi_sigma), axis=-1)
                    gain[lo:hi] += (
                        wq
                        * w_phi
                        * bq
                        * math.sin(th)
                        * np.einsum("pe,pe->p", block.hat(rho), Mc)
                    )

    q_hat = (gain - loss) * grid.dxi**grid.dim
    out = g.with_samples(q_hat.reshape(grid.shape), "frequency")
    return to_physical(out)


def _direct_sigma_nodes(params: CollisionParams):
    theta, w = angular_nodes(params)
    b_vals = angular_kernel(params, theta)
    return theta, w, b_vals


def convolution_loss(
    g: SpectralField,
    h: SpectralField,
    block: KernelBlock,
    params: CollisionParams,
) -> SpectralField:
    """Loss term h * (Phi_k conv g) * B_tot, evaluated exactly in Fourier space."""
    grid = g.grid
    g_hat = to_frequency(g)
    conv_hat = g_hat.samples * block.hat(grid.freq_radius) * (2.0 * math.pi) ** (grid.dim / 2.0)
    conv = to_physical(g_hat.with_samples(conv_hat, "frequency"))
    vals = h.samples * conv.samples * total_angular_weight(params)
    return h.with_samples(vals)


def direct_quadrature_apply(
    g: SpectralField,
    h: SpectralField,
    block: KernelBlock,
    params: CollisionParams,
    quad_loss: bool = False,
) -> SpectralField:
    """Physical-space quadrature oracle for the annular piece Q_k(g, h).

    The relative velocity integral runs in polar coordinates (r, u-hat)
    around each grid point, the sphere integral over the cutoff arc; all
    off-grid evaluations use the shift theorem, so the periodic extensions
    of g and h are evaluated exactly and the only error is the quadrature
    itself.  The loss term is evaluated by the exact convolution identity
    unless `quad_loss` requests the same tuple quadrature as the gain.
    """
    require_representation(g, PHYSICAL, "direct_quadrature_apply")
    require_representation(h, PHYSICAL, "direct_quadrature_apply")
    grid = g.grid
    if grid.dim != 2:
        raise LabError("the deterministic direct oracle is implemented for dim 2")
    r_nodes, r_weights = _radial_transform_nodes(
        block.k, params.gamma, grid.dim, block._profile, params.n_radial
    )
    n_u = params.n_angular
    u_angles = 2.0 * math.pi * np.arange(n_u) / n_u
    w_u = 2.0 * math.pi / n_u
    theta, w_th, b_vals = _direct_sigma_nodes(params)

    n_tuples = len(r_nodes) * n_u * len(theta) * 2
    estimate = float(n_tuples) * grid.n_total * 24.0
    if estimate > params.cost_cap:
        raise CostCapError(estimate, params.cost_cap)

    g_hat = to_frequency(g).samples
    h_hat = to_frequency(h).samples
    _, lat = _lattice(grid)
    lat_x = lat[:, 0].reshape(grid.shape)
    lat_y = lat[:, 1].reshape(grid.shape)

    def shifted(hat: np.ndarray, qx: np.ndarray, qy: np.ndarray) -> np.ndarray:
        """Batch of fields hat -> f(v + q) for offsets q, via the shift theorem."""
        phase = np.exp(1j * (lat_x[None] * qx[:, None, None] + lat_y[None] * qy[:, None, None]))
        scale = grid.dxi**grid.dim * grid.n_total * (2.0 * math.pi) ** (-grid.dim / 2.0)
        return np.fft.ifftn(grid._alt_phase[None] * (hat[None] * phase), axes=(1, 2)) * scale

    gain = np.zeros(grid.shape, dtype=np.complex128)
    loss_quad = np.zeros(grid.shape, dtype=np.complex128)
    cos_u, sin_u = np.cos(u_angles), np.sin(u_angles)
    for i_r, (r, wr) in enumerate(zip(r_nodes, r_weights)):
        ux = r * cos_u
        uy = r * sin_u
        # v_* = v - r u-hat : one batch of shifts per radius
        g_star = shifted(g_hat, -ux, -uy)
        if quad_loss:
            # the sigma integral of b factors out of the loss entirely
            loss_quad += wr * w_u * np.sum(g_star, axis=0)
        for th, wq, bq in zip(theta, w_th, b_vals):
            for sign in (1.0, -1.0):
                # sigma = cos(th) u-hat + sign sin(th) u-hat-perp
                sx = math.cos(th) * cos_u - sign * math.sin(th) * sin_u
                sy = math.cos(th) * sin_u + sign * math.sin(th) * cos_u
                # v' = v - r (u-hat - sigma)/2 ; v'_* = v - r (u-hat + sigma)/2
                hx = -0.5 * r * (cos_u - sx)
                hy = -0.5 * r * (sin_u - sy)
                gx = -0.5 * r * (cos_u + sx)
                gy = -0.5 * r * (sin_u + sy)
                h_prime = shifted(h_hat, hx, hy)
                g_prime = shifted(g_hat, gx, gy)
                gain += (wr * w_u * wq * bq) * np.sum(g_prime * h_prime, axis=0)
    if quad_loss:
        loss = loss_quad * total_angular_weight(params) * h.samples
    else:
        loss = convolution_loss(g, h, block, params).samples
    return g.with_samples(gain - loss)


@dataclass(frozen=True)
class CancellationReport:
    lhs: float
    rhs: float
    relative_difference: float
    absolute_mode: bool


def cancellation_check(
    f,
    params: CollisionParams,
    variant: str = "regular",
    base_point: tuple[float, ...] | None = None,
    radius: float = 16.0,
    n_radial: int = 96,
    n_angular: int = 128,
) -> CancellationReport:
    """Change-of-variables identity for the post-collisional integral.

    regular:  int over v, sigma of b |u|^gamma f(v') equals the same integral
              of b cos^-(d+gamma)(theta/2) |u|^gamma f(v), at fixed v_*.
    singular: the v_*-integrated version with the sin^-(d+gamma)(theta/2)
              Jacobian, at fixed v.

    `f` is an analytic callable of the velocity components, so both sides
    are pure quadratures with no interpolation error.
    """
    d = params.dim
    if d != 2:
        raise LabError("cancellation check quadrature is implemented for dim 2")
    if variant not in ("regular", "singular"):
        raise ValueError("variant must be 'regular' or 'singular'")
    base = np.zeros(d) if base_point is None else np.asarray(base_point, dtype=float)
    x, w = roots_jacobi(n_radial, 0.0, params.gamma + d - 1)
    r = radius * (x + 1.0) / 2.0
    wr = w * (radius / 2.0) ** (params.gamma + d)
    angles = 2.0 * math.pi * np.arange(n_angular) / n_angular
    w_ang = 2.0 * math.pi / n_angular
    theta, w_th = angular_nodes(params)
    b_vals = angular_kernel(params, theta)

    cos_a, sin_a = np.cos(angles), np.sin(angles)
    lhs = 0.0
    for th, wq, bq in zip(theta, w_th, b_vals):
        for sign in (1.0, -1.0):
            sx = math.cos(th) * cos_a - sign * math.sin(th) * sin_a
            sy = math.cos(th) * sin_a + sign * math.sin(th) * cos_a
            if variant == "regular":
                # v = base + r u-hat, v' = base + r (u-hat + sigma) / 2
                px = base[0] + 0.5 * r[:, None] * (cos_a + sx)[None, :]
                py = base[1] + 0.5 * r[:, None] * (sin_a + sy)[None, :]
            else:
                # v_* = base - r u-hat, v' = base - r (u-hat - sigma) / 2
                px = base[0] - 0.5 * r[:, None] * (cos_a - sx)[None, :]
                py = base[1] - 0.5 * r[:, None] * (sin_a - sy)[None, :]
            vals = f(px, py)
            lhs += wq * bq * float(np.real(np.sum(wr[:, None] * vals) * w_ang))

    if variant == "regular":
        jac = np.cos(theta / 2.0) ** (-(d + params.gamma))
        qx = base[0] + r[:, None] * cos_a[None, :]
        qy = base[1] + r[:, None] * sin_a[None, :]
    else:
        jac = np.sin(theta / 2.0) ** (-(d + params.gamma))
        qx = base[0] - r[:, None] * cos_a[None, :]
        qy = base[1] - r[:, None] * sin_a[None, :]
    sigma_factor = 2.0 * float(np.sum(w_th * b_vals * jac))
    space_factor = float(np.real(np.sum(wr[:, None] * f(qx, qy)) * w_ang))
    rhs = sigma_factor * space_factor

    if abs(lhs) < 1e-12:
        return CancellationReport(lhs, rhs, abs(lhs - rhs), absolute_mode=True)
    return CancellationReport(lhs, rhs, abs(lhs - rhs) / abs(lhs), absolute_mode=False)


@dataclass(frozen=True)
class FourierLowerBoundReport:
    min_gap: float  # min over all modes of F f(0) - |F f(xi)| (>= 0 expected)
    c_small: float  # min over 0 < |xi| <= 1 of gap / |xi|^2
    c_plateau: float  # min over |xi| > 1 of gap
    fit_power: float  # small-radius power-law exponent (expect 2)
    fit_amplitude: float  # small-radius amplitude (Gaussian: |f|_L1 / 2)
    l1_norm: float


def fourier_lower_bound_check(
    field: SpectralField, fit_radius: float = 0.25
) -> FourierLowerBoundReport:
    """Gap F f(0) - |F f(xi)| of a nonnegative field and its small-xi law."""
    require_representation(field, PHYSICAL, "fourier_lower_bound_check")
    if float(np.min(field.samples.real)) < -1e-12 or np.max(np.abs(field.samples.imag)) > 1e-12:
        raise LabError("the lower-bound check requires a nonnegative field")
    grid = field.grid
    plain = to_frequency(field).samples * (2.0 * math.pi) ** (grid.dim / 2.0)
    gap = plain[(0,) * grid.dim].real - np.abs(plain)
    rho = grid.freq_radius
    small = (rho > 0) & (rho <= 1.0)
    plateau = rho > 1.0
    c_small = float(np.min(gap[small] / rho[small] ** 2)) if small.any() else math.nan
    c_plateau = float(np.min(gap[plateau])) if plateau.any() else math.nan
    fit_zone = (rho > 0) & (rho <= fit_radius)
    if fit_zone.sum() < 4:
        raise LabError(f"too few modes below fit radius {fit_radius}")
    logs_r = np.log(rho[fit_zone])
    logs_g = np.log(gap[fit_zone])
    power, intercept = np.polyfit(logs_r, logs_g, 1)
    l1 = float(np.sum(field.samples.real) * grid.dv**grid.dim)
    return FourierLowerBoundReport(
        min_gap=float(np.min(gap)),
        c_small=c_small,
        c_plateau=c_plateau,
        fit_power=float(power),
        fit_amplitude=float(math.exp(intercept)),
        l1_norm=l1,
    )


@dataclass(frozen=True)
class CoercivityReport:
    dirichlet: float  # int b f_* (f - f')^2
    l2_sq: float
    lhs: float  # dirichlet + l2_sq
    lower: float  # |f|_L1^11 |f|_Hs^2
    ratio: float
    degenerate: bool
    weighted_dirichlet: float | None = None
    weighted_lower: float | None = None
    weighted_ratio: float | None = None
    mc_halfwidth: float | None = None
    seed: int | None = None


def _field_norms(f, grid: BoxGrid, s: float, gamma: float):
    vals = f(*[grid.coord_mesh(ax) for ax in range(grid.dim)])
    vals = np.broadcast_to(vals, grid.shape)
    fld = SpectralField(grid, vals, PHYSICAL, declared_real=True)
    l1 = float(np.sum(np.abs(vals.real)) * grid.dv**grid.dim)
    l2sq = l2_norm(fld) ** 2
    hs = sobolev_norm(fld, WeightedNormParams(s, 0.0))
    hs_w = sobolev_norm(fld, WeightedNormParams(s, gamma / 2.0))
    return fld, l1, l2sq, hs, hs_w


def coercivity_check(
    f,
    grid: BoxGrid,
    params: CollisionParams,
    weighted: bool = False,
    seed: int | None = None,
) -> CoercivityReport:
    """Lower bound of the collision Dirichlet form by a fractional norm.

    Deterministic tensor quadrature at dim 2 (grid x grid x cutoff arc);
    Monte-Carlo sampling with a reported confidence interval at dim 3.
    `f` is an analytic callable so post-collisional points cost nothing.
    """
    d = grid.dim
    fld, l1, l2sq, hs, hs_w = _field_norms(f, grid, params.s, params.gamma)
    if l2sq == 0.0:
        return CoercivityReport(0.0, 0.0, 0.0, 0.0, math.nan, degenerate=True)
    theta, w_th = angular_nodes(params)
    b_vals = angular_kernel(params, theta)
    if d == 2:
        estimate = float(grid.n_total) ** 2 * len(theta) * 8.0
        if estimate > params.cost_cap:
            raise CostCapError(estimate, params.cost_cap)
        v1 = grid.axis_points
        mesh = np.meshgrid(v1, v1, v1, v1, indexing="ij")
        vx, vy = mesh[0].ravel(), mesh[1].ravel()
        wx, wy = mesh[2].ravel(), mesh[3].ravel()
        f_v = np.broadcast_to(f(mesh[0], mesh[1]), mesh[0].shape).ravel()
        f_w = np.broadcast_to(f(mesh[2], mesh[3]), mesh[2].shape).ravel()
        ux, uy = vx - wx, vy - wy
        r = np.hypot(ux, uy)
        dirichlet = 0.0
        weighted_dir = 0.0
        cell = grid.dv ** (2 * d)
        for th, wq, bq in zip(theta, w_th, b_vals):
            for sign in (1.0, -1.0):
                ct, st = math.cos(th), sign * math.sin(th)
                sx = (ct * ux - st * uy) / np.where(r > 0, r, 1.0)
                sy = (st * ux + ct * uy) / np.where(r > 0, r, 1.0)
                px = 0.5 * (vx + wx) + 0.5 * r * sx
                py = 0.5 * (vy + wy) + 0.5 * r * sy
                diff2 = (f_v - f(px, py)) ** 2
                core = f_w * diff2
                dirichlet += wq * bq * float(np.sum(core)) * cell
                if weighted:
                    rg = np.where(r > 0, r, 1.0) ** params.gamma
                    weighted_dir += wq * bq * float(np.sum(core * rg)) * cell
        mc_hw = None
    else:
        # Monte-Carlo over (v, v_*, azimuth) with the polar angle kept on the
        # deterministic cutoff-arc nodes; Gaussian importance proposals.
        rng = np.random.default_rng(seed)
        n = params.mc_samples
        scale = grid.half_length / 3.0
        v = rng.normal(0.0, scale, size=(n, 3))
        w = rng.normal(0.0, scale, size=(n, 3))
        gauss = lambda z: np.exp(-np.sum(z**2, axis=1) / (2 * scale**2)) / (
            (2 * math.pi) ** 1.5 * scale**3
        )
        q_vw = gauss(v) * gauss(w)
        phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
        u = v - w
        r = np.linalg.norm(u, axis=1)
        r_safe = np.where(r > 0, r, 1.0)
        uhat = u / r_safe[:, None]
        ref = np.where(np.abs(uhat[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
        e1 = np.cross(uhat, ref)
        e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
        e2 = np.cross(uhat, e1)
        fv = f(v[:, 0], v[:, 1], v[:, 2])
        fw = f(w[:, 0], w[:, 1], w[:, 2])
        perp = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
        sphere_sum = np.zeros(n)
        for th, wq, bq in zip(theta, w_th, b_vals):
            sigma = math.cos(th) * uhat + math.sin(th) * perp
            p = 0.5 * (v + w) + 0.5 * r[:, None] * sigma
            fp = f(p[:, 0], p[:, 1], p[:, 2])
            sphere_sum += wq * bq * math.sin(th) * (fv - fp) ** 2
        samples = 2.0 * math.pi * fw * sphere_sum / q_vw
        dirichlet = float(np.mean(samples))
        mc_hw = float(1.96 * np.std(samples) / math.sqrt(n))
        weighted_dir = 0.0
    lhs = dirichlet + l2sq
    lower = l1**11 * hs**2
    out = CoercivityReport(
        dirichlet=float(dirichlet),
        l2_sq=float(l2sq),
        lhs=float(lhs),
        lower=float(lower),
        ratio=float(lhs / lower),
        degenerate=False,
        mc_halfwidth=mc_hw,
        seed=seed,
    )
    if weighted and d == 2:
        w_lower = l1 ** (11.0 * (1.0 - 2.0 * params.gamma / 3.0)) * hs_w**2
        out = CoercivityReport(
            **{
                **out.__dict__,
                "weighted_dirichlet": float(weighted_dir),
                "weighted_lower": float(w_lower),
                "weighted_ratio": float((weighted_dir + l2sq) / w_lower),
            }
        )
    return out


def maxwellian(grid: BoxGrid, temperature: float = 1.0, density: float = 1.0):
    """Gaussian equilibrium with the given temperature, as a field."""
    norm = density / (2.0 * math.pi * temperature) ** (grid.dim / 2.0)
    vals = norm * np.exp(-grid.phys_radius**2 / (2.0 * temperature))
    return SpectralField(grid, vals, PHYSICAL, declared_real=True)
