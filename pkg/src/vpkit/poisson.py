"""Density and Poisson solves ``Lap U = rho`` with force ``E = grad U``.

Two modes: periodic (spectral, mean of rho removed) and free space in three
dimensions (zero-padded convolution with the Newtonian kernel on the doubled
grid).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DistributionField, PhaseGrid
from .spectral import fftn, ifftn, ksq, odd_wavenumbers


class PoissonError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ForceField:
    grid: PhaseGrid
    rho: np.ndarray
    U: np.ndarray
    E: np.ndarray          # shape (n,) + x_shape
    mode: str

    def e_inf(self) -> float:
        return float(np.sqrt((self.E**2).sum(axis=0)).max())


def density(f: DistributionField) -> np.ndarray:
    """rho(x) = sum_k f(x, v_k) dv^n."""
    g = f.grid
    return f.values.sum(axis=g.v_axes) * g.cell_v


def _grad_hat(uhat: np.ndarray, grid: PhaseGrid, n_pts: int, length: float) -> np.ndarray:
    n = grid.n
    k = odd_wavenumbers(n_pts, length)
    comps = []
    for d in range(n):
        shape = [1] * n
        shape[d] = -1
        comps.append(ifftn(1j * k.reshape(shape) * uhat, axes=tuple(range(n))).real)
    return np.stack(comps)


def solve_periodic(rho: np.ndarray, grid: PhaseGrid) -> ForceField:
    """U_hat = -rho_hat/|xi|^2 off the zero mode, U_hat(0) = 0; E = grad U."""
    n = grid.n
    axes = tuple(range(n))
    rho = np.asarray(rho, dtype=float)
    rhat = fftn(rho, axes=axes)
    k2 = ksq(grid.xi, n, axes)
    k2 = np.broadcast_to(k2, rhat.shape).copy()
    k2.flat[0] = 1.0
    uhat = -rhat / k2
    uhat.flat[0] = 0.0
    U = ifftn(uhat, axes=axes).real
    E = _grad_hat(uhat, grid, grid.nx, 2 * grid.lx)
    return ForceField(grid, rho, U, E, "periodic")


def laplacian(u: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    axes = tuple(range(grid.n))
    return ifftn(-ksq(grid.xi, grid.n, axes) * fftn(u, axes=axes), axes=axes).real


def curl_residual(E: np.ndarray, grid: PhaseGrid) -> float:
    """max |d_a E_b - d_b E_a| with spectral derivatives (0 for n = 1)."""
    n = grid.n
    axes = tuple(range(n))
    k = odd_wavenumbers(grid.nx, 2 * grid.lx)
    ehat = [fftn(E[d], axes=axes) for d in range(n)]
    worst = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            sa = [1] * n
            sa[a] = -1
            sb = [1] * n
            sb[b] = -1
            c = 1j * k.reshape(sa) * ehat[b] - 1j * k.reshape(sb) * ehat[a]
            worst = max(worst, float(np.abs(ifftn(c, axes=axes)).max()))
    return worst


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True, eq=False)
class GreensKernel:
    """Newtonian kernel |x|^(2-n) / (n (2-n) omega_n) on the doubled grid.

    ``values`` is the kernel tabulated at the doubled-grid offsets, with the
    origin entry replaced by the exact mean of the kernel over the grid cell
    centred there; ``r0`` is the radius of the ball of one cell volume.
    ``method`` selects what the convolution uses:

    * ``"tabulated"``: ``values`` directly (second-order near the singularity);
    * ``"truncated"``: the band-limited kernel of Gamma_n truncated at radius
      ``R`` (larger than any source-target distance), precomputed on a 4x grid;
      spectrally accurate for resolved densities.
    """

    n: int
    values: np.ndarray
    omega: float
    r0: float
    spacing: float
    method: str
    conv_hat: np.ndarray       # FFT of the convolution kernel on the doubled grid
    grad_hat: np.ndarray       # FFTs of the gradient kernels, shape (n, ...)

    @property
    def prefactor(self) -> float:
        return 1.0 / (self.n * (2 - self.n) * self.omega)


def _cell_mean_inv_r(h: float) -> float:
    """Mean of 1/|x| over the cube [-h/2, h/2]^3."""
    s3 = math.sqrt(3.0)
    return (3.0 * math.log((s3 + 1.0) / (s3 - 1.0)) - math.pi / 2.0) / h


def _wrap_offsets(m: int, h: float) -> np.ndarray:
    idx = np.arange(m)
    return np.where(idx < m // 2, idx, idx - m) * h


def greens_kernel(grid: PhaseGrid, method: str = "truncated") -> GreensKernel:
    n = grid.n
    if n != 3:
        raise PoissonError("free-space kernel requires n = 3")
    h = grid.dx
    nx = grid.nx
    m = 2 * nx
    off = _wrap_offsets(m, h)
    mesh = np.meshgrid(off, off, off, indexing="ij")
    r = np.sqrt(sum(c**2 for c in mesh))
    omega = unit_ball_volume(n)
    pref = 1.0 / (n * (2 - n) * omega)
    r0 = (h**n / omega) ** (1.0 / n)
    with np.errstate(divide="ignore"):
        vals = pref * r ** (2 - n)
    vals[0, 0, 0] = pref * _cell_mean_inv_r(h)
    kd = [odd_wavenumbers(m, m * h).reshape(s) for s in ((-1, 1, 1), (1, -1, 1), (1, 1, -1))]
    if method == "tabulated":
        conv_hat = np.fft.fftn(vals)
        grad_hat = np.stack([1j * k * conv_hat for k in kd])
    elif method == "truncated":
        big = 4 * nx
        radius = 1.5 * math.sqrt(3.0) * grid.lx
        k1 = 2.0 * np.pi * np.fft.fftfreq(big, d=h)
        kk = np.sqrt(k1[:, None, None] ** 2 + k1[None, :, None] ** 2 + k1[None, None, :] ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            ghat = -2.0 * np.sin(kk * radius / 2.0) ** 2 / kk**2
        ghat[0, 0, 0] = -radius**2 / 2.0
        sel = np.r_[0:nx, big - nx:big]
        kern = (np.fft.ifftn(ghat).real / h**3)[np.ix_(sel, sel, sel)]
        conv_hat = np.fft.fftn(kern)
        grads = []
        for d in range(3):
            shape = [1, 1, 1]
            shape[d] = -1
            kdir = odd_wavenumbers(big, big * h).reshape(shape)
            gk = (np.fft.ifftn(1j * kdir * ghat).real / h**3)[np.ix_(sel, sel, sel)]
            grads.append(np.fft.fftn(gk))
        grad_hat = np.stack(grads)
    else:
        raise PoissonError(f"unknown kernel method {method!r}")
    return GreensKernel(n, vals, omega, r0, h, method, conv_hat, grad_hat)


def solve_free_space(rho: np.ndarray, grid: PhaseGrid, kernel: GreensKernel | None = None,
                     margin_tol: float = 1e-10) -> ForceField:
    """U = Gamma_n * rho by zero-padded convolution on the doubled grid; E from the
    spectrally differentiated kernel."""
    n = grid.n
    if n != 3:
        raise PoissonError("free-space Poisson solve requires n = 3")
    kernel = kernel or greens_kernel(grid)
    rho = np.asarray(rho, dtype=float)
    outer = np.zeros(rho.shape, dtype=bool)
    for x in np.meshgrid(*([grid.x] * n), indexing="ij"):
        outer |= np.abs(x) >= grid.lx / 2
    scale = max(np.abs(rho).max(), 1e-300)
    if np.abs(rho[outer]).max(initial=0.0) > margin_tol * scale:
        raise PoissonError("density support reaches the padding margin; enlarge the box")
    m = 2 * grid.nx
    inner = (slice(0, grid.nx),) * n
    pad = np.zeros((m,) * n)
    pad[inner] = rho
    phat = np.fft.fftn(pad) * grid.cell_x
    U = np.fft.ifftn(kernel.conv_hat * phat).real[inner]
    E = np.stack([np.fft.ifftn(gh * phat).real[inner] for gh in kernel.grad_hat])
    return ForceField(grid, rho, U, E, "free_space")


def solve(rho: np.ndarray, grid: PhaseGrid, mode: str = "periodic", kernel=None) -> ForceField:
    if mode == "periodic":
        return solve_periodic(rho, grid)
    if mode == "free_space":
        return solve_free_space(rho, grid, kernel)
    raise PoissonError(f"unknown Poisson mode {mode!r}")
