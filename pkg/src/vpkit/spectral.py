"""Unitary DFTs on phase-space grids, Sobolev norms and Fourier multipliers.

All transforms use the unitary normalization (``1/sqrt(N)`` per axis), so the
discrete L2 norm with cell-volume weights is preserved exactly:
``sum |f|^2 dx^n dv^n == sum |fhat|^2 dx^n dv^n``.
"""
from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .grid import DistributionField, PhaseGrid, SpectralField


def fftn(a, axes):
    return sfft.fftn(a, axes=axes, norm="ortho")


def ifftn(a, axes):
    return sfft.ifftn(a, axes=axes, norm="ortho")


def transform_xv(f: DistributionField) -> SpectralField:
    g = f.grid
    return SpectralField(g, fftn(f.values, axes=tuple(range(2 * g.n))))


def inverse_xv(F: SpectralField) -> DistributionField:
    g = F.grid
    return DistributionField(g, ifftn(F.values, axes=tuple(range(2 * g.n))).real)


def odd_wavenumbers(n_pts: int, length: float) -> np.ndarray:
    """Wavenumbers for first-derivative multipliers: the Nyquist entry is zeroed
    so that ``i*k`` maps real fields to real fields."""
    k = 2.0 * np.pi * np.fft.fftfreq(n_pts, d=length / n_pts)
    k[n_pts // 2] = 0.0
    return k


def _mesh(k1d: np.ndarray, ndim: int, axes) -> list[np.ndarray]:
    out = []
    for ax in axes:
        shape = [1] * ndim
        shape[ax] = -1
        out.append(k1d.reshape(shape))
    return out


def ksq(k1d: np.ndarray, ndim: int, axes) -> np.ndarray:
    """|k|^2 over the given axes, broadcastable to an ``ndim`` array."""
    return sum(k**2 for k in _mesh(k1d, ndim, axes))


def phase_symbol(grid: PhaseGrid, s: float) -> np.ndarray:
    """(1 + |xi|^2 + |mu|^2)^s, broadcastable to the field shape."""
    nd = 2 * grid.n
    return (1.0 + ksq(grid.xi, nd, grid.x_axes) + ksq(grid.mu, nd, grid.v_axes)) ** s


def hs_norm(f, s: float) -> float:
    """Inhomogeneous mixed Sobolev norm of a phase-space field.

    ``( sum (1+|xi|^2+|mu|^2)^s |fhat|^2 dx^n dv^n )^(1/2)``; ``s = 0`` is the
    discrete L2 norm.
    """
    if isinstance(f, DistributionField):
        f = transform_xv(f)
    g = f.grid
    w = np.abs(f.values) ** 2
    if s != 0:
        w = w * phase_symbol(g, s)
    return float(np.sqrt(w.sum() * g.cell))


def hs_norm_x(rho: np.ndarray, grid: PhaseGrid, s: float) -> float:
    """H^s norm of a spatial field (shape ``grid.x_shape``)."""
    n = grid.n
    rhat = fftn(rho, axes=tuple(range(n)))
    w = np.abs(rhat) ** 2
    if s != 0:
        w = w * (1.0 + ksq(grid.xi, n, range(n))) ** s
    return float(np.sqrt(w.sum() * grid.cell_x))


def hs_norm_xonly(f: DistributionField, s: float) -> float:
    """Norm in L2_v H^s_x: weight (1+|xi|^2)^s on the x-transform only."""
    g = f.grid
    fx = fftn(f.values, axes=g.x_axes)
    w = np.abs(fx) ** 2 * (1.0 + ksq(g.xi, 2 * g.n, g.x_axes)) ** s
    return float(np.sqrt(w.sum() * g.cell))


def frac_deriv(a: np.ndarray, k1d: np.ndarray, s: float, axes) -> np.ndarray:
    """Apply the multiplier |k|^s over ``axes`` (``k1d`` the per-axis wavenumbers)."""
    axes = tuple(axes)
    if s == 0:
        return np.array(a, dtype=float, copy=True)
    ahat = fftn(a, axes=axes)
    ahat *= ksq(k1d, a.ndim, axes) ** (s / 2.0)
    return ifftn(ahat, axes=axes).real


def frac_deriv_x(f, s: float, grid: PhaseGrid | None = None):
    """Lambda^s_x: the multiplier |xi|^s acting in x.

    Accepts a :class:`DistributionField` (returned as one) or a raw array on
    ``grid`` whose leading ``n`` axes are spatial.
    """
    if isinstance(f, DistributionField):
        g = f.grid
        return DistributionField(g, frac_deriv(f.values, g.xi, s, g.x_axes))
    return frac_deriv(np.asarray(f, dtype=float), grid.xi, s, range(grid.n))


def gradient(a: np.ndarray, n_pts: int, length: float, axes) -> np.ndarray:
    """Spectral gradient over ``axes``; returns array with a leading component axis."""
    axes = tuple(axes)
    k = odd_wavenumbers(n_pts, length)
    ahat = fftn(a, axes=axes)
    comps = [ifftn(1j * km * ahat, axes=axes).real for km in _mesh(k, a.ndim, axes)]
    return np.stack(comps)


def lp_norm(a: np.ndarray, p: float, cell: float) -> float:
    """Discrete L^p norm with cell-volume weights; ``p = inf`` is the max norm."""
    a = np.abs(np.asarray(a))
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a**p) * cell) ** (1.0 / p))


def kato_ponce_check(h: np.ndarray, g: np.ndarray, s: float, p1: float, q1: float,
                     p2: float, q2: float, grid: PhaseGrid, tol: float = 1e-12) -> float:
    """Ratio of the two sides of the fractional Leibniz (Kato-Ponce) inequality.

    ``||L^s(hg)||_r / (||h||_p1 ||L^s g||_q1 + ||L^s h||_p2 ||g||_q2)`` for spatial
    fields ``h, g`` on ``grid``, with ``1/r = 1/p1 + 1/q1 = 1/p2 + 1/q2``.
    Returns 0 when the right-hand side vanishes.
    """
    inv = lambda p: 0.0 if np.isinf(p) else 1.0 / p  # noqa: E731
    r_inv = inv(p1) + inv(q1)
    if abs(r_inv - (inv(p2) + inv(q2))) > 1e-12 or r_inv <= 0:
        raise ValueError("exponents must satisfy 1/r = 1/p1 + 1/q1 = 1/p2 + 1/q2 with r < inf")
    r = 1.0 / r_inv
    cell = grid.cell_x
    ls = lambda a: frac_deriv_x(a, s, grid)  # noqa: E731
    lhs = lp_norm(ls(h * g), r, cell)
    rhs = lp_norm(h, p1, cell) * lp_norm(ls(g), q1, cell) + lp_norm(ls(h), p2, cell) * lp_norm(g, q2, cell)
    if rhs <= tol * max(1.0, lhs):
        return 0.0
    return lhs / rhs


def ball_measure(grid: PhaseGrid, q: float) -> float:
    """Measure of the discrete velocity ball ``{v_k : |v_k| <= q}``."""
    return float(np.count_nonzero(grid.speed() <= q) * grid.cell_v)


def density_bound_check(f: DistributionField, q: float, s: float) -> tuple[float, float]:
    """Both sides of ``||rho_Q||_{H^s_x} <= |B_Q|^(1/2) ||f||_{H^s_{x,v}}``.

    ``rho_Q`` is the velocity integral over the discrete ball ``|v| <= q``; it
    equals the density whenever f vanishes outside the ball.
    """
    g = f.grid
    mask = (g.speed() <= q).astype(float)
    rho_q = np.tensordot(f.values, mask, axes=(g.v_axes, tuple(range(g.n)))) * g.cell_v
    lhs = hs_norm_x(rho_q, g, s)
    rhs = np.sqrt(ball_measure(g, q)) * hs_norm(f, s)
    return lhs, float(rhs)


def shell_tail(power: np.ndarray, kmag: np.ndarray, s: float, frac: float = 0.5):
    """Sobolev tail-sum estimator.

    ``power`` are ``|fhat|^2 * cell`` weights at wavenumber magnitudes ``kmag``.
    Returns ``(total, tail)`` of ``sum (1+k^2)^s power`` where the tail is the
    part with ``k > frac * max(k)``. A norm that is finite in the continuum
    has a tail that shrinks under refinement; a divergent one does not.
    """
    w = (1.0 + kmag**2) ** s * power
    kmax = kmag.max()
    return float(w.sum()), float(w[kmag > frac * kmax].sum())
