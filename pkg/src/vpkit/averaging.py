"""Velocity averaging: both sides of the L2_t H^(1/4)_x averaging inequality and
its constructive proof split into the near-resonant part I1 and the
integrated-by-parts part I2.

A :class:`KineticPair` holds samples of ``h(t, x, v)`` and the n-component
``g(t, x, v)`` tied by ``d_t h + v . grad_x h = div_v g``. Space-time spectra
use the continuum-scaled transform

    hhat(tau, xi, v) = sum_t sum_x h e^{-i(tau t + xi . x)} dt dx^n,

over a time axis that is either periodic (manufactured pairs) or the
zero-extended interval padded to length 2T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import PhaseGrid
from .initial_data import normal_stream
from .io import write_csv
from .spectral import odd_wavenumbers


class AveragingError(ValueError):
    pass


@dataclass(frozen=True)
class CutoffZeta:
    """Even cutoff: 1 on |z| <= 1, 0 on |z| >= 2, ``1 - w(|z| - 1)`` between,
    with ``w`` the quintic smoothstep. Max slope 15/8."""

    MAX_SLOPE = 15.0 / 8.0

    @staticmethod
    def _w(u):
        return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)

    @staticmethod
    def _dw(u):
        return 30.0 * u**2 * (1.0 - u) ** 2

    def __call__(self, z):
        a = np.abs(np.asarray(z, dtype=float))
        u = np.clip(a - 1.0, 0.0, 1.0)
        return 1.0 - self._w(u)

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        a = np.abs(z)
        u = np.clip(a - 1.0, 0.0, 1.0)
        return -self._dw(u) * np.sign(z)


ZETA = CutoffZeta()

# corpus-wide constant in averaging_lhs <= C_AVG * averaging_rhs (largest measured ratio ~0.59)
C_AVG = 1.0


@dataclass(frozen=True, eq=False)
class KineticPair:
    """Samples at ``t_k = k dt``, k < nt. ``h`` has shape ``(nt,) + grid.shape``;
    ``g`` has shape ``(n, nt) + grid.shape``."""

    grid: PhaseGrid
    h: np.ndarray
    g: np.ndarray
    Q: float
    dt: float
    periodic_time: bool = False

    def __post_init__(self):
        nt = self.h.shape[0]
        if self.h.shape != (nt,) + self.grid.shape:
            raise AveragingError(f"h shape {self.h.shape} does not match grid")
        if self.g.shape != (self.grid.n, nt) + self.grid.shape:
            raise AveragingError(f"g shape {self.g.shape} does not match (n,) + h shape")

    @property
    def nt(self) -> int:
        return self.h.shape[0]

    @property
    def T(self) -> float:
        return self.nt * self.dt

    @property
    def n_time(self) -> int:
        """Length of the time axis that is transformed."""
        return self.nt if self.periodic_time else 2 * self.nt

    @property
    def tau(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_time, d=self.dt)

    def support_ok(self, tol: float) -> bool:
        outside = (self.grid.speed() > self.Q).ravel()
        flat = self.h.reshape(self.h.shape[: 1 + self.grid.n] + (-1,))
        return bool(np.abs(flat[..., outside]).max(initial=0.0) <= tol)

    def scaled(self, c: float) -> "KineticPair":
        return KineticPair(self.grid, c * self.h, c * self.g, self.Q, self.dt, self.periodic_time)


def _pad_time(a: np.ndarray, axis: int, n_time: int) -> np.ndarray:
    nt = a.shape[axis]
    if n_time == nt:
        return a
    pad = [(0, 0)] * a.ndim
    pad[axis] = (0, n_time - nt)
    return np.pad(a, pad)


def velocity_average(h: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """rho_h(t, x) = sum_k h(t, x, v_k) dv^n for ``h`` of shape ``(nt,) + grid.shape``."""
    n = grid.n
    return h.sum(axis=tuple(range(1 + n, 1 + 2 * n))) * grid.cell_v


def space_time_spectrum(a: np.ndarray, pair: KineticPair, lead: int = 0) -> np.ndarray:
    """Continuum-scaled transform over the time axis (zero-extended unless the pair
    is periodic) and the n spatial axes; ``lead`` leading axes are left alone."""
    n = pair.grid.n
    a = _pad_time(a, lead, pair.n_time)
    axes = tuple(range(lead, lead + 1 + n))
    return np.fft.fftn(a, axes=axes) * (pair.dt * pair.grid.cell_x)


def averaging_lhs(pair: KineticPair) -> float:
    """``||rho_h||_{L2_t H^(1/4)_x}`` from the space-time spectrum of zero-extended rho_h."""
    g = pair.grid
    n = g.n
    rho_hat = space_time_spectrum(velocity_average(pair.h, g), pair)
    k2 = sum(k**2 for k in np.meshgrid(*([g.xi] * n), indexing="ij"))
    w = (1.0 + k2) ** 0.25
    # Plancherel for the continuum-scaled transform: sum |.|^2 / (n_time dt (2 lx)^n)
    vol = pair.n_time * pair.dt * (2 * g.lx) ** n
    return float(np.sqrt((w * np.abs(rho_hat) ** 2).sum() / vol))


def lhs_split(pair: KineticPair) -> tuple[float, float]:
    """Squared LHS split into the ``|xi| < 1`` part (plain L2 bound in the proof)
    and the ``|xi| >= 1`` part (averaging); the two sum to ``averaging_lhs**2``."""
    g = pair.grid
    n = g.n
    rho_hat = space_time_spectrum(velocity_average(pair.h, g), pair)
    k2 = sum(k**2 for k in np.meshgrid(*([g.xi] * n), indexing="ij"))
    dens = (1.0 + k2) ** 0.25 * np.abs(rho_hat) ** 2 / (pair.n_time * pair.dt * (2 * g.lx) ** n)
    low = k2 < 1.0
    return float(dens[:, low].sum()), float(dens[:, ~low].sum())


def _l2_txv(a: np.ndarray, pair: KineticPair) -> float:
    return float(np.sqrt(np.vdot(a, a).real * pair.dt * pair.grid.cell))


def averaging_rhs(pair: KineticPair) -> float:
    """``(1+Q)^(n/2) (||h|| + ||g||)`` in L2_{t,x,v}; the constant is calibrated elsewhere."""
    n = pair.grid.n
    return (1.0 + pair.Q) ** (n / 2) * (_l2_txv(pair.h, pair) + _l2_txv(pair.g, pair))


def _v_mesh(grid: PhaseGrid):
    return np.meshgrid(*([grid.v] * grid.n), indexing="ij")


def i2_weight_gradient(tau: float, xi, grid: PhaseGrid, zeta: CutoffZeta = ZETA,
                       route: str = "analytic") -> np.ndarray:
    """Gradient in v of ``W(v) = i (1 - zeta(z)) / (tau + xi . v)``, ``z = (tau + xi.v)/|xi|^(1/2)``.

    ``route="analytic"`` differentiates the closed form; ``route="discrete"``
    applies the spectral v-derivative to the sampled W, which makes the
    summation by parts behind I2 exact on the grid.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    vs = _v_mesh(grid)
    w = tau + sum(x * v for x, v in zip(xi, vs))
    root = math.sqrt(float(np.sqrt(xi @ xi)))
    z = w / root
    plateau = np.abs(z) <= 1.0
    safe = np.where(plateau, 1.0, w)
    if route == "analytic":
        dW = 1j * (-zeta.deriv(z) / (root * safe) - (1.0 - zeta(z)) / safe**2)
        dW = np.where(plateau, 0.0, dW)
        return np.stack([x * dW for x in xi])
    if route == "discrete":
        W = np.where(plateau, 0.0, 1j * (1.0 - zeta(z)) / safe)
        n = grid.n
        k = odd_wavenumbers(grid.nv, 2 * grid.lv)
        Wh = np.fft.fftn(W)
        out = []
        for d in range(n):
            shape = [1] * n
            shape[d] = -1
            out.append(np.fft.ifftn(1j * k.reshape(shape) * Wh))
        return np.stack(out)
    raise AveragingError(f"unknown route {route!r}")


def mode_decomposition(hhat_v: np.ndarray, ghat_v: np.ndarray, tau: float, xi, grid: PhaseGrid,
                       zeta: CutoffZeta = ZETA, route: str = "analytic") -> tuple[complex, complex]:
    """(I1, I2) at one space-time mode. ``hhat_v`` has shape ``grid.v_shape``,
    ``ghat_v`` shape ``(n,) + grid.v_shape``. Requires ``|xi| >= 1``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    kx = float(np.sqrt(xi @ xi))
    if kx < 1.0:
        raise AveragingError(f"|xi| = {kx} < 1: split undefined")
    vs = _v_mesh(grid)
    w = tau + sum(x * v for x, v in zip(xi, vs))
    I1 = complex((hhat_v * zeta(w / math.sqrt(kx))).sum() * grid.cell_v)
    grad = i2_weight_gradient(tau, xi, grid, zeta, route)
    I2 = complex((ghat_v * grad).sum() * grid.cell_v)
    return I1, I2


def i1_bound_check(hhat_v: np.ndarray, tau: float, xi, grid: PhaseGrid, Q: float,
                   zeta: CutoffZeta = ZETA) -> float:
    """``|I1| |xi|^(1/4) / (Q^((n-1)/2) ||hhat(tau, xi, .)||_{L2_v})``; 0 if the denominator vanishes."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    kx = float(np.sqrt(xi @ xi))
    if kx < 1.0:
        raise AveragingError(f"|xi| = {kx} < 1: split undefined")
    if Q <= 0:
        raise AveragingError("Q must be positive")
    vs = _v_mesh(grid)
    w = tau + sum(x * v for x, v in zip(xi, vs))
    I1 = abs((hhat_v * zeta(w / math.sqrt(kx))).sum() * grid.cell_v)
    den = Q ** ((grid.n - 1) / 2) * math.sqrt(float((np.abs(hhat_v) ** 2).sum() * grid.cell_v))
    if den == 0.0:
        return 0.0
    return I1 * kx**0.25 / den


def decomposition_residual(pair: KineticPair, modes: int = 8, route: str = "discrete") -> float:
    """max over the ``modes`` strongest space-time modes with ``|xi| >= 1`` of
    ``|I1 + I2 - int hhat dv| / int |hhat| dv``, using the pair's own spectra."""
    g = pair.grid
    n = g.n
    hh = space_time_spectrum(pair.h, pair)
    gh = np.stack([space_time_spectrum(pair.g[d], pair) for d in range(n)])
    tau = _odd_tau(pair)
    kx = odd_wavenumbers(g.nx, 2 * g.lx)
    mass = np.abs(hh).sum(axis=tuple(range(1 + n, 1 + 2 * n)))
    xi_mesh = np.meshgrid(*([kx] * n), indexing="ij")
    low = np.sqrt(sum(m**2 for m in xi_mesh)) < 1.0
    mass[:, low] = 0.0
    worst = 0.0
    for flat in np.argsort(mass, axis=None)[::-1][:modes]:
        idx = np.unravel_index(flat, mass.shape)
        if mass[idx] == 0.0:
            break
        xi = np.array([kx[i] for i in idx[1:]])
        h_v = hh[idx]
        g_v = gh[(slice(None),) + idx]
        i1, i2 = mode_decomposition(h_v, g_v, float(tau[idx[0]]), xi, g, route=route)
        total = complex(h_v.sum() * g.cell_v)
        worst = max(worst, abs(i1 + i2 - total) / (mass[idx] * g.cell_v))
    return worst


def _odd_tau(pair: KineticPair) -> np.ndarray:
    return odd_wavenumbers(pair.n_time, pair.n_time * pair.dt)


def _transport_terms(pair: KineticPair):
    """Spectra of ``i tau hhat``, ``i xi.v hhat`` and ``(div_v g)^`` with spectral
    derivatives (Nyquist symbols zeroed) in t, x and v."""
    g = pair.grid
    n = g.n
    nd = 1 + 2 * n
    hh = space_time_spectrum(pair.h, pair)
    tau = _odd_tau(pair).reshape((-1,) + (1,) * (2 * n))
    kx = odd_wavenumbers(g.nx, 2 * g.lx)
    adv = 0.0
    for d in range(n):
        shp = [1] * nd
        shp[1 + d] = -1
        vshp = [1] * nd
        vshp[1 + n + d] = -1
        adv = adv + kx.reshape(shp) * g.v.reshape(vshp)
    kv = odd_wavenumbers(g.nv, 2 * g.lv)
    div = np.zeros(pair.g.shape[1:], dtype=complex)
    for d in range(n):
        vshp = [1] * nd
        vshp[1 + n + d] = -1
        ax = 1 + n + d
        div += np.fft.ifft(1j * kv.reshape(vshp) * np.fft.fft(pair.g[d], axis=ax), axis=ax)
    return 1j * tau * hh, 1j * adv * hh, space_time_spectrum(div, pair)


def transport_residual_spectra(pair: KineticPair) -> tuple[np.ndarray, np.ndarray]:
    """Spectra of ``i(tau + xi.v) hhat`` and of ``(div_v g)^``."""
    dt_term, adv_term, div = _transport_terms(pair)
    return dt_term + adv_term, div


def verify_transport(pair: KineticPair, relative: bool = False) -> float:
    """max over modes of ``|i(tau + xi.v) hhat - (div_v g)^|``. The time axis is
    differentiated spectrally, so the pair must be resolved and periodic in time
    (or vanish at both ends of the zero-extended interval). ``relative`` divides by
    the largest of the three individual terms."""
    dt_term, adv_term, div = _transport_terms(pair)
    res = float(np.abs(dt_term + adv_term - div).max())
    if relative:
        scale = max(float(np.abs(t).max()) for t in (dt_term, adv_term, div))
        return res / max(scale, 1e-300)
    return res


def transport_residual_central(h: np.ndarray, g: np.ndarray, grid: PhaseGrid, dt: float) -> float:
    """Relative max residual of ``d_t h + v.grad_x h - div_v g`` at interior times,
    with central differences in t and spectral derivatives in x and v."""
    n = grid.n
    dth = (h[2:] - h[:-2]) / (2 * dt)
    hc = h[1:-1]
    kx = odd_wavenumbers(grid.nx, 2 * grid.lx)
    kv = odd_wavenumbers(grid.nv, 2 * grid.lv)
    nd = 1 + 2 * n
    res = dth.astype(float).copy()
    scale = np.abs(dth).max()
    for d in range(n):
        ax = 1 + d
        shp = [1] * nd
        shp[ax] = -1
        gx = np.fft.ifft(1j * kx.reshape(shp) * np.fft.fft(hc, axis=ax), axis=ax).real
        vshp = [1] * nd
        vshp[1 + n + d] = -1
        adv = grid.v.reshape(vshp) * gx
        axv = 1 + n + d
        dg = np.fft.ifft(1j * kv.reshape(vshp) * np.fft.fft(g[d][1:-1], axis=axv), axis=axv).real
        res += adv - dg
        scale = max(scale, np.abs(adv).max(), np.abs(dg).max())
    return float(np.abs(res).max() / max(scale, 1e-300))


# ---------------------------------------------------------------- manufactured pairs

def _bumps(vs, centers, r):
    phis, grads = [], []
    for c in centers:
        d = [v - cc for v, cc in zip(vs, c)]
        phi = np.exp(-0.5 * sum(x**2 for x in d) / r**2)
        phis.append(phi)
        grads.append([-x / r**2 * phi for x in d])
    return phis, grads


@dataclass(frozen=True)
class ManufacturedSpec:
    """Continuum description of a manufactured pair; sampling it on any grid
    gives the same underlying functions."""

    n: int
    seed: int
    kmax_t: int = 2
    kmax_x: int = 2
    n_bumps: int = 2
    r: float = 0.7
    c_max: float = 0.8
    t_period: float = 2.0

    @property
    def Q(self) -> float:
        return self.c_max + 7.5 * self.r


def _spec_coeffs(spec: ManufacturedSpec):
    n = spec.n
    side = 2 * spec.kmax_t + 1, 2 * spec.kmax_x + 1
    shape = (side[0],) + (side[1],) * n
    count = spec.n_bumps * n * int(np.prod(shape))
    z = normal_stream(spec.seed, 2 * count + spec.n_bumps * n + 1)
    coef = (z[:count] + 1j * z[count:2 * count]).reshape((n, spec.n_bumps) + shape)
    # spectral decay keeps the functions smooth and comparable across the corpus
    kt = np.arange(-spec.kmax_t, spec.kmax_t + 1)
    kx = np.arange(-spec.kmax_x, spec.kmax_x + 1)
    mesh = np.meshgrid(kt, *([kx] * n), indexing="ij")
    coef *= np.exp(-0.5 * sum(m**2 for m in mesh))
    u = z[2 * count:2 * count + spec.n_bumps * n].reshape(spec.n_bumps, n)
    centers = spec.c_max * np.tanh(u) / math.sqrt(n)
    return coef, centers


def manufactured_pair(spec: ManufacturedSpec, grid: PhaseGrid, nt: int) -> KineticPair:
    """Periodic-in-time pair with ``g = -(d_t + v.grad_x)^2 a`` and
    ``h = -2 div_x a - (d_t + v.grad_x) div_v a`` for a smooth vector field
    ``a(t,x,v) = sum_j b_j(t,x) phi_j(v)`` with Gaussian bumps ``phi_j``. Then
    ``d_t h + v.grad_x h = div_v g`` holds exactly in the continuum."""
    n = grid.n
    if n != spec.n:
        raise AveragingError("spec and grid dimensions differ")
    if spec.Q >= grid.lv:
        raise AveragingError("bump support does not fit in the velocity box")
    dt = spec.t_period / nt
    coef, centers = _spec_coeffs(spec)
    kt_n, kx_n = 2 * spec.kmax_t + 1, 2 * spec.kmax_x + 1
    if nt < kt_n + 1 or grid.nx < kx_n + 1:
        raise AveragingError("grid too coarse for the manufactured band")
    # place band coefficients into FFT arrays (continuum-scaled so that
    # b(t,x) = sum c e^{i(tau t + xi.x)} independent of resolution)
    full = np.zeros((n, spec.n_bumps, nt) + (grid.nx,) * n, dtype=complex)
    it = np.arange(-spec.kmax_t, spec.kmax_t + 1) % nt
    ix = np.arange(-spec.kmax_x, spec.kmax_x + 1) % grid.nx
    full[(slice(None), slice(None)) + np.ix_(it, *([ix] * n))] = coef
    # b_hat -> real field: take the real part so the band is symmetric
    # shift by -lx so the phases refer to x measured from the box origin
    tau = 2 * np.pi * np.fft.fftfreq(nt, d=dt)
    xi = grid.xi
    b = np.fft.ifftn(full, axes=tuple(range(2, 3 + n))).real * nt * grid.nx**n
    bh = np.fft.fftn(b, axes=tuple(range(2, 3 + n)))          # Hermitian band spectrum
    vs = _v_mesh(grid)
    phis, grads = _bumps(vs, centers, spec.r)
    # A_d(tau, xi, v) and div_v A
    A = np.zeros((n, nt) + grid.shape, dtype=complex)
    divA = np.zeros((nt,) + grid.shape, dtype=complex)
    vexp = (Ellipsis,) + (None,) * n
    for d in range(n):
        for j in range(spec.n_bumps):
            A[d] += bh[d, j][vexp] * phis[j]
            divA += bh[d, j][vexp] * grads[j][d]
    nd = 1 + 2 * n
    tshp = [1] * nd
    tshp[0] = -1
    w = tau.reshape(tshp) + 0.0
    xis = []
    for d in range(n):
        shp = [1] * nd
        shp[1 + d] = -1
        vshp = [1] * nd
        vshp[1 + n + d] = -1
        w = w + xi.reshape(shp) * grid.v.reshape(vshp)
        xis.append(xi.reshape(shp))
    gh = w**2 * A
    hh = -1j * (2 * sum(xis[d] * A[d] for d in range(n)) + w * divA)
    axes = tuple(range(0, 1 + n))
    h = np.fft.ifftn(hh, axes=axes).real
    g = np.fft.ifftn(gh, axes=tuple(range(1, 2 + n))).real
    return KineticPair(grid, h, g, spec.Q, dt, periodic_time=True)


def desk_manufactured(n: int, seed: int, lx: float = math.pi, refine: int = 0):
    """(spec, grid, nt) for a manufactured pair that fits in desk memory with the
    velocity bumps resolved (dv <= 0.25, or wider bumps on the coarser 3-d grid).
    ``refine`` doubles the x and t resolution (and v for n = 1)."""
    if n == 1:
        spec = ManufacturedSpec(1, seed)
        nx, nv, nt = 16 * 2**refine, 64 * 2**refine, 16 * 2**refine
    elif n == 2:
        spec = ManufacturedSpec(2, seed)
        nx, nv, nt = 8 * 2**refine, 64, 8 * 2**refine
    elif n == 3:
        spec = ManufacturedSpec(3, seed, kmax_t=1, kmax_x=1, r=1.0, c_max=0.3)
        nx, nv, nt = 4 * 2**refine, 32, 4 * 2**refine
    else:
        raise AveragingError(f"dimension n={n} not supported")
    return spec, PhaseGrid(n, nx, nv, lx, 8.0), nt


def manufactured_mode(tau: float, xi, grid: PhaseGrid, seed: int = 0, n_bumps: int = 3,
                      r: float = 0.5, c_max: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """(hhat, ghat) on the v-grid at one mode, with ``i(tau+xi.v) hhat = div_v ghat``
    holding analytically: ``ghat = w^2 A``, ``hhat = -i(2 xi.A + w div_v A)``."""
    n = grid.n
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    z = normal_stream(seed, 2 * n * n_bumps + n * n_bumps)
    amp = (z[: n * n_bumps] + 1j * z[n * n_bumps: 2 * n * n_bumps]).reshape(n_bumps, n)
    centers = c_max * np.tanh(z[2 * n * n_bumps:].reshape(n_bumps, n)) / math.sqrt(n)
    vs = _v_mesh(grid)
    phis, grads = _bumps(vs, centers, r)
    w = tau + sum(x * v for x, v in zip(xi, vs))
    A = np.zeros((n,) + grid.v_shape, dtype=complex)
    divA = np.zeros(grid.v_shape, dtype=complex)
    for j in range(n_bumps):
        for d in range(n):
            A[d] += amp[j, d] * phis[j]
            divA += amp[j, d] * grads[j][d]
    gh = w**2 * A
    hh = -1j * (2 * sum(xi[d] * A[d] for d in range(n)) + w * divA)
    return hh, gh


# ---------------------------------------------------------------- solver pairs

def solver_pair(traj, s: float = 0.0) -> KineticPair:
    """Pair from a stored trajectory: ``h = Lambda^s_x f``, ``g = -sigma Lambda^s_x(E f)``
    (from ``d_t f + v.grad_x f = div_v(-sigma E f)``); needs snapshots at every step."""
    from .spectral import frac_deriv_x

    grid = traj.grid
    n = grid.n
    snaps = traj.snapshots
    if len(snaps) != len(traj.fields):
        raise AveragingError("trajectory must store a snapshot and field at every step")
    sigma = traj.params.sigma
    hs, gs = [], []
    vexp = (Ellipsis,) + (None,) * n
    for (t, f), E in zip(snaps, traj.fields):
        hs.append(frac_deriv_x(f.values, s, grid))
        gs.append([-sigma * frac_deriv_x(E[d][vexp] * f.values, s, grid) for d in range(n)])
    h = np.stack(hs)
    g = np.stack(gs, axis=1)
    Q = max(traj.diagnostics.Q)
    return KineticPair(grid, h, g, Q, abs(traj.params.dt), periodic_time=False)


# ---------------------------------------------------------------- calibration

CALIBRATION_COLUMNS = ("corpus_id", "lhs", "rhs", "ratio", "grid", "Q", "T")


def calibrate(pairs, ids=None):
    """Rows (id, lhs, rhs, ratio, grid, Q, T) and the corpus-wide max ratio C*."""
    rows = []
    for i, p in enumerate(pairs):
        lhs = averaging_lhs(p)
        rhs = averaging_rhs(p)
        ratio = lhs / rhs if rhs > 0 else 0.0
        g = p.grid
        rows.append((ids[i] if ids else i, lhs, rhs, ratio, f"n{g.n}-nx{g.nx}-nv{g.nv}-nt{p.nt}",
                     p.Q, p.T))
    cstar = max((r[3] for r in rows), default=0.0)
    return rows, cstar


def write_calibration(path, rows) -> None:
    write_csv(path, CALIBRATION_COLUMNS, rows)
