"""Strang-split spectral semi-Lagrangian integration of

    d_t f + v . grad_x f + sigma E . grad_v f = 0,   E = grad U,  Lap U = rho.

Each sub-flow is solved exactly by a phase multiplication in Fourier space:
x-advection shifts every v-slice by ``v dt`` and v-advection shifts every
x-slice by ``sigma E(x) dt``. The Nyquist wavenumber carries a zero phase so
each sub-step is an exact isometry of real fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import poisson
from .grid import DiagnosticsSeries, DistributionField, PhaseGrid, SimParams, support_radius
from .spectral import hs_norm, hs_norm_x, odd_wavenumbers


class NumericalAbort(RuntimeError):
    """Run stopped: non-finite values or the velocity box was exhausted."""

    def __init__(self, reason: str, t: float):
        super().__init__(f"{reason} at t={t!r}")
        self.reason = reason
        self.t = t


def _rwaves(n_pts: int, length: float) -> np.ndarray:
    """Half-spectrum wavenumbers for rfft with the Nyquist phase zeroed."""
    k = 2.0 * np.pi * np.fft.rfftfreq(n_pts, d=length / n_pts)
    if n_pts % 2 == 0:
        k[-1] = 0.0
    return k


def _shape(ndim: int, axes_vals: dict) -> list:
    s = [1] * ndim
    for ax, m in axes_vals.items():
        s[ax] = m
    return s


def _advect_x(values: np.ndarray, grid: PhaseGrid, dt: float) -> np.ndarray:
    n = grid.n
    nd = 2 * n
    axes = grid.x_axes
    fh = sfft.rfftn(values, axes=axes)
    for d in range(n):
        k = _rwaves(grid.nx, 2 * grid.lx) if d == n - 1 else odd_wavenumbers(grid.nx, 2 * grid.lx)
        ph = np.exp(-1j * dt * np.multiply.outer(k, grid.v))
        fh *= ph.reshape(_shape(nd, {d: k.size, n + d: grid.nv}))
    return sfft.irfftn(fh, s=grid.x_shape, axes=axes)


def _advect_v(values: np.ndarray, grid: PhaseGrid, E: np.ndarray, coef: float) -> np.ndarray:
    """Shift each x-slice in v by ``coef * E(x)``: f(x, v - coef E(x))."""
    n = grid.n
    axes = grid.v_axes
    fh = sfft.rfftn(values, axes=axes)
    for d in range(n):
        k = _rwaves(grid.nv, 2 * grid.lv) if d == n - 1 else odd_wavenumbers(grid.nv, 2 * grid.lv)
        kshape = [1] * n
        kshape[d] = k.size
        ph = np.exp(-1j * coef * E[d][(...,) + (None,) * n] * k.reshape(kshape))
        fh *= ph
    return sfft.irfftn(fh, s=grid.v_shape, axes=axes)


def step_x_advection(f: DistributionField, dt: float) -> DistributionField:
    """Exact free transport over ``dt``: f(x - v dt, v)."""
    if dt == 0:
        return f
    return DistributionField(f.grid, _advect_x(f.values, f.grid, dt))


def step_v_advection(f: DistributionField, E, sigma: int, dt: float) -> DistributionField:
    """Exact v-transport over ``dt`` at frozen field: f(x, v - sigma E(x) dt)."""
    Earr = E.E if isinstance(E, poisson.ForceField) else np.asarray(E, dtype=float)
    if not np.all(np.isfinite(Earr)):
        raise ValueError("force field must be finite")
    if dt == 0 or not np.any(Earr):
        return f
    return DistributionField(f.grid, _advect_v(f.values, f.grid, Earr, sigma * dt))


def _lowpass(values: np.ndarray, grid: PhaseGrid, frac: float) -> np.ndarray:
    axes = tuple(range(2 * grid.n))
    fh = sfft.fftn(values, axes=axes)
    for ax in axes:
        m = grid.nx if ax < grid.n else grid.nv
        keep = np.abs(np.fft.fftfreq(m) * m) <= frac * (m // 2)
        fh *= keep.reshape(_shape(2 * grid.n, {ax: m}))
    return sfft.ifftn(fh, axes=axes).real


def force(f: DistributionField, params: SimParams, kernel=None) -> poisson.ForceField:
    g = f.grid
    rho = poisson.density(f)
    if not params.field_enabled:
        z = np.zeros(g.x_shape)
        return poisson.ForceField(g, rho, z, np.zeros((g.n,) + g.x_shape), "disabled")
    return poisson.solve(rho, g, params.poisson_mode, kernel)


@dataclass
class StepInfo:
    E_half: np.ndarray
    e_inf: float


def strang_step(f: DistributionField, params: SimParams, dt: float | None = None,
                kernel=None) -> tuple[DistributionField, StepInfo]:
    """Half x-advection, field from the half-stepped density, full v-advection,
    half x-advection."""
    dt = params.dt if dt is None else dt
    g = f.grid
    vals = _advect_x(f.values, g, dt / 2)
    ff = force(DistributionField(g, vals), params, kernel)
    einf = ff.e_inf()
    if np.any(ff.E):
        vals = _advect_v(vals, g, ff.E, params.sigma * dt)
    vals = _advect_x(vals, g, dt / 2)
    if params.lowpass is not None:
        vals = _lowpass(vals, g, params.lowpass)
    if not np.all(np.isfinite(vals)):
        raise NumericalAbort("non-finite values", float("nan"))
    return DistributionField(g, vals), StepInfo(ff.E, einf)


def diagnose(f: DistributionField, params: SimParams, kernel=None):
    """Per-time scalars plus the force field at ``f``."""
    g = f.grid
    ff = force(f, params, kernel)
    row = dict(
        l1=f.l1(), l2=f.l2(), hs=hs_norm(f, params.s),
        Q=support_radius(f, params.support_tol),
        rho_hs14=hs_norm_x(ff.rho, g, params.s + 0.25),
        gradU_inf=ff.e_inf(),
        gradU_hs54=math.sqrt(sum(hs_norm_x(ff.E[d], g, params.s + 1.25) ** 2 for d in range(g.n))),
        rho_inf=float(np.abs(ff.rho).max()),
    )
    return row, ff


@dataclass
class Trajectory:
    grid: PhaseGrid
    params: SimParams
    snapshots: list = field(default_factory=list)   # (t, DistributionField)
    diagnostics: DiagnosticsSeries = field(default_factory=DiagnosticsSeries)
    field_times: list = field(default_factory=list)
    fields: list = field(default_factory=list)      # E at each step time, (n,)+x_shape
    q_bound: list = field(default_factory=list)     # Q(0) + sum |E_half| |dt| + 2 dv
    final: DistributionField | None = None

    @property
    def q_bound_ok(self) -> bool:
        Q = self.diagnostics.array("Q")
        return bool(np.all(Q <= np.asarray(self.q_bound) + 1e-12))

    def field_at(self, i: int) -> np.ndarray:
        return self.fields[i]

    def snapshot_times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])


def n_steps(t_final: float, dt: float) -> int:
    m = int(round(t_final / abs(dt)))
    if abs(m * abs(dt) - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final={t_final} is not an integer multiple of |dt|={abs(dt)}")
    return m


def run(f0: DistributionField, params: SimParams, snapshot_every: int = 1, t0: float = 0.0,
        store_fields: bool = True, on_snapshot=None) -> Trajectory:
    """Integrate from ``t0`` over ``t_final`` in steps of ``params.dt`` (which may be
    negative). Snapshots every ``snapshot_every`` steps plus the final state;
    diagnostics at every step."""
    g = f0.grid
    steps = n_steps(params.t_final, params.dt)
    kernel = poisson.greens_kernel(g) if (params.poisson_mode == "free_space"
                                          and params.field_enabled) else None
    traj = Trajectory(g, params)
    dv = g.dv
    vmax = g.lv - 2 * dv

    def record(t, f, qsum):
        row, ff = diagnose(f, params, kernel)
        if row["Q"] >= vmax:
            raise NumericalAbort("velocity box exhausted", t)
        traj.diagnostics.append(t, **row)
        if store_fields:
            traj.field_times.append(t)
            traj.fields.append(ff.E)
        traj.q_bound.append(traj.diagnostics.Q[0] + qsum + 2 * dv)

    def snap(t, f):
        traj.snapshots.append((t, f))
        if on_snapshot is not None:
            on_snapshot(t, f)

    f = f0
    qsum = 0.0
    record(t0, f, qsum)
    snap(t0, f)
    for k in range(1, steps + 1):
        t = t0 + k * params.dt
        try:
            f, info = strang_step(f, params, kernel=kernel)
        except NumericalAbort as exc:
            raise NumericalAbort(exc.reason, t) from None
        qsum += info.e_inf * abs(params.dt)
        record(t, f, qsum)
        if k % snapshot_every == 0 or k == steps:
            snap(t, f)
    traj.final = f
    return traj
