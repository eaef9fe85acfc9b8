"""Stability of two solutions measured through the characteristic-flow functional P."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import solver
from ..charflow import FlowMap, VlasovField, rk_flow
from ..grid import DistributionField, SimParams
from ..spectral import gradient, odd_wavenumbers

# rate constant in kappa <= C (1 + |rho1|^2 + |rho2|^2)^(1/2), calibrated on the smooth corpus
RATE_C = 1.0


class SeedMismatchError(ValueError):
    pass


def shift_field(f: DistributionField, d) -> DistributionField:
    """Exact band-limited translation ``f(z - d)`` in phase space ``z = (x, v)``."""
    g = f.grid
    n = g.n
    d = np.asarray(d, dtype=float)
    if d.shape != (2 * n,):
        raise ValueError(f"shift must have {2 * n} components")
    fh = np.fft.fftn(f.values)
    kx = odd_wavenumbers(g.nx, 2 * g.lx)
    kv = odd_wavenumbers(g.nv, 2 * g.lv)
    for ax in range(2 * n):
        k = kx if ax < n else kv
        shp = [1] * (2 * n)
        shp[ax] = -1
        fh = fh * np.exp(-1j * k * d[ax]).reshape(shp)
    return DistributionField(g, np.fft.ifftn(fh).real)


def shift_vector(n: int, delta: float, direction: str = "mixed") -> np.ndarray:
    """``delta`` times a unit vector: all 2n axes (``mixed``) or the n spatial ones (``x``)."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    d = np.zeros(2 * n)
    if direction == "mixed":
        d[:] = 1.0 / math.sqrt(2 * n)
    elif direction == "x":
        d[:n] = 1.0 / math.sqrt(n)
    else:
        raise ValueError(f"unknown shift direction {direction!r}")
    return delta * d


def loeper_functional(flow1: FlowMap, flow2: FlowMap, f0_weights, weights=None,
                      shift=None) -> np.ndarray:
    """``P(t) = 1/2 sum_seeds f0 w |Phi1 - Phi2|^2`` at the shared flow times.

    ``flow2`` must start from ``flow1.seeds + shift`` (zero shift by default).
    """
    s1, s2 = flow1.seeds, flow2.seeds
    expect = s1 if shift is None else s1 + np.asarray(shift)
    if s1.shape != s2.shape or not np.array_equal(s2, expect):
        raise SeedMismatchError("flows do not share the seed set")
    if flow1.times.shape != flow2.times.shape or not np.allclose(flow1.times, flow2.times):
        raise SeedMismatchError("flows are sampled at different times")
    w = np.asarray(f0_weights, dtype=float)
    if weights is not None:
        w = w * weights
    diff = flow1.positions - flow2.positions
    return 0.5 * np.einsum("tmd,tmd,m->t", diff, diff, w)


@dataclass
class UniquenessReport:
    times: np.ndarray
    P: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    T1_bound: np.ndarray         # 2 max(|rho1|_inf, |rho2|_inf)^2 P
    T2_bound: np.ndarray         # 2 |grad U2|_{C1}^2 P
    kappa: float                 # max_t log(P/P0)/t
    rate_factor: float           # sup_t (1 + |rho1|^2 + |rho2|^2)^(1/2) in H^(s+1/4)
    P0_closed: float             # 1/2 |d|^2 sum f0 w
    meta: dict = field(default_factory=dict)

    @property
    def P0(self) -> float:
        return float(self.P[0])

    def gronwall_ok(self, rtol: float = 1e-9) -> bool:
        if self.P0 == 0.0:
            return bool(np.all(self.P == 0.0))
        return bool(np.all(self.P <= self.P0 * np.exp(self.kappa * self.times) * (1 + rtol)))

    def rate_ok(self, C: float = RATE_C) -> bool:
        return self.kappa <= C * self.rate_factor

    def split_ok(self, rtol: float = 1e-6) -> bool:
        slack = rtol * (self.P.max() if self.P.size else 0.0) + 1e-300
        return bool(np.all(self.T1 <= self.T1_bound * (1 + rtol) + slack)
                    and np.all(self.T2 <= self.T2_bound * (1 + rtol) + slack))

    def rows(self):
        for i in range(self.times.size):
            yield (self.times[i], self.P[i], self.T1[i], self.T2[i], self.T1_bound[i],
                   self.T2_bound[i])

    COLUMNS = ("t", "P", "T1", "T2", "T1_bound", "T2_bound")


def growth_rate(times: np.ndarray, P: np.ndarray) -> float:
    """Smallest ``kappa`` with ``P(t) <= P(0) exp(kappa t)`` on the samples."""
    if P[0] <= 0.0:
        return 0.0
    t = times[1:]
    with np.errstate(divide="ignore"):
        r = np.log(np.maximum(P[1:], 1e-300) / P[0]) / t
    return float(max(r.max(), 0.0)) if r.size else 0.0


def _c1_norm(E: np.ndarray, grid) -> float:
    gE = [gradient(E[d], grid.nx, 2 * grid.lx, tuple(range(grid.n))) for d in range(grid.n)]
    return float(np.abs(E).max() + max(np.abs(g).max() for g in gE))


def _seeds(f0: DistributionField, frac: float):
    g = f0.grid
    axes = g.axis_mesh("x") + g.axis_mesh("v")
    pts = np.stack([np.broadcast_to(m, g.shape).ravel() for m in axes], axis=1)
    vals = f0.values.ravel()
    keep = vals > frac * vals.max()
    return pts[keep], vals[keep]


def uniqueness_experiment(f0: DistributionField, delta: float, params: SimParams,
                          direction: str = "mixed", seed_frac: float = 1e-6) -> UniquenessReport:
    """Two runs from ``f0`` and its rigid shift by ``delta``; flows seeded at the grid
    points carrying ``f0 > seed_frac * max f0`` (the second flow at seeds + d).

    A mixed shift ``d = (dx, dv)`` on periodic data has a Galilean closed form,
    ``P(t)/P(0) = (|dx + dv t|^2 + |dv|^2) / |d|^2``, used as an oracle in the tests.
    """
    g = f0.grid
    n = g.n
    d = shift_vector(n, delta, direction)
    f2_0 = shift_field(f0, d) if delta > 0 else DistributionField(g, f0.values.copy())
    run1 = solver.run(f0, params, snapshot_every=10**9)
    run2 = solver.run(f2_0, params, snapshot_every=10**9)
    seeds, fvals = _seeds(f0, seed_frac)
    w = np.full(fvals.shape, g.cell)
    times = np.asarray(run1.field_times)
    T = times[-1] - times[0]
    dt = abs(params.dt)
    u1 = VlasovField(times, np.stack(run1.fields), g, params.sigma)
    u2 = VlasovField(times, np.stack(run2.fields), g, params.sigma)
    flow1 = rk_flow(u1, seeds, T, dt, jacobian=False)
    flow2 = rk_flow(u2, seeds + d, T, dt, jacobian=False)
    P = loeper_functional(flow1, flow2, fvals, w, shift=d)

    m = flow1.times.size
    T1 = np.empty(m)
    T2 = np.empty(m)
    b1 = np.empty(m)
    b2 = np.empty(m)
    fw = fvals * w
    for k in range(m):
        X1 = flow1.positions[k, :, :n]
        X2 = flow2.positions[k, :, :n]
        E1 = u1._E(k, X1)
        E2 = u2._E(k, X1)
        E2b = u2._E(k, X2)
        T1[k] = np.einsum("m,md,md->", fw, E1 - E2, E1 - E2)
        T2[k] = np.einsum("m,md,md->", fw, E2 - E2b, E2 - E2b)
        rmax = max(run1.diagnostics.rho_inf[k], run2.diagnostics.rho_inf[k])
        b1[k] = 2.0 * rmax**2 * P[k]
        b2[k] = 2.0 * _c1_norm(run2.fields[k], g) ** 2 * P[k]
    kappa = growth_rate(flow1.times, P)
    r1 = np.asarray(run1.diagnostics.rho_hs14)
    r2 = np.asarray(run2.diagnostics.rho_hs14)
    rate = float(np.sqrt(1.0 + r1**2 + r2**2).max())
    meta = {"grid": f"n{n}-nx{g.nx}-nv{g.nv}", "dt": params.dt, "t_final": params.t_final,
            "delta": delta, "direction": direction, "shift": d.tolist(), "seeds": len(seeds),
            "run1_Q": max(run1.diagnostics.Q), "run2_Q": max(run2.diagnostics.Q)}
    return UniquenessReport(flow1.times, P, T1, T2, b1, b2, kappa, rate,
                            0.5 * float(d @ d) * float(fw.sum()), meta)
