"""Flow maps of time-dependent vector fields and the Vlasov characteristics.

Fields are sampled in time and interpolated linearly; spatial evaluation is
analytic (callable fields) or spectral (fields on a periodic grid). Flows
come from Picard iteration with trapezoid quadrature on the sample times or
from classical RK4; Jacobians solve the variational equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .io import write_csv
from .spectral import odd_wavenumbers


class FlowConvergenceError(RuntimeError):
    """Picard iteration did not reach the tolerance."""

    def __init__(self, message: str, contraction: float, change: float):
        super().__init__(f"{message} (contraction factor {contraction:.3g}, last change {change:.3g})")
        self.contraction = contraction
        self.change = change


class FlowEscapeError(RuntimeError):
    """Characteristics left the velocity box."""


# ---------------------------------------------------------------- vector fields

class VectorFieldSeries:
    """Base class: ``eval(t, X) -> (M, d)`` and ``grad(t, X) -> (M, d, d)`` with
    ``grad[m, i, j] = d u_i / d x_j``."""

    dim: int
    times: np.ndarray | None = None
    alpha: float = 1.0

    def eval(self, t: float, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, t: float, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _bracket(self, t: float):
        ts = self.times
        if t <= ts[0]:
            return 0, 0, 0.0
        if t >= ts[-1]:
            k = len(ts) - 1
            return k, k, 0.0
        k = int(np.searchsorted(ts, t, side="right")) - 1
        th = (t - ts[k]) / (ts[k + 1] - ts[k])
        return k, k + 1, th


class CallableField(VectorFieldSeries):
    """Analytic field ``fn(t, X)``; gradient from ``grad_fn`` or central differences."""

    def __init__(self, fn, dim: int, grad_fn=None, fd_step: float = 1e-6, alpha: float = 1.0):
        self.fn = fn
        self.grad_fn = grad_fn
        self.dim = dim
        self.fd_step = fd_step
        self.alpha = alpha

    def eval(self, t, X):
        return np.asarray(self.fn(t, np.atleast_2d(X)), dtype=float)

    def grad(self, t, X):
        X = np.atleast_2d(X)
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(t, X), dtype=float)
        h = self.fd_step
        out = np.empty((X.shape[0], self.dim, self.dim))
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = h
            out[:, :, j] = (self.eval(t, X + e) - self.eval(t, X - e)) / (2 * h)
        return out


def linear_field(A: np.ndarray) -> CallableField:
    A = np.asarray(A, dtype=float)
    return CallableField(lambda t, X: X @ A.T, A.shape[0],
                         grad_fn=lambda t, X: np.broadcast_to(A, (X.shape[0],) + A.shape).copy())


class ReversedField(VectorFieldSeries):
    """``-u(T - s, y)``: integrating it from ``Phi(T, x)`` over [0, T] inverts the flow."""

    def __init__(self, u: VectorFieldSeries, T: float):
        self.u = u
        self.T = T
        self.dim = u.dim
        self.alpha = u.alpha
        self.times = None if u.times is None else np.sort(T - u.times[u.times <= T])

    def eval(self, t, X):
        return -self.u.eval(self.T - t, X)

    def grad(self, t, X):
        return -self.u.grad(self.T - t, X)


def _spectral_coeffs(samples: np.ndarray, d: int) -> np.ndarray:
    axes = tuple(range(samples.ndim - d, samples.ndim))
    m = samples.shape[-1]
    return np.fft.fftn(samples, axes=axes) / m**d


class SpectralFieldSeries(VectorFieldSeries):
    """Field sampled on a periodic grid ``[-L, L)^d`` at ``times``.

    ``samples`` has shape ``(m, d) + (N,)*d``. Spatial evaluation is the
    trigonometric interpolant; time evaluation is piecewise linear.
    """

    def __init__(self, times, samples, L: float, alpha: float = 1.0):
        samples = np.asarray(samples, dtype=float)
        self.times = np.asarray(times, dtype=float)
        self.dim = samples.shape[1]
        self.N = samples.shape[-1]
        self.L = L
        self.alpha = alpha
        d = self.dim
        self.coef = _spectral_coeffs(samples, d)
        k = 2 * np.pi * np.fft.fftfreq(self.N, d=2 * L / self.N)
        self.waves = [k] * d
        ko = odd_wavenumbers(self.N, 2 * L)
        self.gcoef = np.empty((len(self.times), d, d) + (self.N,) * d, dtype=complex)
        for j in range(d):
            shp = [1] * d
            shp[j] = -1
            self.gcoef[:, :, j] = 1j * ko.reshape(shp) * self.coef

    def _at(self, coef, X):
        P = np.atleast_2d(X) + self.L
        return kernels.trig_eval(coef, self.waves, P).real

    def _slice_eval(self, k, X):
        return np.stack([self._at(self.coef[k, i], X) for i in range(self.dim)], axis=1)

    def _slice_grad(self, k, X):
        d = self.dim
        out = np.empty((np.atleast_2d(X).shape[0], d, d))
        for i in range(d):
            for j in range(d):
                out[:, i, j] = self._at(self.gcoef[k, i, j], X)
        return out

    def eval(self, t, X):
        a, b, th = self._bracket(t)
        ua = self._slice_eval(a, X)
        return ua if th == 0 else (1 - th) * ua + th * self._slice_eval(b, X)

    def grad(self, t, X):
        a, b, th = self._bracket(t)
        ga = self._slice_grad(a, X)
        return ga if th == 0 else (1 - th) * ga + th * self._slice_grad(b, X)


class VlasovField(VectorFieldSeries):
    """The phase-space field ``(v, sigma E(t, x))`` from sampled force fields.

    ``E_samples`` has shape ``(m, n) + (nx,)*n`` on the x-grid of ``grid``.
    """

    def __init__(self, times, E_samples, grid, sigma: int):
        self.times = np.asarray(times, dtype=float)
        order = np.argsort(self.times)
        self.times = self.times[order]
        E = np.asarray(E_samples, dtype=float)[order]
        self.grid = grid
        self.n = grid.n
        self.dim = 2 * grid.n
        self.sigma = sigma
        self.alpha = 1.0
        n = self.n
        self.coef = _spectral_coeffs(E, n)
        self.waves = [grid.xi] * n
        ko = odd_wavenumbers(grid.nx, 2 * grid.lx)
        self.gcoef = np.empty((len(self.times), n, n) + grid.x_shape, dtype=complex)
        for j in range(n):
            shp = [1] * n
            shp[j] = -1
            self.gcoef[:, :, j] = 1j * ko.reshape(shp) * self.coef

    def _at(self, coef, Xpos):
        return kernels.trig_eval(coef, self.waves, Xpos + self.grid.lx).real

    def _E(self, k, Xpos):
        return np.stack([self._at(self.coef[k, i], Xpos) for i in range(self.n)], axis=1)

    def _gE(self, k, Xpos):
        n = self.n
        out = np.empty((Xpos.shape[0], n, n))
        for i in range(n):
            for j in range(n):
                out[:, i, j] = self._at(self.gcoef[k, i, j], Xpos)
        return out

    def eval(self, t, Z):
        Z = np.atleast_2d(Z)
        n = self.n
        a, b, th = self._bracket(t)
        E = self._E(a, Z[:, :n])
        if th:
            E = (1 - th) * E + th * self._E(b, Z[:, :n])
        return np.concatenate([Z[:, n:], self.sigma * E], axis=1)

    def grad(self, t, Z):
        Z = np.atleast_2d(Z)
        n = self.n
        a, b, th = self._bracket(t)
        gE = self._gE(a, Z[:, :n])
        if th:
            gE = (1 - th) * gE + th * self._gE(b, Z[:, :n])
        out = np.zeros((Z.shape[0], 2 * n, 2 * n))
        out[:, :n, n:] = np.eye(n)
        out[:, n:, :n] = self.sigma * gE
        return out


# ---------------------------------------------------------------- flow maps

@dataclass
class FlowMap:
    times: np.ndarray                 # (m,)
    seeds: np.ndarray                 # (M, d)
    positions: np.ndarray             # (m, M, d)
    jacobians: np.ndarray | None = None   # (m, M, d, d)
    contraction: float | None = None
    iterations: int = 0
    lattice_shape: tuple | None = None
    info: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.seeds.shape[1]

    def det(self) -> np.ndarray:
        return np.linalg.det(self.jacobians)

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.positions[i]


def _time_grid(u: VectorFieldSeries, T: float, n_t: int | None) -> np.ndarray:
    if n_t is not None or u.times is None:
        return np.linspace(0.0, T, (n_t or 1024) + 1)
    ts = u.times[(u.times >= 0) & (u.times <= T + 1e-12)]
    if ts.size < 2 or abs(ts[0]) > 1e-12 or abs(ts[-1] - T) > 1e-9 * max(1.0, T):
        raise ValueError("field sample times must cover [0, T]")
    return ts


def picard_flow(u: VectorFieldSeries, seeds, T: float, iters: int = 50, tol: float = 1e-12,
                n_t: int | None = None) -> FlowMap:
    """Fixed-point iteration ``Phi <- x + int_0^t u(s, Phi(s)) ds`` with the composite
    trapezoid rule on the field's sample times (or ``n_t`` uniform steps)."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    ts = _time_grid(u, T, n_t)
    h = np.diff(ts)[:, None, None]
    phi = np.broadcast_to(seeds, (ts.size,) + seeds.shape).copy()
    prev_change = None
    contraction = 0.0
    change = np.inf
    for it in range(1, iters + 1):
        vel = np.stack([u.eval(t, phi[i]) for i, t in enumerate(ts)])
        incr = np.concatenate([np.zeros((1,) + seeds.shape),
                               np.cumsum(0.5 * h * (vel[1:] + vel[:-1]), axis=0)])
        new = seeds[None] + incr
        if not np.all(np.isfinite(new)):
            raise FlowConvergenceError("non-finite iterate", math.inf, math.inf)
        change = float(np.abs(new - phi).max())
        if prev_change:
            contraction = change / prev_change
        phi = new
        if change <= tol:
            return FlowMap(ts, seeds, phi, contraction=contraction, iterations=it)
        prev_change = change
    raise FlowConvergenceError(f"Picard iteration did not reach tol={tol} in {iters} iterations",
                               contraction, change)


def rk_flow(u: VectorFieldSeries, seeds, T: float, dt: float, jacobian: bool = True) -> FlowMap:
    """Classical RK4 for positions and (optionally) the variational equation."""
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    steps = max(1, int(round(abs(T) / dt)))
    h = T / steps
    M, d = seeds.shape
    X = seeds.copy()
    J = np.broadcast_to(np.eye(d), (M, d, d)).copy()
    xs = [X.copy()]
    js = [J.copy()] if jacobian else None

    def rhs(t, X, J):
        dX = u.eval(t, X)
        dJ = u.grad(t, X) @ J if jacobian else None
        return dX, dJ

    for k in range(steps):
        t = k * h
        k1x, k1j = rhs(t, X, J)
        k2x, k2j = rhs(t + h / 2, X + h / 2 * k1x, J + h / 2 * k1j if jacobian else None)
        k3x, k3j = rhs(t + h / 2, X + h / 2 * k2x, J + h / 2 * k2j if jacobian else None)
        k4x, k4j = rhs(t + h, X + h * k3x, J + h * k3j if jacobian else None)
        X = X + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        if jacobian:
            J = J + h / 6 * (k1j + 2 * k2j + 2 * k3j + k4j)
        if not np.all(np.isfinite(X)):
            raise FloatingPointError(f"non-finite positions at t={t + h}")
        xs.append(X.copy())
        if jacobian:
            js.append(J.copy())
    times = h * np.arange(steps + 1)
    return FlowMap(times, seeds, np.stack(xs), np.stack(js) if jacobian else None)


def variational_jacobian(u: VectorFieldSeries, flow: FlowMap) -> FlowMap:
    """Fill Jacobians from ``Psi' = grad u(t, Phi) Psi``, ``Psi(0) = I``, with the
    trapezoid rule on the flow's times solved implicitly per step."""
    ts = flow.times
    M, d = flow.seeds.shape
    eye = np.eye(d)
    J = np.broadcast_to(eye, (M, d, d)).copy()
    out = [J.copy()]
    A_prev = u.grad(ts[0], flow.positions[0])
    for i in range(1, ts.size):
        h = ts[i] - ts[i - 1]
        A = u.grad(ts[i], flow.positions[i])
        lhs = eye - 0.5 * h * A
        rhs = (eye + 0.5 * h * A_prev) @ J
        J = np.linalg.solve(lhs, rhs)
        out.append(J.copy())
        A_prev = A
    flow.jacobians = np.stack(out)
    return flow


def compose_inverse(u: VectorFieldSeries, flow: FlowMap, T: float, dt: float) -> float:
    """max |Phi_reversed(T, Phi(T, x)) - x| via RK4 on the time-reversed field."""
    back = rk_flow(ReversedField(u, T), flow.positions[-1], T, dt, jacobian=False)
    return float(np.abs(back.positions[-1] - flow.seeds).max())


def lipschitz_check(u: VectorFieldSeries, seeds, T: float, dt: float, h: float = 1e-4,
                    samples: int = 5, seed: int = 0) -> tuple[float, float]:
    """(max |Phi(t,x+h e) - Phi(t,x)|/|h|, exp(int_0^T L(s) ds)) where L(s) is the
    largest operator norm of grad u sampled on segments between the two trajectories."""
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(seeds.shape)
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    a = rk_flow(u, seeds, T, dt, jacobian=False)
    b = rk_flow(u, seeds + h * e, T, dt, jacobian=False)
    ratio = float((np.linalg.norm(b.positions - a.positions, axis=2) / h).max())
    Ls = []
    for i, t in enumerate(a.times):
        pts = np.concatenate([a.positions[i] + s * (b.positions[i] - a.positions[i])
                              for s in np.linspace(0, 1, samples)])
        Ls.append(np.linalg.norm(u.grad(t, pts), ord=2, axis=(1, 2)).max())
    Ls = np.asarray(Ls)
    integral = float(np.sum(0.5 * np.diff(a.times) * (Ls[1:] + Ls[:-1])))
    return ratio, math.exp(integral)


def c1alpha_estimate(u: VectorFieldSeries, lo, hi, n_pts: int = 9, alpha: float | None = None,
                     times=None) -> float:
    """Estimate of ``||u||_{L2_t C^{1+alpha}}`` from a lattice: sup|u| + sup|grad u| +
    the alpha-Hoelder quotient of grad u over lattice neighbours, L2 in time."""
    alpha = u.alpha if alpha is None else alpha
    d = u.dim
    axes = [np.linspace(l, hgh, n_pts) for l, hgh in zip(np.broadcast_to(lo, d), np.broadcast_to(hi, d))]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    ts = u.times if times is None else np.asarray(times)
    if ts is None:
        ts = np.linspace(0.0, 1.0, 9)
    vals = []
    for t in ts:
        U = u.eval(t, pts)
        G = u.grad(t, pts).reshape((n_pts,) * d + (d * d,))
        hol = 0.0
        for ax in range(d):
            step = axes[ax][1] - axes[ax][0]
            diff = np.abs(np.diff(G, axis=ax)).max() if n_pts > 1 else 0.0
            hol = max(hol, diff / step**alpha)
        vals.append(np.abs(U).max() + np.abs(G).max() + hol)
    vals = np.asarray(vals)
    if ts.size < 2:
        return float(vals[0])
    return float(np.sqrt(np.sum(0.5 * np.diff(ts) * (vals[1:] ** 2 + vals[:-1] ** 2))))


def marker_lattice(lo, hi, shape) -> np.ndarray:
    axes = [np.linspace(l, h, m) for l, h, m in zip(lo, hi, shape)]
    return np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)


def hoelder_certificate(flow: FlowMap, alpha: float, lattice_shape=None) -> np.ndarray:
    """Per-scale moduli ``max |grad Phi(t, x+h) - grad Phi(t, x)| / |h|^alpha`` over
    lattice neighbours at dyadic offsets ``h = 2^j * spacing`` along each axis."""
    if flow.jacobians is None:
        raise ValueError("flow has no Jacobians")
    shape = lattice_shape or flow.lattice_shape
    if shape is None:
        raise ValueError("seeds must come from a lattice; pass lattice_shape")
    d = flow.dim
    m = flow.times.size
    J = flow.jacobians.reshape((m,) + tuple(shape) + (d * d,))
    S = flow.seeds.reshape(tuple(shape) + (d,))
    scales = []
    j = 0
    while True:
        off = 2**j
        if off >= min(shape):
            break
        best = 0.0
        for ax in range(d):
            a = [slice(None)] * d
            b = [slice(None)] * d
            a[ax] = slice(off, None)
            b[ax] = slice(None, -off)
            h = np.linalg.norm(S[tuple(a)] - S[tuple(b)], axis=-1)
            dj = np.linalg.norm(J[(slice(None),) + tuple(a)] - J[(slice(None),) + tuple(b)], axis=-1)
            best = max(best, float((dj / h[None] ** alpha).max()))
        scales.append(best)
        j += 1
    return np.asarray(scales)


# ---------------------------------------------------------------- Vlasov characteristics

def spectral_point_values(values: np.ndarray, grid, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of a phase-space field at points ``(M, 2n)``
    (x wrapped periodically)."""
    n = grid.n
    coef = np.fft.fftn(values) / values.size
    P = np.array(points, dtype=float)
    P[:, :n] = np.mod(P[:, :n] + grid.lx, 2 * grid.lx)
    P[:, n:] = P[:, n:] + grid.lv
    waves = [grid.xi] * n + [grid.mu] * n
    return kernels.trig_eval(coef, waves, P).real


def vlasov_characteristics(traj, seeds, method: str = "rk4", jacobian: bool = True) -> FlowMap:
    """Characteristics of ``(v, sigma E)`` through the stored trajectory fields, and
    the transport residual ``max_seeds |f(t, Phi_t) - f0|`` at each snapshot time."""
    grid = traj.grid
    n = grid.n
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    times = np.asarray(traj.field_times)
    if times[0] > times[-1]:
        raise ValueError("characteristics need a forward trajectory")
    u = VlasovField(times, np.stack(traj.fields), grid, traj.params.sigma)
    T = times[-1] - times[0]
    if method == "rk4":
        flow = rk_flow(u, seeds, T, float(times[1] - times[0]), jacobian=jacobian)
    elif method == "picard":
        flow = picard_flow(u, seeds, T)
        if jacobian:
            variational_jacobian(u, flow)
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.abs(flow.positions[..., n:]).max() >= grid.lv:
        raise FlowEscapeError("characteristics left the velocity box")
    f0 = traj.snapshots[0][1].values
    ref = spectral_point_values(f0, grid, seeds)
    res_t, res = [], []
    for t, f in traj.snapshots:
        i = int(np.argmin(np.abs(flow.times - (t - times[0]))))
        vals = spectral_point_values(f.values, grid, flow.positions[i])
        res_t.append(t)
        res.append(np.abs(vals - ref))
    flow.info["residual_times"] = np.asarray(res_t)
    flow.info["residuals"] = np.stack(res)           # (n_snap, M)
    flow.info["f0_at_seeds"] = ref
    return flow


def seeds_in_support(f0, shape, frac: float = 0.05) -> np.ndarray:
    """Marker lattice over the box, kept where ``f0 > frac * max f0``."""
    grid = f0.grid
    n = grid.n
    lo = [-grid.lx] * n + [-grid.lv] * n
    hi = [grid.lx * (1 - 2 / shape[0])] * n + [grid.lv * (1 - 2 / shape[-1])] * n
    pts = marker_lattice(lo, hi, shape)
    vals = spectral_point_values(f0.values, grid, pts)
    return pts[vals > frac * np.abs(f0.values).max()]


FLOW_COLUMNS = ("seed_id", "t")


def write_flow_csv(path, flow: FlowMap) -> None:
    d = flow.dim
    header = ["seed_id", "t"] + [f"phi{i}" for i in range(d)] + ["det_jac", "transport_residual"]
    dets = flow.det() if flow.jacobians is not None else None
    res_t = flow.info.get("residual_times")
    res = flow.info.get("residuals")
    rows = []
    for m in range(flow.seeds.shape[0]):
        for i, t in enumerate(flow.times):
            r = np.nan
            if res_t is not None:
                j = np.flatnonzero(np.isclose(res_t - res_t[0], t, rtol=0, atol=1e-12))
                if j.size:
                    r = res[j[0], m]
            rows.append([m, t] + list(flow.positions[i, m]) +
                        [dets[i, m] if dets is not None else np.nan, r])
    write_csv(path, header, rows)
