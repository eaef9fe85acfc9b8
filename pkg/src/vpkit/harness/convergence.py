"""Mollified-data convergence and Sobolev tail-sum measurements."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import solver
from ..grid import DistributionField, PhaseGrid, SimParams, support_radius
from ..initial_data import InitialDataSpec, singular_profile, velocity_cutoff
from ..spectral import hs_norm


def mollify(f0: DistributionField, width: float, kind: str = "gaussian",
            axes: str = "x") -> DistributionField:
    """Gaussian multiplier ``exp(-width^2 |k|^2 / 2)`` or spectral truncation to
    ``|k| <= 1/width``, with ``k = xi`` (``axes="x"``) or ``k = (xi, mu)`` (``"xv"``).

    Smoothing in x alone keeps the velocity support, so ``Q_k(0) = Q(0)``; a
    velocity multiplier on a grid that does not resolve the velocity cutoff rings
    across the whole box at the support tolerance.
    """
    g = f0.grid
    if axes not in ("x", "xv"):
        raise ValueError(f"unknown mollifier axes {axes!r}")
    k2 = sum(k**2 for k in g.wave_mesh("x"))
    if axes == "xv":
        k2 = k2 + sum(k**2 for k in g.wave_mesh("v"))
    if kind == "gaussian":
        mult = np.exp(-0.5 * width**2 * k2)
    elif kind == "truncate":
        mult = (k2 * width**2 <= 1.0).astype(float)
    else:
        raise ValueError(f"unknown mollifier {kind!r}")
    fh = np.fft.fftn(f0.values) * mult
    return DistributionField(g, np.fft.ifftn(fh).real)


@dataclass
class ConvergenceTable:
    widths: list
    hs0: list = field(default_factory=list)
    q0: list = field(default_factory=list)
    finals: list = field(default_factory=list)
    diffs: list = field(default_factory=list)          # ||f_k(T) - f_{k+1}(T)||_L2
    aborted: dict = field(default_factory=dict)        # level -> reason
    hs_ok: bool = True
    q_ok: bool = True

    @property
    def cauchy(self) -> bool:
        d = self.diffs
        return all(b < a for a, b in zip(d[:-1], d[1:]))

    def rows(self):
        for i, w in enumerate(self.widths):
            diff = self.diffs[i - 1] if 0 < i <= len(self.diffs) else float("nan")
            yield (i, w, self.hs0[i] if i < len(self.hs0) else float("nan"),
                   self.q0[i] if i < len(self.q0) else float("nan"), diff)

    COLUMNS = ("level", "width", "hs0", "Q0", "diff_prev")


def mollification_convergence(f0: DistributionField, widths, params: SimParams,
                              kind: str = "gaussian", axes: str = "x") -> ConvergenceTable:
    """Run from each mollified datum; successive final-state L2 differences should
    decrease. Also checks ``||f_k0||_{H^s} <= 2||f0||_{H^s}`` and ``Q_k(0) <= 2 Q(0)``."""
    widths = list(widths)
    if any(b >= a for a, b in zip(widths[:-1], widths[1:])):
        raise ValueError("widths must be strictly decreasing")
    tab = ConvergenceTable(widths)
    hs_ref = hs_norm(f0, params.s)
    q_ref = support_radius(f0, params.support_tol)
    for i, w in enumerate(widths):
        fk = mollify(f0, w, kind, axes)
        tab.hs0.append(hs_norm(fk, params.s))
        tab.q0.append(support_radius(fk, params.support_tol))
        tab.hs_ok &= tab.hs0[-1] <= 2 * hs_ref
        tab.q_ok &= tab.q0[-1] <= 2 * q_ref + fk.grid.dv
        try:
            traj = solver.run(fk, params, snapshot_every=10**9, store_fields=False)
        except (solver.NumericalAbort, ValueError) as exc:
            tab.aborted[i] = str(exc)
            break
        tab.finals.append(traj.final)
        if i > 0:
            tab.diffs.append((traj.final - tab.finals[i - 1]).l2())
    return tab


# ---------------------------------------------------------------- tail sums

def _radial_power(values: np.ndarray, k1d: np.ndarray, cell: float):
    """Distinct |k|^2 values and the summed |fhat|^2 * cell on each shell."""
    d = values.ndim
    ph = np.abs(np.fft.fftn(values, norm="ortho")) ** 2 * cell
    idx = np.rint(np.fft.fftfreq(k1d.size, 1.0 / k1d.size)).astype(np.int64)
    isq = sum(m**2 for m in np.meshgrid(*([idx] * d), indexing="ij"))
    keys, inv = np.unique(isq.ravel(), return_inverse=True)
    power = np.bincount(inv, weights=ph.ravel())
    unit = (k1d[1] - k1d[0]) ** 2
    return keys * unit, power


def separable_hs(a: np.ndarray, b: np.ndarray, grid: PhaseGrid, s: float, frac: float = 0.5):
    """(total, tail) of ``||a(x) b(v)||^2_{H^s}`` by pairing x- and v-shells; the tail
    keeps modes in the top spatial band ``|xi| > frac * max|xi|``."""
    kx2, px = _radial_power(a, grid.xi, grid.cell_x)
    kv2, pv = _radial_power(b, grid.mu, grid.cell_v)
    W = (1.0 + kx2[:, None] + kv2[None, :]) ** s * px[:, None] * pv[None, :]
    kx = np.sqrt(kx2)
    return float(W.sum()), float(W[kx > frac * kx.max()].sum())


def x_hs(a: np.ndarray, grid: PhaseGrid, s: float, frac: float = 0.5):
    """(total, tail) of ``||a||^2_{H^s_x}``."""
    k2, p = _radial_power(a, grid.xi, grid.cell_x)
    W = (1.0 + k2) ** s * p
    kmax = np.sqrt(k2.max())
    return float(W.sum()), float(W[np.sqrt(k2) > frac * kmax].sum())


def free_streaming_density(a: np.ndarray, chi: np.ndarray, grid: PhaseGrid, t: float) -> np.ndarray:
    """Density of the free-streamed separable datum ``a(x) chi(v)`` on the grid:
    ``rhohat(t, xi) = ahat(xi) sum_v chi(v) e^{-i xi.v t} dv^n`` (separable phases)."""
    n = grid.n
    P = np.exp(-1j * t * np.outer(grid.xi, grid.v))          # (nx, nv)
    m = chi.astype(complex)
    for _ in range(n):
        # contract the leading velocity axis; spatial axes accumulate at the end
        m = np.tensordot(m, P, axes=([0], [1]))
    avg = m * grid.cell_v                                    # axes now xi_1..xi_n
    rh = np.fft.fftn(a) * avg
    return np.fft.ifftn(rh).real


@dataclass
class GainLevel:
    nx: int
    f0_total: float
    f0_tail: float
    rho_total: float
    rho_tail: float
    rho0_total: float


def free_streaming_gain(spec: InitialDataSpec, n: int, levels, nv: int, lx: float, lv: float,
                        t: float, s: float) -> list[GainLevel]:
    """Squared ``H^(s+1/4)`` totals and tails of f0 (phase space), rho(0) and rho(t)
    for separable singular data under free streaming, across spatial resolutions."""
    out = []
    for nx in levels:
        g = PhaseGrid(n, nx, nv, lx, lv)
        a = singular_profile(g, spec)
        chi = velocity_cutoff(g.speed(), spec.q0)
        f_tot, f_tail = separable_hs(a, chi, g, s + 0.25)
        rho0 = a * chi.sum() * g.cell_v
        r0_tot, _ = x_hs(rho0, g, s + 0.25)
        rho_t = free_streaming_density(a, chi, g, t)
        r_tot, r_tail = x_hs(rho_t, g, s + 0.25)
        out.append(GainLevel(nx, f_tot, f_tail, r_tot, r_tail, r0_tot))
    return out


@dataclass
class GainVerdict:
    f0_diverges: bool
    rho0_diverges: bool
    rho_converges: bool
    rho_rel_change: float
    f0_tail_ratio: float
    rho_tail_ratios: list

    @property
    def passed(self) -> bool:
        return self.f0_diverges and self.rho_converges


def gain_verdict(levels: list[GainLevel], rel_tol: float = 1e-3,
                 tail_drop: float = 0.1) -> GainVerdict:
    """Divergence of f0 means its top spatial octave stops shrinking under refinement
    (a convergent tail sum has octave tails tending to zero). Convergence of rho(t)
    means every octave tail drops by ``tail_drop`` or more and the total settles
    within ``rel_tol``. Needs at least three levels."""
    if len(levels) < 3:
        raise ValueError("need at least three refinement levels")
    f_ratio = levels[-1].f0_tail / levels[-2].f0_tail
    inc = np.diff([lv.rho0_total for lv in levels])
    rho0_div = bool(inc[-1] >= 0.5 * inc[-2] > 0)
    r_ratios = [b.rho_tail / a.rho_tail for a, b in zip(levels[1:-1], levels[2:])]
    rel = abs(levels[-1].rho_total - levels[-2].rho_total) / levels[-1].rho_total
    conv = all(r <= tail_drop for r in r_ratios) and rel <= rel_tol
    return GainVerdict(bool(f_ratio >= 1.0), rho0_div, bool(conv), float(rel), float(f_ratio),
                       [float(r) for r in r_ratios])
