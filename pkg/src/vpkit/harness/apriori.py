"""Tracking of the a priori bounds along a computed trajectory."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..grid import SimParams
from ..spectral import hs_norm

# H^{-1} time-Lipschitz constant, calibrated on the smooth corpus (see tests)
LIP_C = 1.0


@dataclass
class AprioriReport:
    t: np.ndarray
    hs: np.ndarray
    Q: np.ndarray
    F: np.ndarray
    R: np.ndarray
    hs_target: float
    q_target: float
    hs_flag: np.ndarray          # cumulative: once violated, stays violated
    q_flag: np.ndarray
    certified_T: float
    rho_gain: np.ndarray         # ||rho||_{L2([0,t]; H^(s+1/4))}
    implied_C: np.ndarray        # per step, from d/dt ||f||_{H^s}
    lipschitz: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def flags_fired(self) -> bool:
        return bool(self.hs_flag.any() or self.q_flag.any())

    def rows(self):
        for i in range(self.t.size):
            yield (self.t[i], self.hs[i], self.Q[i], self.F[i], self.R[i], int(self.hs_flag[i]),
                   int(self.q_flag[i]), self.rho_gain[i], self.implied_C[i])

    COLUMNS = ("t", "hs", "Q", "F", "R", "hs_flag", "q_flag", "rho_gain", "implied_C")


def _cum_l2(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    sq = np.concatenate([[0.0], np.cumsum(0.5 * np.abs(np.diff(t)) * (y[1:] ** 2 + y[:-1] ** 2))])
    return np.sqrt(sq)


def apriori_track(traj, params: SimParams | None = None) -> AprioriReport:
    """Bound flags ``||f||_{H^s} > 2||f0||_{H^s}`` and ``Q > 2Q(0)+1+dv``, the certified
    time, the accumulated averaging-gain norm and the implied constant of
    ``d/dt ||f||_{H^s} <= C (1 + ||grad U||_{H^(s+5/4)}) ||f||_{H^s}``."""
    d = traj.diagnostics
    t = d.array("t")
    hs = d.array("hs")
    Q = d.array("Q")
    dv = traj.grid.dv
    hs_target = 2.0 * hs[0]
    q_target = 2.0 * Q[0] + 1.0 + dv
    hs_flag = np.logical_or.accumulate(hs > hs_target) if hs.size else hs.astype(bool)
    q_flag = np.logical_or.accumulate(Q > q_target) if Q.size else Q.astype(bool)
    bad = np.flatnonzero(hs_flag | q_flag)
    if bad.size == 0:
        cert = float(t[-1] - t[0])
    else:
        cert = float(t[bad[0] - 1] - t[0]) if bad[0] > 0 else 0.0
    rho_gain = _cum_l2(t, d.array("rho_hs14"))
    implied = np.full(t.size, np.nan)
    if t.size > 1:
        g54 = d.array("gradU_hs54")
        dhs = np.abs(np.diff(hs)) / np.abs(np.diff(t))
        fac = (1.0 + 0.5 * (g54[1:] + g54[:-1])) * 0.5 * (hs[1:] + hs[:-1])
        with np.errstate(invalid="ignore", divide="ignore"):
            implied[1:] = np.where(fac > 0, dhs / fac, 0.0)
    rep = AprioriReport(t, hs, Q, d.array("F"), d.array("R"), hs_target, q_target, hs_flag, q_flag,
                        cert, rho_gain, implied)
    if len(traj.snapshots) >= 2:
        rep.lipschitz = lipschitz_in_time_check(traj, params or traj.params)
    return rep


def hminus1_norm(values: np.ndarray, grid) -> float:
    """Mixed H^{-1} norm with symbol (1 + |xi|^2 + |mu|^2)^{-1}."""
    from ..grid import DistributionField

    return hs_norm(DistributionField(grid, values), -1.0)


def lipschitz_in_time_check(traj, params: SimParams | None = None, C: float = LIP_C) -> dict:
    """Measured ``max ||f(t2) - f(t1)||_{H^-1} / |t2 - t1|`` over consecutive snapshots
    against ``||f||_{L2} (Q + C ||f0||_{L1} + C Q^(n/2) ||f||_{H^s})`` (sup over time)."""
    snaps = traj.snapshots
    if len(snaps) < 2:
        raise ValueError("need at least two snapshots")
    grid = traj.grid
    n = grid.n
    measured = 0.0
    for (t1, f1), (t2, f2) in zip(snaps[:-1], snaps[1:]):
        measured = max(measured, hminus1_norm(f2.values - f1.values, grid) / abs(t2 - t1))
    d = traj.diagnostics
    l1_0 = d.l1[0]
    bound = max(l2 * (q + C * l1_0 + C * q ** (n / 2) * hs)
                for l2, q, hs in zip(d.l2, d.Q, d.hs))
    ratio = measured / bound if bound > 0 else 0.0
    return {"measured": measured, "bound": bound, "ratio": ratio, "C": C}


def free_streaming_derivative_hm1(f, grid) -> float:
    """``||v . grad_x f||_{H^-1}``, the exact time derivative under free streaming."""
    from ..spectral import gradient

    gx = gradient(f.values, grid.nx, 2 * grid.lx, grid.x_axes)
    vs = grid.axis_mesh("v")
    adv = sum(vs[d] * gx[d] for d in range(grid.n))
    return hminus1_norm(adv, grid)


def implied_constant_summary(rep: AprioriReport) -> float:
    vals = rep.implied_C[np.isfinite(rep.implied_C)]
    return float(vals.max()) if vals.size else 0.0

