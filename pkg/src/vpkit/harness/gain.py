"""The averaging gain on solver trajectories: rho in L2_t H^(s+1/4) against f in H^s."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..averaging import averaging_lhs, solver_pair
from ..grid import SimParams


@dataclass
class GainReport:
    lhs: float                   # ||rho_h||_{L2 H^(1/4)} for h = Lambda^s_x f (averaging module)
    lhs_direct: float            # ||rho||_{L2 H^(s+1/4)} from the per-step diagnostics
    rhs: float                   # T^(1/2) (1 + sup Q)^n F (1 + F), F = sup ||f||_{H^s}
    implied: float
    slice_norms: np.ndarray      # ||rho(t)||_{H^(s+1/4)} per step
    slice_ratio: float           # last slice over first
    refined_implied: float | None = None

    @property
    def slices_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.slice_norms)))

    @property
    def stable(self) -> bool:
        if self.refined_implied is None:
            return True
        a, b = self.implied, self.refined_implied
        if a == 0.0 and b == 0.0:
            return True
        return 0.5 < b / a < 2.0 if a > 0 else False


def _gain(traj, s: float):
    d = traj.diagnostics
    t = d.array("t")
    slices = d.array("rho_hs14")
    T = abs(t[-1] - t[0])
    if t.size > 1:
        sq = np.sum(0.5 * np.abs(np.diff(t)) * (slices[1:] ** 2 + slices[:-1] ** 2))
    else:
        sq = 0.0
    F = float(d.array("hs").max())
    Q = float(d.array("Q").max())
    rhs = math.sqrt(T) * (1.0 + Q) ** traj.grid.n * F * (1.0 + F)
    lhs = averaging_lhs(solver_pair(traj, s)) if t.size > 1 else 0.0
    direct = math.sqrt(sq)
    implied = direct / rhs if rhs > 0 else 0.0
    return lhs, direct, rhs, implied, slices


def averaging_gain_check(traj, params: SimParams | None = None, refined=None) -> GainReport:
    """Implied constant of the gain inequality on ``traj`` (snapshots at every step),
    and optionally on a refined trajectory for the stability comparison."""
    params = params or traj.params
    lhs, direct, rhs, implied, slices = _gain(traj, params.s)
    ratio = float(slices[-1] / slices[0]) if slices[0] > 0 else 0.0
    rep = GainReport(lhs, direct, rhs, implied, slices, ratio)
    if refined is not None:
        rep.refined_implied = _gain(refined, params.s)[3]
    return rep
