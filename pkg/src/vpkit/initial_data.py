"""Initial-data families and the reproducible random stream.

Random families draw from Philox4x64-10 keyed directly by the integer seed
(counter starting at zero). Each raw 64-bit output ``r`` becomes the uniform
``((r >> 11) + 0.5) * 2**-53`` in (0, 1); normals come from Box-Muller on
consecutive pairs ``(u1, u2)`` as ``sqrt(-2 ln u1) cos(2 pi u2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DistributionField, PhaseGrid

FAMILIES = ("gaussian", "maxwellian_bump", "singular_x", "spectral_random")


class DataSpecError(ValueError):
    pass


def uniform_stream(seed: int, count: int) -> np.ndarray:
    bg = np.random.Philox(key=int(seed) % 2**128, counter=0)
    raw = np.asarray(bg.random_raw(count), dtype=np.uint64)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normal_stream(seed: int, count: int) -> np.ndarray:
    m = (count + 1) // 2
    u = uniform_stream(seed, 2 * m).reshape(m, 2)
    r = np.sqrt(-2.0 * np.log(u[:, 0]))
    z = np.empty((m, 2))
    z[:, 0] = r * np.cos(2 * np.pi * u[:, 1])
    z[:, 1] = r * np.sin(2 * np.pi * u[:, 1])
    return z.ravel()[:count]


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def velocity_cutoff(speed: np.ndarray, q0: float) -> np.ndarray:
    """Smooth radial cutoff: 1 for |v| <= 3 q0 / 4, 0 for |v| >= q0."""
    return 1.0 - _smoothstep((np.asarray(speed) - 0.75 * q0) / (0.25 * q0))


def maxwellian(speed: np.ndarray, n: int) -> np.ndarray:
    return np.exp(-0.5 * np.asarray(speed) ** 2) / (2 * np.pi) ** (n / 2)


@dataclass(frozen=True)
class InitialDataSpec:
    family: str = "maxwellian_bump"
    q0: float = 6.0
    amplitude: float = 1.0
    alpha: float = 0.2
    beta: float = 4.0
    seed: int = 0
    x0_frac: float = 1.0 / 3.0       # singular point at x0_frac * lx on every axis
    width_frac: float = 0.125        # spatial width / lx (gaussian sigma, singular envelope)
    bump_eps: float = 0.2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataSpecError(f"unknown data family {self.family!r}")
        if not self.q0 > 0:
            raise DataSpecError("q0 must be positive")


def _xmesh(grid: PhaseGrid):
    return np.meshgrid(*([grid.x] * grid.n), indexing="ij")


def _outer_xv(ax: np.ndarray, bv: np.ndarray) -> np.ndarray:
    return np.multiply.outer(ax, bv)


def generate_initial_data(spec: InitialDataSpec, grid: PhaseGrid) -> DistributionField:
    """Sample the requested family on ``grid``. Deterministic in ``(spec, grid)``."""
    n = grid.n
    if spec.q0 >= grid.lv:
        raise DataSpecError(f"q0={spec.q0} does not fit in the velocity box lv={grid.lv}")
    speed = grid.speed()
    chi = velocity_cutoff(speed, spec.q0)
    xs = _xmesh(grid)
    A = spec.amplitude
    if spec.family == "gaussian":
        sx = spec.width_frac * grid.lx
        r2 = sum(c**2 for c in xs)
        a = np.exp(-0.5 * r2 / sx**2) / (2 * np.pi * sx**2) ** (n / 2)
        vals = A * _outer_xv(a, maxwellian(speed, n) * chi)
    elif spec.family == "maxwellian_bump":
        a = 1.0 + spec.bump_eps * sum(np.cos(np.pi * c / grid.lx) for c in xs)
        vals = A * _outer_xv(a, maxwellian(speed, n) * chi)
    elif spec.family == "singular_x":
        vals = A * _outer_xv(singular_profile(grid, spec), chi)
    else:
        vals = A * spectral_random_field(grid, spec.beta, spec.seed) * chi
    return DistributionField(grid, vals)


def singular_profile(grid: PhaseGrid, spec: InitialDataSpec) -> np.ndarray:
    """psi(x) |x - x0|^(-alpha) with a Gaussian envelope psi; x0 is off-grid."""
    xs = _xmesh(grid)
    x0 = spec.x0_frac * grid.lx
    r2 = sum((c - x0) ** 2 for c in xs)
    w = 0.8 * spec.width_frac * grid.lx
    return np.exp(-0.5 * r2 / w**2) * r2 ** (-spec.alpha / 2)


def spectral_random_field(grid: PhaseGrid, beta: float, seed: int) -> np.ndarray:
    """Real field with Fourier amplitudes <k>^(-beta) times standard normals."""
    shape = grid.shape
    z = normal_stream(seed, 2 * grid.size).reshape(2, *shape)
    coef = z[0] + 1j * z[1]
    k2 = sum(k**2 for k in grid.wave_mesh("x")) + sum(k**2 for k in grid.wave_mesh("v"))
    coef *= (1.0 + k2) ** (-beta / 2)
    vals = np.fft.ifftn(coef, norm="ortho").real
    return vals / np.sqrt(grid.cell)
