"""Phase-space grids, field containers and run parameters.

A phase-space field on a :class:`PhaseGrid` is stored as a numpy array of
shape ``(nx,)*n + (nv,)*n``: the ``n`` spatial axes come first, the ``n``
velocity axes last (row-major, x-major).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

DEFAULT_MEM_CAP = 2 * 1024**3


class GridError(ValueError):
    """Invalid grid request (bad sizes or over the memory cap)."""


def _is_pow2(k: int) -> bool:
    return k > 0 and (k & (k - 1)) == 0


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Periodic box ``[-lx, lx)^n x [-lv, lv)^n`` with ``nx``/``nv`` points per axis."""

    n: int
    nx: int
    nv: int
    lx: float
    lv: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise GridError(f"dimension n={self.n} not supported (1, 2 or 3)")
        for name in ("nx", "nv"):
            k = getattr(self, name)
            if not isinstance(k, (int, np.integer)) or k < 4 or not _is_pow2(int(k)):
                raise GridError(f"{name}={k} must be a power of two >= 4")
        if not (self.lx > 0 and self.lv > 0):
            raise GridError("half-widths lx, lv must be positive")

    def __eq__(self, other):
        if not isinstance(other, PhaseGrid):
            return NotImplemented
        return (self.n, self.nx, self.nv, self.lx, self.lv) == (
            other.n, other.nx, other.nv, other.lx, other.lv)

    def __hash__(self):
        return hash((self.n, self.nx, self.nv, self.lx, self.lv))

    @property
    def dx(self) -> float:
        return 2.0 * self.lx / self.nx

    @property
    def dv(self) -> float:
        return 2.0 * self.lv / self.nv

    @property
    def x(self) -> np.ndarray:
        return -self.lx + self.dx * np.arange(self.nx)

    @property
    def v(self) -> np.ndarray:
        return -self.lv + self.dv * np.arange(self.nv)

    @property
    def xi(self) -> np.ndarray:
        """Spatial wavenumbers ``pi*j/lx`` in DFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    @property
    def mu(self) -> np.ndarray:
        """Velocity wavenumbers ``pi*k/lv`` in DFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.nv, d=self.dv)

    @property
    def x_shape(self) -> tuple:
        return (self.nx,) * self.n

    @property
    def v_shape(self) -> tuple:
        return (self.nv,) * self.n

    @property
    def shape(self) -> tuple:
        return self.x_shape + self.v_shape

    @property
    def x_axes(self) -> tuple:
        return tuple(range(self.n))

    @property
    def v_axes(self) -> tuple:
        return tuple(range(self.n, 2 * self.n))

    @property
    def cell_x(self) -> float:
        return self.dx**self.n

    @property
    def cell_v(self) -> float:
        return self.dv**self.n

    @property
    def cell(self) -> float:
        return self.cell_x * self.cell_v

    @property
    def size(self) -> int:
        return self.nx**self.n * self.nv**self.n

    @property
    def nbytes(self) -> int:
        """Storage of one real float64 phase-space field."""
        return 8 * self.size

    def axis_mesh(self, which: str) -> list[np.ndarray]:
        """Open meshes of x or v coordinates, broadcastable to the field shape."""
        coords = self.x if which == "x" else self.v
        offset = 0 if which == "x" else self.n
        out = []
        for d in range(self.n):
            shape = [1] * (2 * self.n)
            shape[offset + d] = -1
            out.append(coords.reshape(shape))
        return out

    def wave_mesh(self, which: str) -> list[np.ndarray]:
        """Open meshes of xi or mu, broadcastable to the field shape."""
        k = self.xi if which == "x" else self.mu
        offset = 0 if which == "x" else self.n
        out = []
        for d in range(self.n):
            shape = [1] * (2 * self.n)
            shape[offset + d] = -1
            out.append(k.reshape(shape))
        return out

    def speed(self) -> np.ndarray:
        """|v| on the velocity sub-grid, shape ``v_shape``."""
        vs = np.meshgrid(*([self.v] * self.n), indexing="ij")
        return np.sqrt(sum(c**2 for c in vs))


def build_grid(n: int, nx: int, nv: int, lx: float, lv: float,
               mem_cap: int = DEFAULT_MEM_CAP) -> PhaseGrid:
    """Construct a :class:`PhaseGrid`, refusing grids whose field storage exceeds ``mem_cap``."""
    grid = PhaseGrid(int(n), int(nx), int(nv), float(lx), float(lv))
    if grid.nbytes > mem_cap:
        raise GridError(
            f"field storage {grid.nbytes} bytes exceeds memory cap {mem_cap} bytes")
    return grid


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DistributionField:
    """Real samples of f(x, v); immutable once constructed."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("distribution values must be finite")
        object.__setattr__(self, "values", _frozen(vals.copy() if vals is self.values else vals))

    def l1(self) -> float:
        return float(np.abs(self.values).sum() * self.grid.cell)

    def l2(self) -> float:
        return float(np.sqrt(np.vdot(self.values, self.values).real * self.grid.cell))

    def __add__(self, other):
        return DistributionField(self.grid, self.values + other.values)

    def __sub__(self, other):
        return DistributionField(self.grid, self.values - other.values)

    def __mul__(self, c):
        return DistributionField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Unitary mixed Fourier transform of a phase-space field, indexed (xi, mu)."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        object.__setattr__(self, "values", _frozen(vals))

    def conjugate_symmetry_defect(self) -> float:
        """max |g(-k) - conj(g(k))|; zero for the transform of a real field."""
        a = self.values
        flipped = np.roll(np.flip(a), 1, axis=tuple(range(a.ndim)))
        return float(np.max(np.abs(flipped - np.conj(a)))) if a.size else 0.0


@dataclass
class SimParams:
    sigma: int = 1
    s: float = 1.0
    t_final: float = 1.0
    dt: float = 1.0 / 64
    support_tol: float = 1e-8
    poisson_mode: str = "periodic"
    field_enabled: bool = True
    lowpass: float | None = None

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        if self.dt == 0 or not math.isfinite(self.dt):
            raise ValueError("dt must be non-zero and finite (negative dt runs backward)")
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if self.support_tol <= 0:
            raise ValueError("support_tol must be > 0")
        if self.poisson_mode not in ("periodic", "free_space"):
            raise ValueError(f"unknown poisson_mode {self.poisson_mode!r}")

    def check_regularity(self, n: int) -> bool:
        """Warn when s does not exceed n/2 - 1/4; returns whether the hypothesis holds."""
        ok = self.s > n / 2 - 0.25
        if not ok:
            warnings.warn(
                f"s={self.s} <= n/2 - 1/4 = {n / 2 - 0.25}: below the well-posedness threshold",
                stacklevel=2)
        return ok


DIAG_COLUMNS = ("t", "l1", "l2", "hs", "Q", "F", "R", "rho_hs14", "gradU_inf")


@dataclass
class DiagnosticsSeries:
    """Per-step scalar diagnostics. ``F`` and ``R`` are running suprema."""

    t: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    hs: list = field(default_factory=list)
    Q: list = field(default_factory=list)
    F: list = field(default_factory=list)
    R: list = field(default_factory=list)
    rho_hs14: list = field(default_factory=list)
    gradU_inf: list = field(default_factory=list)
    # extras, not part of the CSV contract
    gradU_hs54: list = field(default_factory=list)
    rho_inf: list = field(default_factory=list)
    P: list | None = None

    def append(self, t, l1, l2, hs, Q, rho_hs14, gradU_inf, gradU_hs54=np.nan, rho_inf=np.nan):
        if self.t:
            step = t - self.t[-1]
            prev = self.t[-1] - self.t[-2] if len(self.t) > 1 else step
            if step == 0 or step * prev <= 0:
                raise ValueError("time stamps must be strictly monotone")
        F = 1.0 + max(hs, (self.F[-1] - 1.0) if self.F else hs)
        R = 1.0 + max(Q, (self.R[-1] - 1.0) if self.R else Q)
        for name, val in (("t", t), ("l1", l1), ("l2", l2), ("hs", hs), ("Q", Q), ("F", F),
                          ("R", R), ("rho_hs14", rho_hs14), ("gradU_inf", gradU_inf),
                          ("gradU_hs54", gradU_hs54), ("rho_inf", rho_inf)):
            getattr(self, name).append(float(val))

    def __len__(self):
        return len(self.t)

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    def rows(self):
        for i in range(len(self.t)):
            yield tuple(getattr(self, c)[i] for c in DIAG_COLUMNS)


def support_radius(f: DistributionField, tol: float) -> float:
    """Largest |v_k| such that |f(x, v_k)| > tol for some x; 0 if none."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    from ._backend import kernels

    g = f.grid
    amax = np.abs(f.values).reshape(g.nx**g.n, g.nv**g.n).max(axis=0)
    return float(kernels.support_radius(amax, g.speed().ravel(), float(tol)))
