"""Discrete exchange-antisymmetry of the transport coupling term.

For real E the bilinear form

    S = sum_{mu, xi, eta} w(mu, xi, eta) conj(fhat(mu, xi)) i mu . Ehat(xi - eta) fhat(mu, eta)

is purely imaginary whenever the weight is symmetric under xi <-> eta, since
swapping the two indices maps S to -conj(S). The check evaluates S by the
direct triple sum (an FFT route would hide the cancellation) and reports
``|Re S|`` relative to the sum of absolute values of the terms.
"""
from __future__ import annotations

import numpy as np

from .._backend import kernels
from ..grid import DistributionField
from ..poisson import ForceField


def _weights(grid, s: float, kind: str):
    n = grid.n
    mu = np.stack([m.ravel() for m in np.meshgrid(*([grid.mu] * n), indexing="ij")], axis=1)
    xi = np.stack([m.ravel() for m in np.meshgrid(*([grid.xi] * n), indexing="ij")], axis=1)
    if kind == "mu":
        w_mu = np.sqrt((mu**2).sum(axis=1)) ** s
        return mu, w_mu[:, None], np.ones((1, xi.shape[0]))
    if kind == "xi":
        w_xi = np.sqrt((xi**2).sum(axis=1)) ** s
        return mu, np.ones((mu.shape[0], 1)), w_xi[None, :]
    raise ValueError(f"unknown weight kind {kind!r}")


def cancellation_sums(f: DistributionField, E, s: float, kind: str = "mu", backend=None):
    """Return (S, A): the complex triple sum and the absolute-value sum.

    ``kind="mu"`` uses the homogeneous weight ``|mu|^(2s)``; ``kind="xi"`` uses
    ``|xi|^s |eta|^s``. ``E`` is a :class:`ForceField` or an array ``(n,) + x_shape``.
    """
    grid = f.grid
    n = grid.n
    Earr = E.E if isinstance(E, ForceField) else np.asarray(E, dtype=float)
    kern = backend or kernels
    fh = np.fft.fftn(f.values) / np.sqrt(f.values.size)
    # rows: velocity modes, columns: spatial modes
    nxi = grid.nx**n
    F = np.moveaxis(fh.reshape(nxi, grid.nv**n), 0, 1)
    mu, w_row, w_col = _weights(grid, s, kind)
    if kind == "mu":
        left = w_row * F
        right = w_row * F
    else:
        left = w_col * F
        right = w_col * F
    ehat = np.stack([np.fft.fftn(Earr[d]).ravel() / nxi for d in range(n)])
    idx = np.stack([m.ravel() for m in np.meshgrid(*([np.arange(grid.nx)] * n), indexing="ij")],
                   axis=1)
    return kern.cancellation_sums(left, right, ehat, mu, idx, grid.nx)


def cancellation_check(f: DistributionField, E, s: float, kind: str = "mu", backend=None) -> float:
    """``|Re S| / A``; 0 when every term vanishes."""
    S, A = cancellation_sums(f, E, s, kind, backend)
    if A == 0.0:
        return 0.0
    return abs(S.real) / A
