"""Pure numpy implementations of the hot kernels.

Signatures match the compiled ``_ckernels`` module exactly; ``_backend``
picks one of the two at import.
"""
import numpy as np

NAME = "python"


def support_radius(amax, speed, tol):
    """Max of ``speed[k]`` over ``amax[k] > tol``; 0.0 if the mask is empty."""
    mask = np.asarray(amax) > tol
    if not mask.any():
        return 0.0
    return float(np.asarray(speed)[mask].max())


def trig_eval(coef, waves, points):
    """Evaluate ``sum_k coef[k] exp(i k . p)`` at each row ``p`` of ``points``.

    ``coef`` has one axis per dimension, ``waves[d]`` holds the wavenumbers of
    axis ``d`` and ``points`` is ``(M, d)``. Returns complex ``(M,)``.
    """
    coef = np.asarray(coef, dtype=np.complex128)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = coef.ndim
    m = points.shape[0]
    # contract one axis at a time against its phase table
    acc = np.exp(1j * np.outer(points[:, 0], waves[0])) @ coef.reshape(coef.shape[0], -1)
    acc = acc.reshape((m,) + coef.shape[1:])
    for ax in range(1, d):
        ph = np.exp(1j * np.outer(points[:, ax], waves[ax]))
        acc = np.einsum("mk,mk...->m...", ph, acc)
    return acc.reshape(m)


def cancellation_sums(left, right, ehat, mu, xi_idx, nx):
    """Direct triple sum of the transport-coupling bilinear form.

    Computes ``S = sum_{mu,xi,eta} conj(left[mu,xi]) * i*(mu . ehat[:, xi-eta]) * right[mu,eta]``
    and ``A``, the same sum with every factor replaced by its modulus.
    ``xi_idx`` is ``(Nxi, n)`` integer multi-indices (DFT order), differences
    are taken modulo ``nx`` per axis.
    """
    left = np.asarray(left, dtype=np.complex128)
    right = np.asarray(right, dtype=np.complex128)
    ehat = np.asarray(ehat, dtype=np.complex128)
    mu = np.asarray(mu, dtype=np.float64)
    xi_idx = np.asarray(xi_idx, dtype=np.int64)
    n = xi_idx.shape[1]
    strides = nx ** np.arange(n - 1, -1, -1)
    total = 0.0 + 0.0j
    total_abs = 0.0
    abs_right = np.abs(right)
    for a in range(xi_idx.shape[0]):
        diff = ((xi_idx[a] - xi_idx) % nx) @ strides
        coupling = mu @ ehat[:, diff]          # (Nmu, Neta)
        total += np.sum(np.conj(left[:, a]) * 1j * np.sum(coupling * right, axis=1))
        total_abs += np.sum(np.abs(left[:, a]) * np.sum(np.abs(coupling) * abs_right, axis=1))
    return complex(total), float(total_abs)
