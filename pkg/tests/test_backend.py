import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vpkit import _backend, _pykernels

ROOT = Path(__file__).resolve().parents[1]
compiled = pytest.mark.skipif(_backend.compiled_kernels is None, reason="compiled kernels not built")


def test_active_backend_is_consistent():
    k = _backend.kernels
    assert _backend.BACKEND == k.NAME
    for name in ("support_radius", "trig_eval", "cancellation_sums"):
        assert callable(getattr(k, name))
    if _backend.compiled_kernels is not None:
        # trig_eval stays on numpy (see benchmarks)
        assert k.trig_eval is _pykernels.trig_eval
        assert k.cancellation_sums is _backend.compiled_kernels.cancellation_sums


def test_env_var_forces_fallback():
    code = "from vpkit._backend import BACKEND, compiled_kernels; print(BACKEND, compiled_kernels)"
    env = dict(os.environ, VPKIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["python", "None"]


@compiled
@settings(max_examples=30, deadline=None)
@given(st.integers(1, 500), st.floats(0.0, 1.0), st.integers(0, 2**31))
def test_support_radius_backends_agree(m, tol, seed):
    rng = np.random.default_rng(seed)
    amax, speed = rng.random(m), rng.random(m) * 8
    assert _backend.compiled_kernels.support_radius(amax, speed, tol) == \
        _pykernels.support_radius(amax, speed, tol)


@compiled
def test_cancellation_kernel_backends_agree():
    rng = np.random.default_rng(4)
    nmu, nx = 9, 8
    left = rng.standard_normal((nmu, nx * nx)) + 1j * rng.standard_normal((nmu, nx * nx))
    right = rng.standard_normal((nmu, nx * nx)) + 1j * rng.standard_normal((nmu, nx * nx))
    ehat = rng.standard_normal((2, nx * nx)) + 1j * rng.standard_normal((2, nx * nx))
    mu = rng.standard_normal((nmu, 2))
    idx = np.stack([m.ravel() for m in np.meshgrid(np.arange(nx), np.arange(nx), indexing="ij")],
                   axis=1)
    S1, A1 = _pykernels.cancellation_sums(left, right, ehat, mu, idx, nx)
    S2, A2 = _backend.compiled_kernels.cancellation_sums(left, right, ehat, mu, idx, nx)
    assert abs(S1 - S2) <= 1e-12 * A1
    assert A2 == pytest.approx(A1, rel=1e-13)


@compiled
def test_benchmark_runs():
    proc = subprocess.run([sys.executable, str(ROOT / "benchmarks" / "bench_kernels.py"),
                           "--repeat", "1"], capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert lines[0].startswith("active backend")
    assert sum(line.startswith(("trig_eval", "cancellation_sums", "support_radius"))
               for line in lines) == 5
