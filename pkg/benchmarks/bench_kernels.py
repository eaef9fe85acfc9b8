"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from vpkit import _pykernels
from vpkit._backend import BACKEND, compiled_kernels


def _trig_case(rng, d=2, nk=32, m=400):
    coef = rng.standard_normal((nk,) * d) + 1j * rng.standard_normal((nk,) * d)
    waves = [np.fft.fftfreq(nk, 1.0 / nk)] * d
    pts = rng.uniform(0, 2 * np.pi, (m, d))
    return coef, waves, pts


def _cancel_case(rng, nmu=16, nxi=16):
    left = rng.standard_normal((nmu, nxi)) + 1j * rng.standard_normal((nmu, nxi))
    ehat = rng.standard_normal((1, nxi)) + 1j * rng.standard_normal((1, nxi))
    mu = rng.standard_normal((nmu, 1))
    idx = np.arange(nxi)[:, None]
    return left, left, ehat, mu, idx, nxi


def _support_case(rng, m=1 << 18):
    return rng.random(m), rng.random(m) * 8, 0.5


def best(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    cases = {
        "trig_eval 1d": _trig_case(rng, 1, 64, 2000),
        "trig_eval 2d": _trig_case(rng, 2, 32, 400),
        "trig_eval 3d": _trig_case(rng, 3, 16, 500),
        "cancellation_sums": _cancel_case(rng, 64, 64),
        "support_radius": _support_case(rng),
    }
    if compiled_kernels is None:
        raise SystemExit("compiled kernels are not built; nothing to compare")
    print(f"active backend: {BACKEND}")
    print(f"{'kernel':<20}{'compiled [s]':>14}{'python [s]':>14}{'speedup':>10}")
    for label, case in cases.items():
        name = label.split()[0]
        tc = best(getattr(compiled_kernels, name), case, args.repeat)
        tp = best(getattr(_pykernels, name), case, args.repeat)
        print(f"{label:<20}{tc:>14.5f}{tp:>14.5f}{tp / tc:>10.2f}")


if __name__ == "__main__":
    main()
