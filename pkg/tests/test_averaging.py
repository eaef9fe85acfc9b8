import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vpkit import averaging as avg
from vpkit.averaging import (C_AVG, ZETA, AveragingError, KineticPair, ManufacturedSpec,
                             averaging_lhs, averaging_rhs, i1_bound_check, lhs_split,
                             manufactured_mode, manufactured_pair, mode_decomposition,
                             velocity_average, verify_transport)
from vpkit.grid import PhaseGrid
from vpkit.io import read_csv


# ---------------------------------------------------------------- cutoff

def test_zeta_endpoints():
    assert ZETA(1.0) == 1.0 and ZETA(-1.0) == 1.0
    assert ZETA(2.0) == 0.0 and ZETA(-2.0) == 0.0
    for z in (1.0, 2.0, -1.0, -2.0, 0.0, 5.0):
        assert ZETA.deriv(z) == 0.0
    z = np.linspace(-3, 3, 601)
    np.testing.assert_array_equal(ZETA(z), ZETA(-z))
    assert np.all(ZETA(z[np.abs(z) <= 1]) == 1.0) and np.all(ZETA(z[np.abs(z) >= 2]) == 0.0)


def test_zeta_max_slope():
    z = np.linspace(1, 2, 200001)
    slope = np.abs(ZETA.deriv(z)).max()
    assert slope == pytest.approx(15 / 8, rel=1e-9)
    assert slope <= 2.0
    fd = np.abs(np.diff(ZETA(z)) / np.diff(z)).max()
    assert fd == pytest.approx(15 / 8, rel=1e-6)


# ---------------------------------------------------------------- velocity average

def test_velocity_average_separable(rng):
    g = PhaseGrid(2, 8, 8, 1.0, 2.0)
    a = rng.standard_normal((5,) + g.x_shape)
    b = rng.standard_normal(g.v_shape)
    np.testing.assert_allclose(velocity_average(np.multiply.outer(a, b), g),
                               a * b.sum() * g.cell_v, rtol=1e-12, atol=1e-13)
    assert not velocity_average(np.zeros((3,) + g.shape), g).any()


def test_velocity_average_maxwellian():
    g = PhaseGrid(1, 8, 64, 1.0, 8.0)
    m = np.exp(-0.5 * g.v**2) / math.sqrt(2 * math.pi)
    h = np.broadcast_to(m, (4,) + g.shape)
    assert np.abs(velocity_average(h, g) - 1.0).max() <= 1e-8


# ---------------------------------------------------------------- both sides

def _indicator_pair(g, nt, dt, xi0):
    b = np.exp(-g.v**2)
    b /= b.sum() * g.dv
    a = np.cos(xi0 * g.x)
    h = np.broadcast_to(np.multiply.outer(a, b), (nt,) + g.shape).copy()
    return KineticPair(g, h, np.zeros((1,) + h.shape), 3.0, dt)


def test_lhs_zero():
    g = PhaseGrid(1, 8, 8, 1.0, 4.0)
    p = KineticPair(g, np.zeros((4,) + g.shape), np.zeros((1, 4) + g.shape), 1.0, 0.1)
    assert averaging_lhs(p) == 0.0 and averaging_rhs(p) == 0.0


def test_lhs_closed_form_time_indicator():
    """rho_h = cos(xi0 x) 1_[0,T](t): the zero-extended time transform has the
    Dirichlet-kernel modulus; summing it is the direct oracle, Parseval the closed form."""
    g = PhaseGrid(1, 16, 32, math.pi, 4.0)
    nt, dt, xi0 = 12, 0.05, 3.0
    p = _indicator_pair(g, nt, dt, xi0)
    T = nt * dt
    closed = (1 + xi0**2) ** 0.125 * math.sqrt(T * g.lx)
    tau = p.tau
    with np.errstate(invalid="ignore", divide="ignore"):
        dirichlet = np.where(np.abs(np.sin(tau * dt / 2)) > 1e-14,
                             dt**2 * np.sin(nt * tau * dt / 2) ** 2 / np.sin(tau * dt / 2) ** 2,
                             (nt * dt) ** 2)
    # x-part: |sum_x cos(xi0 x) e^{-i xi x} dx|^2 is lx^2 at xi = +-xi0
    direct = math.sqrt(2 * (1 + xi0**2) ** 0.25 * g.lx**2 * dirichlet.sum()
                       / (p.n_time * dt * 2 * g.lx))
    assert averaging_lhs(p) == pytest.approx(closed, rel=1e-12)
    assert direct == pytest.approx(closed, rel=1e-12)


def test_lhs_split_sums_to_total(rng):
    g = PhaseGrid(2, 8, 8, 4.0, 4.0)
    h = rng.standard_normal((6,) + g.shape)
    p = KineticPair(g, h, np.zeros((2,) + h.shape), 4.0, 0.1)
    lo, hi = lhs_split(p)
    assert lo > 0 and hi > 0
    assert lo + hi == pytest.approx(averaging_lhs(p) ** 2, rel=1e-12)


def test_zero_extension(rng):
    g = PhaseGrid(1, 8, 8, 1.0, 1.0)
    h = rng.standard_normal((5,) + g.shape)
    p = KineticPair(g, h, np.zeros((1,) + h.shape), 1.0, 0.1)
    assert p.n_time == 10
    rho = velocity_average(h, g)
    spec = avg.space_time_spectrum(rho, p) / (p.dt * g.cell_x)
    back = np.fft.ifftn(spec, axes=(0, 1))
    assert np.abs(back[5:]).max() <= 1e-13
    np.testing.assert_allclose(back[:5].real, rho, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.01, 100), seed=st.integers(0, 2**31))
def test_rhs_homogeneity(c, seed):
    g = PhaseGrid(1, 8, 8, 1.0, 2.0)
    r = np.random.default_rng(seed)
    p = KineticPair(g, r.standard_normal((4,) + g.shape), r.standard_normal((1, 4) + g.shape),
                    1.5, 0.1)
    assert averaging_rhs(p.scaled(c)) == pytest.approx(c * averaging_rhs(p), rel=1e-12)
    assert averaging_lhs(p.scaled(c)) == pytest.approx(c * averaging_lhs(p), rel=1e-12)
    assert averaging_rhs(p.scaled(2.0)) == 2.0 * averaging_rhs(p)


def test_rhs_prefactor_at_q_zero(rng):
    g = PhaseGrid(2, 8, 8, 1.0, 2.0)
    h = rng.standard_normal((4,) + g.shape)
    gg = rng.standard_normal((2, 4) + g.shape)
    p = KineticPair(g, h, gg, 0.0, 0.1)
    norm = lambda a: math.sqrt((a**2).sum() * 0.1 * g.cell)  # noqa: E731
    assert averaging_rhs(p) == pytest.approx(norm(h) + norm(gg), rel=1e-12)


def test_pair_shape_validation():
    g = PhaseGrid(1, 8, 8, 1.0, 1.0)
    with pytest.raises(AveragingError):
        KineticPair(g, np.zeros((4, 8, 4)), np.zeros((1, 4, 8, 4)), 1.0, 0.1)
    with pytest.raises(AveragingError):
        KineticPair(g, np.zeros((4,) + g.shape), np.zeros((2, 4) + g.shape), 1.0, 0.1)


# ---------------------------------------------------------------- transport

def _free_streaming_pair(periods=1):
    """h = h0(x - v t, v) on a time period where every (xi, v) phase closes."""
    g = PhaseGrid(1, 16, 16, math.pi, 4.0)
    T = 2 * math.pi / g.dv * periods
    nt = 64 * periods
    dt = T / nt
    t = dt * np.arange(nt)
    b = np.exp(-(g.v**2))
    X = g.x[None, :, None] - g.v[None, None, :] * t[:, None, None]
    h = (np.cos(2 * X) + 0.5 * np.sin(3 * X + 0.4)) * b
    return KineticPair(g, h, np.zeros((1,) + h.shape), 3.0, dt, periodic_time=True)


def test_transport_free_streaming():
    p = _free_streaming_pair()
    assert verify_transport(p) <= 1e-8
    assert verify_transport(p, relative=True) <= 1e-10


def test_transport_negative_control():
    p = _free_streaming_pair()
    static = np.broadcast_to(p.h[0], p.h.shape).copy()
    q = KineticPair(p.grid, static, p.g, p.Q, p.dt, periodic_time=True)
    assert verify_transport(q, relative=True) > 0.1


def test_free_streaming_inequality():
    p = _free_streaming_pair()
    assert 0 < averaging_lhs(p) <= C_AVG * averaging_rhs(p)


@pytest.mark.parametrize("n, tol", [(1, 1e-10), (2, 1e-10), (3, 1e-6)])
def test_manufactured_pair_transport(n, tol):
    spec, g, nt = avg.desk_manufactured(n, seed=3)
    p = manufactured_pair(spec, g, nt)
    assert verify_transport(p, relative=True) <= tol
    assert p.support_ok(1e-8)
    assert 0 < averaging_lhs(p) <= C_AVG * averaging_rhs(p)


def test_manufactured_under_resolved_velocity_is_detected():
    p = manufactured_pair(ManufacturedSpec(1, seed=3), PhaseGrid(1, 16, 32, math.pi, 8.0), 16)
    assert verify_transport(p, relative=True) > 1e-6


def test_manufactured_central_difference_residual():
    spec, g, nt = avg.desk_manufactured(1, seed=2, refine=1)
    p = manufactured_pair(spec, g, nt)
    coarse = manufactured_pair(*avg.desk_manufactured(1, seed=2)[:2], 16)
    # second-order in time: halving dt quarters the residual
    r1 = avg.transport_residual_central(p.h, p.g, g, p.dt)
    r0 = avg.transport_residual_central(coarse.h, coarse.g, coarse.grid, coarse.dt)
    assert r1 < r0 / 3


@pytest.mark.parametrize("n", [1, 2])
def test_manufactured_pair_refinement_invariant(n):
    ratios = []
    for level in (0, 1):
        spec, g, nt = avg.desk_manufactured(n, seed=5, refine=level)
        p = manufactured_pair(spec, g, nt)
        ratios.append(averaging_lhs(p) / averaging_rhs(p))
    assert ratios[1] == pytest.approx(ratios[0], rel=1e-6)


def test_manufactured_rejects_coarse_grid():
    with pytest.raises(AveragingError):
        manufactured_pair(ManufacturedSpec(1, 0), PhaseGrid(1, 4, 32, math.pi, 8.0), 16)
    with pytest.raises(AveragingError):
        manufactured_pair(ManufacturedSpec(1, 0), PhaseGrid(1, 16, 32, math.pi, 4.0), 16)
    with pytest.raises(AveragingError):
        avg.desk_manufactured(4, 0)


def test_calibration_csv(tmp_path):
    pairs = [manufactured_pair(*avg.desk_manufactured(1, s)) for s in range(4)]
    rows, cstar = avg.calibrate(pairs, [f"m{s}" for s in range(4)])
    assert cstar == max(r[3] for r in rows) and 0 < cstar <= C_AVG
    avg.write_calibration(tmp_path / "cal.csv", rows)
    header, body = read_csv(tmp_path / "cal.csv")
    assert header == ["corpus_id", "lhs", "rhs", "ratio", "grid", "Q", "T"]
    assert [r[0] for r in body] == ["m0", "m1", "m2", "m3"]
    assert float(body[2][3]) == rows[2][3]


# ---------------------------------------------------------------- I1 / I2

def test_decomposition_zero():
    g = PhaseGrid(1, 8, 64, 1.0, 8.0)
    z = np.zeros(g.v_shape)
    assert mode_decomposition(z, np.zeros((1,) + g.v_shape), 0.5, [2.0], g) == (0, 0)


def test_decomposition_rejects_low_frequency():
    g = PhaseGrid(1, 8, 64, 1.0, 8.0)
    z = np.zeros(g.v_shape)
    with pytest.raises(AveragingError):
        mode_decomposition(z, np.zeros((1,) + g.v_shape), 0.5, [0.5], g)
    with pytest.raises(AveragingError):
        i1_bound_check(z, 0.5, [0.5], g, 1.0)


def test_decomposition_plateau():
    g = PhaseGrid(1, 8, 512, 1.0, 8.0)
    tau, xi = 1.0, 4.0
    z = (tau + xi * g.v) / math.sqrt(xi)
    inside = np.abs(z) <= 0.9
    hh = np.where(inside, np.cos(g.v), 0.0).astype(complex)
    gh = np.where(inside, np.sin(g.v), 0.0)[None].astype(complex)
    i1, i2 = mode_decomposition(hh, gh, tau, [xi], g)
    assert i1 == pytest.approx(hh.sum() * g.dv, rel=1e-14)
    assert i2 == 0


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("tau, xi", [(0.3, 3.0), (-2.0, 1.5), (5.0, 7.0)])
def test_identity_analytic_route(seed, tau, xi):
    g = PhaseGrid(1, 8, 32768, 1.0, 8.0)
    hh, gh = manufactured_mode(tau, [xi], g, seed=seed)
    i1, i2 = mode_decomposition(hh, gh, tau, [xi], g)
    total = hh.sum() * g.cell_v
    assert abs(i1 + i2 - total) <= 1e-8 * abs(total)


@pytest.mark.parametrize("n, nv", [(1, 128), (2, 128), (3, 64)])
def test_identity_discrete_route(n, nv):
    g = PhaseGrid(n, 8, nv, 1.0, 8.0)
    xi = np.array([2.0, -1.3, 0.7][:n])
    for seed in range(3):
        hh, gh = manufactured_mode(0.3, xi, g, seed=seed)
        i1, i2 = mode_decomposition(hh, gh, 0.3, xi, g, route="discrete")
        total = hh.sum() * g.cell_v
        assert abs(i1 + i2 - total) <= 1e-8 * abs(total)


def test_unknown_route():
    g = PhaseGrid(1, 8, 16, 1.0, 8.0)
    with pytest.raises(AveragingError):
        avg.i2_weight_gradient(0.0, [2.0], g, route="other")


def test_i1_zero_profile():
    g = PhaseGrid(1, 8, 64, 1.0, 8.0)
    assert i1_bound_check(np.zeros(g.v_shape), 0.0, [2.0], g, 3.0) == 0.0


def test_i1_slab_extremizer():
    g = PhaseGrid(1, 8, 4096, 1.0, 8.0)
    tau, xi = 0.7, 9.0
    slab = np.abs(tau + xi * g.v) <= math.sqrt(xi)
    ratio = i1_bound_check(slab.astype(complex), tau, [xi], g, Q=5.0)
    measure = slab.sum() * g.dv
    assert ratio == pytest.approx(math.sqrt(measure) * xi**0.25, rel=1e-12)
    assert ratio == pytest.approx(math.sqrt(2.0), rel=1e-2)


def test_i1_random_profiles_below_cauchy_schwarz(rng):
    g = PhaseGrid(1, 8, 1024, 1.0, 8.0)
    tau, xi, Q = 0.4, 6.0, 4.0
    z = (tau + xi * g.v) / math.sqrt(xi)
    cs = xi**0.25 * math.sqrt((ZETA(z) ** 2).sum() * g.dv)
    ratios = []
    for _ in range(100):
        hh = (rng.standard_normal(g.nv) + 1j * rng.standard_normal(g.nv)) * (np.abs(g.v) <= Q)
        ratios.append(i1_bound_check(hh, tau, [xi], g, Q))
    assert max(ratios) <= cs * (1 + 1e-12)
    assert cs <= 2.0 + 1e-12


@pytest.mark.parametrize("n, tol", [(1, 1e-12), (2, 1e-12), (3, 1e-8)])
def test_decomposition_residual_on_pair_spectra(n, tol):
    spec, g, nt = avg.desk_manufactured(n, seed=4)
    p = manufactured_pair(spec, g, nt)
    assert avg.decomposition_residual(p, modes=4 if n == 3 else 8) <= tol


def test_decomposition_residual_analytic_route_is_grid_limited():
    spec, g, nt = avg.desk_manufactured(1, seed=4)
    p = manufactured_pair(spec, g, nt)
    assert avg.decomposition_residual(p, route="analytic") > 1e-6
