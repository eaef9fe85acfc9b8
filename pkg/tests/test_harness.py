import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vpkit import _backend, poisson, solver
from vpkit.charflow import FlowMap
from vpkit.grid import DiagnosticsSeries, DistributionField, PhaseGrid, SimParams
from vpkit.harness import apriori, cancellation, convergence, gain, report, uniqueness
from vpkit.harness.uniqueness import SeedMismatchError
from vpkit.initial_data import InitialDataSpec, generate_initial_data

from conftest import band_limited, random_field, smooth_data


@pytest.fixture(scope="module")
def smooth_run():
    g = PhaseGrid(1, 32, 64, 2 * math.pi, 8.0)
    f0 = smooth_data(g)
    params = SimParams(sigma=1, s=1.0, t_final=0.5, dt=1.0 / 64)
    return solver.run(f0, params, snapshot_every=1)


# ---------------------------------------------------------------- a priori

def test_apriori_smooth_run_keeps_bounds(smooth_run):
    rep = apriori.apriori_track(smooth_run)
    assert not rep.flags_fired
    assert rep.certified_T == pytest.approx(0.5)
    assert np.all(np.diff(rep.rho_gain) >= 0)
    assert rep.lipschitz["ratio"] <= 1.0
    assert apriori.implied_constant_summary(rep) < 1.0


def _synthetic(hs, Q):
    d = DiagnosticsSeries()
    for k, (h, q) in enumerate(zip(hs, Q)):
        d.append(0.1 * k, 1.0, 1.0, h, q, 1.0, 0.0, 0.0, 1.0)

    class Traj:
        diagnostics = d
        grid = PhaseGrid(1, 8, 8, 1.0, 8.0)
        snapshots = []
        params = None
    return Traj()


def test_apriori_flags_latch():
    rep = apriori.apriori_track(_synthetic([1.0, 1.5, 2.5, 1.0], [1.0, 1.0, 1.0, 1.0]))
    np.testing.assert_array_equal(rep.hs_flag, [False, False, True, True])
    assert not rep.q_flag.any()
    assert rep.certified_T == pytest.approx(0.1)


def test_apriori_q_flag_at_start_of_run():
    rep = apriori.apriori_track(_synthetic([1.0, 1.0], [1.0, 6.0]))
    assert rep.q_flag.tolist() == [False, True]
    assert rep.certified_T == 0.0
    assert rep.lipschitz is None


def test_apriori_rows_match_columns(smooth_run):
    rep = apriori.apriori_track(smooth_run)
    rows = list(rep.rows())
    assert len(rows) == len(smooth_run.diagnostics)
    assert all(len(r) == len(rep.COLUMNS) for r in rows)


def test_free_streaming_derivative_hm1(rng):
    g = PhaseGrid(1, 16, 32, math.pi, 6.0)
    f0 = band_limited(g, rng)
    params = SimParams(sigma=1, s=1.0, t_final=1e-4, dt=1e-4, field_enabled=False)
    f1 = solver.run(f0, params).final
    fd = apriori.hminus1_norm(f1.values - f0.values, g) / 1e-4
    assert fd == pytest.approx(apriori.free_streaming_derivative_hm1(f0, g), rel=1e-3)


def test_lipschitz_check_needs_two_snapshots(smooth_run):
    class One:
        snapshots = smooth_run.snapshots[:1]
    with pytest.raises(ValueError):
        apriori.lipschitz_in_time_check(One())


# ---------------------------------------------------------------- cancellation

@pytest.mark.parametrize("kind", ["mu", "xi"])
@pytest.mark.parametrize("n, nx, nv", [(1, 16, 16), (2, 8, 8)])
def test_cancellation_random_fields(kind, n, nx, nv, rng):
    g = PhaseGrid(n, nx, nv, math.pi, 4.0)
    f = random_field(g, rng)
    E = rng.standard_normal((n,) + g.x_shape)
    assert cancellation.cancellation_check(f, E, 1.3, kind) <= 1e-10


@pytest.mark.parametrize("kind", ["mu", "xi"])
def test_cancellation_with_solver_force(kind, grid1):
    f = smooth_data(grid1)
    E = poisson.solve_periodic(poisson.density(f), grid1)
    assert cancellation.cancellation_check(f, E, 1.0, kind) <= 1e-10


def test_cancellation_zero_field(grid1, rng):
    f = random_field(grid1, rng)
    assert cancellation.cancellation_check(f, np.zeros((1, 32)), 1.0) == 0.0


def test_cancellation_terms_do_not_vanish(rng):
    g = PhaseGrid(1, 8, 8, math.pi, 4.0)
    S, A = cancellation.cancellation_sums(random_field(g, rng), rng.standard_normal((1, 8)), 1.0)
    assert A > 1e-3 and abs(S.imag) > 1e-6 * A


def test_cancellation_unknown_kind(grid1, rng):
    with pytest.raises(ValueError):
        cancellation.cancellation_check(random_field(grid1, rng), np.zeros((1, 32)), 1.0, "eta")


@pytest.mark.skipif(_backend.compiled_kernels is None, reason="compiled kernels not built")
@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["mu", "xi"]), st.integers(1, 2), st.integers(0, 2**31))
def test_cancellation_backends_agree(kind, n, seed):
    rng = np.random.default_rng(seed)
    g = PhaseGrid(n, 8, 4, math.pi, 4.0)
    f = random_field(g, rng)
    E = rng.standard_normal((n,) + g.x_shape)
    S1, A1 = cancellation.cancellation_sums(f, E, 1.0, kind, backend=_backend.python_kernels)
    S2, A2 = cancellation.cancellation_sums(f, E, 1.0, kind, backend=_backend.compiled_kernels)
    assert abs(S1 - S2) <= 1e-11 * A1
    assert A2 == pytest.approx(A1, rel=1e-12)


# ---------------------------------------------------------------- mollification

def test_mollify_gaussian_single_mode():
    g = PhaseGrid(1, 32, 8, math.pi, 4.0)
    vals = np.multiply.outer(np.cos(3 * g.x), np.ones(8))
    out = convergence.mollify(DistributionField(g, vals), 0.5)
    np.testing.assert_allclose(out.values, math.exp(-0.5 * 0.25 * 9) * vals, atol=1e-13)


def test_mollify_truncate_and_xv(grid1, rng):
    f = random_field(grid1, rng)
    cut = convergence.mollify(f, 0.25, "truncate")
    fh = np.fft.fft(cut.values, axis=0)
    assert np.abs(fh[np.abs(grid1.xi) > 4.0]).max() <= 1e-10
    both = convergence.mollify(f, 0.25, "gaussian", "xv")
    assert both.l2() < convergence.mollify(f, 0.25).l2()
    with pytest.raises(ValueError):
        convergence.mollify(f, 0.25, "box")
    with pytest.raises(ValueError):
        convergence.mollify(f, 0.25, axes="v")


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_mollify_is_monotone_in_width(w1, w2):
    g = PhaseGrid(1, 16, 8, math.pi, 4.0)
    f = random_field(g, np.random.default_rng(3))
    a, b = sorted((w1, w2))
    assert convergence.mollify(f, b).l2() <= convergence.mollify(f, a).l2() + 1e-12


def test_mollification_convergence_singular():
    g = PhaseGrid(1, 32, 64, 2 * math.pi, 8.0)
    f0 = generate_initial_data(InitialDataSpec("singular_x", q0=3.0, alpha=0.2, amplitude=0.1), g)
    params = SimParams(sigma=1, s=1.0, t_final=0.5, dt=1.0 / 64, support_tol=1e-4)
    tab = convergence.mollification_convergence(f0, [0.8, 0.4, 0.2, 0.1], params)
    assert not tab.aborted
    assert len(tab.diffs) == 3
    assert tab.cauchy and tab.hs_ok and tab.q_ok
    assert [r[0] for r in tab.rows()] == [0, 1, 2, 3]


def test_mollification_reports_abort():
    g = PhaseGrid(1, 32, 64, 2 * math.pi, 8.0)
    f0 = generate_initial_data(InitialDataSpec("singular_x", q0=3.0, alpha=0.2), g)
    params = SimParams(sigma=1, s=1.0, t_final=0.5, dt=1.0 / 64)
    tab = convergence.mollification_convergence(f0, [0.8, 0.4, 0.2], params)
    assert 0 in tab.aborted and "velocity box" in tab.aborted[0]


def test_mollification_widths_must_decrease(grid1):
    with pytest.raises(ValueError):
        convergence.mollification_convergence(smooth_data(grid1), [0.1, 0.2],
                                               SimParams(1, 1.0, 0.0, 0.1))


# ---------------------------------------------------------------- tail sums

def test_separable_hs_matches_hs_norm():
    from vpkit.spectral import hs_norm

    g = PhaseGrid(1, 32, 32, math.pi, 4.0)
    spec = InitialDataSpec("singular_x", q0=3.0)
    a = convergence.singular_profile(g, spec)
    chi = convergence.velocity_cutoff(g.speed(), 3.0)
    total, tail = convergence.separable_hs(a, chi, g, 0.7)
    assert total == pytest.approx(hs_norm(DistributionField(g, np.multiply.outer(a, chi)), 0.7) ** 2,
                                  rel=1e-10)
    assert 0 < tail < total


def test_free_streaming_density_matches_solver(rng):
    g = PhaseGrid(1, 16, 32, math.pi, 6.0)
    a = 1.0 + 0.3 * np.cos(g.x) + 0.2 * np.sin(2 * g.x)
    chi = convergence.velocity_cutoff(g.speed(), 4.0)
    f0 = DistributionField(g, np.multiply.outer(a, chi))
    f1 = solver.run(f0, SimParams(1, 1.0, 0.5, 1.0 / 16, field_enabled=False)).final
    np.testing.assert_allclose(convergence.free_streaming_density(a, chi, g, 0.5),
                               poisson.density(f1), atol=1e-12)


def test_gain_verdict_one_dimension():
    spec = InitialDataSpec("singular_x", q0=1.5, alpha=0.2)
    # the velocity grid must resolve xi.v t up to the top spatial mode, else the sum aliases
    levels = convergence.free_streaming_gain(spec, 1, [64, 128, 256, 512], 256, 4.0, 2.0, 0.5, 1.26)
    v = convergence.gain_verdict(levels, rel_tol=0.05)
    assert v.f0_diverges and v.rho0_diverges
    assert max(v.rho_tail_ratios) <= 0.1
    # in one dimension the sampled low modes of |x|^-alpha settle slowly
    assert 1e-3 < v.rho_rel_change < 0.05
    assert v.passed


def test_gain_verdict_static_density_fails():
    # at t = 0 the density keeps the singularity
    spec = InitialDataSpec("singular_x", q0=1.5, alpha=0.2)
    levels = convergence.free_streaming_gain(spec, 1, [64, 128, 256], 64, 4.0, 2.0, 0.0, 1.26)
    assert not convergence.gain_verdict(levels).passed


def test_gain_verdict_needs_three_levels():
    with pytest.raises(ValueError):
        convergence.gain_verdict([])


# ---------------------------------------------------------------- gain on trajectories

def test_averaging_gain_on_smooth_run(smooth_run):
    from vpkit.averaging import C_AVG

    rep = gain.averaging_gain_check(smooth_run)
    assert rep.slices_finite
    assert 0 < rep.implied <= C_AVG
    assert rep.stable


def test_averaging_gain_refinement_stable():
    reps = []
    for nx, nv, dt in ((32, 64, 1 / 64), (64, 128, 1 / 128)):
        g = PhaseGrid(1, nx, nv, 2 * math.pi, 8.0)
        traj = solver.run(smooth_data(g), SimParams(1, 1.0, 0.25, dt))
        reps.append(traj)
    rep = gain.averaging_gain_check(reps[0], refined=reps[1])
    assert rep.stable
    assert rep.refined_implied == pytest.approx(rep.implied, rel=0.05)


# ---------------------------------------------------------------- uniqueness

@pytest.fixture(scope="module")
def unique_pair():
    g = PhaseGrid(1, 32, 64, 2 * math.pi, 8.0)
    f0 = smooth_data(g)
    params = SimParams(sigma=1, s=1.0, t_final=1.0, dt=1.0 / 64)
    return f0, params, uniqueness.uniqueness_experiment(f0, 0.05, params)


def test_uniqueness_galilean_ratio(unique_pair):
    _, _, rep = unique_pair
    t = rep.times
    # mixed shift: dx = dv = delta / sqrt 2
    expect = ((1 + t) ** 2 + 1) / 2
    np.testing.assert_allclose(rep.P / rep.P0, expect, rtol=1e-5)
    assert rep.P[-1] / rep.P0 == pytest.approx(2.5, rel=1e-5)


def test_uniqueness_bounds(unique_pair):
    _, _, rep = unique_pair
    assert rep.P0 == pytest.approx(rep.P0_closed, rel=1e-12)
    assert rep.gronwall_ok() and rep.rate_ok() and rep.split_ok()
    assert len(list(rep.rows())) == rep.times.size


def test_uniqueness_delta_homogeneity(unique_pair):
    f0, params, rep = unique_pair
    half = uniqueness.uniqueness_experiment(f0, 0.025, params)
    np.testing.assert_allclose(half.P, rep.P / 4, rtol=1e-6)
    assert half.kappa == pytest.approx(rep.kappa, rel=1e-6)


def test_uniqueness_zero_shift(unique_pair):
    f0, params, _ = unique_pair
    rep = uniqueness.uniqueness_experiment(f0, 0.0, params)
    assert rep.P.max() == 0.0
    assert rep.kappa == 0.0 and rep.gronwall_ok()


def test_uniqueness_x_shift_direction(unique_pair):
    f0, params, _ = unique_pair
    rep = uniqueness.uniqueness_experiment(f0, 0.05, params, direction="x")
    # a pure spatial shift is a symmetry: P stays constant
    np.testing.assert_allclose(rep.P, rep.P0, rtol=1e-6)


def test_shift_field_exact_translation():
    g = PhaseGrid(1, 32, 32, math.pi, 4.0)
    vals = np.multiply.outer(np.cos(2 * g.x), np.exp(-g.v**2))
    vh = np.fft.fft(vals, axis=1)
    vh[:, 16] = 0
    vals = np.fft.ifft(vh, axis=1).real
    d = np.array([0.3, 0.0])
    out = uniqueness.shift_field(DistributionField(g, vals), d)
    np.testing.assert_allclose(out.values[:, 16], np.cos(2 * (g.x - 0.3)) * vals[0, 16] / math.cos(2 * g.x[0]),
                               atol=1e-12)


def test_shift_vector():
    np.testing.assert_allclose(np.linalg.norm(uniqueness.shift_vector(3, 0.2)), 0.2)
    np.testing.assert_allclose(uniqueness.shift_vector(2, 1.0, "x")[2:], 0.0)
    with pytest.raises(ValueError):
        uniqueness.shift_vector(1, -1.0)
    with pytest.raises(ValueError):
        uniqueness.shift_vector(1, 1.0, "v")
    with pytest.raises(ValueError):
        uniqueness.shift_field(DistributionField(PhaseGrid(1, 4, 4, 1.0, 1.0), np.zeros((4, 4))),
                               [1.0])


def test_loeper_functional_rejects_mismatch():
    t = np.array([0.0, 1.0])
    s = np.zeros((3, 2))
    a = FlowMap(t, s, np.zeros((2, 3, 2)))
    b = FlowMap(t, s + 1.0, np.zeros((2, 3, 2)))
    with pytest.raises(SeedMismatchError):
        uniqueness.loeper_functional(a, b, np.ones(3))
    assert uniqueness.loeper_functional(a, b, np.ones(3), shift=np.ones(2)).tolist() == [0.0, 0.0]
    c = FlowMap(np.array([0.0, 0.5]), s, np.zeros((2, 3, 2)))
    with pytest.raises(SeedMismatchError):
        uniqueness.loeper_functional(a, c, np.ones(3))


def test_growth_rate():
    t = np.linspace(0, 1, 11)
    assert uniqueness.growth_rate(t, np.exp(0.7 * t)) == pytest.approx(0.7)
    assert uniqueness.growth_rate(t, np.exp(-t)) == 0.0
    assert uniqueness.growth_rate(t, np.zeros(11)) == 0.0


# ---------------------------------------------------------------- report

def test_report_summary(tmp_path):
    a = [report.Assertion("one", True, 1e-12, 1e-10), report.Assertion("two", False, 3.0, 2.0, "bad")]
    text = report.summary_text(a)
    assert text.splitlines()[0].startswith("PASS one")
    assert "FAIL two" in text and "1/2 assertions passed" in text
    assert report.failures(a) == ["two"]
    report.write_report(tmp_path / "r.csv", ["a", "b"], [(1, 2.5)])
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "a,b"
