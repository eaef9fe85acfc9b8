"""Command-line entry point: ``vpkit COMMAND CONFIG [--out DIR]``.

Every command writes ``summary.txt`` (one PASS/FAIL line per assertion) and
``failures.json`` into the output directory. Exit codes: 0 all assertions
pass, 1 an assertion failed, 2 configuration error, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import averaging, charflow, solver
from .config import ConfigError, RunConfig, parse_config
from .grid import PhaseGrid, SimParams, build_grid
from .harness import apriori, cancellation, convergence, gain, uniqueness
from .harness.report import Assertion, failures, summary_text
from .initial_data import DataSpecError, generate_initial_data
from .io import fmt, write_csv, write_diagnostics, write_snapshot
from .spectral import density_bound_check

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3

L2_DRIFT_TOL = 1e-8
TRANSPORT_TOL = 1e-4
FLOW_TOL = 1e-6
IDENTITY_TOL = 1e-8
MANUFACTURED_TOL = 1e-6
CANCEL_TOL = 1e-10


def _initial(cfg: RunConfig):
    return generate_initial_data(cfg.data, cfg.grid)


def _trajectory(cfg: RunConfig, f0=None, snapshot_every=None, params=None):
    return solver.run(f0 if f0 is not None else _initial(cfg), params or cfg.params,
                      snapshot_every=snapshot_every or cfg.snapshot_every)


def _l2_drift(traj) -> float:
    l2 = traj.diagnostics.array("l2")
    return float(np.abs(l2 - l2[0]).max() / l2[0]) if l2[0] > 0 else 0.0


def _coarsened(cfg: RunConfig):
    """Grid and params one level coarser (half the points, twice the step)."""
    g = cfg.grid
    if g.nx < 16 or g.nv < 16:
        return None
    cg = PhaseGrid(g.n, g.nx // 2, g.nv // 2, g.lx, g.lv)
    p = cfg.params
    cp = SimParams(p.sigma, p.s, p.t_final, 2 * p.dt, p.support_tol, p.poisson_mode)
    try:
        solver.n_steps(cp.t_final, cp.dt)
    except ValueError:
        return None
    return cg, cp


# ---------------------------------------------------------------- commands

def cmd_run(cfg: RunConfig, out: Path, opts) -> list[Assertion]:
    snaps = out / "snapshots"
    snaps.mkdir(parents=True, exist_ok=True)
    count = [0]

    def save(t, f):
        write_snapshot(snaps / f"snap_{count[0]:05d}.vpf", f, t)
        count[0] += 1

    traj = solver.run(_initial(cfg), cfg.params, snapshot_every=cfg.snapshot_every,
                      store_fields=False, on_snapshot=save)
    write_diagnostics(out / "diagnostics.csv", traj.diagnostics)
    checks = [Assertion("l2_conservation", _l2_drift(traj) <= L2_DRIFT_TOL, _l2_drift(traj),
                        L2_DRIFT_TOL, "relative L2 drift"),
              Assertion("support_growth", traj.q_bound_ok, max(traj.diagnostics.Q),
                        max(traj.q_bound), "Q(t) <= Q(0) + int |E| + 2 dv")]
    if "apriori" in cfg.checks:
        checks += _apriori_assertions(traj)
    return checks


def _apriori_assertions(traj) -> list[Assertion]:
    rep = apriori.apriori_track(traj)
    out = [Assertion("hs_bound", not rep.hs_flag.any(), float(rep.hs.max()), rep.hs_target,
                     f"certified_T={fmt(rep.certified_T)}"),
           Assertion("support_bound", not rep.q_flag.any(), float(rep.Q.max()), rep.q_target)]
    if rep.lipschitz is not None:
        lip = rep.lipschitz
        out.append(Assertion("lipschitz_in_time", lip["measured"] <= lip["bound"],
                             lip["measured"], lip["bound"], f"C={fmt(lip['C'])}"))
    return out


def cmd_verify_apriori(cfg: RunConfig, out: Path, opts) -> list[Assertion]:
    traj = _trajectory(cfg)
    rep = apriori.apriori_track(traj)
    write_diagnostics(out / "diagnostics.csv", traj.diagnostics)
    write_csv(out / "apriori.csv", rep.COLUMNS, rep.rows())
    checks = _apriori_assertions(traj)
    worst = 0.0
    ok = True
    for _, f in traj.snapshots:
        q = traj.grid.lv
        lhs, rhs = density_bound_check(f, q, cfg.params.s)
        ok &= lhs <= rhs
        worst = max(worst, lhs / rhs if rhs > 0 else 0.0)
    checks.append(Assertion("density_bound", ok, worst, 1.0, "||rho||_Hs / (|B_Q|^1/2 ||f||_Hs)"))
    return checks


def cmd_verify_averaging(cfg: RunConfig, out: Path, opts) -> list[Assertion]:
    n = cfg.grid.n
    count = opts.pairs if opts.pairs is not None else (20 if n < 3 else 4)
    # the per-mode identity only needs a fine velocity grid
    vgrid = build_grid(n, 8, 128 if n < 3 else 64, cfg.grid.lx, 8.0)
    rows = []
    transport = 0.0
    ident = 0.0
    for seed in range(count):
        spec, mgrid, nt = averaging.desk_manufactured(n, seed, cfg.grid.lx)
        pair = averaging.manufactured_pair(spec, mgrid, nt)
        r, _ = averaging.calibrate([pair], [f"manufactured-{seed}"])
        rows += r
        transport = max(transport, averaging.verify_transport(pair, relative=True))
        xi = np.zeros(n)
        xi[0] = max(1.0, vgrid.xi[2])
        hh, gh = averaging.manufactured_mode(0.3, xi, vgrid, seed=seed)
        i1, i2 = averaging.mode_decomposition(hh, gh, 0.3, xi, vgrid, route="discrete")
        total = complex(hh.sum() * vgrid.cell_v)
        ident = max(ident, abs(i1 + i2 - total) / max(abs(total), 1e-300),
                    averaging.decomposition_residual(pair, modes=4))
    traj = None
    need = cfg.grid.nbytes * (solver.n_steps(cfg.params.t_final, cfg.params.dt) + 1) * (3 + n)
    if need <= cfg.mem_cap:
        traj = _trajectory(cfg, snapshot_every=1)
        rows += averaging.calibrate([averaging.solver_pair(traj, cfg.params.s)], ["solver"])[0]
    averaging.write_calibration(out / "calibration.csv", rows)
    cstar = max(r[3] for r in rows)
    checks = [
        Assertion("averaging_inequality", cstar <= averaging.C_AVG, cstar, averaging.C_AVG,
                  f"{len(rows)} pairs"),
        Assertion("manufactured_transport", transport <= MANUFACTURED_TOL, transport,
                  MANUFACTURED_TOL),
        Assertion("i1_i2_identity", ident <= IDENTITY_TOL, ident, IDENTITY_TOL,
                  "discrete route, fine-grid mode and pair spectra"),
    ]
    if traj is not None and len(traj.snapshots) > 1:
        coarse = _coarsened(cfg)
        refined = None
        if coarse is not None:
            cf0 = generate_initial_data(cfg.data, coarse[0])
            refined = solver.run(cf0, coarse[1], snapshot_every=1)
        rep = gain.averaging_gain_check(traj, cfg.params, refined)
        checks.append(Assertion("gain_slices_finite", rep.slices_finite,
                                float(np.max(rep.slice_norms)), math.inf))
        if refined is not None:
            ratio = rep.refined_implied / rep.implied if rep.implied > 0 else 1.0
            checks.append(Assertion("gain_constant_stable", rep.stable, ratio, 2.0,
                                    "implied constant, coarse over fine"))
    return checks


def _rough_field(seed: int = 0, N: int = 64, L: float = math.pi) -> charflow.SpectralFieldSeries:
    """Planar field with Fourier amplitudes decaying like |k|^(-1.2): Hoelder but far from
    C^1 at grid scale."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    k = np.fft.fftfreq(N, 1.0 / N)
    kk = np.sqrt(k[:, None] ** 2 + k[None, :] ** 2)
    amp = np.where(kk > 0, np.maximum(kk, 1.0) ** -1.2, 0.0)
    samples = []
    for _ in range(2):
        comp = []
        for _ in range(2):
            c = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) * amp
            comp.append(np.fft.ifft2(c).real * N * N)
        samples.append(comp)
    return charflow.SpectralFieldSeries([0.0, 1.0], np.asarray(samples), L, alpha=0.2)


def cmd_verify_flow(cfg: RunConfig, out: Path, opts) -> list[Assertion]:
    if opts.rough:
        u = _rough_field()
        seeds = charflow.marker_lattice([-1.0, -1.0], [1.0, 1.0], (5, 5))
        try:
            flow = charflow.picard_flow(u, seeds, 1.0, iters=40, n_t=64)
            change = 0.0
            ok = True
            detail = f"converged in {flow.iterations} iterations"
        except charflow.FlowConvergenceError as exc:
            ok = False
            change = exc.change
            detail = f"picard did not converge: contraction={fmt(exc.contraction)}"
        return [Assertion("picard_convergence", ok, change, 1e-12, detail)]
    traj = _trajectory(cfg)
    g = traj.grid
    f0 = traj.snapshots[0][1]
    shape = (8,) * g.n + (8,) * g.n
    seeds = charflow.seeds_in_support(f0, shape)
    flow = charflow.vlasov_characteristics(traj, seeds)
    charflow.write_flow_csv(out / "flow.csv", flow)
    scale = max(float(np.abs(f0.values).max()), 1e-300)
    resid = float(flow.info["residuals"].max() / scale)
    det_err = float(np.abs(flow.det() - 1.0).max())
    u = charflow.VlasovField(np.asarray(traj.field_times), np.stack(traj.fields), g,
                             cfg.params.sigma)
    T = traj.field_times[-1] - traj.field_times[0]
    back = charflow.compose_inverse(u, flow, T, abs(cfg.params.dt))
    return [
        Assertion("transport_identity", resid <= TRANSPORT_TOL, resid, TRANSPORT_TOL,
                  "max |f(t, Phi) - f0| / max f0"),
        Assertion("jacobian_determinant", det_err <= FLOW_TOL, det_err, FLOW_TOL),
        Assertion("forward_backward", back <= FLOW_TOL, back, FLOW_TOL),
    ]


def cmd_verify_uniqueness(cfg: RunConfig, out: Path, opts) -> list[Assertion]:
    f0 = _initial(cfg)
    same = uniqueness.uniqueness_experiment(f0, 0.0, cfg.params)
    rep = uniqueness.uniqueness_experiment(f0, opts.delta, cfg.params)
    write_csv(out / "uniqueness.csv", rep.COLUMNS, rep.rows())
    p0_err = abs(rep.P0 - rep.P0_closed) / rep.P0_closed if rep.P0_closed > 0 else 0.0
    return [
        Assertion("identical_data", bool(np.all(same.P == 0.0)), float(np.abs(same.P).max()), 0.0),
        Assertion("initial_discrepancy", p0_err <= 1e-9, p0_err, 1e-9, "P(0) vs 1/2|d|^2 mass"),
        Assertion("gronwall", rep.gronwall_ok(), rep.kappa, math.inf, "P(t) <= P(0) e^(kappa t)"),
        Assertion("gronwall_rate", rep.rate_ok(), rep.kappa, uniqueness.RATE_C * rep.rate_factor),
        Assertion("split_bounds", rep.split_ok(), float(np.max(rep.T1 + rep.T2)),
                  float(np.max(rep.T1_bound + rep.T2_bound)), "T1, T2 against their bounds"),
    ]


def cmd_verify_cancellation(cfg: RunConfig, out: Path, opts) -> list[Assertion]:
    from .grid import DistributionField
    from .initial_data import spectral_random_field

    g = cfg.grid
    if g.size > 2**16:
        g = build_grid(g.n, min(g.nx, {1: 32, 2: 8, 3: 4}[g.n]),
                       min(g.nv, {1: 32, 2: 8, 3: 4}[g.n]), g.lx, g.lv)
    x_slice = (Ellipsis,) + (0,) * g.n
    worst = 0.0
    rows = []
    for seed in range(opts.pairs if opts.pairs is not None else 10):
        f = DistributionField(g, spectral_random_field(g, 1.0, 2 * seed))
        E = np.stack([spectral_random_field(g, 1.0, 2 * seed + 1 + 1000 * d)[x_slice]
                      for d in range(g.n)])
        for kind in ("mu", "xi"):
            r = cancellation.cancellation_check(f, E, cfg.params.s, kind)
            rows.append((seed, kind, r))
            worst = max(worst, r)
    write_csv(out / "cancellation.csv", ("seed", "kind", "residual"), rows)
    return [Assertion("cancellation_identity", worst <= CANCEL_TOL, worst, CANCEL_TOL)]


def cmd_converge(cfg: RunConfig, out: Path, opts) -> list[Assertion]:
    f0 = _initial(cfg)
    widths = opts.widths or [0.4, 0.2, 0.1]
    tab = convergence.mollification_convergence(f0, widths, cfg.params)
    write_csv(out / "convergence.csv", tab.COLUMNS, tab.rows())
    if tab.aborted:
        level, reason = next(iter(tab.aborted.items()))
        raise solver.NumericalAbort(f"level {level}: {reason}", float("nan"))
    last = tab.diffs[-1] if tab.diffs else 0.0
    return [
        Assertion("cauchy", tab.cauchy, last, tab.diffs[-2] if len(tab.diffs) > 1 else math.inf,
                  "successive L2 differences decrease"),
        Assertion("mollified_hs", tab.hs_ok, max(tab.hs0), math.inf, "||f_k0||_Hs <= 2||f0||_Hs"),
        Assertion("mollified_support", tab.q_ok, max(tab.q0), math.inf, "Q_k(0) <= 2 Q(0)"),
    ]


COMMANDS = {
    "run": cmd_run,
    "verify-apriori": cmd_verify_apriori,
    "verify-averaging": cmd_verify_averaging,
    "verify-flow": cmd_verify_flow,
    "verify-uniqueness": cmd_verify_uniqueness,
    "verify-cancellation": cmd_verify_cancellation,
    "converge": cmd_converge,
}


def _options(**kw):
    base = {"rough": False, "delta": 1e-6, "widths": None, "pairs": None}
    base.update(kw)
    return argparse.Namespace(**base)


def _finish(out: Path, command: str, status: int, assertions, error: str | None = None) -> int:
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.txt").write_text(summary_text(assertions) if assertions else
                                     f"ERROR {error}\n", encoding="utf-8")
    failed = [{"name": a.name, "measured": fmt(a.measured), "limit": fmt(a.limit),
               "detail": a.detail} for a in assertions if not a.passed]
    doc = {"command": command, "exit": status, "failures": failed}
    if error:
        doc["error"] = error
    (out / "failures.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return status


def dispatch(command: str, config: RunConfig, out_dir=None, **options) -> int:
    """Run ``command`` on a parsed config; returns the exit status."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    out = Path(out_dir or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        assertions = COMMANDS[command](config, out, _options(**options))
    except (solver.NumericalAbort, charflow.FlowEscapeError, FloatingPointError) as exc:
        return _finish(out, command, EXIT_ABORT, [], f"numerical abort: {exc}")
    except (DataSpecError, averaging.AveragingError) as exc:
        return _finish(out, command, EXIT_CONFIG, [], f"configuration: {exc}")
    status = EXIT_FAIL if failures(assertions) else EXIT_PASS
    return _finish(out, command, status, assertions)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vpkit", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", help="flat key = value configuration file")
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.add_argument("--rough", action="store_true",
                   help="verify-flow: negative control on a rough field, regularity check off")
    p.add_argument("--delta", type=float, default=1e-6, help="verify-uniqueness: shift size")
    p.add_argument("--widths", type=float, nargs="+", help="converge: mollifier widths")
    p.add_argument("--pairs", type=int, help="number of random or manufactured pairs")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"vpkit: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = parse_config(text)
    except ConfigError as exc:
        print(f"vpkit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in caught:
        print(f"vpkit: warning: {w.message}", file=sys.stderr)
    status = dispatch(args.command, cfg, args.out, rough=args.rough, delta=args.delta,
                      widths=args.widths, pairs=args.pairs)
    out = Path(args.out or cfg.out_dir)
    sys.stdout.write((out / "summary.txt").read_text(encoding="utf-8"))
    if status != EXIT_PASS:
        doc = json.loads((out / "failures.json").read_text(encoding="utf-8"))
        names = [f["name"] for f in doc["failures"]] or [doc.get("error", "error")]
        print("FAILED: " + ",".join(names), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
