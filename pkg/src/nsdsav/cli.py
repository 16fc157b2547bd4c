"""Command-line driver: ``run``, ``converge``, ``energy`` and ``compare``."""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .scenarios.convergence import convergence_study
from .scenarios.diagnostics import centerline_profiles, mass_balance
from .scenarios.library import SCENARIOS, quiescent
from .scenarios.reference import reference_implicit_solve
from .stepper import Discretization, State, run

ENERGY_TOL = 1e-10


def _outdir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _config_text(args):
    if args.config is None:
        doc = {}
    else:
        src = Path(args.config)
        doc = json.loads(src.read_text()) if src.is_file() else json.loads(args.config)
    for key in ("scenario", "scheme", "dt", "n_steps", "h", "output_dir", "stride"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    return json.dumps(doc)


def cmd_run(args):
    cfg = io.parse_config(_config_text(args))
    sc = io.build_scenario(cfg)
    disc = Discretization(sc, sc.mesh(cfg.h))
    out = _outdir(cfg.output_dir)
    payload = {"config": cfg.to_dict(), "n_vertices": disc.mesh.n_vertices,
               "n_triangles": disc.mesh.n_triangles,
               "dofs": {"velocity": disc.n_u, "pressure": disc.n_p, "head": disc.n_phi}}
    if cfg.scheme == "implicit-ref":
        traj = reference_implicit_solve(sc, cfg.dt, cfg.n_steps, cfg.picard_tol,
                                        cfg.picard_max, disc=disc, stride=cfg.stride)
        payload["picard_iterations"] = traj.iterations
        payload["picard_changes"] = traj.changes
    else:
        traj = run(disc, cfg.scheme, cfg.dt, cfg.n_steps, stride=cfg.stride,
                   monitor_energy=cfg.energy_monitor, T=cfg.final_time)
        payload["steps"] = io.step_records(traj.reports)
        payload["energy"] = traj.energy
        payload["stability_lhs"] = traj.stability_lhs
        payload["stability_rhs"] = traj.stability_rhs
        payload["factorizations"] = traj.n_factorizations
    snaps = []
    for i, st in enumerate(traj.states):
        name = f"state_{i:04d}.vtk"
        io.write_state_vtk(out / name, disc, st)
        snaps.append({"file": name, "t": st.t})
    payload["snapshots"] = snaps
    fluxes, imbalance, rel = mass_balance(disc, traj.final.u)
    payload["final"] = {"t": traj.final.t, "r": traj.final.r, "fluxes": fluxes,
                        "mass_imbalance": imbalance, "mass_imbalance_relative": rel}
    io.write_report(out / "report.json", payload)
    print(f"{cfg.scenario}/{cfg.scheme}: {cfg.n_steps} steps, report in {out / 'report.json'}")
    return 0


def cmd_converge(args):
    if args.levels < 1:
        raise io.ConfigError("levels", "need at least one level")
    factor = 4.0 if args.scheme == "be-sav" else 2.0
    dts = [args.dt0 / factor ** i for i in range(args.levels)]
    table = convergence_study(args.scheme, dts)
    io.write_convergence_csv(table, args.output)
    for r in table.rows:
        print(f"dt={r.dt:.6g} h={r.h:.6g} u={r.err_u:.4e} p={r.err_p:.4e} phi={r.err_phi:.4e}")
    return 0


def cmd_energy(args):
    sc = quiescent()
    disc = Discretization(sc, sc.mesh(args.h))
    rng = np.random.default_rng(args.seed)
    u = rng.standard_normal(disc.n_u)
    u[disc.velocity_bc.dofs] = 0.0
    phi = rng.standard_normal(disc.n_phi)
    phi[disc.head_bc.dofs] = 0.0
    start = State(u, np.zeros(disc.n_p), phi, 1.0, 0.0)
    traj = run(disc, args.scheme, args.dt, args.steps, initial=start, monitor_energy=True)
    with open(args.output, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t", "residual", "energy"])
        for rep, e in zip(traj.reports, traj.energy[1:]):
            w.writerow([rep.step, repr(rep.t), repr(rep.energy_residual), repr(e)])
    worst = max((abs(r.energy_residual) for r in traj.reports), default=0.0)
    print(f"{args.steps} steps, max |residual| = {worst:.3e}")
    if worst > args.tol:
        _error("EnergyIdentityViolated", f"max residual {worst:.3e} exceeds {args.tol:.1e}")
        return 3
    return 0


def cmd_compare(args):
    if args.scenario not in SCENARIOS or args.scenario in ("yshape",):
        raise io.ConfigError("scenario", f"compare needs a rectangle scenario, got {args.scenario!r}")
    doc = {"scenario": args.scenario}
    for key in ("dt", "n_steps", "h"):
        if getattr(args, key) is not None:
            doc[key] = getattr(args, key)
    cfg = io.parse_config(json.dumps(doc))
    sc = io.build_scenario(cfg)
    disc = Discretization(sc, sc.mesh(cfg.h))
    sav = run(disc, "be-sav", cfg.dt, cfg.n_steps, stride=max(cfg.n_steps, 1), T=cfg.final_time)
    ref = reference_implicit_solve(sc, cfg.dt, cfg.n_steps, disc=disc,
                                   stride=max(cfg.n_steps, 1))
    (ys, a1), (xs, a2) = centerline_profiles(disc, sav.final, args.points)
    (_, b1), (_, b2) = centerline_profiles(disc, ref.final, args.points)
    out = _outdir(args.output_dir)
    for name, coord, label, s, r in (("profile_U1_x0.5.csv", ys, "y", a1, b1),
                                     ("profile_U2_y0.5.csv", xs, "x", a2, b2)):
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([label, "be_sav", "implicit_ref"])
            for row in zip(coord, s, r):
                w.writerow([repr(float(v)) for v in row])
    scale = max(np.abs(a1).max(), np.abs(a2).max())
    diff = max(np.abs(a1 - b1).max(), np.abs(a2 - b2).max()) / scale
    print(f"max profile difference / max|U| = {diff:.3e}")
    return 0


def _error(kind, message, path=None):
    rec = {"error": kind, "message": message}
    if path:
        rec["path"] = path
    print(json.dumps(rec), file=sys.stderr)


def build_parser():
    p = argparse.ArgumentParser(prog="nsdsav", description="SAV solver for coupled "
                                "Navier-Stokes / Darcy flow")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and write snapshots and a report")
    r.add_argument("--config", help="JSON file or inline JSON document")
    r.add_argument("--scenario")
    r.add_argument("--scheme", choices=io.SCHEMES)
    r.add_argument("--dt", type=float)
    r.add_argument("--n-steps", dest="n_steps", type=int)
    r.add_argument("--h", type=float)
    r.add_argument("--output-dir", dest="output_dir")
    r.add_argument("--stride", type=int)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("converge", help="manufactured-solution convergence table")
    c.add_argument("--scheme", choices=("be-sav", "bdf2-sav"), default="be-sav")
    c.add_argument("--levels", type=int, default=3)
    c.add_argument("--dt0", type=float, default=0.25)
    c.add_argument("--output", default="convergence.csv")
    c.set_defaults(func=cmd_converge)

    e = sub.add_parser("energy", help="per-step energy identity residuals of an unforced run")
    e.add_argument("--steps", type=int, default=50)
    e.add_argument("--dt", type=float, default=0.1)
    e.add_argument("--h", type=float, default=0.125)
    e.add_argument("--scheme", choices=("be-sav", "bdf2-sav"), default="be-sav")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--tol", type=float, default=ENERGY_TOL)
    e.add_argument("--output", default="energy.csv")
    e.set_defaults(func=cmd_energy)

    m = sub.add_parser("compare", help="SAV versus implicit reference centerline profiles")
    m.add_argument("--scenario", default="cavity")
    m.add_argument("--dt", type=float)
    m.add_argument("--n-steps", dest="n_steps", type=int)
    m.add_argument("--h", type=float, default=1.0 / 32.0)
    m.add_argument("--points", type=int, default=65)
    m.add_argument("--output-dir", dest="output_dir", default="compare")
    m.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except io.ConfigError as exc:
        _error("ConfigError", str(exc), exc.path)
    except json.JSONDecodeError as exc:
        _error("ConfigError", f"invalid JSON: {exc}")
    except (ValueError, RuntimeError, OSError) as exc:
        _error(type(exc).__name__, str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
