"""Command-line interface.

Subcommands: weights, solve, spectrum, exact, converge-space, converge-time,
maxprinciple, example1.  Exit codes: 0 pass, 1 failed assertion, 2
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from . import harness
from .config import Config
from .errors import ConfigError, FracflowError
from .femcore import Mesh1d, assemble_system, eigendecompose
from .harness import ExperimentConfig
from .quadweights import c_sequence, _c_recursion, generate_weights
from .reference import exact_linear, make_operator
from .stepper import SchemeSolver, make_reaction

logger = logging.getLogger("fracflow")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _load_experiment(path) -> ExperimentConfig:
    return ExperimentConfig.from_config(Config.from_file(path))


def _dump_matrices(system, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, mat in (("M", system.mass), ("K", system.stiffness)):
        lines = ["row,col,value"]
        n = mat.shape[0]
        for i in range(n):
            for j in range(n):
                lines.append(f"{i + 1},{j + 1},{harness.FLOAT_FMT % mat[i, j]}")
        (out / f"{name}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("wrote %s and %s", out / "M.csv", out / "K.csv")


def _assemble_from(cfg: ExperimentConfig):
    mesh = Mesh1d(cfg.a, cfg.b, cfg.nodes)
    return mesh, assemble_system(mesh, cfg.s)


def cmd_weights(args) -> int:
    w = generate_weights(args.alpha, args.tau, args.n)
    if 0.0 < args.alpha < 1.0:
        c_vals = c_sequence(args.alpha, args.n).c
    else:
        c_vals = _c_recursion(w.omega_tilde)
    harness.emit_weights_csv(w, c_vals, args.out, config={"n": args.n})
    logger.info("wrote %s", args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _load_experiment(args.config)
    mesh, system = _assemble_from(cfg)
    if args.dump_matrices:
        _dump_matrices(system, args.dump_matrices)
    eig = eigendecompose(system) if cfg.initial_kind == "mode" else None
    v = harness.make_initial(cfg.initial_kind, mesh, system, eig,
                             params=cfg.initial_params, seed=cfg.seed)
    n = max(1, round(cfg.t_final / cfg.tau))
    w = generate_weights(cfg.alpha, cfg.tau, n)
    reaction = make_reaction(cfg.reaction_kind, cfg.reaction_R)
    solver = SchemeSolver(system, cfg.frac_params(), w, reaction)
    traj = solver.run(v, n, energy_every=max(0, cfg.diag_every))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    flat = cfg.as_flat_dict()
    harness.emit_trajectory_csv(mesh, traj, out / "trajectory.csv", config=flat,
                                stride=cfg.trajectory_stride)
    harness.emit_diagnostics_csv(traj, out / "diagnostics.csv", config=flat)
    logger.info("wrote %s", out / "trajectory.csv")
    logger.info("wrote %s", out / "diagnostics.csv")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = _load_experiment(args.config)
    _, system = _assemble_from(cfg)
    if args.dump_matrices:
        _dump_matrices(system, args.dump_matrices)
    eig = eigendecompose(system)
    harness.emit_spectrum_csv(eig, args.out, config=cfg.as_flat_dict())
    logger.info("wrote %s", args.out)
    return EXIT_OK


def cmd_exact(args) -> int:
    cfg = _load_experiment(args.config)
    mesh, system = _assemble_from(cfg)
    eig = eigendecompose(system)
    op = make_operator(system, eig, cfg.frac_params())
    v = harness.make_initial(cfg.initial_kind, mesh, system, eig,
                             params=cfg.initial_params, seed=cfg.seed)
    u = exact_linear(op, args.t, v)
    flat = cfg.as_flat_dict()
    flat["t"] = args.t
    harness.emit_profile_csv(mesh, u, args.out, config=flat)
    logger.info("wrote %s", args.out)
    return EXIT_OK


def cmd_converge_space(args) -> int:
    cfg = _load_experiment(args.config)
    report = harness.spatial_rate_study(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness.emit_rate_csv(report, out / "rates_space.csv")
    logger.info(
        "spatial study: fitted %.4f vs theory %.4f (pass=%s)",
        report.fitted_order, report.theory_order, report.passed,
    )
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_converge_time(args) -> int:
    cfg = _load_experiment(args.config)
    report = harness.temporal_rate_study(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness.emit_rate_csv(report, out / "rates_time.csv")
    logger.info(
        "temporal study: fitted %.4f vs theory %.4f (pass=%s)",
        report.fitted_order, report.theory_order, report.passed,
    )
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_maxprinciple(args) -> int:
    cfg = _load_experiment(args.config)
    rows = harness.max_principle_sweep(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness.emit_sweep_csv(rows, out / "maxprinciple.csv", config=cfg.as_flat_dict())
    ok = all(r.passed for r in rows)
    for r in rows:
        logger.info("alpha=%g s=%g max|U|=%.15g pass=%s", r.alpha, r.s, r.max_linf, r.passed)
    return EXIT_OK if ok else EXIT_FAILED


EXAMPLE1_DEFAULTS = """
alpha = 1.0
s = 0.005
eps2 = 0.5
domain.a = -1.0
domain.b = 1.0
nodes = 3000
tau = 0.02
t_final = 50.0
reaction.kind = cubic
reaction.R = 0.5
initial.kind = step
initial.params = left=-0.5,right=0.5,split=0.0
output.diag_every = 25
output.stride = 250
"""


def cmd_example1(args) -> int:
    defaults = Config.from_text(EXAMPLE1_DEFAULTS, source="<example1 defaults>")
    if args.config:
        user = Config.from_file(args.config)
        defaults.entries.update(user.entries)
    cfg = ExperimentConfig.from_config(defaults)
    report = harness.example1(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    flat = cfg.as_flat_dict()
    harness.emit_example1_csv(report, out / "example1.csv", config=flat)
    mesh = Mesh1d(cfg.a, cfg.b, cfg.nodes)
    harness.emit_trajectory_csv(mesh, report.trajectory, out / "trajectory.csv",
                                config=flat, stride=cfg.trajectory_stride)
    harness.emit_diagnostics_csv(report.trajectory, out / "diagnostics.csv", config=flat)
    logger.info(
        "plateaus (%.5f, %.5f) vs targets (%.5f, %.5f): dev (%.2f%%, %.2f%%) pass=%s",
        report.plateau_pos, report.plateau_neg, report.target_pos, report.target_neg,
        100 * report.rel_dev_pos, 100 * report.rel_dev_neg, report.passed,
    )
    return EXIT_OK if report.passed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fracflow",
        description="Space-time fractional Allen-Cahn solver and experiment harness",
    )
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="emit convolution-quadrature weight table")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("solve", help="run the fully discrete scheme")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--dump-matrices", metavar="DIR")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("spectrum", help="emit generalized eigenvalues")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-matrices", metavar="DIR")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("exact", help="exact linear solution at a given time")
    p.add_argument("--config", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("converge-space", help="spatial convergence study")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_converge_space)

    p = sub.add_parser("converge-time", help="temporal convergence study")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_converge_time)

    p = sub.add_parser("maxprinciple", help="max-principle sweep over (alpha, s)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_maxprinciple)

    p = sub.add_parser("example1", help="equilibrium-shift experiment")
    p.add_argument("--config")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_example1)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except FracflowError as exc:
        logger.error("%s", exc)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
