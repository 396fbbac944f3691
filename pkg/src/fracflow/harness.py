"""Experiment orchestration: convergence studies, max-principle sweeps,
the equilibrium-shift experiment, and CSV emission.

Error norms are L2 at a fixed evaluation time t*, matching the left side of
the fully discrete error bound; spatial studies run the linear problem
against the time-exact spectral solution on a finer nested reference mesh,
temporal studies against the spectral solution on the same mesh (pure time
error), nonlinear temporal studies against a Richardson reference at
tau_min / 16.  All runs are sequential and seeded: identical config gives
byte-identical CSVs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import energy as energy_mod
from .config import Config
from .errors import ConfigError
from .femcore import (
    Mesh1d,
    assemble_system,
    eigendecompose,
    l2_project,
    mass_matvec,
)
from .quadweights import generate_weights
from .reference import (
    exact_linear,
    make_operator,
    prolong_nodal,
    refine_mesh,
    richardson_reference,
)
from .stepper import FracParams, SchemeSolver, Trajectory, make_reaction

logger = logging.getLogger(__name__)

FLOAT_FMT = "%.17g"


# --- seeded initial data ---------------------------------------------------

LCG_MULT = 6364136223846793005
LCG_INC = 1442695040888963407
LCG_MASK = (1 << 64) - 1


def lcg_uniform(seed: int, n: int) -> np.ndarray:
    """n uniforms in [0, 1) from the documented 64-bit LCG.

    state <- (6364136223846793005 * state + 1442695040888963407) mod 2^64,
    output = top 53 bits / 2^53.  Stated here so other implementations can
    reproduce seeded runs bit-for-bit.
    """
    state = seed & LCG_MASK
    out = np.empty(n)
    for i in range(n):
        state = (LCG_MULT * state + LCG_INC) & LCG_MASK
        out[i] = (state >> 11) / float(1 << 53)
    return out


def random_nodal(seed: int, n: int) -> np.ndarray:
    """Seeded random nodal values, uniform in [-1, 1]."""
    return 2.0 * lcg_uniform(seed, n) - 1.0


def make_initial(kind: str, mesh: Mesh1d, system=None, eig=None, params=None, seed=0):
    """Initial coefficient vector for kinds step | mode | random | file.

    params is a small dict: step takes left/right/split, mode takes k/scale,
    file takes path (one nodal value per line).
    """
    params = dict(params or {})
    if kind == "step":
        left = float(params.get("left", -0.5))
        right = float(params.get("right", 0.5))
        split = float(params.get("split", 0.5 * (mesh.a + mesh.b)))
        if system is None:
            raise ConfigError("step initial data needs the assembled system")
        f = lambda x: left if x < split else right
        return l2_project(mesh, system.mass, f, breakpoints=[split])
    if kind == "mode":
        if eig is None:
            raise ConfigError("mode initial data needs the eigendecomposition")
        k = int(params.get("k", 1))
        if not 1 <= k <= mesh.n_nodes:
            raise ConfigError(f"mode index k = {k} out of range 1..{mesh.n_nodes}")
        v = eig.modes[:, k - 1]
        scale = params.get("scale")
        if scale is not None:
            v = float(scale) * v / np.abs(v).max()
        return v.copy()
    if kind == "random":
        return random_nodal(seed, mesh.n_nodes)
    if kind == "file":
        path = params.get("path")
        if not path:
            raise ConfigError("file initial data needs initial.params path=...")
        vals = np.loadtxt(path, dtype=float).ravel()
        if vals.shape[0] != mesh.n_nodes:
            raise ConfigError(
                f"{path}: {vals.shape[0]} values for a mesh with {mesh.n_nodes} nodes"
            )
        return vals
    raise ConfigError(f"unknown initial kind {kind!r}")


def parse_kv_params(text: str | None) -> dict:
    """Parse 'k=1,scale=0.5' style initial.params values."""
    out = {}
    if not text:
        return out
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "=" not in tok:
            raise ConfigError(f"initial.params token {tok!r} is not key=value")
        k, v = tok.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# --- rate reports ----------------------------------------------------------


@dataclass
class RateReport:
    axis: str  # "space" | "time"
    levels: list  # [(step, error)], step strictly decreasing
    fitted_order: float
    theory_order: float
    tolerance: float
    passed: bool
    fit_drop_coarsest: float = math.nan
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.levels) < 3:
            raise ValueError("a rate report needs at least 3 levels")
        steps = [s for s, _ in self.levels]
        errors = [e for _, e in self.levels]
        if any(e <= 0.0 for e in errors):
            raise ValueError("errors must be strictly positive")
        if any(b >= a for a, b in zip(steps, steps[1:])):
            raise ValueError("levels must be strictly decreasing in step size")


def fit_order(steps, errors) -> float:
    """Least-squares slope of log error against log step."""
    return float(np.polyfit(np.log(np.asarray(steps, dtype=float)),
                            np.log(np.asarray(errors, dtype=float)), 1)[0])


def build_rate_report(axis, steps, errors, theory_order, tolerance, config) -> RateReport:
    if len(set(steps)) != len(steps):
        raise ValueError("duplicate refinement levels make the study invalid")
    fitted = fit_order(steps, errors)
    drop = fit_order(steps[1:], errors[1:]) if len(steps) >= 4 else math.nan
    return RateReport(
        axis=axis,
        levels=list(zip(steps, errors)),
        fitted_order=fitted,
        theory_order=theory_order,
        tolerance=tolerance,
        passed=abs(fitted - theory_order) <= tolerance,
        fit_drop_coarsest=drop,
        config=dict(config),
    )


# --- experiment configuration ----------------------------------------------


@dataclass
class ExperimentConfig:
    """Shared dial set for the studies; see README for the file keys."""

    alpha: float = 0.7
    s: float = 0.5
    eps2: float = 1.0
    a: float = 0.0
    b: float = 1.0
    nodes: int = 511
    tau: float = 0.01
    t_final: float = 1.0
    tstar: float | None = None
    reaction_kind: str = "truncated-cubic"
    reaction_R: float = 0.5
    initial_kind: str = "mode"
    initial_params: dict = field(default_factory=dict)
    seed: int = 42
    mesh_ladder: list = field(default_factory=lambda: [63, 127, 255, 511, 1023])
    tau_ladder: list = field(default_factory=lambda: [1 / 20, 1 / 40, 1 / 80, 1 / 160, 1 / 320])
    ref_factor: int = 4
    rate_tolerance: float = 0.2
    alphas: list = field(default_factory=lambda: [0.4, 0.7, 1.0])
    esses: list = field(default_factory=lambda: [0.25, 0.5, 0.75])
    diag_every: int = 1
    trajectory_stride: int = 1

    def __post_init__(self):
        if self.tstar is None:
            self.tstar = self.t_final
        if not 0.0 < self.tstar <= self.t_final:
            raise ConfigError(f"tstar = {self.tstar} must lie in (0, t_final]")
        if any(b >= a for a, b in zip(self.tau_ladder, self.tau_ladder[1:])):
            raise ConfigError("tau ladder must decrease strictly")
        if any(b <= a for a, b in zip(self.mesh_ladder, self.mesh_ladder[1:])):
            raise ConfigError("mesh ladder must increase strictly")

    @classmethod
    def from_config(cls, cfg: Config) -> "ExperimentConfig":
        kw = {}
        mapping = [
            ("alpha", "alpha", cfg.get_float),
            ("s", "s", cfg.get_float),
            ("eps2", "eps2", cfg.get_float),
            ("a", "domain.a", cfg.get_float),
            ("b", "domain.b", cfg.get_float),
            ("nodes", "nodes", cfg.get_int),
            ("tau", "tau", cfg.get_float),
            ("t_final", "t_final", cfg.get_float),
            ("tstar", "tstar", cfg.get_float),
            ("reaction_kind", "reaction.kind", cfg.get_str),
            ("reaction_R", "reaction.R", cfg.get_float),
            ("initial_kind", "initial.kind", cfg.get_str),
            ("seed", "seed", cfg.get_int),
            ("mesh_ladder", "ladder.nodes", cfg.get_ints),
            ("tau_ladder", "ladder.taus", cfg.get_floats),
            ("ref_factor", "ref.factor", cfg.get_int),
            ("rate_tolerance", "rate.tolerance", cfg.get_float),
            ("alphas", "grid.alphas", cfg.get_floats),
            ("esses", "grid.esses", cfg.get_floats),
            ("diag_every", "output.diag_every", cfg.get_int),
            ("trajectory_stride", "output.stride", cfg.get_int),
        ]
        for attr, key, getter in mapping:
            val = getter(key)
            if val is not None:
                kw[attr] = val
        if cfg.has("initial.params"):
            kw["initial_params"] = parse_kv_params(cfg.get_str("initial.params"))
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def as_flat_dict(self) -> dict:
        out = {
            "alpha": self.alpha,
            "s": self.s,
            "eps2": self.eps2,
            "domain.a": self.a,
            "domain.b": self.b,
            "nodes": self.nodes,
            "tau": self.tau,
            "t_final": self.t_final,
            "tstar": self.tstar,
            "reaction.kind": self.reaction_kind,
            "reaction.R": self.reaction_R,
            "initial.kind": self.initial_kind,
            "seed": self.seed,
        }
        if self.initial_params:
            out["initial.params"] = ",".join(f"{k}={v}" for k, v in self.initial_params.items())
        return out

    def frac_params(self, alpha=None, s=None) -> FracParams:
        return FracParams(
            alpha=self.alpha if alpha is None else alpha,
            s=self.s if s is None else s,
            eps2=self.eps2,
            T=self.t_final,
            R=self.reaction_R,
        )


def _l2_error_on(mesh: Mesh1d, d: np.ndarray) -> float:
    return math.sqrt(max(float(d @ mass_matvec(mesh, d)), 0.0))


# --- studies ----------------------------------------------------------------


def spatial_rate_study(cfg: ExperimentConfig) -> RateReport:
    """Linear-problem spatial rates vs exact_linear on a finer nested mesh."""
    if len(cfg.mesh_ladder) < 3:
        raise ValueError("need at least 3 mesh levels")
    tstar = cfg.tstar
    ref_mesh = refine_mesh(Mesh1d(cfg.a, cfg.b, cfg.mesh_ladder[-1]), cfg.ref_factor)
    logger.info("spatial study: reference mesh %d nodes", ref_mesh.n_nodes)

    def solve_level(mesh: Mesh1d) -> np.ndarray:
        system = assemble_system(mesh, cfg.s)
        eig = eigendecompose(system)
        op = make_operator(system, eig, cfg.frac_params())
        v = l2_project(mesh, system.mass, _smooth_initial(cfg))
        return exact_linear(op, tstar, v)

    u_ref = solve_level(ref_mesh)
    steps, errors = [], []
    for n_nodes in cfg.mesh_ladder:
        mesh = Mesh1d(cfg.a, cfg.b, n_nodes)
        u_h = solve_level(mesh)
        d = prolong_nodal(mesh, ref_mesh, u_h) - u_ref
        steps.append(mesh.h)
        errors.append(_l2_error_on(ref_mesh, d))
        logger.info("  nodes=%d h=%.4g error=%.6g", n_nodes, mesh.h, errors[-1])
    theory = min(2.0 * cfg.s, 1.0)
    return build_rate_report("space", steps, errors, theory, cfg.rate_tolerance, cfg.as_flat_dict())


def _smooth_initial(cfg: ExperimentConfig):
    L = cfg.b - cfg.a
    return lambda x: math.sin(math.pi * (x - cfg.a) / L)


def temporal_rate_study(cfg: ExperimentConfig) -> RateReport:
    """Temporal rates on a fixed mesh.

    Linear problems (reaction zero) compare against exact_linear on the same
    mesh (pure CQ error); nonlinear ones against a Richardson reference at
    tau_min / 16.
    """
    if len(cfg.tau_ladder) < 3:
        raise ValueError("need at least 3 tau levels")
    mesh = Mesh1d(cfg.a, cfg.b, cfg.nodes)
    system = assemble_system(mesh, cfg.s)
    eig = eigendecompose(system)
    params = cfg.frac_params()
    reaction = make_reaction(cfg.reaction_kind, cfg.reaction_R)
    v = make_initial(cfg.initial_kind, mesh, system, eig,
                     params=cfg.initial_params, seed=cfg.seed)
    tstar = cfg.tstar

    if reaction.kind == "zero":
        op = make_operator(system, eig, params)
        u_ref = exact_linear(op, tstar, v)
    else:
        tau_fine = cfg.tau_ladder[-1] / 16.0
        n_fine = _aligned_steps(tstar, tau_fine)
        ref = richardson_reference(system, params, reaction, v, tstar / n_fine, n_fine)
        u_ref = ref.at(tstar, mesh)

    steps, errors = [], []
    for tau in cfg.tau_ladder:
        n = _aligned_steps(tstar, tau)
        tau_eff = tstar / n
        w = generate_weights(params.alpha, tau_eff, n)
        traj = SchemeSolver(system, params, w, reaction).run(v, n)
        d = traj.states[-1] - u_ref
        steps.append(tau_eff)
        errors.append(_l2_error_on(mesh, d))
        logger.info("  tau=%.5g error=%.6g", tau_eff, errors[-1])
    return build_rate_report("time", steps, errors, 1.0, cfg.rate_tolerance, cfg.as_flat_dict())


def _aligned_steps(tstar: float, tau: float) -> int:
    n = round(tstar / tau)
    if n < 1 or abs(n * tau - tstar) > 1e-9 * max(1.0, tstar):
        raise ConfigError(f"tau = {tau} does not divide the evaluation time {tstar}")
    return n


@dataclass
class SweepRow:
    alpha: float
    s: float
    max_linf: float
    passed: bool


def max_principle_sweep(cfg: ExperimentConfig, bound_excess: float = 1e-10) -> list[SweepRow]:
    """max_n ||U^n||_inf over the (alpha, s) grid with seeded |v| <= 1 data."""
    rows = []
    for alpha in cfg.alphas:
        for s in cfg.esses:
            mesh = Mesh1d(cfg.a, cfg.b, cfg.nodes)
            system = assemble_system(mesh, s)
            params = cfg.frac_params(alpha=alpha, s=s)
            reaction = make_reaction(cfg.reaction_kind, cfg.reaction_R)
            v = random_nodal(cfg.seed, mesh.n_nodes)
            n = max(1, round(cfg.t_final / cfg.tau))
            w = generate_weights(alpha, cfg.tau, n)
            traj = SchemeSolver(system, params, w, reaction).run(v, n)
            m = float(traj.linf_history.max())
            rows.append(SweepRow(alpha, s, m, m <= 1.0 + bound_excess))
            logger.info("  alpha=%.3g s=%.3g max|U|=%.15g", alpha, s, m)
    return rows


@dataclass
class Example1Report:
    plateau_pos: float
    plateau_neg: float
    target_pos: float
    target_neg: float
    rel_dev_pos: float
    rel_dev_neg: float
    passed: bool
    trajectory: Trajectory
    energy: energy_mod.EnergyReport


def example1(cfg: ExperimentConfig, plateau_rel_tol: float = 0.05) -> Example1Report:
    """Equilibrium-shift experiment: step datum, small s, plateaus vs +-sqrt(1-eps2)."""
    if not 0.0 < cfg.eps2 < 1.0:
        raise ConfigError(f"the equilibrium prediction needs eps2 in (0, 1), got {cfg.eps2}")
    mesh = Mesh1d(cfg.a, cfg.b, cfg.nodes)
    system = assemble_system(mesh, cfg.s)
    params = cfg.frac_params()
    reaction = make_reaction(cfg.reaction_kind, cfg.reaction_R)
    v = make_initial(cfg.initial_kind, mesh, system, params=cfg.initial_params, seed=cfg.seed)
    n = max(1, round(cfg.t_final / cfg.tau))
    w = generate_weights(params.alpha, cfg.tau, n)
    traj = SchemeSolver(system, params, w, reaction).run(
        v, n, energy_every=cfg.diag_every if cfg.diag_every > 0 else 0
    )
    final = traj.states[-1]
    pos, neg = energy_mod.plateau_detect(mesh, final)
    target_pos, target_neg = energy_mod.equilibrium_values(cfg.eps2)
    dev_pos = abs(pos - target_pos) / abs(target_pos)
    dev_neg = abs(neg - target_neg) / abs(target_neg)
    rep = energy_mod.evaluate_energy(system, params, final)
    rep.plateau_pos, rep.plateau_neg = pos, neg
    return Example1Report(
        plateau_pos=pos,
        plateau_neg=neg,
        target_pos=target_pos,
        target_neg=target_neg,
        rel_dev_pos=dev_pos,
        rel_dev_neg=dev_neg,
        passed=dev_pos <= plateau_rel_tol and dev_neg <= plateau_rel_tol,
        trajectory=traj,
        energy=rep,
    )


# --- CSV emission ------------------------------------------------------------


def _comment_block(config: dict, extra: dict) -> list[str]:
    lines = [f"# {k} = {v}" for k, v in config.items()]
    lines += [f"# {k} = {v}" for k, v in extra.items()]
    return lines


def _write(path, lines) -> None:
    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def emit_rate_csv(report: RateReport, path) -> None:
    """Schema: provenance comments, then `level,step,error` rows."""
    extra = {
        "axis": report.axis,
        "fitted_order": FLOAT_FMT % report.fitted_order,
        "theory_order": FLOAT_FMT % report.theory_order,
        "tolerance": FLOAT_FMT % report.tolerance,
        "fit_drop_coarsest": FLOAT_FMT % report.fit_drop_coarsest,
        "pass": str(report.passed).lower(),
    }
    lines = _comment_block(report.config, extra)
    lines.append("level,step,error")
    for lvl, (step, err) in enumerate(report.levels):
        lines.append(f"{lvl},{FLOAT_FMT % step},{FLOAT_FMT % err}")
    _write(path, lines)


def parse_rate_csv(path) -> RateReport:
    """Inverse of emit_rate_csv (round-trip safe at 17 significant digits)."""
    meta, rows = {}, []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "=" in line:
                k, v = line[1:].split("=", 1)
                meta[k.strip()] = v.strip()
            continue
        if line.startswith("level,"):
            continue
        lvl, step, err = line.split(",")
        rows.append((float(step), float(err)))
    extra_keys = {"axis", "fitted_order", "theory_order", "tolerance", "fit_drop_coarsest", "pass"}
    return RateReport(
        axis=meta["axis"],
        levels=rows,
        fitted_order=float(meta["fitted_order"]),
        theory_order=float(meta["theory_order"]),
        tolerance=float(meta["tolerance"]),
        passed=meta["pass"] == "true",
        fit_drop_coarsest=float(meta["fit_drop_coarsest"]),
        config={k: v for k, v in meta.items() if k not in extra_keys},
    )


def emit_weights_csv(weights, c_vals, path, config=None) -> None:
    """Schema: `j,omega,omega_tilde,a_n,c_n`."""
    a = weights.partial_sums()
    lines = _comment_block(config or {}, {"alpha": weights.alpha, "tau": weights.tau})
    lines.append("j,omega,omega_tilde,a_n,c_n")
    for j in range(weights.n_steps + 1):
        vals = ",".join(
            FLOAT_FMT % x
            for x in (weights.omega[j], weights.omega_tilde[j], a[j], c_vals[j])
        )
        lines.append(f"{j},{vals}")
    _write(path, lines)


def emit_trajectory_csv(mesh: Mesh1d, traj: Trajectory, path, config=None, stride: int = 1) -> None:
    """Schema: `t,node,value`, node is the 1-based interior index."""
    lines = _comment_block(config or {}, {"stride": stride})
    lines.append("t,node,value")
    idx = list(range(0, len(traj.times), max(1, stride)))
    if idx[-1] != len(traj.times) - 1:
        idx.append(len(traj.times) - 1)
    for n in idx:
        t = traj.times[n]
        for i in range(mesh.n_nodes):
            lines.append(f"{FLOAT_FMT % t},{i + 1},{FLOAT_FMT % traj.states[n, i]}")
    _write(path, lines)


def emit_diagnostics_csv(traj: Trajectory, path, config=None) -> None:
    """Schema: `n,t,linf,energy,fp_iters,dirichlet,potential` (energy = F_s)."""
    lines = _comment_block(config or {}, {})
    lines.append("n,t,linf,energy,fp_iters,dirichlet,potential")
    stride = traj.energy_stride
    for n in range(len(traj.times)):
        has_energy = stride and n % stride == 0
        fs, diri, pot = (traj.energies[n // stride] if has_energy else (math.nan,) * 3)
        iters = traj.fixed_point_iters[n - 1] if n >= 1 else 0
        lines.append(
            f"{n},{FLOAT_FMT % traj.times[n]},{FLOAT_FMT % traj.linf_history[n]},"
            f"{FLOAT_FMT % fs},{iters},{FLOAT_FMT % diri},{FLOAT_FMT % pot}"
        )
    _write(path, lines)


def emit_sweep_csv(rows: list[SweepRow], path, config=None) -> None:
    """Schema: `alpha,s,max_linf,pass`."""
    lines = _comment_block(config or {}, {})
    lines.append("alpha,s,max_linf,pass")
    for r in rows:
        lines.append(
            f"{FLOAT_FMT % r.alpha},{FLOAT_FMT % r.s},{FLOAT_FMT % r.max_linf},"
            f"{str(r.passed).lower()}"
        )
    _write(path, lines)


def emit_spectrum_csv(eig, path, config=None) -> None:
    """Schema: `k,lambda`."""
    lines = _comment_block(config or {}, {})
    lines.append("k,lambda")
    for k, lam in enumerate(eig.lambdas, start=1):
        lines.append(f"{k},{FLOAT_FMT % lam}")
    _write(path, lines)


def emit_profile_csv(mesh: Mesh1d, values: np.ndarray, path, config=None) -> None:
    """Schema: `node,x,value` for a single nodal profile."""
    lines = _comment_block(config or {}, {})
    lines.append("node,x,value")
    for i, (x, v) in enumerate(zip(mesh.nodes, values), start=1):
        lines.append(f"{i},{FLOAT_FMT % x},{FLOAT_FMT % v}")
    _write(path, lines)


def emit_example1_csv(report: Example1Report, path, config=None) -> None:
    """Schema: one row of plateau metrics."""
    lines = _comment_block(config or {}, {})
    lines.append("plateau_pos,plateau_neg,target_pos,target_neg,rel_dev_pos,rel_dev_neg,pass")
    r = report
    lines.append(
        ",".join(FLOAT_FMT % v for v in (r.plateau_pos, r.plateau_neg, r.target_pos,
                                         r.target_neg, r.rel_dev_pos, r.rel_dev_neg))
        + f",{str(r.passed).lower()}"
    )
    _write(path, lines)
