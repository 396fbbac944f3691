"""Fully discrete scheme: convolution quadrature in time, P1 elements in space.

Each step solves

    (omega_0 M + eps2 K) U^n = M [ a_n U^0 - sum_{j=1}^n omega_j U^{n-j} + g(U^n) ]

with a_n = sum_{j<=n} omega_j, the nonlinearity evaluated nodally (group FE,
matching the vector form of the scheme), and the implicit g(U^n) resolved by
fixed-point iteration.  The iteration map has Lipschitz constant tau^alpha * B,
so the solver refuses to start unless tau^alpha * B < 1; one Cholesky
factorization of the step-independent matrix is reused across all steps and
iterations.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import energy as energy_mod
from .errors import FixedPointError, NonContractionError
from .femcore import FemSystem, mass_matvec
from .quadweights import CqWeights

logger = logging.getLogger(__name__)

FP_TOL_DEFAULT = 1e-12
FP_MAX_ITER = 100


@dataclass(frozen=True)
class FracParams:
    """Problem dials: time order alpha, space order s, interface eps2, horizon T."""

    alpha: float
    s: float
    eps2: float
    T: float
    R: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must be in (0, 1), got {self.s}")
        if not self.eps2 > 0.0:
            raise ValueError(f"eps2 must be > 0, got {self.eps2}")
        if not self.T > 0.0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if not self.R > 0.0:
            raise ValueError(f"R must be > 0, got {self.R}")


@dataclass(frozen=True)
class ReactionTerm:
    """C^2 source g with reported bound B on |g|, |g'|, |g''|.

    kind "truncated-cubic" carries a genuine global bound; kind "cubic" is the
    raw double-well force whose B only holds on [-(1+2R), 1+2R] (monitored at
    runtime); kind "zero"/"custom" as named.
    """

    kind: str
    R: float
    B: float
    g: Callable[[np.ndarray], np.ndarray]
    g1: Callable[[np.ndarray], np.ndarray]
    g2: Callable[[np.ndarray], np.ndarray]


def _quintic_blend_coeffs(R: float):
    """Hermite data of the odd blend from the cubic to a constant."""
    x0 = 1.0 + R
    return x0, 1.0 + 2.0 * R, x0 - x0 ** 3, 1.0 - 3.0 * x0 ** 2, -6.0 * x0


def _hermite_quintic(u, w, v0, d0, a0, v1, d1, a1, deriv=0):
    """Quintic on [0,1] (argument scale w) with endpoint values/derivatives.

    deriv in {0, 1, 2} returns p, dp/dx or d2p/dx2 where x = w * u.
    """
    u2, u3 = u * u, u ** 3
    u4, u5 = u3 * u, u3 * u2
    if deriv == 0:
        H = (
            1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5,
            u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5,
            0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5,
            10.0 * u3 - 15.0 * u4 + 6.0 * u5,
            -4.0 * u3 + 7.0 * u4 - 3.0 * u5,
            0.5 * u3 - u4 + 0.5 * u5,
        )
        scale = 1.0
    elif deriv == 1:
        H = (
            -30.0 * u2 + 60.0 * u3 - 30.0 * u4,
            1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4,
            u - 4.5 * u2 + 6.0 * u3 - 2.5 * u4,
            30.0 * u2 - 60.0 * u3 + 30.0 * u4,
            -12.0 * u2 + 28.0 * u3 - 15.0 * u4,
            1.5 * u2 - 4.0 * u3 + 2.5 * u4,
        )
        scale = 1.0 / w
    else:
        H = (
            -60.0 * u + 180.0 * u2 - 120.0 * u3,
            -36.0 * u + 96.0 * u2 - 60.0 * u3,
            1.0 - 9.0 * u + 18.0 * u2 - 10.0 * u3,
            60.0 * u - 180.0 * u2 + 120.0 * u3,
            -24.0 * u + 84.0 * u2 - 60.0 * u3,
            3.0 * u - 12.0 * u2 + 10.0 * u3,
        )
        scale = 1.0 / (w * w)
    coeffs = (v0, w * d0, w * w * a0, v1, w * d1, w * w * a1)
    return scale * sum(c * Hk for c, Hk in zip(coeffs, H))


def make_reaction(kind: str, R: float = 0.5, fns=None, B: float | None = None) -> ReactionTerm:
    """Build the reaction term; kinds: truncated-cubic | cubic | zero | custom."""
    if kind not in ("truncated-cubic", "cubic", "zero", "custom"):
        raise ValueError(f"unknown reaction kind {kind!r}")
    if kind != "zero" and not R > 0.0:
        raise ValueError(f"R must be > 0, got {R}")

    if kind == "zero":
        zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
        return ReactionTerm("zero", R, 0.0, zero, zero, zero)

    if kind == "custom":
        if fns is None or B is None:
            raise ValueError("custom reaction needs fns=(g, g1, g2) and B")
        return ReactionTerm("custom", R, B, *fns)

    f = lambda x: x - x ** 3
    f1 = lambda x: 1.0 - 3.0 * x * x
    f2 = lambda x: -6.0 * x

    if kind == "cubic":
        grid = np.linspace(0.0, 1.0 + 2.0 * R, 20001)
        B_val = max(np.abs(f(grid)).max(), np.abs(f1(grid)).max(), np.abs(f2(grid)).max())
        return ReactionTerm("cubic", R, float(B_val), f, f1, f2)

    x0, x1, v0, d0, a0 = _quintic_blend_coeffs(R)

    def piecewise(x, cubic, blend, const):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        sgn = np.where(x >= 0.0, 1.0, -1.0)
        out = np.where(ax <= x0, cubic(x), 0.0)
        mid = (ax > x0) & (ax < x1)
        if np.any(mid):
            u = (ax[mid] - x0) / R
            out = out.copy()
            out[mid] = sgn[mid] * blend(u)
        out = np.where(ax >= x1, sgn * const, out)
        return out

    def blend_val(u):
        return _hermite_quintic(u, R, v0, d0, a0, v0, 0.0, 0.0, deriv=0)

    def blend_d1(u):
        return _hermite_quintic(u, R, v0, d0, a0, v0, 0.0, 0.0, deriv=1)

    def blend_d2(u):
        return _hermite_quintic(u, R, v0, d0, a0, v0, 0.0, 0.0, deriv=2)

    g = lambda x: piecewise(x, f, blend_val, v0)
    g1 = lambda x: piecewise(np.abs(np.asarray(x, dtype=float)), f1, blend_d1, 0.0)
    g2 = lambda x: np.where(
        np.asarray(x, dtype=float) >= 0.0, 1.0, -1.0
    ) * piecewise(np.abs(np.asarray(x, dtype=float)), f2, blend_d2, 0.0)

    u_grid = np.linspace(0.0, 1.0, 4001)
    xb = np.linspace(0.0, x0, 4001)
    B_val = max(
        np.abs(f(xb)).max(),
        np.abs(f1(xb)).max(),
        np.abs(f2(xb)).max(),
        np.abs(blend_val(u_grid)).max(),
        np.abs(blend_d1(u_grid)).max(),
        np.abs(blend_d2(u_grid)).max(),
    )
    return ReactionTerm("truncated-cubic", R, float(B_val), g, g1, g2)


@dataclass
class Trajectory:
    tau: float
    times: np.ndarray
    states: np.ndarray  # (n_steps + 1, n_nodes)
    fixed_point_iters: np.ndarray
    linf_history: np.ndarray
    residuals: np.ndarray
    energies: np.ndarray | None = None  # columns fs, dirichlet, potential
    energy_stride: int = 0


class SchemeSolver:
    """Factorization and per-step fixed point for one (system, params, weights)."""

    def __init__(
        self,
        system: FemSystem,
        params: FracParams,
        weights: CqWeights,
        reaction: ReactionTerm,
        fp_tol: float = FP_TOL_DEFAULT,
        fp_max_iter: int = FP_MAX_ITER,
    ):
        contraction = weights.tau ** params.alpha * reaction.B
        if contraction >= 1.0:
            raise NonContractionError(
                f"tau^alpha * B = {contraction:.4g} >= 1: no unique per-step solution "
                f"guaranteed; reduce tau below B^(-1/alpha) = {reaction.B ** (-1.0 / params.alpha):.4g}"
            )
        self.system = system
        self.params = params
        self.weights = weights
        self.reaction = reaction
        self.fp_tol = fp_tol
        self.fp_max_iter = fp_max_iter
        self.contraction = contraction
        C = weights.omega[0] * system.mass + params.eps2 * system.stiffness
        self._factor = cho_factor(C)
        self._C = C
        self._a = np.cumsum(weights.omega)

    def _m_norm(self, x: np.ndarray) -> float:
        return math.sqrt(max(float(x @ mass_matvec(self.system.mesh, x)), 0.0))

    def step(self, history: np.ndarray):
        """Advance one step given states (U^0 ... U^{n-1}); returns (U^n, iters, residual)."""
        hist = np.asarray(history, dtype=float)
        n = hist.shape[0]  # computing U^n
        if n < 1:
            raise ValueError("history must contain at least U^0")
        w = self.weights.omega
        if n > self.weights.n_steps:
            raise ValueError(f"step {n} exceeds the {self.weights.n_steps} generated weights")
        base = self._a[n] * hist[0] - w[n:0:-1] @ hist
        mesh = self.system.mesh
        U = hist[-1].copy()
        iters = 0
        for iters in range(1, self.fp_max_iter + 1):
            rhs = mass_matvec(mesh, base + self.reaction.g(U))
            U_new = cho_solve(self._factor, rhs)
            inc = self._m_norm(U_new - U)
            U = U_new
            if inc <= self.fp_tol * max(self._m_norm(U), 1e-300):
                break
        else:
            raise FixedPointError(
                f"fixed point did not reach {self.fp_tol} in {self.fp_max_iter} iterations",
                step=n,
            )
        rhs = mass_matvec(mesh, base + self.reaction.g(U))
        residual = float(np.linalg.norm(self._C @ U - rhs) / max(np.linalg.norm(rhs), 1e-300))
        return U, iters, residual

    def run(self, v: np.ndarray, n_steps: int, energy_every: int = 0) -> Trajectory:
        v = np.asarray(v, dtype=float)
        n_nodes = self.system.mesh.n_nodes
        if v.shape[0] != n_nodes:
            raise ValueError(f"initial vector has {v.shape[0]} entries, mesh has {n_nodes}")
        if n_steps > self.weights.n_steps:
            raise ValueError("n_steps exceeds the generated weights")
        tau = self.weights.tau
        states = np.empty((n_steps + 1, n_nodes))
        states[0] = v
        iters = np.zeros(n_steps, dtype=int)
        residuals = np.zeros(n_steps)
        linf = np.empty(n_steps + 1)
        linf[0] = np.abs(v).max()
        n_energy = (n_steps // energy_every + 1) if energy_every else 0
        energies = np.empty((n_energy, 3)) if energy_every else None
        if energy_every:
            rep = energy_mod.evaluate_energy(self.system, self.params, v)
            energies[0] = (rep.fs, rep.dirichlet, rep.potential)
        range_limit = 1.0 + 2.0 * self.reaction.R
        prev_fs = energies[0][0] if energy_every else None
        for n in range(1, n_steps + 1):
            try:
                U, it, res = self.step(states[:n])
            except FixedPointError as exc:
                exc.step = n
                raise
            states[n] = U
            iters[n - 1] = it
            residuals[n - 1] = res
            linf[n] = np.abs(U).max()
            if self.reaction.kind == "cubic" and linf[n] > range_limit:
                logger.warning(
                    "step %d: |U|_inf = %.4g left the cubic operating range %.4g; "
                    "the reported bound B no longer applies",
                    n, linf[n], range_limit,
                )
            if energy_every and n % energy_every == 0:
                rep = energy_mod.evaluate_energy(self.system, self.params, U)
                energies[n // energy_every] = (rep.fs, rep.dirichlet, rep.potential)
                if self.params.alpha == 1.0 and rep.fs > prev_fs * (1.0 + 1e-10) + 1e-14:
                    logger.warning(
                        "free energy increased at step %d: %.15g -> %.15g "
                        "(diagnostic only; decay is not proven for the discrete scheme)",
                        n, prev_fs, rep.fs,
                    )
                prev_fs = rep.fs
        return Trajectory(
            tau=tau,
            times=tau * np.arange(n_steps + 1),
            states=states,
            fixed_point_iters=iters,
            linf_history=linf,
            residuals=residuals,
            energies=energies,
            energy_stride=energy_every,
        )


def step(system, params, weights, reaction, history):
    """One-shot step; see SchemeSolver.step for the scheme."""
    return SchemeSolver(system, params, weights, reaction).step(history)[0]


def run(system, params, weights, reaction, v, n_steps, **kwargs) -> Trajectory:
    return SchemeSolver(system, params, weights, reaction).run(v, n_steps, **kwargs)
