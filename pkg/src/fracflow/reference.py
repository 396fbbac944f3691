"""Discrete spectral solution operators and exact references.

Built on the generalized eigenpairs (lambda_k, phi_k) of (K, M): with eps2
folded into the eigenvalues,

    E_h(t) v = sum_k E_{alpha,1}(-eps2 lambda_k t^alpha) (v, phi_k)_M phi_k,
    F_h(t) v = sum_k t^{alpha-1} E_{alpha,alpha}(-eps2 lambda_k t^alpha) (...) phi_k,

so the homogeneous solution E_h(t) v_h is exact in time on X_h and anchors
every convergence study.  For measurements that lack a closed form the module
provides fine-resolution stepper references on nested grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonNestedGridError
from .femcore import EigenDecomposition, FemSystem, Mesh1d
from .special import MlParams, mittag_leffler
from .stepper import FracParams, ReactionTerm, SchemeSolver, Trajectory
from .quadweights import generate_weights


@dataclass(frozen=True)
class SpectralOperator:
    eig: EigenDecomposition
    mass: np.ndarray
    eps2: float
    alpha: float

    def modal_coefficients(self, v: np.ndarray) -> np.ndarray:
        """(v, phi_k)_M for all modes."""
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.mass.shape[0]:
            raise ValueError(f"dimension mismatch: {v.shape[0]} vs {self.mass.shape[0]}")
        return self.eig.modes.T @ (self.mass @ v)


def make_operator(system: FemSystem, eig: EigenDecomposition, params: FracParams) -> SpectralOperator:
    return SpectralOperator(eig, system.mass, params.eps2, params.alpha)


def _modal_apply(op: SpectralOperator, v: np.ndarray, factors: np.ndarray) -> np.ndarray:
    return op.eig.modes @ (factors * op.modal_coefficients(v))


def apply_E(op: SpectralOperator, t: float, v: np.ndarray) -> np.ndarray:
    """Propagator: E_{alpha,1}(-eps2 lambda_k t^alpha) on each mode."""
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    p = MlParams(op.alpha, 1.0)
    ta = t ** op.alpha
    factors = np.array([mittag_leffler(p, -op.eps2 * lam * ta) for lam in op.eig.lambdas])
    return _modal_apply(op, v, factors)


def apply_F(op: SpectralOperator, t: float, v: np.ndarray) -> np.ndarray:
    """Duhamel kernel: t^{alpha-1} E_{alpha,alpha}(-eps2 lambda_k t^alpha)."""
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    p = MlParams(op.alpha, op.alpha)
    ta = t ** op.alpha
    factors = t ** (op.alpha - 1.0) * np.array(
        [mittag_leffler(p, -op.eps2 * lam * ta) for lam in op.eig.lambdas]
    )
    return _modal_apply(op, v, factors)


def exact_linear(op: SpectralOperator, t: float, v: np.ndarray) -> np.ndarray:
    """Exact solution of the homogeneous problem on X_h (alias of apply_E)."""
    return apply_E(op, t, v)


def exact_constant_source(op: SpectralOperator, t: float, f: np.ndarray) -> np.ndarray:
    """Mild solution with v = 0 and time-constant source f.

    Modal factors t^alpha E_{alpha,alpha+1}(-eps2 lambda_k t^alpha), the closed
    form of the Duhamel integral of F.
    """
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    p = MlParams(op.alpha, op.alpha + 1.0)
    ta = t ** op.alpha
    factors = ta * np.array(
        [mittag_leffler(p, -op.eps2 * lam * ta) for lam in op.eig.lambdas]
    )
    return _modal_apply(op, f, factors)


def refine_mesh(mesh: Mesh1d, factor: int) -> Mesh1d:
    """Nested refinement: (n+1) elements -> factor*(n+1) elements."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    return Mesh1d(mesh.a, mesh.b, factor * (mesh.n_nodes + 1) - 1)


def restrict_nodal(fine: Mesh1d, coarse: Mesh1d, u_fine: np.ndarray) -> np.ndarray:
    """Values of a fine-mesh FE function at the coarse nodes (exact on nested meshes)."""
    ratio, rem = divmod(fine.n_nodes + 1, coarse.n_nodes + 1)
    if rem != 0 or abs(fine.a - coarse.a) > 1e-14 or abs(fine.b - coarse.b) > 1e-14:
        raise NonNestedGridError(
            f"mesh with {fine.n_nodes} nodes does not nest {coarse.n_nodes} on the same domain"
        )
    return np.asarray(u_fine, dtype=float)[ratio - 1 :: ratio][: coarse.n_nodes]


def prolong_nodal(coarse: Mesh1d, fine: Mesh1d, u_coarse: np.ndarray) -> np.ndarray:
    """P1 interpolation onto a nested finer mesh (exact as an FE function)."""
    ratio, rem = divmod(fine.n_nodes + 1, coarse.n_nodes + 1)
    if rem != 0 or abs(fine.a - coarse.a) > 1e-14 or abs(fine.b - coarse.b) > 1e-14:
        raise NonNestedGridError(
            f"mesh with {fine.n_nodes} nodes does not nest {coarse.n_nodes} on the same domain"
        )
    ext = np.concatenate(([0.0], np.asarray(u_coarse, dtype=float), [0.0]))
    xf = np.concatenate(([fine.a], fine.nodes, [fine.b]))
    xc = np.concatenate(([coarse.a], coarse.nodes, [coarse.b]))
    return np.interp(xf, xc, ext)[1:-1]


@dataclass(frozen=True)
class RichardsonReference:
    """Fine-resolution stepper run exposing aligned coarse-grid snapshots."""

    mesh: Mesh1d
    trajectory: Trajectory

    def at(self, t: float, coarse_mesh: Mesh1d) -> np.ndarray:
        """Nodal values at time t restricted to a nested coarser mesh."""
        tau = self.trajectory.tau
        idx = round(t / tau)
        if abs(idx * tau - t) > 1e-10 * max(1.0, abs(t)) or not 0 <= idx < len(self.trajectory.times):
            raise NonNestedGridError(f"t = {t} is not a step of the reference grid (tau = {tau})")
        u = self.trajectory.states[idx]
        if coarse_mesh.n_nodes == self.mesh.n_nodes:
            return u.copy()
        return restrict_nodal(self.mesh, coarse_mesh, u)


def richardson_reference(
    system: FemSystem,
    params: FracParams,
    reaction: ReactionTerm,
    v: np.ndarray,
    tau_fine: float,
    n_steps: int,
) -> RichardsonReference:
    """Run the stepper at fine resolution as a reference for nonlinear errors.

    Callers anchor comparisons at tau_fine <= tau_coarse / 8 on the same or a
    nested coarser mesh; the same-mesh case isolates the temporal error.
    """
    w = generate_weights(params.alpha, tau_fine, n_steps)
    traj = SchemeSolver(system, params, w, reaction).run(np.asarray(v, dtype=float), n_steps)
    return RichardsonReference(system.mesh, traj)
