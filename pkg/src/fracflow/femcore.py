"""1D P1 finite elements for the integral fractional Laplacian.

Uniform mesh on Omega = (a, b) with zero exterior condition; hat functions at
the interior nodes only.  The stiffness matrix discretizes the operator
pairing ((-Delta)^s u, v),

    K_ij = C(1,s)/2 * [ iint_{Omega^2} (phi_i(x)-phi_i(y))(phi_j(x)-phi_j(y))
                        / |x-y|^{1+2s} dy dx  +  2 int phi_i phi_j rho ],
    rho(x) = ((x-a)^{-2s} + (b-x)^{-2s}) / (2s),

i.e. half the bilinear form written over (R x R) \ (Omega^c x Omega^c); with
this normalization the discrete operator tends to the identity as s -> 0 and
to the Dirichlet Laplacian trend as s -> 1 (see the eigenvalue tests).

Assembly exploits mesh uniformity: each element-pair interaction depends only
on the index offset d = q - p, so one local matrix per offset is computed
(closed form at d = 0, Duffy split with the radial factor integrated exactly
at d = 1, tensor Gauss beyond) and scattered along matrix diagonals.  The
exterior term is integrated analytically on every element by expanding
phi_i phi_j in exact multiples of h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh, solveh_banded

from .errors import QuadratureError


@dataclass(frozen=True)
class Mesh1d:
    """Uniform mesh with n_nodes interior nodes x_i = a + i*h, h = (b-a)/(n_nodes+1)."""

    a: float
    b: float
    n_nodes: int

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got ({self.a}, {self.b})")
        if self.n_nodes < 2:
            raise ValueError(f"need at least 2 interior nodes, got {self.n_nodes}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n_nodes + 1)

    @property
    def nodes(self) -> np.ndarray:
        """Interior node coordinates."""
        return self.a + self.h * np.arange(1, self.n_nodes + 1)


@dataclass(frozen=True)
class FemSystem:
    mesh: Mesh1d
    s: float
    mass: np.ndarray
    stiffness: np.ndarray


@dataclass(frozen=True)
class EigenDecomposition:
    """Generalized eigenpairs K phi = lambda M phi, modes M-orthonormal columns."""

    lambdas: np.ndarray
    modes: np.ndarray


def normalization_constant(n: int, s: float) -> float:
    """C(n,s) = 2^{2s} s Gamma(s + n/2) / (pi^{n/2} Gamma(1-s))."""
    if n != 1:
        raise ValueError(f"only n = 1 assembled, got n = {n}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must be in (0, 1), got {s}")
    return (
        2.0 ** (2 * s)
        * s
        * math.gamma(s + 0.5 * n)
        / (math.pi ** (0.5 * n) * math.gamma(1.0 - s))
    )


def assemble_mass(mesh: Mesh1d) -> np.ndarray:
    """P1 mass matrix: tridiagonal, diagonal 2h/3, off-diagonal h/6."""
    n, h = mesh.n_nodes, mesh.h
    M = np.zeros((n, n))
    i = np.arange(n)
    M[i, i] = 2.0 * h / 3.0
    M[i[:-1], i[:-1] + 1] = h / 6.0
    M[i[:-1] + 1, i[:-1]] = h / 6.0
    return M


def mass_matvec(mesh: Mesh1d, x: np.ndarray) -> np.ndarray:
    """M @ x in O(n) using the tridiagonal structure."""
    h = mesh.h
    y = (2.0 * h / 3.0) * x
    y[:-1] += (h / 6.0) * x[1:]
    y[1:] += (h / 6.0) * x[:-1]
    return y


def mass_solve(mesh: Mesh1d, b: np.ndarray) -> np.ndarray:
    """Solve M x = b via banded Cholesky."""
    n, h = mesh.n_nodes, mesh.h
    ab = np.zeros((2, n))
    ab[0, 1:] = h / 6.0
    ab[1, :] = 2.0 * h / 3.0
    return solveh_banded(ab, b)


def _exterior_segment(tl: float, tr: float, qs, p: float) -> float:
    """int_{tl}^{tr} t^p (q0 + q1 t + q2 t^2) dt with p = -2s in (-2, 0).

    The exponent p + k + 1 vanishes only at s = 1/2, k = 0 (log branch); the
    divergent tl = 0 cases carry q_k = 0 by construction and are skipped.
    """
    out = 0.0
    for k, qk in enumerate(qs):
        if qk == 0.0:
            continue
        e = p + k + 1.0
        if abs(e) < 1e-13:
            out += qk * (math.log(tr) - math.log(tl))
        else:
            lo = tl ** e if tl > 0.0 else 0.0
            out += qk * (tr ** e - lo) / e
    return out


def assemble_stiffness(
    mesh: Mesh1d,
    s: float,
    order_near: int = 16,
    order_far: int = 8,
    far_cut: int = 10,
) -> np.ndarray:
    """Dense symmetric positive definite fractional stiffness matrix."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must be in (0, 1), got {s}")
    N, h = mesh.n_nodes, mesh.h
    nel = N + 1  # elements E_p = (a + p h, a + (p+1) h), p = 0..N
    next_ = N + 2  # node indices 0..N+1 incl. boundary pseudo-nodes
    K = np.zeros((next_, next_))
    flat = K.reshape(-1)

    def add_diag(i0: int, off: int, count: int, val: float) -> None:
        # K[i0+m, i0+off+m] += val, m = 0..count-1, as a strided slice
        if count <= 0:
            return
        start = i0 * (next_ + 1) + off
        flat[start : start + count * (next_ + 1) : next_ + 1] += val

    # identical elements: differences are (+-1/h)(x - y), closed form
    I0 = 2.0 * h ** (3 - 2 * s) / ((2 - 2 * s) * (3 - 2 * s))
    sign = (-1.0, 1.0)
    for A in range(2):
        for B in range(2):
            add_diag(A, B - A, nel, sign[A] * sign[B] * I0 / h ** 2)

    # touching elements (offset 1): Duffy split; the radial factor integrates
    # to 1/(3-2s) exactly, Gauss in the remaining analytic direction
    gt, wt = leggauss(order_near)
    t = 0.5 * (gt + 1.0)
    wt = 0.5 * wt
    v1 = np.stack([t, 1.0 - t, -np.ones_like(t)])  # half u <= eta
    v2 = np.stack([np.ones_like(t), t - 1.0, -t])  # half eta <= u
    ker1 = wt * (1.0 + t) ** (-1.0 - 2 * s)
    L1 = (np.einsum("ak,bk,k->ab", v1, v1, ker1) + np.einsum("ak,bk,k->ab", v2, v2, ker1))
    L1 *= h ** (1 - 2 * s) / (3 - 2 * s)
    if not np.all(np.isfinite(L1)):
        raise QuadratureError("touching-pair quadrature produced non-finite values")
    for A in range(3):
        for B in range(3):
            add_diag(A, B - A, nel - 1, 2.0 * L1[A, B])

    # disjoint elements (offset >= 2): tensor Gauss per offset, vectorized
    for order, dmin, dmax in (
        (order_near, 2, min(far_cut, nel - 1)),
        (order_far, far_cut + 1, nel - 1),
    ):
        if dmax < dmin:
            continue
        g, wg = leggauss(order)
        xi = 0.5 * (g + 1.0)
        wxi = 0.5 * wg
        XI, ETA = np.meshgrid(xi, xi, indexing="ij")
        WW = np.outer(wxi, wxi)
        D = np.stack([1.0 - XI, XI, -(1.0 - ETA), -ETA])  # (4, q, q)
        ds = np.arange(dmin, dmax + 1)
        kerd = (ds[:, None, None] + ETA[None] - XI[None]) ** (-1.0 - 2 * s)
        Lds = np.einsum("aij,bij,dij->dab", D, D, WW[None] * kerd) * h ** (1 - 2 * s)
        if not np.all(np.isfinite(Lds)):
            raise QuadratureError("disjoint-pair quadrature produced non-finite values")
        for di, d in enumerate(ds):
            noff = (0, 1, d, d + 1)
            L = Lds[di]
            for A in range(4):
                for B in range(4):
                    add_diag(noff[A], noff[B] - noff[A], nel - d, 2.0 * L[A, B])

    # exterior interaction 2 * int phi_i phi_j rho, analytic per element;
    # local coordinates in exact multiples of h so boundary products vanish
    # exactly where rho diverges
    for p in range(nel):
        c0, c1 = p * h, (p + 1) * h  # t = x - a range
        u0, u1 = (N + 1 - p - 1) * h, (N + 1 - p) * h  # u = b - x range
        prods_t = {
            (p, p): (c1 * c1 / h ** 2, -2 * c1 / h ** 2, 1.0 / h ** 2),
            (p, p + 1): (-c1 * c0 / h ** 2, (c1 + c0) / h ** 2, -1.0 / h ** 2),
            (p + 1, p + 1): (c0 * c0 / h ** 2, -2 * c0 / h ** 2, 1.0 / h ** 2),
        }
        # in u = b - x: phi_p = (u - u0)/h, phi_{p+1} = (u1 - u)/h
        prods_u = {
            (p, p): (u0 * u0 / h ** 2, -2 * u0 / h ** 2, 1.0 / h ** 2),
            (p, p + 1): (-u1 * u0 / h ** 2, (u1 + u0) / h ** 2, -1.0 / h ** 2),
            (p + 1, p + 1): (u1 * u1 / h ** 2, -2 * u1 / h ** 2, 1.0 / h ** 2),
        }
        for i, j in prods_t:
            if i < 1 or j < 1 or i > N or j > N:
                continue  # boundary pseudo-node rows are discarded
            val = _exterior_segment(c0, c1, prods_t[(i, j)], -2 * s) + _exterior_segment(
                u0, u1, prods_u[(i, j)], -2 * s
            )
            contrib = 2.0 * val / (2 * s)
            K[i, j] += contrib
            if i != j:
                K[j, i] += contrib

    K = K[1 : N + 1, 1 : N + 1] * (0.5 * normalization_constant(1, s))
    return 0.5 * (K + K.T)


def assemble_system(mesh: Mesh1d, s: float, **kwargs) -> FemSystem:
    return FemSystem(mesh, s, assemble_mass(mesh), assemble_stiffness(mesh, s, **kwargs))


def l2_project(mesh: Mesh1d, mass: np.ndarray, f, breakpoints=(), order: int = 6) -> np.ndarray:
    """Coefficients of the L2 projection of a pointwise-evaluable f.

    Loads are per-element Gauss integrals; elements are split at declared
    breakpoints (known discontinuity locations) so step data projects with
    quadrature-exact loads.
    """
    n, h, a = mesh.n_nodes, mesh.h, mesh.a
    g, w = leggauss(order)
    load = np.zeros(n)
    inner = [float(p) for p in breakpoints]
    for p in range(n + 1):
        xl, xr = a + p * h, a + (p + 1) * h
        cuts = sorted({xl, xr, *[c for c in inner if xl < c < xr]})
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            xm = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g
            wm = 0.5 * (hi - lo) * w
            fv = np.array([f(float(x)) for x in xm])
            if p >= 1:
                load[p - 1] += np.sum(wm * fv * (xr - xm) / h)
            if p + 1 <= n:
                load[p] += np.sum(wm * fv * (xm - xl) / h)
    ab = np.zeros((2, n))
    ab[0, 1:] = np.diagonal(mass, 1)
    ab[1, :] = np.diagonal(mass)
    return solveh_banded(ab, load)


def eigendecompose(system: FemSystem) -> EigenDecomposition:
    """All generalized eigenpairs; LAPACK reduces via Cholesky of M internally."""
    lam, modes = eigh(system.stiffness, system.mass)
    if lam[0] <= 0.0:
        raise ArithmeticError(f"stiffness not positive definite: min eigenvalue {lam[0]}")
    return EigenDecomposition(lam, modes)


def interpolated_norm(eig: EigenDecomposition, mass: np.ndarray, w: np.ndarray, theta: float) -> float:
    """|| w ||_{theta,s} = ( sum_k lambda_k^theta (w^T M phi_k)^2 )^{1/2}."""
    if not -1.0 <= theta <= 2.0:
        raise ValueError(f"theta must be in [-1, 2], got {theta}")
    w = np.asarray(w, dtype=float)
    if w.shape[0] != mass.shape[0]:
        raise ValueError(f"dimension mismatch: {w.shape[0]} vs {mass.shape[0]}")
    coeffs = eig.modes.T @ (mass @ w)
    return float(np.sqrt(np.sum(eig.lambdas ** theta * coeffs ** 2)))


def eigen_residuals(system: FemSystem, eig: EigenDecomposition) -> np.ndarray:
    """Per-pair relative residuals ||K phi - lambda M phi|| / ||K phi||."""
    KP = system.stiffness @ eig.modes
    MP = system.mass @ eig.modes
    num = np.linalg.norm(KP - eig.lambdas[None, :] * MP, axis=0)
    den = np.linalg.norm(KP, axis=0)
    return num / den
