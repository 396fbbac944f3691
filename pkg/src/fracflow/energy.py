"""Fractional Ginzburg-Landau free energy and equilibrium-shift metrics.

F_s(u) = (eps2/2) * u^T K u + int_Omega (u^2 - 1)^2 / 4 on the P1 interpolant.
The shifted potential W~(x) = W(x) + (eps2/2) x^2 - k_eps encodes the s -> 0
limit prediction: minimizers sit at +-sqrt(1 - eps2), and plateau detection
quantifies how closely a relaxed state reaches them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import NoPlateauError
from .femcore import FemSystem, Mesh1d

PLATEAU_SLOPE_FRACTION = 0.01
PLATEAU_MIN_NODES = 10


@dataclass
class EnergyReport:
    fs: float
    dirichlet: float
    potential: float
    k_eps: float
    plateau_pos: float | None = None
    plateau_neg: float | None = None


def double_well(x):
    """W(x) = (x^2 - 1)^2 / 4."""
    x = np.asarray(x, dtype=float)
    return (x * x - 1.0) ** 2 / 4.0


def evaluate_energy(system: FemSystem, params, u: np.ndarray) -> EnergyReport:
    """Free energy of the P1 interpolant with nodal values u (zero at a, b).

    The potential term uses per-element Gauss of order 4, exact for the
    quartic integrand.
    """
    u = np.asarray(u, dtype=float)
    n = system.mesh.n_nodes
    if u.shape[0] != n:
        raise ValueError(f"dimension mismatch: {u.shape[0]} vs {n}")
    eps2 = params.eps2
    dirichlet = 0.5 * eps2 * float(u @ system.stiffness @ u)
    h = system.mesh.h
    ext = np.concatenate(([0.0], u, [0.0]))  # boundary values
    g, w = leggauss(4)
    t = 0.5 * (g + 1.0)  # element-local coordinate in [0, 1]
    wt = 0.5 * h * w
    vals = ext[:-1, None] * (1.0 - t)[None, :] + ext[1:, None] * t[None, :]
    potential = float(np.sum(wt[None, :] * double_well(vals)))
    return EnergyReport(
        fs=dirichlet + potential,
        dirichlet=dirichlet,
        potential=potential,
        k_eps=shift_offset(eps2),
    )


def shift_offset(eps2: float) -> float:
    """k_eps = min over x of W(x) + (eps2/2) x^2 = eps2/2 - eps2^2/4."""
    return 0.5 * eps2 - 0.25 * eps2 * eps2


def shifted_potential(eps2: float, x) -> np.ndarray:
    """W~(x) = W(x) + (eps2/2) x^2 - k_eps; zero minima at +-sqrt(1-eps2)."""
    if not 0.0 < eps2 < 1.0:
        raise ValueError(f"eps2 must be in (0, 1), got {eps2}")
    x = np.asarray(x, dtype=float)
    return double_well(x) + 0.5 * eps2 * x * x - shift_offset(eps2)


def equilibrium_values(eps2: float) -> tuple[float, float]:
    """The predicted plateau pair (+sqrt(1-eps2), -sqrt(1-eps2))."""
    if not 0.0 < eps2 < 1.0:
        raise ValueError(f"eps2 must be in (0, 1), got {eps2}")
    r = math.sqrt(1.0 - eps2)
    return r, -r


def plateau_detect(mesh: Mesh1d, u: np.ndarray) -> tuple[float, float]:
    """Median values of the largest flat run per sign.

    A node is flat when both adjacent element slopes (boundary elements
    included, where u drops to zero) stay below 1% of the maximum slope; runs
    are split at sign changes; each sign needs >= 10 qualifying nodes, else
    NoPlateauError carries whatever side was found.
    """
    u = np.asarray(u, dtype=float)
    n = mesh.n_nodes
    if u.shape[0] != n:
        raise ValueError(f"dimension mismatch: {u.shape[0]} vs {n}")
    ext = np.concatenate(([0.0], u, [0.0]))
    slopes = np.abs(np.diff(ext)) / mesh.h
    smax = slopes.max()
    if smax == 0.0:
        flat = np.ones(n, dtype=bool)
    else:
        thr = PLATEAU_SLOPE_FRACTION * smax
        flat = (slopes[:-1] < thr) & (slopes[1:] < thr)

    runs = []  # (sign, start, stop) maximal flat single-sign segments
    i = 0
    while i < n:
        sgn = 1 if u[i] > 0.0 else (-1 if u[i] < 0.0 else 0)
        if flat[i] and sgn != 0:
            j = i
            while j < n and flat[j] and (u[j] > 0.0) == (sgn > 0) and u[j] != 0.0:
                j += 1
            runs.append((sgn, i, j))
            i = j
        else:
            i += 1

    out = {}
    for sgn in (1, -1):
        seg = max((r for r in runs if r[0] == sgn), key=lambda r: r[2] - r[1], default=None)
        if seg is not None and seg[2] - seg[1] >= PLATEAU_MIN_NODES:
            out[sgn] = float(np.median(u[seg[1] : seg[2]]))
        else:
            out[sgn] = None
    if out[1] is None or out[-1] is None:
        missing = [name for sgn, name in ((1, "positive"), (-1, "negative")) if out[sgn] is None]
        raise NoPlateauError(
            f"no plateau on the {' and '.join(missing)} side "
            f"(need >= {PLATEAU_MIN_NODES} flat nodes)",
            plateau_pos=out[1],
            plateau_neg=out[-1],
        )
    return out[1], out[-1]
