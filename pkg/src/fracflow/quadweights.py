"""Convolution-quadrature weights for the Riemann-Liouville derivative.

The weights are the power-series coefficients of ((1-xi)/tau)^alpha,
generated by the recursion omega_0 = tau^-alpha,
omega_j = (1 - (alpha+1)/j) * omega_{j-1}.  Each factor lies in (-1, 1)
for j >= 1, so the recursion is numerically benign; the log-Gamma binomial
closed form serves as the independent validation oracle in the tests.

Also provides the companion sequence c_n (coefficients of (1-xi)^-alpha),
whose O(n^{alpha-1}) growth controls the discrete Duhamel operators in the
error analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CqWeights:
    """Weights omega_0..omega_N (units time^-alpha) and scaled omega~_j."""

    alpha: float
    tau: float
    n_steps: int
    omega: np.ndarray
    omega_tilde: np.ndarray

    def partial_sums(self) -> np.ndarray:
        """a_n = sum_{j<=n} omega~_j; positive, strictly decreasing for alpha < 1."""
        return np.cumsum(self.omega_tilde)


@dataclass(frozen=True)
class CnSequence:
    alpha: float
    c: np.ndarray


def generate_weights(alpha: float, tau: float, n_steps: int) -> CqWeights:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if not tau > 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    tilde = np.empty(n_steps + 1)
    tilde[0] = 1.0
    for j in range(1, n_steps + 1):
        tilde[j] = (1.0 - (alpha + 1.0) / j) * tilde[j - 1]
    omega = tilde * tau ** (-alpha)
    return CqWeights(alpha, tau, n_steps, omega, tilde)


def apply_cq(weights: CqWeights, history) -> np.ndarray:
    """sum_{j=0}^{n} omega_j * U^{n-j} for history (U^0, ..., U^n).

    Raises ValueError on ragged vectors or a history longer than the weights.
    """
    hist = np.asarray(history, dtype=float)
    n = hist.shape[0] - 1
    if n + 1 > weights.n_steps + 1:
        raise ValueError(
            f"history length {n + 1} exceeds the {weights.n_steps + 1} generated weights"
        )
    return weights.omega[n::-1] @ hist


def _c_recursion(omega_tilde: np.ndarray) -> np.ndarray:
    n_max = len(omega_tilde) - 1
    c = np.empty(n_max + 1)
    c[0] = 1.0
    neg = -omega_tilde  # -omega~_j > 0 for j >= 1
    for n in range(1, n_max + 1):
        c[n] = neg[n:0:-1] @ c[:n]
    return c


def c_sequence(alpha: float, n_max: int) -> CnSequence:
    """c_0 = 1, c_n = sum_{j<n} (-omega~_{n-j}) c_j; equals (-1)^n binom(-alpha, n)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    tilde = generate_weights(alpha, 1.0, n_max).omega_tilde
    return CnSequence(alpha, _c_recursion(tilde))


def c_closed_form(alpha: float, n: np.ndarray) -> np.ndarray:
    """(-1)^n binom(-alpha, n) = Gamma(n+alpha) / (Gamma(alpha) Gamma(n+1)).

    Evaluated in log space: Gamma(1-n-alpha) in the binomial alternates sign
    and underflows, while this equivalent all-positive form does not.
    """
    n = np.asarray(n, dtype=float)
    lg = np.vectorize(math.lgamma)
    return np.exp(lg(n + alpha) - math.lgamma(alpha) - lg(n + 1.0))


def omega_tilde_oracle(alpha: float, n_max: int) -> np.ndarray:
    """Independent binomial closed form of the (1-xi)^alpha coefficients.

    omega~_0 = 1 and, via the reflection formula,
    omega~_j = -alpha * Gamma(j-alpha) / (Gamma(1-alpha) Gamma(j+1)) for j >= 1.
    Shares nothing with the generating recursion.
    """
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if alpha == 1.0:
        out[1:] = 0.0
        if n_max >= 1:
            out[1] = -1.0
        return out
    j = np.arange(1, n_max + 1, dtype=float)
    lg = np.vectorize(math.lgamma)
    out[1:] = -np.exp(
        math.log(alpha) + lg(j - alpha) - math.lgamma(1.0 - alpha) - lg(j + 1.0)
    )
    return out


def validate_weights(w: CqWeights) -> None:
    """Assert the structural invariants; raises AssertionError on violation."""
    assert w.omega_tilde[0] == 1.0
    assert np.isclose(w.omega[0], w.tau ** -w.alpha, rtol=1e-14)
    if w.alpha < 1.0:
        assert np.all(w.omega_tilde[1:] < 0.0), "omega~_j < 0 for j >= 1"
        a = w.partial_sums()
        assert np.all(a > 0.0), "partial sums must stay positive"
        assert np.all(np.diff(a) < 0.0), "partial sums must decrease strictly"
    else:
        assert w.omega_tilde[1] == -1.0
        assert np.all(w.omega_tilde[2:] == 0.0)
