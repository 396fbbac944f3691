"""Convolution-quadrature weight and c_n sequence tests."""

import math
from fractions import Fraction

import numpy as np
import pytest

from fracflow.quadweights import (
    apply_cq,
    c_closed_form,
    c_sequence,
    generate_weights,
    omega_tilde_oracle,
    validate_weights,
)

from .oracles import omega_tilde_exact, rl_derivative_t_alpha

ALPHAS = [0.1, 0.25, 0.5, 0.75, 0.9]


class TestWeights:
    @pytest.mark.parametrize("alpha", ALPHAS + [1.0])
    def test_first_weight_and_recursion_seed(self, alpha):
        w = generate_weights(alpha, 0.2, 8)
        assert w.omega[0] == pytest.approx(0.2 ** -alpha, rel=1e-14)
        assert w.omega[1] == pytest.approx(-alpha * 0.2 ** -alpha, rel=1e-13)

    def test_alpha_one_backward_difference(self):
        w = generate_weights(1.0, 0.1, 6)
        assert np.allclose(w.omega[:2], [10.0, -10.0], rtol=0, atol=1e-12)
        assert np.all(w.omega[2:] == 0.0)

    @pytest.mark.parametrize("alpha", ALPHAS + [1.0])
    def test_against_loggamma_oracle(self, alpha):
        w = generate_weights(alpha, 1.0, 64)
        ref = omega_tilde_oracle(alpha, 64)
        nz = ref != 0.0
        assert np.max(np.abs(w.omega_tilde[nz] - ref[nz]) / np.abs(ref[nz])) <= 1e-12
        if (~nz).any():
            assert np.max(np.abs(w.omega_tilde[~nz])) <= 1e-15

    @pytest.mark.parametrize("alpha_frac", [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)])
    def test_oracle_vs_exact_rationals(self, alpha_frac):
        # the log-Gamma oracle itself, pinned to exact rational binomials
        ref = omega_tilde_exact(alpha_frac, 48)
        got = omega_tilde_oracle(float(alpha_frac), 48)
        for r, g in zip(ref, got):
            assert g == pytest.approx(r, rel=1e-13, abs=1e-300)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_partial_sums_positive_strictly_decreasing(self, alpha):
        w = generate_weights(alpha, 1.0, 10_000)
        validate_weights(w)
        a = w.partial_sums()
        assert np.all(a > 0.0)
        assert np.all(np.diff(a) < 0.0)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.75, 0.9])
    def test_tail_decay_threshold(self, alpha):
        a_last = generate_weights(alpha, 1.0, 10_000).partial_sums()[-1]
        assert a_last < 0.05

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_tail_decay_law(self, alpha):
        # a_N = Gamma(N+1-alpha) / (Gamma(1-alpha) Gamma(N+1)) ~ N^-alpha / Gamma(1-alpha);
        # the sharp law replaces the unattainable fixed threshold at alpha=0.1
        # (true a_N there is 0.3726 at N=1e4).
        N = 10_000
        a_last = generate_weights(alpha, 1.0, N).partial_sums()[-1]
        law = math.exp(
            math.lgamma(N + 1 - alpha) - math.lgamma(1 - alpha) - math.lgamma(N + 1)
        )
        assert a_last == pytest.approx(law, rel=1e-9)
        assert a_last <= 1.02 * N ** -alpha / math.gamma(1.0 - alpha)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            generate_weights(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            generate_weights(1.2, 1.0, 4)
        with pytest.raises(ValueError):
            generate_weights(0.5, -1.0, 4)
        with pytest.raises(ValueError):
            generate_weights(0.5, 1.0, 0)


class TestApplyCq:
    def test_constant_history_alpha_one(self):
        w = generate_weights(1.0, 0.1, 8)
        hist = np.tile([1.0, -2.0, 3.0], (5, 1))
        out = apply_cq(w, hist)
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_backward_euler_difference(self):
        w = generate_weights(1.0, 0.1, 4)
        u0 = np.array([1.0, 2.0])
        u1 = np.array([1.5, 1.0])
        out = apply_cq(w, [u0, u1])
        assert np.allclose(out, (u1 - u0) / 0.1, rtol=1e-13)

    def test_history_too_long(self):
        w = generate_weights(0.5, 0.1, 2)
        with pytest.raises(ValueError):
            apply_cq(w, np.zeros((4, 3)))

    @pytest.mark.parametrize("alpha", [0.4, 0.7])
    def test_rl_derivative_of_t_alpha_first_order(self, alpha):
        # CQ applied to u(t) = t^alpha at t = 1 tends to Gamma(alpha+1) at
        # least at first order (observed rate is ~1+alpha for this datum).
        ref = rl_derivative_t_alpha(alpha)
        errs = []
        taus = [1 / 32, 1 / 64, 1 / 128, 1 / 256]
        for tau in taus:
            n = round(1.0 / tau)
            w = generate_weights(alpha, tau, n)
            hist = (tau * np.arange(n + 1)) ** alpha
            errs.append(abs(apply_cq(w, hist) - ref))
        slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
        assert slope >= 0.8
        assert errs[-1] < 1e-4


class TestCnSequence:
    def test_seed_values(self):
        seq = c_sequence(0.6, 4)
        assert seq.c[0] == 1.0
        assert seq.c[1] == pytest.approx(0.6, rel=1e-14)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_recursion_matches_closed_form(self, alpha):
        n_max = 10_000
        seq = c_sequence(alpha, n_max)
        ref = c_closed_form(alpha, np.arange(n_max + 1))
        rel = np.abs(seq.c - ref) / ref
        assert rel.max() <= 1e-9
        assert np.all(seq.c > 0.0)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_asymptotic_ratio(self, alpha):
        n = 10_000
        c_n = c_sequence(alpha, n).c[-1]
        ratio = c_n * n ** (1.0 - alpha) * math.gamma(alpha)
        assert 0.98 <= ratio <= 1.02

    def test_domain_error(self):
        with pytest.raises(ValueError):
            c_sequence(1.0, 10)
        with pytest.raises(ValueError):
            c_sequence(0.5, 0)
