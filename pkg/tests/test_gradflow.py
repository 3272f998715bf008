import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclab.errors import GridMismatch, UsageError
from fraclab.fode import observed_order, solve_linear_implicit
from fraclab.fracops import Grid, Path, caputo_coefficients, discrete_caputo
from fraclab.gradflow import (
    decay_check,
    degiorgi_step,
    dissipation_check,
    fractional_dissipation,
    holder_exponent,
    interpolate_continuous,
    solve_gradflow,
    two_step_comparison,
)
from fraclab.mlf import mittag_leffler_array
from fraclab.prox import (
    prox_box,
    prox_huber,
    prox_l1,
    prox_quadratic,
    prox_quadratic_form,
    prox_quadratic_quartic,
    prox_quartic,
    prox_zero,
)


class TestStep:
    def test_zero_functional_averages_history(self):
        t = caputo_coefficients(0.5, 4)
        hist = np.array([1.0, 0.5, 0.2])
        w = (t.c[1] * 0.2 + t.c[2] * 0.5 + t.c_tail[3] * 1.0) / t.c0
        assert degiorgi_step(t, hist, prox_zero(), 0.1) == pytest.approx([float(w)], rel=1e-14)

    def test_quadratic_step(self):
        t = caputo_coefficients(0.5, 4)
        k, mu = 0.1, 2.0
        tau = k**0.5 / float(t.c0)
        u = degiorgi_step(t, [1.0], prox_quadratic(mu), k)
        assert u == pytest.approx([1 / (1 + tau * mu)], rel=1e-14)

    def test_empty_history(self):
        t = caputo_coefficients(0.5, 4)
        with pytest.raises(UsageError):
            degiorgi_step(t, np.zeros((0, 1)), prox_zero(), 0.1)

    def test_step_minimizes_movement_functional(self):
        # brute-force the history-weighted objective on a fine grid of candidates
        alpha, k = 0.6, 0.05
        t = caputo_coefficients(alpha, 3)
        hist = np.array([1.0, 0.6, 0.45])
        op = prox_quartic()
        u = degiorgi_step(t, hist, op, k)[0]
        n = 3

        def F(v):
            lin = sum(float(t.c[j]) * v * hist[n - j] for j in range(1, n)) + float(t.c_tail[n]) * v * hist[0]
            return (float(t.c0) * v * v - 2 * lin) / (2 * k**alpha) + v**4 / 4

        cand = np.linspace(-2, 2, 400_001)
        assert abs(cand[np.argmin(F(cand))] - u) <= 2e-5


class TestSolve:
    def test_quadratic_matches_linear_scheme(self):
        g = Grid(2.0, 64)
        s = solve_gradflow(0.5, prox_quadratic(1.5), 1.0, g)
        ref = solve_linear_implicit(0.5, -1.5, 1.0, g).scalar
        assert np.max(np.abs(s.U[:, 0] - ref)) <= 1e-12

    def test_quadratic_order_against_mittag_leffler(self):
        alpha, mu = 0.6, 1.0
        errs = []
        for m in range(5, 10):
            g = Grid(1.0, 2**m)
            s = solve_gradflow(alpha, prox_quadratic(mu), 1.0, g)
            exact = mittag_leffler_array(alpha, -mu * g.times**alpha)
            errs.append((g.k, np.max(np.abs(s.U[:, 0] - exact))))
        assert all(b[1] < a[1] for a, b in zip(errs, errs[1:]))
        assert observed_order(errs) >= alpha - 0.1

    def test_quartic_monotone(self):
        s = solve_gradflow(0.5, prox_quartic(), 1.0, Grid(2.0, 128))
        U = s.U[:, 0]
        assert np.all(np.diff(U) < 0) and np.all(U > 0)

    @pytest.mark.parametrize("op", [prox_quadratic(), prox_l1(), prox_quartic(), prox_huber()])
    def test_fixed_point_at_minimizer(self, op):
        s = solve_gradflow(0.7, op, op.minimizer, Grid(1.0, 16))
        assert np.all(s.U == op.minimizer)

    def test_xi_is_negative_caputo(self):
        alpha = 0.4
        g = Grid(1.0, 40)
        s = solve_gradflow(alpha, prox_quadratic_quartic(), [1.5, -0.5], g)
        D = discrete_caputo(s.table, Path(g, s.U)).values
        assert np.allclose(s.xi[1:], -D[1:], atol=1e-9)

    def test_xi_is_gradient(self):
        g = Grid(1.0, 32)
        s = solve_gradflow(0.5, prox_quadratic_quartic(), 2.0, g)
        tau = g.k**0.5 / float(s.table.c0)
        U = s.U[1:, 0]
        assert np.max(np.abs(s.xi[1:, 0] - (U + U**3))) <= 1e-10 / tau

    def test_vector_quadratic_form(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        b = np.array([1.0, -1.0])
        op = prox_quadratic_form(A, b)
        s = solve_gradflow(0.8, op, [3.0, 3.0], Grid(20.0, 400))
        # algebraic decay, so only the gap bound is sharp
        assert decay_check(s, op.minimizer, op.phi_star, op.mu)
        assert np.linalg.norm(s.U[-1] - op.minimizer) < 0.2
        assert np.all(np.diff(s.energies) <= 1e-12)

    def test_box_stays_feasible(self):
        s = solve_gradflow(0.5, prox_box(-1, 1), [0.5, 3.0], Grid(1.0, 8))
        assert np.all(np.abs(s.U[1:]) <= 1)

    @given(st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([0.3, 0.6, 0.9]))
    @settings(max_examples=25, deadline=None)
    def test_contraction_between_solutions(self, a, b, alpha):
        g = Grid(1.0, 32)
        Ua = solve_gradflow(alpha, prox_quartic(), a, g).U[:, 0]
        Ub = solve_gradflow(alpha, prox_quartic(), b, g).U[:, 0]
        assert np.all(np.abs(Ua - Ub) <= abs(a - b) + 1e-10)

    @given(st.floats(-4, 4), st.sampled_from(["quad", "l1", "quartic", "huber"]))
    @settings(max_examples=25, deadline=None)
    def test_energy_bounded_by_initial(self, u0, kind):
        op = {"quad": prox_quadratic(), "l1": prox_l1(), "quartic": prox_quartic(),
              "huber": prox_huber()}[kind]
        s = solve_gradflow(0.5, op, u0, Grid(1.0, 32))
        assert np.all(s.energies <= s.energies[0] + 1e-12)
        assert dissipation_check(s)


class TestInterpolation:
    def test_nodes(self):
        g = Grid(1.0, 32)
        s = solve_gradflow(0.6, prox_quadratic_quartic(), 1.5, g)
        assert np.allclose(interpolate_continuous(s, g.times), s.U, atol=1e-10)
        assert interpolate_continuous(s, 0.0) == pytest.approx(s.U[0])

    def test_bracketed_between_nodes(self):
        g = Grid(1.0, 16)
        s = solve_gradflow(0.6, prox_quadratic(), 1.0, g)
        mid = interpolate_continuous(s, g.times[:-1] + g.k / 2)[:, 0]
        U = s.U[:, 0]
        assert np.all(mid <= U[:-1]) and np.all(mid >= U[1:])

    def test_outside(self):
        s = solve_gradflow(0.6, prox_quadratic(), 1.0, Grid(1.0, 4))
        with pytest.raises(UsageError):
            interpolate_continuous(s, 1.5)


class TestDiagnostics:
    def test_dissipation(self):
        s = solve_gradflow(0.5, prox_quadratic(), 1.0, Grid(1.0, 64))
        assert dissipation_check(s)
        z = solve_gradflow(0.5, prox_zero(), 1.0, Grid(1.0, 16))
        assert dissipation_check(z) and np.all(fractional_dissipation(z) == 0)

    def test_corrupted_dissipation(self):
        s = solve_gradflow(0.5, prox_quadratic(), 1.0, Grid(1.0, 64))
        # zeroing xi only loosens the bound; inflating it must trip the check
        s.xi[:] = 0.0
        assert dissipation_check(s)
        s.xi[:] = 10.0
        assert not dissipation_check(s)

    def test_dissipation_uniform_in_step(self):
        for N in (16, 64, 256):
            s = solve_gradflow(0.5, prox_quadratic_quartic(), 2.0, Grid(1.0, N))
            assert dissipation_check(s)
            assert fractional_dissipation(s)[-1] <= s.energies[0] - s.energies[-1] + 1e-8

    def test_holder(self):
        s = solve_gradflow(0.6, prox_quadratic(), 1.0, Grid(1.0, 512))
        assert holder_exponent(s) >= 0.3 - 0.05
        l1 = solve_gradflow(0.6, prox_l1(), 1.0, Grid(1.0, 512))
        assert holder_exponent(l1) >= 0.3 - 0.05
        c = solve_gradflow(0.6, prox_quadratic(), 0.0, Grid(1.0, 64))
        assert holder_exponent(c) == math.inf
        with pytest.raises(UsageError):
            holder_exponent(s, (0.1, 0.5))

    def test_decay(self):
        s = solve_gradflow(0.5, prox_quadratic(), 1.0, Grid(1.0, 256))
        assert decay_check(s, 0.0, 0.0, 1.0)
        qq = solve_gradflow(0.7, prox_quadratic_quartic(), 2.0, Grid(2.0, 256))
        assert decay_check(qq, 0.0, 0.0, 1.0)
        fixed = solve_gradflow(0.5, prox_quadratic(), 0.0, Grid(1.0, 8))
        assert decay_check(fixed, 0.0, 0.0, 1.0)
        with pytest.raises(UsageError):
            decay_check(s, 0.0, 0.0, 0.0)

    def test_decay_detects_overclaimed_rate(self):
        s = solve_gradflow(0.5, prox_quadratic(0.1), 1.0, Grid(4.0, 256))
        assert not decay_check(s, 0.0, 0.0, 5.0)

    def test_two_step(self):
        assert two_step_comparison(0.5, prox_zero(), 1.0, 2.0**-4) == 0.0
        alpha = 0.5
        d = [two_step_comparison(alpha, prox_quadratic(), 1.0, 2.0**-m) for m in (5, 6, 7)]
        for a, b in zip(d, d[1:]):
            assert b / a <= 2 ** (-alpha / 4) * 1.2
        l1 = [two_step_comparison(alpha, prox_l1(), 1.0, 2.0**-m) for m in (5, 6, 7)]
        assert np.all(np.isfinite(l1)) and l1[0] > l1[1] > l1[2]
        with pytest.raises(GridMismatch):
            two_step_comparison(alpha, prox_zero(), 1.0, 0.3)
