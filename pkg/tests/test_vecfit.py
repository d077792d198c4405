import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from nabla_fdm import ConditioningError, ConversionError, DomainError
from nabla_fdm.vecfit import (
    PAIR_FIRST,
    PAIR_SECOND,
    REAL,
    PoleSet,
    RationalApproximant,
    SamplingGrid,
    _integrator_form,
    assemble_ls,
    error_J,
    fit_operator,
    fit_with_integrator,
    identify_residues,
    initial_poles,
    make_grid,
    relocate_poles,
    solve_ls,
    target_sum_op,
)


def rational(poles, residues):
    w, c = np.asarray(poles), np.asarray(residues)
    return lambda s: np.sum(c / (np.asarray(s)[..., None] + w), axis=-1)


class TestTarget:
    def test_half_order_on_imaginary_unit(self):
        assert target_sum_op(0.5)(1j) == pytest.approx(np.exp(-1j * np.pi / 4), abs=1e-15)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    def test_one_maps_to_one(self, alpha):
        assert target_sum_op(alpha)(1.0) == 1.0

    def test_order_one_is_reciprocal(self):
        assert target_sum_op(1.0)(2j) == pytest.approx(-0.5j, abs=1e-16)

    @pytest.mark.parametrize("s", [0.0, -2.0])
    def test_branch_cut_refused(self, s):
        with pytest.raises(DomainError):
            target_sum_op(0.5)(s)


class TestGrid:
    def test_decades(self):
        g = make_grid(1e-3, 1e3, 7)
        np.testing.assert_allclose(g.zeta, 10.0 ** np.arange(-3, 4), rtol=1e-14)
        np.testing.assert_array_equal(g.s, 1j * g.zeta)

    def test_default_grid(self):
        g = make_grid()
        assert g.L == 100
        assert g.zeta[0] == pytest.approx(1e-3) and g.zeta[-1] == pytest.approx(1e3)
        ratios = g.zeta[1:] / g.zeta[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)

    def test_empty_band(self):
        with pytest.raises(DomainError):
            make_grid(1, 1, 10)

    def test_initial_poles(self):
        g = make_grid()
        np.testing.assert_allclose(initial_poles(g, 3).p, [1e-3, 1, 1e3], rtol=1e-12)
        np.testing.assert_allclose(initial_poles(g, 3, "linear").p, [1e-3, 500.0005, 1e3])
        with pytest.raises(ValueError):
            initial_poles(g, 3, "cubic")


class TestPoleSet:
    def test_pairs_need_conjugates(self):
        with pytest.raises(DomainError):
            PoleSet([1 + 1j, 2.0])

    def test_kinds(self):
        ps = PoleSet([3.0, 1 + 2j, 1 - 2j])
        np.testing.assert_array_equal(ps.kinds, [REAL, PAIR_FIRST, PAIR_SECOND])

    @given(st.lists(st.tuples(st.floats(0.01, 100), st.floats(0.01, 100)), max_size=5),
           st.lists(st.floats(0.01, 100), max_size=5))
    def test_canonical_order_is_closed_under_conjugation(self, pairs, reals):
        vals = [complex(x, y) for x, y in pairs]
        vals = vals + [v.conjugate() for v in vals] + reals
        ps = PoleSet.canonical(np.random.default_rng(0).permutation(np.array(vals, dtype=complex)))
        assert len(ps) == len(vals)
        np.testing.assert_allclose(np.sort_complex(ps.p), np.sort_complex(np.conj(ps.p)))


class TestAssemble:
    def test_single_real_pole_columns(self):
        s = np.array([0.5j, 2j])
        S = target_sum_op(0.5)(s)
        Phi, Y = assemble_ls(S, s, PoleSet([0.7]))
        cols = np.column_stack((1 / (s + 0.7), -S / (s + 0.7)))
        np.testing.assert_allclose(Phi, np.vstack((cols.real, cols.imag)), rtol=1e-15)
        np.testing.assert_array_equal(Y, np.r_[S.real, S.imag])
        assert Phi.shape == (4, 2)

    def test_pair_columns_are_sum_and_difference(self):
        s = 1j * np.logspace(-1, 1, 5)
        p = 1 + 3j
        Phi, _ = assemble_ls(np.ones(5), s, PoleSet([p, np.conj(p)]))
        a, b = 1 / (s + p), 1 / (s + np.conj(p))
        np.testing.assert_allclose(Phi[:5, 0] + 1j * Phi[5:, 0], a + b)
        np.testing.assert_allclose(Phi[:5, 1] + 1j * Phi[5:, 1], 1j * (a - b))

    def test_real_sample_has_zero_imaginary_rows(self):
        s = np.array([2.0 + 0j, 1j])
        Phi, Y = assemble_ls(target_sum_op(0.5)(s), s, PoleSet([1.0]))
        assert np.all(Phi[2] == 0) and Y[2] == 0

    def test_direct_column(self):
        s = 1j * np.array([1.0, 2.0, 3.0])
        Phi, _ = assemble_ls(np.ones(3), s, PoleSet([1.0]), with_direct=True)
        np.testing.assert_array_equal(Phi[:, 1], [1, 1, 1, 0, 0, 0])


class TestSolve:
    def test_square_system_exact(self):
        Phi = np.array([[2.0, 1.0], [1.0, 3.0]])
        Y = np.array([1.0, 2.0])
        aux = solve_ls(Phi, Y, PoleSet([1.0]))
        np.testing.assert_allclose(Phi @ np.r_[aux.mu.real, aux.lam.real], Y, atol=1e-15)

    def test_hand_solved_single_pole(self):
        # mu (s + 2) = s + 1 + lam  ->  mu = 1, lam = 1
        s = make_grid(0.1, 10, 20).s
        aux = solve_ls(*assemble_ls(1 / (s + 2), s, PoleSet([1.0])), PoleSet([1.0]))
        assert aux.mu[0] == pytest.approx(1.0, abs=1e-13)
        assert aux.lam[0] == pytest.approx(1.0, abs=1e-13)

    def test_true_poles_give_trivial_h(self):
        w = np.array([0.5, 2 + 1j, 2 - 1j])
        c = np.array([1.5, 0.3 - 0.7j, 0.3 + 0.7j])
        s = make_grid(1e-2, 1e2, 40).s
        ps = PoleSet(w)
        aux = solve_ls(*assemble_ls(rational(w, c)(s), s, ps), ps)
        np.testing.assert_allclose(aux.lam, 0, atol=1e-11)
        np.testing.assert_allclose(aux.mu, c, atol=1e-11)

    def test_agrees_with_normal_equations(self, grid):
        ps = PoleSet([0.01, 1.0, 1 + 4j, 1 - 4j])
        Phi, Y = assemble_ls(target_sum_op(0.5)(grid.s), grid.s, ps)
        theta = np.linalg.solve(Phi.T @ Phi, Phi.T @ Y)
        aux = solve_ls(Phi, Y, ps)
        mu = np.r_[theta[0], theta[1], theta[2] + 1j * theta[3], theta[2] - 1j * theta[3]]
        np.testing.assert_allclose(aux.mu, mu, rtol=1e-7)

    def test_agrees_with_complex_least_squares(self, grid):
        # conjugate-constrained real solve vs an unconstrained complex one on
        # conjugate-symmetric data (both half-planes of the grid)
        ps = PoleSet([0.2, 3 + 2j, 3 - 2j])
        s = np.r_[grid.s, np.conj(grid.s)]
        f = target_sum_op(0.5)(s)
        A = np.hstack((1 / (s[:, None] + ps.p), -f[:, None] / (s[:, None] + ps.p)))
        x = np.linalg.lstsq(A, f, rcond=None)[0]
        aux = solve_ls(*assemble_ls(f[: grid.L], grid.s, ps), ps)
        np.testing.assert_allclose(aux.mu, x[:3], rtol=1e-8)
        np.testing.assert_allclose(aux.lam, x[3:], rtol=1e-8)

    def test_rank_deficiency_carries_poles(self):
        Phi = np.ones((6, 2))
        ps = PoleSet([1.0])
        with pytest.raises(ConditioningError) as info:
            solve_ls(Phi, np.ones(6), ps)
        assert info.value.poles is ps


class TestRelocate:
    def test_single_pole_moves_to_zero_of_h(self):
        ps = relocate_poles(PoleSet([1.0]), np.array([1.0]))
        np.testing.assert_allclose(ps.p, [2.0])

    def test_zero_lambda_keeps_poles(self):
        ps = PoleSet([0.5, 2.0, 1 + 3j, 1 - 3j])
        new = relocate_poles(ps, np.zeros(4))
        np.testing.assert_allclose(new.p, ps.p, atol=1e-14)

    def test_pair_stays_conjugate(self, rng):
        ps = PoleSet([1.0, 2 + 5j, 2 - 5j])
        l = rng.normal(size=2) + 1j * rng.normal(size=2)
        new = relocate_poles(ps, np.r_[l[0].real, l[1], np.conj(l[1])])
        np.testing.assert_allclose(np.sort_complex(new.p), np.sort_complex(np.conj(new.p)))

    @given(st.lists(st.floats(0.1, 10), min_size=1, max_size=6, unique=True),
           st.lists(st.floats(-5, 5), min_size=6, max_size=6))
    @settings(max_examples=30)
    def test_zeros_match_rational_function(self, p, lam):
        ps = PoleSet(sorted(p))
        lam = np.array(lam[: len(p)])
        new = relocate_poles(ps, lam)
        # numerator of h(s) = 1 + sum lam_i/(s + p_i), cleared of denominators
        def num(s):
            terms = [np.prod(np.delete(s + ps.p, i)) for i in range(len(p))]
            return np.prod(s + ps.p) + np.dot(lam, terms)

        def scale(s):
            return np.prod(np.abs(s) + ps.p) * (1 + np.sum(np.abs(lam)))

        for z in -new.p:
            # a right half-plane zero comes back mirrored
            assert min(abs(num(z)), abs(num(-np.conj(z)))) <= 1e-9 * scale(z)

    def test_right_half_plane_zero_mirrored(self):
        # h(s) = 1 - 3/(s+1) has its zero at s = 2
        new = relocate_poles(PoleSet([1.0]), np.array([-3.0]))
        np.testing.assert_allclose(new.p, [2.0])
        assert np.all(new.p.real > 0)


class TestIdentifyResidues:
    def test_exact_single_pole(self, grid):
        ap = identify_residues(PoleSet([2.0]), grid, target=lambda s: 1 / (s + 2))
        assert ap.residues[0] == pytest.approx(1.0, abs=1e-14)
        assert ap.J <= 1e-28

    def test_integrator_pole(self, grid):
        ap = identify_residues(PoleSet([0.0]), grid, alpha=1.0)
        assert ap.residues[0] == pytest.approx(1.0, abs=1e-14)

    def test_duplicate_poles_refused(self, grid):
        with pytest.raises(ConditioningError):
            identify_residues(PoleSet([1.0, 1.0]), grid, alpha=0.5)


class TestFitOperator:
    def test_history_and_final_J(self, fit_half):
        assert len(fit_half.history) == 8
        assert fit_half.J == pytest.approx(fit_half.history[-1], rel=1e-9)
        assert fit_half.N == 20 and fit_half.alpha == 0.5 and fit_half.direct is None

    def test_twelve_cycles_reach_reference_order(self, grid):
        # reference value 7.73e-4; the fitted error must be no worse than that order
        ap = fit_operator(0.5, grid, 20, 12)
        assert ap.J <= 1e-2

    def test_five_poles_six_cycles(self, grid):
        # reference value 1.9514 from the error table; finite-order floor stays O(0.1..1)
        ap = fit_operator(0.5, grid, 5, 6)
        assert 1e-2 < ap.J <= 2.0

    def test_recovers_exact_rational_target(self, grid):
        w = np.array([0.05, 3.0, 0.4 + 1.2j, 0.4 - 1.2j, 20 + 10j, 20 - 10j])
        c = np.array([1.0, -2.0, 0.5 + 0.25j, 0.5 - 0.25j, 3 - 1j, 3 + 1j])
        ap = fit_operator(None, grid, 5, 2, target=rational(w, c))
        idx = [np.argmin(np.abs(ap.poles - x)) for x in w]
        np.testing.assert_allclose(ap.poles[idx], w, atol=1e-9)
        np.testing.assert_allclose(ap.residues[idx], c, atol=1e-9)
        assert ap.J <= 1e-20

    def test_poles_stay_stable(self, fit_half):
        assert fit_half.stable()
        assert np.all(np.abs(1 + fit_half.poles) > 1)

    def test_size_guard(self):
        with pytest.raises(ValueError, match="2N\\+2"):
            fit_operator(0.5, make_grid(L=42), 20, 3)

    def test_init_size_checked(self, grid):
        with pytest.raises(ValueError):
            fit_operator(0.5, grid, 4, 2, init=PoleSet([1.0, 2.0]))


class TestIntegratorFit:
    def test_order_one_is_exact_reciprocal(self, grid):
        ap = fit_with_integrator(1.0, grid)
        assert ap.has_integrator and ap.J == 0.0
        np.testing.assert_array_equal(ap.poles, [0.0])

    def test_one_pole_partial_fractions(self, grid):
        s_, d_, r_, w_ = sp.symbols("s d r w")
        parts = sp.apart((d_ + r_ / (s_ + w_)) / s_, s_)
        vals = {d_: 0.7, r_: -1.3, w_: 2.5}
        c0 = float(sp.limit(parts * s_, s_, 0).subs(vals))
        c1 = float(sp.limit(parts * (s_ + w_), s_, -w_).subs(vals))
        ap = _integrator_form(PoleSet([2.5]), np.array([-1.3]), 0.7, 0.5, grid)
        np.testing.assert_allclose(ap.residues.real, [c0, c1], rtol=1e-14)
        np.testing.assert_array_equal(ap.poles, [0.0, 2.5])

    def test_half_order_baseline(self, fit_half_integrator):
        ap = fit_half_integrator
        assert ap.poles[0] == 0 and ap.N == 20 and ap.stable()
        # regression baseline from the default run: about 8.8e-5
        assert 1e-6 < ap.J < 1e-3

    def test_pole_at_origin_refused(self, grid):
        with pytest.raises(ConversionError):
            _integrator_form(PoleSet([0.0, 1.0]), np.ones(2), 0.0, 0.5, grid)

    def test_order_range(self, grid):
        with pytest.raises(DomainError):
            fit_with_integrator(1.5, grid)


class TestApproximant:
    def test_error_of_exact_model_is_zero(self, grid):
        assert error_J(RationalApproximant([0.0], [1.0]), 1.0, grid) == 0.0

    def test_error_J_agrees_with_fit(self, fit_half, grid):
        assert error_J(fit_half, 0.5, grid) == pytest.approx(fit_half.J, rel=1e-12)

    def test_zpk_reproduces_values(self):
        ap = RationalApproximant([1.0, 2 + 1j, 2 - 1j], [0.5, 1 - 1j, 1 + 1j])
        z, p, k = ap.zpk()
        s = np.array([0.3j, 2j, 5.0])
        direct = k * np.prod(s[:, None] - z, axis=1) / np.prod(s[:, None] - p, axis=1)
        np.testing.assert_allclose(direct, ap(s), rtol=1e-12)

    def test_direct_term_added(self):
        ap = RationalApproximant([1.0], [1.0], direct=2.0)
        assert ap(1j) == pytest.approx(2 + 1 / (1 + 1j))

    @given(st.lists(st.floats(-1e6, 1e6, allow_subnormal=True), min_size=4, max_size=4))
    def test_text_round_trip_bit_exact(self, xs):
        ap = RationalApproximant(
            [abs(xs[0]) + 1e-3, complex(1, xs[1]), complex(1, -xs[1])],
            [xs[2], complex(xs[3], 1), complex(xs[3], -1)],
            alpha=0.3,
            J=xs[0] ** 2,
            history=[1.0, xs[0] ** 2],
        )
        back = RationalApproximant.loads(ap.dumps())
        np.testing.assert_array_equal(back.poles, ap.poles)
        np.testing.assert_array_equal(back.residues, ap.residues)
        assert (back.alpha, back.J, back.history) == (ap.alpha, ap.J, ap.history)

    def test_degree_mismatch_in_file(self):
        d = RationalApproximant([1.0], [1.0]).to_dict()
        d["N"] = 3
        with pytest.raises(ValueError):
            RationalApproximant.from_dict(d)

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            SamplingGrid(np.array([1.0, 0.5]), 0.5, 1.0)
