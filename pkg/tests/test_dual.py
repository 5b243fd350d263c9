import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad

from colombeau.asymptotics import fit_valuation
from colombeau.dual import (
    act,
    act_parametric,
    atom,
    convolve_fun_functional,
    convolve_functionals,
    ddelta,
    delta,
    density,
    estimate_support,
    from_net,
    heaviside,
    integrate,
    multiply,
    regularization_defect,
    regularization_report,
    regularize,
    standard_probes,
    verify_certificate,
)
from colombeau.errors import AliasingError, CertificateViolation, LadderMismatch
from colombeau.asymptotics import EpsilonLadder
from colombeau.fields import ScaledField, bump_field
from colombeau.genfun import Grid, embed_smooth, net_from_expression, net_from_field
from colombeau.mollifier import Mollifier


@pytest.fixture(scope="module")
def one(grid, ladder):
    return embed_smooth("1", grid, ladder)


class TestAct:
    def test_delta_on_one(self, ladder, one):
        assert np.all(act(delta(0.0, ladder), one).values == 1.0)

    def test_integral_of_gaussian(self, wide_grid, ladder):
        g = embed_smooth("exp(-x^2)", wide_grid, ladder)
        v = act(integrate(((-8, 8),), ladder), g).values
        assert np.max(np.abs(v - np.sqrt(np.pi))) < 1e-6

    def test_scaled_atom_valuation(self, ladder, one):
        T = atom((0.0,), (0,), ladder, coeff=lambda e: 1 / e)
        assert act(T, one).valuation() == pytest.approx(-1.0, abs=1e-12)

    def test_atom_vs_distributional_sign(self, grid, ladder):
        u = net_from_expression("x^2 + 3*x", grid, ladder)
        assert act(atom((1.0,), (1,), ladder), u).values[0] == pytest.approx(5.0)
        assert act(ddelta(1.0, (1,), ladder), u).values[0] == pytest.approx(-5.0)

    def test_heaviside(self, grid, ladder):
        u = embed_smooth("exp(-x^2)", grid, ladder)
        v = act(heaviside(0.0, ladder, domain=grid.box), u).values[0]
        ref = quad(lambda t: np.exp(-t * t), 0, 4)[0]
        assert v == pytest.approx(ref, abs=1e-10)

    def test_ladder_mismatch(self, grid, ladder):
        other = EpsilonLadder.dyadic(3, 19)
        with pytest.raises(LadderMismatch):
            delta(0.0, ladder) + delta(0.0, other)

    @given(a=st.complex_numbers(max_magnitude=10), b=st.complex_numbers(max_magnitude=10))
    @settings(max_examples=25, deadline=None)
    def test_bilinear(self, grid, ladder, a, b):
        S = delta(0.3, ladder)
        T = density("exp(-x^2)", ladder, ((-1, 1),))
        u = embed_smooth("cos(x)", grid, ladder)
        lhs = act(S.scale(a) + T.scale(b), u).values
        rhs = a * act(S, u).values + b * act(T, u).values
        assert np.allclose(lhs, rhs, rtol=1e-13, atol=1e-13)


class TestCertificate:
    def test_delta_passes(self, ladder):
        rep = verify_certificate(delta(0.0, ladder).with_certificate(((-1, 1),), 0, 0))
        assert rep.passed and rep.fitted_N == pytest.approx(0.0, abs=1e-12)
        assert rep.worst_ratio == pytest.approx(1.0)

    def test_growing_atom_fails(self, ladder):
        T = atom((0.0,), (0,), ladder, coeff=lambda e: e**-2).with_certificate(((-1, 1),), 0, 1)
        rep = verify_certificate(T)
        assert not rep.passed and rep.fitted_N == pytest.approx(2.0, abs=1e-9)

    def test_derivative_of_delta_needs_order_one(self, ladder):
        T = ddelta(0.0, (1,), ladder).with_certificate(((0, 0),), 0, 0)
        with pytest.raises(CertificateViolation):
            verify_certificate(T, probes=["x"])

    def test_probe_family(self):
        assert len(standard_probes(((-1, 1),), 1)) == 8
        assert len(standard_probes(((-1, 1), (-1, 1)), 2)) == 7


class TestParametric:
    def test_separable(self, ladder):
        g2 = Grid(2, ((-2, 2), (-2, 2)), 64)
        r = act_parametric(delta(0.0, ladder), net_from_expression("exp(-x^2)*cos(y)", g2, ladder))
        assert np.max(np.abs(r.samples - np.exp(-g2.axis(0) ** 2))) < 1e-14

    def test_derivative_atom(self, ladder):
        g2 = Grid(2, ((-2, 2), (-2, 2)), 64)
        u = net_from_expression("x*y", g2, ladder)
        assert np.allclose(act_parametric(atom((0.0,), (1,), ladder), u).samples, g2.axis(0))
        assert np.allclose(act_parametric(ddelta(0.0, (1,), ladder), u).samples, -g2.axis(0))

    def test_integral_operator(self, ladder):
        from scipy.special import erf

        g2 = Grid(2, ((-2, 2), (-2, 2)), 64)
        r = act_parametric(integrate(((-2, 2),), ladder), net_from_expression("exp(-(x-y)^2)", g2, ladder))
        x = g2.axis(0)
        assert np.max(np.abs(r.samples - np.sqrt(np.pi) / 2 * (erf(2 - x) + erf(2 + x)))) < 1e-12


class TestConvolution:
    def test_identity_and_translation(self, grid, ladder):
        b = net_from_field(bump_field((0.0,), 1.0, 1), grid, ladder)
        assert np.max(np.abs(convolve_fun_functional(b, delta(0.0, ladder)).samples - b.samples)) < 1e-10
        shifted = convolve_fun_functional(b, delta(0.5, ladder)).samples[0]
        assert np.max(np.abs(shifted - np.interp(grid.axis() - 0.5, grid.axis(), b.samples[0]))) < 1e-10

    def test_mollifier_against_integral(self, grid, ladder):
        m = net_from_field(Mollifier(1).profile, grid, ladder)
        c = convolve_fun_functional(m, integrate(((-3, 3),), ladder)).samples[0]
        assert np.allclose(c[np.abs(grid.axis()) < 1.5], 1.0, atol=1e-12)

    def test_atoms_add(self, ladder):
        ab = convolve_functionals(delta(0.5, ladder), delta(-1.25, ladder))
        assert len(ab.atoms) == 1 and ab.atoms[0].loc[0][0] == -0.75
        dd = convolve_functionals(ddelta(0.0, (1,), ladder), delta(0.0, ladder))
        assert dd.atoms[0].alpha == (1,) and dd.atoms[0].coeff[0] == -1

    def test_coefficient_valuation(self, ladder):
        s = convolve_functionals(atom((0.0,), (0,), ladder, coeff=lambda e: 1 / e), delta(0.7, ladder))
        assert fit_valuation(ladder.values, np.abs(s.atoms[0].coeff)).exponent == pytest.approx(-1.0)
        assert s.atoms[0].loc[0][0] == 0.7

    def test_consistency_with_function_convolution(self, grid, ladder):
        b = bump_field((0.2,), 0.8, 1)
        u = net_from_field(b, grid, ladder)
        T = delta(0.5, ladder) + density("exp(-x^2)", ladder, ((-1, 1),))
        v = embed_smooth("cos(x) + x^2", grid, ladder)
        lhs = act(convolve_functionals(from_net(u), T), v).values[0].real
        # independent double quadrature of  integral v (u * T)
        uf = lambda t: float(b.evaluate((np.array([t]),), 1.0)[0])  # noqa: E731
        vf = lambda t: np.cos(t) + t * t  # noqa: E731
        ref = quad(lambda x: vf(x) * uf(x - 0.5), -0.1, 1.5, limit=200, epsabs=1e-14)[0]
        ref += dblquad(lambda x, y: np.exp(-y * y) * uf(x - y) * vf(x), -1, 1, lambda y: y - 0.6, lambda y: y + 1, epsabs=1e-13)[0]
        assert ref == pytest.approx(1.1118044682844128, abs=1e-12)
        assert abs(lhs - ref) < 1e-6

    def test_support_rule(self, ladder, cells):
        S = delta(0.6, ladder) + integrate(((0, 1),), ladder)
        U = delta(-1.1, ladder)
        lhs = estimate_support(convolve_functionals(S, U), cells)
        mink = {(a[0] + b[0] - 8,) for a in estimate_support(S, cells) for b in estimate_support(U, cells)}
        assert lhs <= cells.dilate(mink)


class TestMultiply:
    def test_by_one(self, grid, ladder, one):
        T = delta(0.3, ladder) + integrate(((-1, 1),), ladder)
        v = embed_smooth("exp(-x^2)*(1+x)", grid, ladder)
        assert np.max(np.abs(act(multiply(one, T), v).values - act(T, v).values)) < 1e-14

    def test_vanishing_at_atom(self, grid, ladder):
        z = multiply(embed_smooth("x-0.3", grid, ladder), delta(0.3, ladder))
        v = embed_smooth("exp(-x^2)", grid, ladder)
        assert np.all(act(z, v).values == 0)

    def test_scaled_bump_times_integral(self, ladder, one):
        phi = bump_field((0.0,), 1.0, 1)
        T = multiply(ScaledField(phi, (0.0,), 1.0), integrate(((-4, 4),), ladder))
        mass = quad(lambda t: float(phi.evaluate((np.array([t]),), 1.0)[0]), -1, 1)[0]
        assert mass == pytest.approx(0.44399381616807865, rel=1e-12)
        assert np.max(np.abs(act(T, one).values - mass)) < 1e-12


class TestRegularize:
    def test_delta_closed_form(self, grid, ladder):
        rho = Mollifier(1)
        n = regularize(delta(0.0, ladder), rho, 1, grid)
        ref = np.stack([rho.profile.evaluate((grid.axis() / e,), 1.0) / e for e in ladder.values])
        assert np.max(np.abs(n.samples - ref)) <= 1e-12 * ref.max()

    def test_convergence_rate(self, ladder):
        p = Grid(1, ((-np.pi, np.pi),), 256, periodic=True)
        probe = net_from_expression("exp(-x^2)*cos(x)", p, ladder)
        rep = regularization_report(delta(0.0, ladder), Mollifier(1), [1, 2, 3], [probe])
        vals = rep["probes"][0]["valuations"]
        # symmetric mollifier: defect ~ eps^(2q)
        assert np.allclose(vals, [2.0, 4.0, 6.0], atol=1e-3)
        assert rep["probes"][0]["monotone"]
        assert all(v >= q - 1 for v, q in zip(vals, [1, 2, 3]))

    def test_aliasing_guard(self, ladder):
        p = Grid(1, ((-np.pi, np.pi),), 256, periodic=True)
        with pytest.raises(AliasingError):
            regularization_defect(delta(0.0, ladder), Mollifier(1), 1, net_from_expression("x", p, ladder))


class TestEstimateSupport:
    def test_atoms(self, ladder, cells):
        assert estimate_support(delta(0.0, ladder), cells) == {(7,), (8,)}
        assert estimate_support(delta(0.1, ladder), cells) == {(8,)}

    def test_density(self, ladder, cells):
        assert estimate_support(integrate(((-1, 1),), ladder), cells) == {(6,), (7,), (8,), (9,)}

    def test_union(self, ladder, cells):
        T = delta(-2.0, ladder) + integrate(((0, 1),), ladder)
        assert estimate_support(T, cells) == {(3,), (4,), (8,), (9,)}
