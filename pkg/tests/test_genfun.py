import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colombeau.asymptotics import MODERATE, NEGLIGIBLE, NOT_MODERATE, REGULAR, fit_valuation
from colombeau.errors import EvaluationError, OutOfDomain, UnsupportedOrder
from colombeau.genfun import (
    CellGrid,
    DistributionAtom,
    DistributionSpec,
    Grid,
    RepresentativeNet,
    SeminormSpec,
    classify,
    derivative,
    embed_distribution,
    embed_smooth,
    net_from_expression,
    point_value,
    seminorm,
    seminorm_fits,
)
from colombeau.mollifier import Mollifier

K = ((-1.0, 1.0),)


class TestGrid:
    def test_spacing_and_shape(self):
        assert Grid(1, ((-1, 1),), 64).h == 2 / 64
        assert Grid(2, ((-1, 1), (0, 2)), 64).shape == (64, 64)

    @pytest.mark.parametrize("points", [32, 100, 2**15])
    def test_points_must_be_power_of_two_in_range(self, points):
        with pytest.raises(ValueError):
            Grid(1, ((-1, 1),), points)

    def test_dimension_capped(self):
        with pytest.raises(ValueError):
            Grid(3, ((-1, 1),) * 3, 64)


class TestCellGrid:
    def test_lookup(self, cells):
        assert cells.cells_containing((0.0,)) == {(7,), (8,)}
        assert cells.center((7,)) == (-0.25,)
        assert cells.dilate({(7,)}) == {(6,), (7,), (8,)}
        assert len(cells.all_cells()) == 16
        assert cells.cells_meeting(((-0.1, 0.1),)) == {(7,), (8,)}

    def test_scalar_count_broadcasts(self):
        c = CellGrid(((-1, 1), (-1, 1)), 4)
        assert c.counts == (4, 4)
        assert c.cells_containing((0.0, 0.0)) == {(1, 1), (1, 2), (2, 1), (2, 2)}


class TestClassify:
    @pytest.mark.parametrize(
        "expr, tag, exps",
        [
            ("sin(x/eps)", MODERATE, [0, 1, 2, 3, 4]),
            ("exp(-x^2)", REGULAR, [0, 0, 0, 0, 0]),
            ("eps^3*sin(x)", REGULAR, [-3, -3, -3, -3, -3]),
        ],
    )
    def test_examples(self, grid, ladder, expr, tag, exps):
        mc = classify(net_from_expression(expr, grid, ladder), K, 4)
        assert mc.tag == tag
        assert np.allclose([mc.per_order_exponents[i] for i in range(5)], exps, atol=1e-4)

    def test_exp_minus_inverse_eps_is_negligible(self, grid, ladder):
        assert classify(net_from_expression("exp(-1/eps)", grid, ladder), K, 4).tag == NEGLIGIBLE

    def test_identity_seminorm(self, grid, ladder):
        u = net_from_expression("x", grid, ladder)
        assert np.allclose(seminorm(u, SeminormSpec.compact(K, 1)), 1.0)
        assert classify(u, K).tag == REGULAR

    def test_negligible_perturbation_changes_nothing(self, grid, ladder):
        u = net_from_expression("sin(x/eps)", grid, ladder)
        v = u + net_from_expression("eps^12*cos(x)", grid, ladder)
        a, b = classify(u, K, 3), classify(v, K, 3)
        assert (a.tag, a.uniform_exponent) == (b.tag, b.uniform_exponent)
        for i in range(4):
            assert a.per_order_exponents[i] == pytest.approx(b.per_order_exponents[i], abs=1e-6)

    def test_errors(self, grid, ladder):
        u = net_from_expression("x", grid, ladder)
        with pytest.raises(OutOfDomain):
            seminorm(u, SeminormSpec.compact(((-5, 1),), 0))
        with pytest.raises(UnsupportedOrder):
            seminorm(u, SeminormSpec.compact(K, 5))
        with pytest.raises(ValueError):
            seminorm(u, SeminormSpec.tempered(1))

    def test_tempered(self, grid, ladder):
        u = RepresentativeNet(grid, ladder, source=net_from_expression("exp(-x^2)", grid, ladder).source, tempered_weight=0)
        vals = seminorm(u, SeminormSpec.tempered(1))
        x = grid.axis()
        ref = np.max((1 + np.abs(x)) * np.maximum(np.exp(-x * x), np.abs(2 * x * np.exp(-x * x))))
        assert np.allclose(vals, ref)


class TestEmbedSmooth:
    def test_rejects_eps(self, grid, ladder):
        with pytest.raises(ValueError):
            embed_smooth("x*eps", grid, ladder)

    def test_non_finite(self, ladder):
        with pytest.raises(EvaluationError):
            embed_smooth("1/x", Grid(1, ((-1, 1),), 64), ladder)


class TestEmbedDistribution:
    def test_delta_is_scaled_mollifier(self, grid, ladder):
        rho = Mollifier(1)
        u = embed_distribution(DistributionSpec(1, (DistributionAtom(1.0, (0,), (0.0,)),)), rho, grid, ladder)
        p0 = seminorm(u, SeminormSpec.compact(K, 0))
        peak = float(rho.profile.evaluate((np.array([0.0]),), 1.0)[0])
        assert np.allclose(p0 * ladder.values, peak, rtol=1e-12)
        mc = classify(u, K, 4)
        assert mc.tag == MODERATE
        assert np.allclose([mc.per_order_exponents[i] for i in range(5)], [1, 2, 3, 4, 5], atol=1e-6)

    def test_heaviside(self, grid, ladder):
        u = embed_distribution(DistributionSpec(1, (), "heaviside(x)"), Mollifier(1), grid, ladder)
        s = u.samples
        assert s.min() >= 0.0 and s.max() <= 1.0
        x = grid.axis()
        for k, e in enumerate(ladder.values):
            assert np.allclose(s[k][x >= e], 1.0) and np.allclose(s[k][x <= -e], 0.0)
        assert classify(u, K, 4).tag == MODERATE

    def test_mixed_atoms_and_jumps_are_moderate(self, grid, ladder):
        d = DistributionSpec(1, (DistributionAtom(2.0, (1,), (0.3,)),), "heaviside(x-0.5)*cos(x)")
        mc = classify(embed_distribution(d, Mollifier(1), grid, ladder), K, 2)
        assert mc.tag == MODERATE
        assert np.allclose([mc.per_order_exponents[i] for i in range(3)], [2, 3, 4], atol=0.01)

    def test_density_converges(self, grid, ladder):
        f = "exp(-x^2)*cos(x)"
        a = embed_distribution(DistributionSpec(1, (), f), Mollifier(1), grid, ladder)
        b = embed_smooth(f, grid, ladder)
        for i in range(3):
            fit = fit_valuation(ladder.values, seminorm(a - b, SeminormSpec.compact(K, i)))
            # symmetric mollifier: first moment vanishes, so the gap is O(eps^2)
            assert fit.exponent >= 1.0
            assert fit.exponent == pytest.approx(2.0, abs=0.05)

    def test_two_dimensional_delta(self, ladder):
        g = Grid(2, ((-2, 2), (-2, 2)), 128)
        u = embed_distribution(DistributionSpec(2, (DistributionAtom(1.0, (0, 0), (0.0, 0.0)),)), Mollifier(2), g, ladder)
        fits = seminorm_fits(u, ((-1, 1), (-1, 1)), 2)
        assert [round(fits[i].exponent, 3) for i in range(3)] == [-2.0, -3.0, -4.0]

    def test_atom_outside(self, grid, ladder):
        with pytest.raises(OutOfDomain):
            embed_distribution(DistributionSpec(1, (DistributionAtom(1.0, (0,), (5.0,)),)), Mollifier(1), grid, ladder)


class TestDerivative:
    def test_closed_form_exact(self, grid, ladder):
        d = derivative(net_from_expression("sin(x)", grid, ladder), (1,))
        assert np.max(np.abs(d.samples - np.cos(grid.axis()))) == 0.0
        assert d.discretization_error == 0.0

    @given(k=st.integers(1, 12), order=st.integers(1, 4))
    @settings(max_examples=20, deadline=None)
    def test_spectral_on_band_limited(self, ladder, k, order):
        g = Grid(1, ((-np.pi, np.pi),), 256, periodic=True)
        x = g.axis()
        u = RepresentativeNet(g, ladder, samples=np.tile(np.sin(k * x), (len(ladder), 1)))
        d = derivative(u, (order,))
        ref = k**order * np.sin(k * x + order * np.pi / 2)
        err = np.max(np.abs(d.samples - ref))
        if order <= 2:
            assert err < 1e-8 * k**order
        else:
            # FFT round-off is amplified by k_max^order
            kmax = g.points / 2
            assert err < 1e-8 * k**order + 1e-15 * kmax**order

    def test_dimension_check(self, grid, ladder):
        with pytest.raises(ValueError):
            derivative(net_from_expression("x", grid, ladder), (1, 0))


class TestPointValue:
    def test_oscillation_at_scaled_point(self, grid, ladder):
        u = net_from_expression("sin(x/eps)", grid, ladder)
        v = point_value(u, np.pi * ladder.values / 2)
        assert np.allclose(v.values, 1.0, atol=1e-12)

    def test_sampled_interpolation(self, ladder):
        g = Grid(1, ((-np.pi, np.pi),), 256, periodic=True)
        u = RepresentativeNet(g, ladder, samples=np.tile(np.sin(3 * g.axis()), (len(ladder), 1)))
        assert point_value(u, 0.5).values[0] == pytest.approx(np.sin(1.5), abs=1e-3)

    def test_outside(self, grid, ladder):
        with pytest.raises(OutOfDomain):
            point_value(net_from_expression("x", grid, ladder), 9.0)


def test_not_moderate_growth(grid, ladder):
    assert classify(net_from_expression("exp(eps^(-1/2))", grid, ladder), K, 1).tag == NOT_MODERATE
