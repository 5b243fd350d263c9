import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colombeau.asymptotics import (
    DEFAULT_TOLERANCES,
    MODERATE,
    NEGLIGIBLE,
    NOT_MODERATE,
    REGULAR,
    EpsilonLadder,
    GeneralizedNumber,
    ScalingFit,
    Tolerances,
    check_slow_scale,
    classify_net,
    fit_valuation,
    gn_add,
    gn_mul,
    ultra_pseudo_norm,
)
from colombeau.errors import InsufficientLadder, LadderMismatch

L = EpsilonLadder.dyadic(2, 18)
EPS = L.values


def _fit(b, residual=0.0, floor=False):
    return ScalingFit(b, 0.0, residual, floor)


class TestLadder:
    def test_default_dyadic(self):
        assert len(L) == 17
        assert EPS[0] == 0.25
        assert EPS[-1] == 2.0**-18

    @pytest.mark.parametrize("kw", [dict(anchor=2.0), dict(ratio=1.0), dict(count=5), dict(anchor=0.25, ratio=0.9, count=8)])
    def test_rejects_bad_ladders(self, kw):
        with pytest.raises(ValueError):
            EpsilonLadder(**kw)

    def test_suffix(self):
        assert np.array_equal(L.suffix(3), EPS[3:])


class TestFitValuation:
    def test_pure_square(self):
        f = fit_valuation(EPS, EPS**2)
        assert f.exponent == pytest.approx(2.0, abs=1e-12)
        assert f.residual < 1e-12

    def test_zero_net_sets_floor_flag(self):
        f = fit_valuation(EPS, np.zeros_like(EPS))
        assert f.exponent == math.inf and f.floor_flag

    def test_perturbed_power(self):
        f = fit_valuation(EPS, EPS**-1 * (1 + 0.1 * np.sin(np.log(EPS))))
        assert -1.1 <= f.exponent <= -0.9
        # frozen from a run on the default ladder
        assert f.exponent == pytest.approx(-1.00712, abs=1e-4)

    def test_order_does_not_matter(self):
        a = fit_valuation(EPS, EPS**3.5)
        b = fit_valuation(EPS[::-1], (EPS**3.5)[::-1])
        assert a.exponent == pytest.approx(b.exponent, abs=1e-12)

    def test_too_few_points(self):
        with pytest.raises(InsufficientLadder):
            fit_valuation(EPS[:3], EPS[:3] ** 2)

    def test_rejects_negative_and_nan(self):
        with pytest.raises(ValueError):
            fit_valuation(EPS, -EPS)
        with pytest.raises(ValueError):
            fit_valuation(EPS, np.full_like(EPS, np.nan))

    @given(c=st.floats(1e-6, 1e6), b=st.floats(-20, 20))
    @settings(max_examples=100, deadline=None)
    def test_exact_on_power_laws(self, c, b):
        f = fit_valuation(EPS, c * EPS**b)
        assert abs(f.exponent - b) < 1e-9
        assert f.residual < 1e-9

    @given(c=st.floats(1e-3, 1e3), b=st.floats(-5, 5), k=st.floats(1e-3, 1e3))
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance(self, c, b, k):
        m = c * EPS**b * (1 + 0.3 * np.cos(3 * np.log(EPS)))
        f1, f2 = fit_valuation(EPS, m), fit_valuation(EPS, k * m)
        assert f1.exponent == pytest.approx(f2.exponent, abs=1e-9)
        assert f2.intercept - f1.intercept == pytest.approx(math.log(k), abs=1e-9)


class TestGeneralizedNumber:
    def test_ultra_norm_examples(self):
        assert ultra_pseudo_norm(GeneralizedNumber.constant(1.0, L)) == pytest.approx(1.0)
        assert ultra_pseudo_norm(GeneralizedNumber(EPS, L)) == pytest.approx(math.exp(-1), rel=1e-9)
        assert ultra_pseudo_norm(GeneralizedNumber(EPS**-2, L)) == pytest.approx(math.exp(2), rel=1e-9)

    def test_add_negation_is_zero(self):
        x = GeneralizedNumber(EPS**0.5 + 1j * EPS, L)
        z = gn_add(x, -x)
        assert np.all(z.values == 0)
        assert ultra_pseudo_norm(z) == 0.0

    def test_mul_and_add_valuations(self):
        e = GeneralizedNumber(EPS, L)
        assert gn_mul(e, e).valuation() == pytest.approx(2.0, abs=1e-12)
        # eps + eps^2: min-valuation rule, slope slightly above 1 from the coarse points
        v = gn_add(e, gn_mul(e, e)).valuation()
        assert v == pytest.approx(1.0, abs=0.05)
        assert v >= 1.0

    def test_operators_and_scalars(self):
        e = GeneralizedNumber(EPS, L)
        assert np.allclose((2 * e - e).values, EPS)
        assert np.allclose((1 - e).values, 1 - EPS)

    def test_ladder_mismatch(self):
        other = EpsilonLadder.dyadic(3, 19)
        with pytest.raises(LadderMismatch):
            GeneralizedNumber.constant(1, L) + GeneralizedNumber.constant(1, other)

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            GeneralizedNumber(np.ones(3), L)

    @given(b1=st.floats(-10, 10), b2=st.floats(-10, 10), c1=st.floats(0.1, 10), c2=st.floats(0.1, 10))
    @settings(max_examples=100, deadline=None)
    def test_ultrametric_same_sign(self, b1, b2, c1, c2):
        # without cancellation log|x+y| is a convex blend and the slope stays >= min
        x = GeneralizedNumber(c1 * EPS**b1, L)
        y = GeneralizedNumber(c2 * EPS**b2, L)
        assert ultra_pseudo_norm(x + y) <= max(ultra_pseudo_norm(x), ultra_pseudo_norm(y)) * (1 + 1e-9) + 1e-6

    @given(b1=st.floats(-10, 10), b2=st.floats(-10, 10))
    @settings(max_examples=100, deadline=None)
    def test_submultiplicative(self, b1, b2):
        x = GeneralizedNumber(EPS**b1, L)
        y = GeneralizedNumber(3 * EPS**b2, L)
        assert ultra_pseudo_norm(x * y) <= ultra_pseudo_norm(x) * ultra_pseudo_norm(y) * (1 + 1e-9)


class TestClassifyNet:
    def test_constant_is_regular(self):
        mc = classify_net({i: _fit(0.0) for i in range(5)})
        assert mc.tag == REGULAR and mc.uniform_exponent == 0 and mc.is_regular

    def test_sin_profile_is_moderate(self):
        mc = classify_net({i: _fit(-float(i)) for i in range(5)})
        assert mc.tag == MODERATE and not mc.is_regular and mc.is_moderate
        assert mc.uniform_exponent == 4
        assert mc.per_order_exponents == {i: float(i) for i in range(5)}

    def test_deep_decay_is_negligible(self):
        assert classify_net({i: _fit(9.0) for i in range(5)}).tag == NEGLIGIBLE
        assert classify_net({0: _fit(math.inf, floor=True)}).tag == NEGLIGIBLE

    def test_residual_gate(self):
        mc = classify_net({0: _fit(-1.0, residual=0.9), 1: _fit(-1.0)})
        assert mc.tag == NOT_MODERATE and "residual_gate" in mc.flags

    def test_growth_beyond_n_max(self):
        assert classify_net({0: _fit(-50.0)}).tag == NOT_MODERATE

    @given(b=st.floats(-30, 30), q1=st.floats(1, 20), q2=st.floats(1, 20))
    def test_raising_q_max_never_creates_negligible(self, b, q1, q2):
        lo, hi = sorted((q1, q2))
        fits = {0: _fit(b), 1: _fit(b + 0.5)}
        if classify_net(fits, hi).tag == NEGLIGIBLE:
            assert classify_net(fits, lo).tag == NEGLIGIBLE

    def test_tolerance_override(self):
        tol = DEFAULT_TOLERANCES.override(tau_n=5.0)
        assert classify_net({i: _fit(-float(i)) for i in range(5)}, tol=tol).tag == REGULAR
        with pytest.raises(KeyError):
            DEFAULT_TOLERANCES.override(nope=1)
        assert Tolerances().as_dict()["q_max"] == 8.0

    def test_as_dict(self):
        d = classify_net({0: _fit(0.0)}).as_dict()
        assert d["tag"] == REGULAR and d["per_order_exponents"] == {"0": -0.0}

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            classify_net({})


class TestSlowScale:
    def test_log_passes(self):
        omega = np.log(1 / EPS) + 2
        cert = check_slow_scale(EPS, omega)
        assert cert.passed
        expected = [float(np.max(omega**p * EPS)) for p in (1, 2, 4, 8)]
        assert np.allclose(cert.constants, expected, rtol=1e-12)

    def test_inverse_eps_fails(self):
        cert = check_slow_scale(EPS, 1 / EPS)
        assert not cert.passed
        assert cert.tail_exponents[1] == pytest.approx(-1.0, abs=1e-9)

    def test_constant_passes(self):
        cert = check_slow_scale(EPS, np.ones_like(EPS))
        assert cert.passed
        assert cert.constants[0] == pytest.approx(EPS[0])

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            check_slow_scale(EPS, np.zeros_like(EPS))
