"""Tests for symbols, quantization, operator images and the theorem harness."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from colombeau.asymptotics import EpsilonLadder
from colombeau.dual import act, delta, heaviside, multiply
from colombeau.errors import AliasingError
from colombeau.fields import CutoffField
from colombeau.genfun import CellGrid, Grid, embed_smooth, net_from_expression, point_value
from colombeau.microlocal import default_cones
from colombeau.psido import (
    apply_to_functional,
    SymbolNet,
    check_hypoelliptic,
    check_micro_ellipticity,
    class_estimates,
    micro_support,
    quantize_apply,
    theorem_harness,
    transpose_apply,
)

U = ((-1.0, 1.0),)


@pytest.fixture(scope="module")
def qgrid():
    return Grid(1, ((-4.0, 4.0),), 512)


@pytest.fixture(scope="module")
def gauss(qgrid, ladder):
    return net_from_expression("exp(-4*x^2)", qgrid, ladder)


@pytest.fixture(scope="module")
def H(ladder):
    return heaviside(0.0, ladder, domain=((-4.0, 4.0),))


@pytest.fixture(scope="module")
def chi():
    return CutoffField((0.0,), 2.0, 1)


@pytest.fixture(scope="module")
def plus():
    return default_cones(1)[0]


# quantization

def test_identity_symbol(gauss):
    out = quantize_apply(SymbolNet("1"), gauss)
    assert np.max(np.abs(out.samples - gauss.samples)) < 1e-13


def test_derivative_symbol(gauss, qgrid):
    out = quantize_apply(SymbolNet("i*xi"), gauss)
    exact = -8 * qgrid.axis() * gauss.samples[0]
    assert np.max(np.abs(out.samples - exact)) < 1e-12


def test_multiplier_symbol(gauss, qgrid):
    out = quantize_apply(SymbolNet("cos(x)"), gauss)
    assert np.max(np.abs(out.samples - np.cos(qgrid.axis()) * gauss.samples)) < 1e-13


def test_linearity(gauss):
    a, b = SymbolNet("x*xi^2+<xi>"), SymbolNet("exp(-xi^2)*sin(x)")
    s = quantize_apply(SymbolNet("x*xi^2+<xi>+exp(-xi^2)*sin(x)"), gauss)
    diff = s.samples - quantize_apply(a, gauss).samples - quantize_apply(b, gauss).samples
    assert np.max(np.abs(diff)) < 1e-11


def test_general_and_separable_paths_agree(gauss):
    c = SymbolNet("<xi>^2*exp(-eps*xi^2)")
    g = quantize_apply(c, gauss, path="general").samples
    s = quantize_apply(c, gauss, path="separable").samples
    assert np.max(np.abs(g - s)) < 1e-11


def test_transpose_duality(gauss, qgrid, ladder):
    v = net_from_expression("x*exp(-3*(x-0.3)^2)", qgrid, ladder)
    A = SymbolNet("x*xi+i*xi^2*cos(x)")
    lhs = np.sum(quantize_apply(A, gauss).samples[0] * v.samples[0]) * qgrid.h
    rhs = np.sum(gauss.samples[0] * transpose_apply(A, v).samples[0]) * qgrid.h
    assert abs(lhs - rhs) < 1e-12


def test_aliasing_guard(qgrid, ladder):
    with pytest.raises(AliasingError):
        quantize_apply(SymbolNet("1"), net_from_expression("x", qgrid, ladder))


@settings(max_examples=15, deadline=None)
@given(c1=st.floats(-3, 3), c2=st.floats(-3, 3))
def test_scalar_linearity_in_symbol(gauss, c1, c2):
    a = quantize_apply(SymbolNet(f"({c1})*i*xi+({c2})*<xi>^2"), gauss).samples
    b = c1 * quantize_apply(SymbolNet("i*xi"), gauss).samples + c2 * quantize_apply(SymbolNet("<xi>^2"), gauss).samples
    assert np.max(np.abs(a - b)) < 1e-10 * (1 + abs(c1) + abs(c2))


# operator images on functionals

PROBES = ["bump(x/0.9)", "bump((x-0.2)/0.5)*(1+x)", "cos(3*x)*bump(x/0.8)"]


@pytest.mark.parametrize("expr", PROBES)
def test_unit_symbol_leaves_functional(expr, H, chi, qgrid, ladder):
    probe = embed_smooth(expr, qgrid, ladder)
    AT = apply_to_functional(SymbolNet("1"), H, chi)
    assert np.max(np.abs(act(AT, probe).values - act(H, probe).values)) < 1e-12


@pytest.mark.parametrize("expr,frozen", [("bump(x/0.9)", 0.36787944117), ("bump((x-0.2)/0.5)*(1+x)", 0.30407643128)])
def test_derivative_of_heaviside_is_point_value(expr, frozen, H, chi, qgrid, ladder):
    # (i xi)(x, D) is d/dx, so its image of H acts as u -> -H(u') = u(0)
    probe = embed_smooth(expr, qgrid, ladder)
    vals = act(apply_to_functional(SymbolNet("i*xi"), H, chi), probe).values
    assert vals[0] == pytest.approx(frozen, abs=1e-9)
    assert vals[0] == pytest.approx(point_value(probe, 0.0).values[0], abs=1e-9)


def test_multiplier_image_equals_multiply(H, chi, qgrid, ladder):
    probe = embed_smooth("cos(3*x)*bump(x/0.8)", qgrid, ladder)
    AT = apply_to_functional(SymbolNet("exp(-x^2)"), H, chi)
    ref = multiply(embed_smooth("exp(-x^2)", qgrid, ladder), H)
    assert np.max(np.abs(act(AT, probe).values - act(ref, probe).values)) < 1e-12


def test_operator_image_certificate(H, chi):
    cert = apply_to_functional(SymbolNet("i*xi"), H, chi).certificate
    assert tuple(cert.K) == ((-1.5, 1.5),)
    assert cert.j == 2 and cert.N == 0


# micro-ellipticity and hypoellipticity

def test_constant_symbol_micro_elliptic(ladder, plus):
    r = check_micro_ellipticity(SymbolNet("1"), U, plus, ladder)
    assert r.passed
    assert r.s[0] == pytest.approx(1.0) and r.r[0] == pytest.approx(1.0)


def test_derivative_elliptic_all_directions(ladder):
    r = check_micro_ellipticity(SymbolNet("i*xi"), U, None, ladder)
    assert r.passed
    assert r.s[0] == pytest.approx(np.sqrt(2), rel=1e-6)


def test_vanishing_multiplier_fails_with_witness(ladder, plus):
    r = check_micro_ellipticity(SymbolNet("x"), ((-0.3, 0.7),), plus, ladder)
    assert not r.passed
    assert abs(r.witness["x"][0]) < 1e-6


@pytest.mark.parametrize(
    "expr,ok",
    [("i*xi+x*cos(x)", True), ("i*xi*(1+log(1/eps))", True), ("i*xi/eps", True), ("i*xi*eps", False)],
)
def test_micro_ellipticity_eps_dependence(expr, ok, ladder, plus):
    assert check_micro_ellipticity(SymbolNet(expr), U, plus, ladder, order=1).passed is ok


def test_hypoelliptic_japanese_bracket(ladder):
    r = check_hypoelliptic(SymbolNet("<xi>^2"), U, 2, ladder)
    assert r.passed
    assert r.omega1[0] == pytest.approx(1.0) and r.omega2[0] == pytest.approx(2.0)


def test_hypoelliptic_eps_weight(ladder):
    r = check_hypoelliptic(SymbolNet("eps*<xi>^2"), U, 2, ladder)
    assert r.passed
    assert r.omega1_fit.exponent == pytest.approx(1.0, abs=1e-6)


def test_hypoelliptic_fails_on_characteristic_point(ladder):
    assert check_hypoelliptic(SymbolNet("i*xi"), U, 1, ladder).passed
    r = check_hypoelliptic(SymbolNet("x*xi"), U, 1, ladder)
    assert not r.passed
    assert abs(r.witness["x"][0]) < 1e-6


# micro-support and symbol classes

@pytest.fixture(scope="module")
def mcells():
    return CellGrid(((-2.0, 2.0),), (4,))


def test_gaussian_symbol_smoothing_everywhere(mcells, ladder):
    m = micro_support(SymbolNet("exp(-xi^2)"), mcells, ladder)
    assert len(m.flags) == 8
    assert len(m.smoothing("Ginf")) == 8


def test_derivative_symbol_nowhere_smoothing(mcells, ladder):
    assert len(micro_support(SymbolNet("i*xi"), mcells, ladder).smoothing("G")) == 0


def test_mollifier_symbol_G_but_not_Ginf(mcells, ladder):
    m = micro_support(SymbolNet("exp(-eps^2*xi^2)"), mcells, ladder)
    assert len(m.smoothing("G")) == 8
    assert len(m.smoothing("Ginf")) == 0


def test_localized_micro_support(mcells, ladder):
    m = micro_support(SymbolNet("exp(-xi^2)+cutoff(x,1)*xi"), mcells, ladder)
    assert sorted(m.support("G")) == [((1,), 0), ((1,), 1), ((2,), 0), ((2,), 1)]


def test_class_estimates(ladder):
    c = class_estimates(SymbolNet("<xi>^2*(1+x^2)", regular=True), U, ladder)
    assert c.bounded and c.regular_verified
    assert not class_estimates(SymbolNet("xi/eps", regular=True), U, ladder).regular_verified
    assert class_estimates(SymbolNet("xi*log(1/eps)", slow_scale=True), U, ladder).slow_scale_verified
    osc = class_estimates(SymbolNet("xi*sin(x/eps)", regular=True), U, ladder)
    assert not osc.regular_verified


# theorem harness

@pytest.fixture(scope="module")
def hcells():
    return CellGrid(((-2.0, 2.0),), (8,))


def test_harness_pseudolocality(ladder, hcells):
    r = theorem_harness("pseudolocality", dict(T=delta(0.0, ladder), a=SymbolNet("i*xi"), cells=hcells))
    assert r.passed and len(r.checks) == 2


def test_harness_projection(ladder, hcells):
    assert theorem_harness("projection", dict(T=delta(0.7, ladder), cells=hcells)).passed


def test_harness_wf_op_bound(ladder, hcells):
    T = heaviside(0.0, ladder, domain=((-2.0, 2.0),))
    assert theorem_harness("wf_op_bound", dict(T=T, a=SymbolNet("i*xi"), cells=hcells)).passed


def test_harness_noncharacteristic(ladder, hcells):
    T = heaviside(0.0, ladder, domain=((-2.0, 2.0),))
    r = theorem_harness("noncharacteristic", dict(T=T, p=SymbolNet("i*xi"), cells=hcells))
    assert r.passed
    assert r.details["non_elliptic"] == []


@pytest.fixture(scope="module")
def oscillating():
    # eps-oscillation keeps u non-regular, so a wrong P cannot pass by accident
    lad = EpsilonLadder.dyadic(2, 16)
    return net_from_expression("sin(x/(128*eps))*exp(-x^2)", Grid(1, ((-8.0, 8.0),), 8192), lad)


def test_harness_parametrix(oscillating):
    A = SymbolNet("1+xi^2")
    good = theorem_harness("parametrix_identity", dict(A=A, P=SymbolNet("1/(1+xi^2)"), u=oscillating))
    assert good.passed and good.details["max_residual"] == 0.0
    bad = theorem_harness("parametrix_identity", dict(A=A, P=SymbolNet("1"), u=oscillating))
    assert not bad.passed


def test_harness_unknown_case():
    with pytest.raises(ValueError, match="unknown harness case"):
        theorem_harness("bogus", {})
