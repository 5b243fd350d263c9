import math

import numpy as np
import pytest

from colombeau.dual import atom, ddelta, delta, density, heaviside, integrate
from colombeau.errors import EmptyCone, OutOfDomain
from colombeau.genfun import CellGrid
from colombeau.microlocal import (
    Cone,
    CutoffSpec,
    LocalizedTransform,
    cone_decay_classify,
    default_cones,
    fourier_localized,
    project_singsupp,
    singsupp_direct,
    wavefront,
)

PHI = CutoffSpec((0.0,), 1.0)
SMALL = CellGrid(((-2.0, 2.0),), (8,))


class TestCone:
    def test_membership_1d(self):
        plus, minus = default_cones(1)
        assert list(plus.contains([-1.0, 0.0, 2.0])) == [False, False, True]
        assert list(minus.contains([-1.0, 0.0, 2.0])) == [True, False, False]
        assert list(Cone.full(1).contains([-1.0, 0.0, 2.0])) == [True, False, True]

    def test_membership_2d(self):
        c = Cone(0.0, math.pi / 8, 2)
        xi = np.array([[1.0, 0.0], [1.0, 0.3], [1.0, 1.0], [-1.0, 0.0]])
        assert list(c.contains(xi)) == [True, True, False, False]

    def test_default_2d_grid(self):
        cones = default_cones(2)
        assert len(cones) == 16 and all(c.half_angle == math.pi / 8 for c in cones)

    def test_cutoff_plateau(self):
        assert PHI.plateau_error() == 0.0
        with pytest.raises(ValueError):
            CutoffSpec((0.0,), 0.0)


class TestFourierLocalized:
    def test_delta_is_flat(self, ladder):
        F = fourier_localized(delta(0.0, ladder), PHI)
        assert all(np.all(v == 1.0) for v in F.values)
        assert F.xi_max[0] == 8192.0

    def test_gaussian_pair(self, ladder):
        F = fourier_localized(density("exp(-x^2)", ladder, ((-8, 8),)), CutoffSpec((0.0,), 6.0))
        xi = F.xis[0]
        m = np.abs(xi) < 30
        assert np.max(np.abs(F.values[0][m] - np.sqrt(np.pi) * np.exp(-xi[m] ** 2 / 4))) < 1e-6

    def test_derivative_of_delta(self, ladder):
        F = fourier_localized(ddelta(0.0, (1,), ladder), PHI)
        assert np.allclose(F.values[0], 1j * F.xis[0], rtol=1e-12)

    def test_explicit_frequencies_and_domain(self, ladder):
        F = fourier_localized(delta(0.5, ladder), PHI, xi=[1.0, 2.0])
        assert np.allclose(F.values[3], np.exp(-0.5j * np.array([1.0, 2.0])))
        with pytest.raises(OutOfDomain):
            fourier_localized(delta(0.0, ladder), CutoffSpec((1.5,), 1.0), check_domain=((-2, 2),))


class TestConeDecay:
    def test_flat_is_neither(self, ladder):
        d = LocalizedTransform.from_function(lambda x, e: np.ones(len(x)), ladder)
        assert cone_decay_classify(d, default_cones(1)[0]).classification == "Neither"

    def test_rapid_decay_is_ginf(self, ladder):
        d = LocalizedTransform.from_function(lambda x, e: np.exp(-(x**2)), ladder)
        prof = cone_decay_classify(d, default_cones(1)[1])
        assert prof.classification == "InGinf"
        assert all(abs(n) < 1e-9 for n in prof.N.values())

    def test_eps_scaled_gaussian_is_g_only(self, ladder):
        d = LocalizedTransform.from_function(lambda x, e: np.exp(-((e * x) ** 2)), ladder, power=1)
        prof = cone_decay_classify(d, default_cones(1)[0])
        assert prof.classification == "InGOnly"
        # frozen: N(l) ~ l from sup <xi>^l exp(-eps^2 xi^2) ~ c_l eps^-l
        assert [round(prof.N[l], 3) for l in (0, 2, 4, 8)] == [0.001, 1.998, 3.998, 7.998]

    def test_empty_cone(self, ladder):
        n = len(ladder)
        d = LocalizedTransform(ladder, 1, [np.array([1.0])] * n, [np.array([1.0 + 0j])] * n, [1.0] * n)
        with pytest.raises(EmptyCone):
            cone_decay_classify(d, Cone(-1.0, math.pi / 2, 1))


class TestWavefront1D:
    def test_delta_plus_smooth(self, ladder):
        w = wavefront(delta(0.3, ladder) + density("exp(-x^2)", ladder, ((-2, 2),)), SMALL)
        assert project_singsupp(w, "G") == {(4,)} == project_singsupp(w, "Ginf")
        assert w.labels[((4,), 0)] == w.labels[((4,), 1)] == "Singular"
        assert singsupp_direct(delta(0.3, ladder), SMALL, "G") == {(4,)}

    def test_heaviside(self, ladder):
        w = wavefront(heaviside(0.0, ladder, domain=((-2, 2),)), SMALL)
        assert project_singsupp(w, "G") == {(3,), (4,)}

    def test_g_inclusion_and_symmetry(self, ladder):
        T = heaviside(0.5, ladder, domain=((-2, 2),)) + atom((-1.0,), (0,), ladder, coeff=lambda e: 1 / e)
        w = wavefront(T, SMALL)
        assert project_singsupp(w, "G") <= project_singsupp(w, "Ginf")
        for cell in SMALL.all_cells():
            assert w.labels[(cell, 0)] == w.labels[(cell, 1)]

    def test_output_shapes(self, ladder):
        w = wavefront(delta(0.3, ladder), SMALL)
        d = w.as_dict()
        assert set(d) == {"mode", "box", "counts", "cones", "cells", "degraded", "notes", "resolution"}
        assert set(w.fit_rows()[0]) == {"x_center", "cone", "l", "exponent", "residual"}

    def test_bad_mode(self, ladder):
        with pytest.raises(ValueError):
            wavefront(delta(0.0, ladder), SMALL, mode="X")
        with pytest.raises(ValueError):
            project_singsupp(wavefront(delta(0.0, ladder), SMALL), "X")


class TestWavefront2D:
    CELLS = CellGrid(((-1.0, 1.0), (-1.0, 1.0)), (4, 4))

    def test_point_atom(self, ladder):
        w = wavefront(atom((0.1, 0.1), (0, 0), ladder, dimension=2), self.CELLS)
        assert project_singsupp(w, "G") == {(2, 2)} == project_singsupp(w, "Ginf")
        # real functional: antipodal cones agree
        for (cell, k), lab in w.labels.items():
            assert lab == w.labels[(cell, (k + 8) % 16)]

    def test_smooth_density_regular(self, ladder):
        w = wavefront(density("exp(-x^2-y^2)", ladder, ((-1, 1), (-1, 1)), dimension=2), self.CELLS)
        assert project_singsupp(w, "Ginf") == set()
        assert any("resolves l in [0, 2, 4]" in n for n in w.notes)

    def test_half_plane_is_conormal(self, ladder):
        w = wavefront(density("1", ladder, ((0, 2), (-2, 2)), dimension=2), self.CELLS)
        assert project_singsupp(w, "G") == {(1, 1), (1, 2), (2, 1), (2, 2)}
        labels = {w.cones[k].label(): lab for (c, k), lab in w.labels.items() if c == (1, 1)}
        assert labels["0"] == labels["3.14159"] == "Singular"
        assert labels["1.5708"] == labels["4.71239"] == "RegularBoth"


def test_integral_has_empty_ginf_wavefront(ladder):
    w = wavefront(integrate(((-4, 4),), ladder), CellGrid(((-2.0, 2.0),), (8,)))
    assert project_singsupp(w, "Ginf") == set()
