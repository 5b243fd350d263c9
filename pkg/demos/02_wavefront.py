"""Wave front sets of delta, a jump, a smooth density and a scaled bump in 1D.

The scaled bump phi_eps = eps^-1 phi(x/eps) is G-regular at 0 (one eps power
controls every weight) but not G-infinity regular.
"""
from colombeau.asymptotics import EpsilonLadder
from colombeau.dual import delta, density, heaviside, scaled_density
from colombeau.fields import bump_field
from colombeau.genfun import CellGrid
from colombeau.microlocal import wavefront

ladder = EpsilonLadder.dyadic(2, 18)
cells = CellGrid(((-4.0, 4.0),), (16,))

functionals = {
    "delta": delta(0.0, ladder),
    "heaviside": heaviside(0.0, ladder, domain=((-4.0, 4.0),)),
    "gaussian": density("exp(-x^2)", ladder),
    "phi_eps": scaled_density(bump_field((0.0,), 1.0), (0.0,), 1.0, ladder),
}

for name, T in functionals.items():
    wf = wavefront(T, cells)
    singular = sorted(wf.cells_with("Singular"))
    g_only = sorted(wf.cells_with("GRegularOnly"))
    print(f"{name:10s} Singular cells {singular or 'none'}; G-regular only {g_only or 'none'}")
