"""Quantizing symbols and checking micro-ellipticity, hypoellipticity and micro-support."""
import numpy as np

from colombeau.asymptotics import EpsilonLadder
from colombeau.genfun import CellGrid, Grid, net_from_expression
from colombeau.microlocal import default_cones
from colombeau.psido import SymbolNet, check_hypoelliptic, check_micro_ellipticity, micro_support, quantize_apply

ladder = EpsilonLadder.dyadic(2, 18)
grid = Grid(1, ((-4.0, 4.0),), 512)
u = net_from_expression("exp(-4*x^2)", grid, ladder)

# (i xi)(x, D) is d/dx
du = quantize_apply(SymbolNet("i*xi"), u)
err = np.max(np.abs(du.samples[0] - (-8 * grid.axis() * u.samples[0])))
print(f"d/dx of exp(-4x^2) by quantization: max error {err:.1e}")

U = ((-1.0, 1.0),)
plus = default_cones(1)[0]
for expr in ["i*xi", "i*xi*(1+log(1/eps))", "i*xi*eps", "x"]:
    r = check_micro_ellipticity(SymbolNet(expr), ((-0.3, 0.7),), plus, ladder, order=1 if "xi" in expr else 0)
    extra = ""
    if r.witness:
        extra = f", zero near x = {r.witness['x'][0]:.1e}"
    elif not r.passed:
        extra = ", 1/lower bound grows faster than any slow scale"
    print(f"micro-elliptic {expr:22s} {'pass' if r.passed else 'fail'}{extra}")

for expr, order in [("<xi>^2", 2), ("eps*<xi>^2", 2), ("x*xi", 1)]:
    r = check_hypoelliptic(SymbolNet(expr), U, order, ladder)
    print(f"hypoelliptic  {expr:12s} {'pass' if r.passed else 'fail'}")

cells = CellGrid(((-2.0, 2.0),), (4,))
print("micro-support")
for expr in ["exp(-xi^2)", "exp(-eps^2*xi^2)", "exp(-xi^2)+cutoff(x,1)*xi"]:
    m = micro_support(SymbolNet(expr), cells, ladder)
    n = len(m.flags)
    print(f"{expr:28s} not smoothing in G on {len(m.support('G'))} of {n} (cell, cone) pairs, in Ginf on {len(m.support('Ginf'))} of {n}")
