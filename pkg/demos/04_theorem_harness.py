"""Numerical checks of pseudolocality, the parametrix identity and the noncharacteristic inclusion."""
from colombeau.asymptotics import EpsilonLadder
from colombeau.dual import delta, heaviside
from colombeau.genfun import CellGrid, Grid, net_from_expression
from colombeau.psido import SymbolNet, theorem_harness

ladder = EpsilonLadder.dyadic(2, 18)
cells = CellGrid(((-2.0, 2.0),), (8,))
H = heaviside(0.0, ladder, domain=((-2.0, 2.0),))


def show(case, inputs):
    r = theorem_harness(case, inputs)
    print(f"{case}: {'PASS' if r.passed else 'FAIL'}")
    for c in r.checks:
        print(f"  {c['name']}: {'holds' if c['holds'] else 'violated'}")
    return r


show("pseudolocality", dict(T=delta(0.0, ladder), a=SymbolNet("i*xi"), cells=cells))
show("wf_op_bound", dict(T=H, a=SymbolNet("i*xi"), cells=cells))
show("noncharacteristic", dict(T=H, p=SymbolNet("i*xi"), cells=cells))

# u oscillates on the eps scale, so only a true parametrix leaves a regular residual
short = EpsilonLadder.dyadic(2, 16)
u = net_from_expression("sin(x/(128*eps))*exp(-x^2)", Grid(1, ((-8.0, 8.0),), 8192), short)
A = SymbolNet("1+xi^2")
for P in ["1/(1+xi^2)", "1"]:
    r = show("parametrix_identity", dict(A=A, P=SymbolNet(P), u=u))
    print(f"  P = {P}: max |PAu - u| = {r.details['max_residual']:.3g}")
