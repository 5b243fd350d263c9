"""Valuations, generalized numbers and the moderation classes of a few nets.

Run with ``python demos/01_valuations.py``.
"""
from colombeau.asymptotics import EpsilonLadder, GeneralizedNumber, fit_valuation
from colombeau.dual import Mollifier
from colombeau.genfun import DistributionAtom, DistributionSpec, Grid, classify, embed_distribution, net_from_expression

ladder = EpsilonLadder.dyadic(2, 18)
eps = ladder.values

# the slope of log|x_eps| against log eps
fit = fit_valuation(eps, 3 * eps**2 * (1 + eps))
print(f"3 eps^2 (1 + eps): exponent {fit.exponent:.4f}, residual {fit.residual:.2e}")

x = GeneralizedNumber(eps**-1.5, ladder)
print(f"eps^-1.5: valuation {x.valuation():.3f}, ultra norm {x.ultra_norm():.3e}")

grid = Grid(1, ((-4.0, 4.0),), 1024)
K = ((-1.0, 1.0),)
nets = {
    "exp(-x^2)": net_from_expression("exp(-x^2)", grid, ladder),
    "sin(x/eps)": net_from_expression("sin(x/eps)", grid, ladder),
    "eps^3 cos(x)": net_from_expression("eps^3*cos(x)", grid, ladder),
    "delta * rho_eps": embed_distribution(
        DistributionSpec(1, (DistributionAtom(1.0, (0,), (0.0,)),)), Mollifier(1), grid, ladder
    ),
}
for name, u in nets.items():
    c = classify(u, K, max_order=3)
    orders = ", ".join(f"{v:.2f}" for _, v in sorted(c.per_order_exponents.items()))
    print(f"{name:16s} {c.tag:11s} per-order exponents [{orders}]")
