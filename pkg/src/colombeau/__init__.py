"""Colombeau generalized functions and microlocal analysis at desk scale.

Generalized functions are represented as nets of samples over a geometric
ladder of regularization parameters; asymptotic quantities (valuations,
moderateness classes, slow-scale bounds) are read off least-squares fits
in log-log coordinates.

Modules
-------
asymptotics
    Ladders, valuations, generalized numbers, moderateness classes.
genfun
    Grids, representative nets, seminorms and embeddings.
dual
    Basic functionals, their regularization and support.
microlocal
    Localized Fourier transforms and wave front set estimates.
psido
    Generalized symbols, quantization, ellipticity and theorem checks.
cli
    The scenario runner.
"""
__version__ = "0.1.0"

from . import asymptotics, dual, genfun, microlocal, psido  # noqa: E402
from .asymptotics import (  # noqa: E402
    DEFAULT_TOLERANCES,
    EpsilonLadder,
    GeneralizedNumber,
    ModerationClass,
    Tolerances,
    classify_net,
    fit_valuation,
)
from .dual import BasicFunctional  # noqa: E402
from .genfun import CellGrid, Grid, RepresentativeNet  # noqa: E402
from .microlocal import Cone, WaveFrontEstimate, wavefront  # noqa: E402
from .mollifier import Mollifier  # noqa: E402
from .psido import SymbolNet, theorem_harness  # noqa: E402

__all__ = [
    "__version__",
    "asymptotics",
    "genfun",
    "dual",
    "microlocal",
    "psido",
    "DEFAULT_TOLERANCES",
    "EpsilonLadder",
    "GeneralizedNumber",
    "ModerationClass",
    "Tolerances",
    "classify_net",
    "fit_valuation",
    "BasicFunctional",
    "CellGrid",
    "Grid",
    "RepresentativeNet",
    "Cone",
    "WaveFrontEstimate",
    "wavefront",
    "Mollifier",
    "SymbolNet",
    "theorem_harness",
]
