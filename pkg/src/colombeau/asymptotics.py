"""Epsilon ladders, scaling fits and generalized-number arithmetic.

Every object in the package is a net indexed by a finite, geometric ladder
of epsilon values.  Asymptotic statements ("= O(eps^b) as eps -> 0") are
estimated from the ladder by least squares in log-log coordinates; the
estimates are therefore exact on pure power laws and approximate otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientLadder, LadderMismatch

__all__ = [
    "Tolerances",
    "EpsilonLadder",
    "ScalingFit",
    "fit_valuation",
    "GeneralizedNumber",
    "ultra_pseudo_norm",
    "gn_add",
    "gn_mul",
    "ModerationClass",
    "classify_net",
    "SlowScaleCertificate",
    "check_slow_scale",
]

MIN_FIT_POINTS = 4


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used by the classifiers.

    All values are in exponent units unless noted.
    """

    q_max: float = 8.0
    n_max: float = 40.0
    tau_n: float = 0.75
    residual_gate: float = 0.5
    stability_tol: float = 0.5
    fit_tol: float = 1e-6
    # microlocal spread gate for "exists N for all l"
    tau_n_micro: float = 1.5
    # growth per octave above which a weighted spectrum counts as unbounded
    tail_growth_gate: float = 0.5
    # relative level below which spectral values are treated as zero
    spectral_floor: float = 1e-12
    # slow-scale tail slope tolerance
    slow_scale_tol: float = 0.05

    def override(self, **kwargs) -> "Tolerances":
        unknown = set(kwargs) - set(self.__dataclass_fields__)
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **kwargs)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True, eq=False)
class EpsilonLadder:
    """Geometric ladder eps_k = anchor * ratio**k, k = 0..count-1."""

    anchor: float = 0.25
    ratio: float = 0.5
    count: int = 17

    def __post_init__(self):
        if not 0 < self.anchor <= 1:
            raise ValueError("ladder anchor must lie in (0, 1]")
        if not 0 < self.ratio < 1:
            raise ValueError("ladder ratio must lie in (0, 1)")
        if self.count < 8:
            raise ValueError("a ladder needs at least 8 values")
        span = math.log10(self.anchor * self.ratio ** (self.count - 1)) - math.log10(self.anchor)
        if span > -4:
            raise ValueError(f"ladder spans only {-span:.2f} decades, need >= 4")

    @property
    def values(self) -> np.ndarray:
        k = np.arange(self.count)
        return self.anchor * self.ratio ** k

    def __len__(self):
        return self.count

    def __eq__(self, other):
        if not isinstance(other, EpsilonLadder):
            return NotImplemented
        return (self.anchor, self.ratio, self.count) == (other.anchor, other.ratio, other.count)

    def __hash__(self):
        return hash((self.anchor, self.ratio, self.count))

    def suffix(self, eta_index: int) -> np.ndarray:
        """Ladder values with index >= eta_index, i.e. eps <= values[eta_index]."""
        return self.values[eta_index:]

    @classmethod
    def dyadic(cls, kmin: int = 2, kmax: int = 18) -> "EpsilonLadder":
        return cls(anchor=2.0 ** -kmin, ratio=0.5, count=kmax - kmin + 1)


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power law magnitude ~ exp(intercept) * eps**exponent."""

    exponent: float
    intercept: float
    residual: float
    floor_flag: bool = False
    stability: float = 0.0
    n_points: int = 0

    def within_gate(self, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
        return self.floor_flag or (self.residual <= tol.residual_gate)

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "residual": self.residual,
            "floor_flag": self.floor_flag,
            "stability": self.stability,
            "n_points": self.n_points,
        }


def _ols(logx, logy):
    xm = logx.mean()
    dx = logx - xm
    slope = float(np.dot(dx, logy - logy.mean()) / np.dot(dx, dx))
    intercept = float(logy.mean() - slope * xm)
    return slope, intercept


def fit_valuation(eps, magnitudes, *, floor: float = 0.0) -> ScalingFit:
    """Fit the scaling exponent b in magnitude ~ eps**b.

    Parameters
    ----------
    eps : array_like
        Ladder values (any order).
    magnitudes : array_like
        Nonnegative magnitudes, one per ladder value.
    floor : float, optional
        Magnitudes ``<= floor`` count as zero and are dropped.  When at least
        half of the points are zero the net is considered to sit below the
        floor and the exponent is ``+inf``.

    Returns
    -------
    ScalingFit
        ``exponent`` is the slope of log(magnitude) against log(eps);
        ``residual`` is the max absolute deviation from the fitted line;
        ``stability`` is the change in slope when the coarsest point is
        dropped.
    """
    eps = np.asarray(eps, dtype=float)
    mags = np.asarray(magnitudes, dtype=float)
    if eps.shape != mags.shape:
        raise ValueError("eps and magnitudes must have the same shape")
    if not np.all(np.isfinite(mags)):
        raise ValueError("magnitudes must be finite")
    if np.any(mags < 0):
        raise ValueError("magnitudes must be nonnegative")
    usable = mags > floor
    n_zero = int((~usable).sum())
    if n_zero * 2 >= mags.size:
        return ScalingFit(math.inf, -math.inf, 0.0, floor_flag=True, n_points=int(usable.sum()))
    if usable.sum() < MIN_FIT_POINTS:
        raise InsufficientLadder(f"only {int(usable.sum())} usable ladder points")
    le = np.log(eps[usable])
    lm = np.log(mags[usable])
    slope, intercept = _ols(le, lm)
    residual = float(np.max(np.abs(lm - (slope * le + intercept))))
    stability = 0.0
    if le.size > MIN_FIT_POINTS:
        coarse = np.argmax(le)
        keep = np.ones(le.size, dtype=bool)
        keep[coarse] = False
        stability = abs(_ols(le[keep], lm[keep])[0] - slope)
    return ScalingFit(slope, intercept, residual, False, stability, int(le.size))


class GeneralizedNumber:
    """An epsilon-indexed complex value, one entry per ladder point."""

    __slots__ = ("values", "ladder")

    def __init__(self, values, ladder: EpsilonLadder):
        values = np.asarray(values, dtype=complex)
        if values.shape != (len(ladder),):
            raise ValueError(f"expected {len(ladder)} values, got shape {values.shape}")
        values.setflags(write=False)
        self.values = values
        self.ladder = ladder

    @classmethod
    def from_function(cls, fn, ladder: EpsilonLadder) -> "GeneralizedNumber":
        return cls(np.array([fn(e) for e in ladder.values], dtype=complex), ladder)

    @classmethod
    def constant(cls, c, ladder: EpsilonLadder) -> "GeneralizedNumber":
        return cls(np.full(len(ladder), c, dtype=complex), ladder)

    def fit(self, floor: float = 0.0) -> ScalingFit:
        return fit_valuation(self.ladder.values, np.abs(self.values), floor=floor)

    def valuation(self) -> float:
        return self.fit().exponent

    def ultra_norm(self) -> float:
        return ultra_pseudo_norm(self)

    def _check(self, other):
        if not isinstance(other, GeneralizedNumber):
            return GeneralizedNumber.constant(other, self.ladder)
        if other.ladder != self.ladder:
            raise LadderMismatch("generalized numbers live on different ladders")
        return other

    def __add__(self, other):
        return gn_add(self, self._check(other))

    __radd__ = __add__

    def __mul__(self, other):
        return gn_mul(self, self._check(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GeneralizedNumber(-self.values, self.ladder)

    def __sub__(self, other):
        return gn_add(self, -self._check(other))

    def __rsub__(self, other):
        return gn_add(self._check(other), -self)

    def __repr__(self):
        return f"GeneralizedNumber(val={self.valuation():.4g}, n={len(self.values)})"


def gn_add(x: GeneralizedNumber, y: GeneralizedNumber) -> GeneralizedNumber:
    if x.ladder != y.ladder:
        raise LadderMismatch("generalized numbers live on different ladders")
    return GeneralizedNumber(x.values + y.values, x.ladder)


def gn_mul(x: GeneralizedNumber, y: GeneralizedNumber) -> GeneralizedNumber:
    if x.ladder != y.ladder:
        raise LadderMismatch("generalized numbers live on different ladders")
    return GeneralizedNumber(x.values * y.values, x.ladder)


def ultra_pseudo_norm(x: GeneralizedNumber) -> float:
    """exp(-valuation); zero for a net below the floor."""
    v = x.valuation()
    if v == math.inf:
        return 0.0
    return math.exp(-v)


NEGLIGIBLE = "Negligible"
MODERATE = "Moderate"
REGULAR = "Regular"
NOT_MODERATE = "NotModerate"


@dataclass(frozen=True)
class ModerationClass:
    tag: str
    uniform_exponent: int | None = None
    per_order_exponents: Mapping = field(default_factory=dict)
    flags: tuple = ()

    @property
    def is_moderate(self) -> bool:
        return self.tag in (NEGLIGIBLE, MODERATE, REGULAR)

    @property
    def is_regular(self) -> bool:
        return self.tag in (NEGLIGIBLE, REGULAR)

    def as_dict(self) -> dict:
        return {
            "tag": self.tag,
            "uniform_exponent": self.uniform_exponent,
            "per_order_exponents": {str(k): v for k, v in self.per_order_exponents.items()},
            "flags": list(self.flags),
        }


def classify_net(
    fits: Mapping[object, ScalingFit],
    negligibility_depth: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ModerationClass:
    """Classify a net from the scaling fits of its seminorms.

    ``fits`` maps a seminorm id (typically the derivative order) to the fit
    of that seminorm over the ladder.  The per-order exponent recorded in the
    result is ``N = -exponent``.
    """
    if not fits:
        raise ValueError("classify_net needs at least one fit")
    q_max = tol.q_max if negligibility_depth is None else negligibility_depth
    flags = []
    live = {k: f for k, f in fits.items() if not f.floor_flag}
    if live and len(live) != len(fits):
        flags.append("mixed_floor_flags")
    if any(f.stability > tol.stability_tol for f in live.values()):
        flags.append("unstable_fit")
    per_order = {k: -f.exponent for k, f in fits.items()}

    if all(f.exponent >= q_max for f in fits.values()):
        return ModerationClass(NEGLIGIBLE, 0, per_order, tuple(flags))
    if any(not f.within_gate(tol) for f in live.values()):
        flags.append("residual_gate")
        return ModerationClass(NOT_MODERATE, None, per_order, tuple(flags))
    if any(f.exponent < -tol.n_max for f in live.values()):
        return ModerationClass(NOT_MODERATE, None, per_order, tuple(flags))

    ns = np.array([-f.exponent for f in live.values()])
    n_uniform = max(0, math.ceil(float(ns.max()) - tol.fit_tol))
    if float(ns.max() - ns.min()) <= tol.tau_n:
        return ModerationClass(REGULAR, n_uniform, per_order, tuple(flags))
    return ModerationClass(MODERATE, n_uniform, per_order, tuple(flags))


@dataclass(frozen=True)
class SlowScaleCertificate:
    powers: tuple
    constants: tuple
    tail_exponents: tuple
    passed: bool

    def as_dict(self) -> dict:
        return {
            "powers": list(self.powers),
            "constants": list(self.constants),
            "tail_exponents": list(self.tail_exponents),
            "pass": self.passed,
        }


def check_slow_scale(
    eps,
    omega,
    power_grid: Sequence[float] = (1, 2, 4, 8),
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SlowScaleCertificate:
    """Check |omega_eps|^p <= c_p / eps on the ladder for each power p.

    ``c_p`` is the ladder maximum of |omega|^p * eps.  A finite ladder bounds
    every net, so boundedness as eps -> 0 is judged from the trend over the
    finer half of the ladder: the fitted exponent of |omega|^p * eps there
    must not be negative beyond ``tol.slow_scale_tol``.
    """
    eps = np.asarray(eps, dtype=float)
    omega = np.abs(np.asarray(omega, dtype=float))
    if np.any(omega <= 0):
        raise ValueError("slow-scale nets must be strictly positive")
    order = np.argsort(-eps)
    eps, omega = eps[order], omega[order]
    fine = slice(eps.size // 2, None)
    if eps[fine].size < MIN_FIT_POINTS:
        fine = slice(max(0, eps.size - MIN_FIT_POINTS), None)
    consts, tails = [], []
    ok = True
    for p in power_grid:
        with np.errstate(over="ignore"):
            vals = omega ** p * eps
        c = float(np.max(vals))
        consts.append(c)
        if not np.isfinite(c):
            tails.append(-math.inf)
            ok = False
            continue
        tail = fit_valuation(eps[fine], vals[fine]).exponent
        tails.append(tail)
        if tail < -tol.slow_scale_tol:
            ok = False
    return SlowScaleCertificate(tuple(power_grid), tuple(consts), tuple(tails), ok)
