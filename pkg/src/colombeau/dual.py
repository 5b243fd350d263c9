"""Basic functionals: eps-nets of finite-order distributions.

A :class:`BasicFunctional` is a finite sum of

* atoms ``c_eps * (d^alpha u)(x_eps)`` (the stored derivative acts directly
  on the test object; constructors such as :func:`ddelta` supply the
  distributional sign),
* densities ``c_eps * int_box g_eps d^alpha u``,
* scaled densities ``c_eps * int f_eps(t) d^alpha u(c_eps + eps^p t) dt``,
  which keep objects concentrated at scale eps^p exact on coarse grids,
* lazily composed parts (operator images, multiplied functionals),

together with a continuity certificate ``(K, j, N, eta)`` claiming
``|T_eps(u)| <= eps^-N sup_{K, |alpha| <= j} |d^alpha u|`` for eps below the
ladder point ``eta``.  Certificates are claims: :func:`verify_certificate`
can refute them on probes but never proves them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .asymptotics import (
    DEFAULT_TOLERANCES,
    EpsilonLadder,
    GeneralizedNumber,
    Tolerances,
    fit_valuation,
)
from .errors import AliasingError, CertificateViolation, LadderMismatch, OutOfDomain, SupportError
from .expr import parse
from .fields import (
    BoxIndicatorField,
    ConstantField,
    ConvolvedField,
    DerivedField,
    EpsPowerField,
    ExpressionField,
    Field,
    LadderCoefficientField,
    PerEps,
    PlaneWaveField,
    ProductField,
    PullbackField,
    ReflectTranslateField,
    ScaledField,
    SliceField,
    SumField,
    TrigPolyField,
    box_hull,
    box_intersect,
    multi_indices,
)
from .genfun import CellGrid, DistributionSpec, Grid, RepresentativeNet
from .mollifier import Mollifier
from .quadrature import integrate_box

__all__ = [
    "BasicFunctional",
    "Certificate",
    "CertificateReport",
    "Mollifier",
    "delta",
    "ddelta",
    "atom",
    "integrate",
    "density",
    "heaviside",
    "scaled_density",
    "from_net",
    "from_distribution",
    "functional_sum",
    "act",
    "act_field",
    "act_parametric",
    "verify_certificate",
    "standard_probes",
    "convolve_fun_functional",
    "convolve_functionals",
    "multiply",
    "regularize",
    "regularization_defect",
    "regularization_report",
    "estimate_support",
    "fourier_multiplier",
]


# ----------------------------------------------------------------- helpers

def _coeff_array(c, ladder: EpsilonLadder) -> np.ndarray:
    """Per-ladder coefficients from a scalar, array, GeneralizedNumber or callable of eps."""
    L = len(ladder)
    if isinstance(c, GeneralizedNumber):
        if c.ladder != ladder:
            raise LadderMismatch("coefficient lives on a different ladder")
        return np.asarray(c.values, dtype=complex)
    if isinstance(c, PerEps):
        return np.asarray(c.values, dtype=complex)
    if callable(c):
        return np.array([c(e) for e in ladder.values], dtype=complex)
    arr = np.asarray(c, dtype=complex)
    if arr.ndim == 0:
        return np.full(L, complex(arr))
    if arr.shape != (L,):
        raise ValueError(f"coefficient must be scalar or have {L} entries")
    return arr.copy()


def _locations(x0, ladder: EpsilonLadder, n: int | None = None) -> np.ndarray:
    """Per-ladder locations, shape (L, n)."""
    L = len(ladder)
    if callable(x0):
        arr = np.array([np.atleast_1d(x0(e)) for e in ladder.values], dtype=float)
        return arr.reshape(L, -1)
    arr = np.asarray(x0, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 1 and (n is None or arr.size == n) and not (arr.size == L and n == 1):
        return np.tile(arr, (L, 1))
    return arr.reshape(L, -1)


def _alpha_tuple(alpha, n: int) -> tuple:
    if alpha is None:
        return (0,) * n
    a = tuple(int(v) for v in np.atleast_1d(alpha))
    if len(a) != n:
        raise ValueError(f"multi-index {a} does not match dimension {n}")
    return a


def _binom(alpha, beta) -> int:
    return math.prod(math.comb(a, b) for a, b in zip(alpha, beta))


def _sub_indices(alpha):
    return [b for b in np.ndindex(*[a + 1 for a in alpha])]


def _finite(box) -> bool:
    return box is not None and all(np.isfinite(lo) and np.isfinite(hi) for lo, hi in box)


def _summands(field: Field, eps):
    """Split a test field into (scalar, field) summands by linearity."""
    if isinstance(field, SumField):
        out = []
        for c, f in field.terms:
            cv = c.at(eps) if isinstance(c, PerEps) else c
            out.extend((cv * s, g) for s, g in _summands(f, eps))
        return out
    if isinstance(field, EpsPowerField):
        return [(eps**field.power * s, g) for s, g in _summands(field.field, eps)]
    if isinstance(field, LadderCoefficientField):
        return [(field.coeff.at(eps) * s, g) for s, g in _summands(field.field, eps)]
    if isinstance(field, DerivedField) and isinstance(field.field, SumField):
        return [(s, DerivedField(g, field.alpha0)) for s, g in _summands(field.field, eps)]
    return [(1.0, field)]


def _as_field(u, dimension: int) -> Field:
    if isinstance(u, Field):
        return u
    if isinstance(u, RepresentativeNet):
        return u.field()
    if isinstance(u, (str, int, float)):
        return ExpressionField(parse(u, dimension) if isinstance(u, str) else str(u), dimension)
    raise TypeError(f"cannot use {type(u).__name__} as a test object")


# ------------------------------------------------------------------- terms

@dataclass(frozen=True)
class _Atom:
    coeff: np.ndarray
    alpha: tuple
    loc: np.ndarray  # (L, n)

    def scaled(self, c):
        return replace(self, coeff=self.coeff * c)


@dataclass(frozen=True)
class _Density:
    coeff: np.ndarray
    field: Field
    box: tuple | None
    alpha: tuple

    def scaled(self, c):
        return replace(self, coeff=self.coeff * c)


@dataclass(frozen=True)
class _Scaled:
    """``coeff * int profile(t) d^alpha u(center + eps^power t) dt`` (t restricted to box in x)."""

    coeff: np.ndarray
    profile: Field
    center: np.ndarray  # (L, n)
    power: float
    box: tuple | None
    alpha: tuple

    def scaled(self, c):
        return replace(self, coeff=self.coeff * c)


@dataclass(frozen=True)
class _Image:
    """``coeff * inner(chi * tA u)`` for an operator given by its transposer."""

    coeff: np.ndarray
    transposer: object
    chi: Field
    inner: "BasicFunctional"

    def scaled(self, c):
        return replace(self, coeff=self.coeff * c)


@dataclass(frozen=True)
class _Multiplied:
    """``coeff * inner(factor * u)``."""

    coeff: np.ndarray
    factor: Field
    inner: "BasicFunctional"

    def scaled(self, c):
        return replace(self, coeff=self.coeff * c)


@dataclass(frozen=True)
class Certificate:
    """Continuity claim ``|T_eps(u)| <= eps^-N p_{K,j}(u)`` for ladder indices >= eta."""

    K: tuple
    j: int
    N: float
    eta: int = 0

    def as_dict(self) -> dict:
        return {"K": [list(b) for b in self.K], "j": self.j, "N": self.N, "eta": self.eta}


def _combine_certificates(a: Certificate | None, b: Certificate | None) -> Certificate | None:
    if a is None or b is None:
        return None
    return Certificate(box_hull(a.K, b.K), max(a.j, b.j), max(a.N, b.N), max(a.eta, b.eta))


# -------------------------------------------------------------- functional

class BasicFunctional:
    """An eps-net of finite-order distributions with a continuity certificate.

    Parameters
    ----------
    dimension : int
        Space dimension (1 or 2).
    ladder : EpsilonLadder
    certificate : Certificate, optional
        Declared (K, j, N, eta).
    domain : box, optional
        Integration domain for densities without a bounded box.
    """

    def __init__(
        self,
        dimension: int,
        ladder: EpsilonLadder,
        atoms=(),
        densities=(),
        scaled=(),
        parts=(),
        certificate: Certificate | None = None,
        domain=None,
        name: str = "",
    ):
        self.dimension = int(dimension)
        self.ladder = ladder
        self.atoms = tuple(atoms)
        self.densities = tuple(densities)
        self.scaled = tuple(scaled)
        self.parts = tuple(parts)
        self.certificate = certificate
        self.domain = None if domain is None else tuple((float(a), float(b)) for a, b in domain)
        self.name = name

    # -- structure ---------------------------------------------------------
    def _with(self, **kw) -> "BasicFunctional":
        args = dict(
            dimension=self.dimension,
            ladder=self.ladder,
            atoms=self.atoms,
            densities=self.densities,
            scaled=self.scaled,
            parts=self.parts,
            certificate=self.certificate,
            domain=self.domain,
            name=self.name,
        )
        args.update(kw)
        return BasicFunctional(**args)

    @property
    def is_empty(self) -> bool:
        return not (self.atoms or self.densities or self.scaled or self.parts)

    def with_certificate(self, K, j: int, N: float, eta: int = 0) -> "BasicFunctional":
        K = tuple((float(a), float(b)) for a, b in K)
        return self._with(certificate=Certificate(K, int(j), float(N), int(eta)))

    def _check(self, other: "BasicFunctional"):
        if other.ladder != self.ladder:
            raise LadderMismatch("functionals live on different ladders")
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")

    def __add__(self, other: "BasicFunctional") -> "BasicFunctional":
        self._check(other)
        dom = self.domain if other.domain is None else (other.domain if self.domain is None else box_hull(self.domain, other.domain))
        return self._with(
            atoms=self.atoms + other.atoms,
            densities=self.densities + other.densities,
            scaled=self.scaled + other.scaled,
            parts=self.parts + other.parts,
            certificate=_combine_certificates(self.certificate, other.certificate),
            domain=dom,
            name="",
        )

    def scale(self, c) -> "BasicFunctional":
        """Multiply by a per-ladder scalar (number, array, GeneralizedNumber or callable of eps)."""
        cv = _coeff_array(c, self.ladder)
        cert = self.certificate
        if cert is not None:
            mags = np.abs(cv)
            if np.any(mags > 0):
                fit = fit_valuation(self.ladder.values, mags) if np.count_nonzero(mags) >= 4 else None
                extra = 0.0 if fit is None or not np.isfinite(fit.exponent) else max(0.0, -fit.exponent)
                cert = replace(cert, N=cert.N + extra)
        return self._with(
            atoms=tuple(a.scaled(cv) for a in self.atoms),
            densities=tuple(d.scaled(cv) for d in self.densities),
            scaled=tuple(s.scaled(cv) for s in self.scaled),
            parts=tuple(p.scaled(cv) for p in self.parts),
            certificate=cert,
        )

    def eps_power(self, a: float) -> "BasicFunctional":
        """``eps^a * T``."""
        out = self.scale(self.ladder.values ** float(a))
        if self.certificate is not None:
            out = out._with(certificate=replace(self.certificate, N=self.certificate.N - float(a)))
        return out

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c):
        return self.scale(c)

    def derivative(self, alpha) -> "BasicFunctional":
        """Distributional derivative: ``(d^alpha T)(u) = (-1)^|alpha| T(d^alpha u)``."""
        alpha = _alpha_tuple(alpha, self.dimension)
        if self.parts:
            raise NotImplementedError("derivatives of composed functionals")
        sign = (-1.0) ** sum(alpha)
        add = lambda a: tuple(x + y for x, y in zip(a, alpha))  # noqa: E731
        cert = self.certificate
        if cert is not None:
            cert = replace(cert, j=cert.j + sum(alpha))
        return self._with(
            atoms=tuple(replace(a, alpha=add(a.alpha), coeff=sign * a.coeff) for a in self.atoms),
            densities=tuple(replace(d, alpha=add(d.alpha), coeff=sign * d.coeff) for d in self.densities),
            scaled=tuple(replace(s, alpha=add(s.alpha), coeff=sign * s.coeff) for s in self.scaled),
            certificate=cert,
        )

    # -- supports ----------------------------------------------------------
    def _density_region(self, d: _Density, eps):
        return box_intersect(box_intersect(d.box, self.domain), d.field.support(eps))

    def _scaled_region(self, s: _Scaled, k: int, eps):
        """Support of a scaled term in x."""
        sc = eps**s.power
        prof = s.profile.support(eps)
        xbox = None
        if prof is not None:
            xbox = tuple((c + sc * lo, c + sc * hi) for c, (lo, hi) in zip(s.center[k], prof))
        return box_intersect(box_intersect(xbox, s.box), self.domain)

    def support_box(self, k: int):
        """Bounding box of supp T_eps at ladder index k (None if unbounded/unknown)."""
        eps = self.ladder.values[k]
        box = None
        first = True

        def grow(b):
            nonlocal box, first
            if b is None or not _finite(b):
                return False
            box = b if first else box_hull(box, b)
            first = False
            return True

        for a in self.atoms:
            if not np.any(a.coeff[k]):
                continue
            p = a.loc[k]
            grow(tuple((float(c), float(c)) for c in p))
        for d in self.densities:
            if not grow(self._density_region(d, eps)):
                return None
        for s in self.scaled:
            if not grow(self._scaled_region(s, k, eps)):
                return None
        for p in self.parts:
            if not grow(_part_support(p, k)):
                return None
        return box

    def support_hull(self):
        """Hull of the supports over the ladder, or None."""
        out = None
        for k in range(len(self.ladder)):
            b = self.support_box(k)
            if b is None:
                if not self.is_empty:
                    return None
                continue
            out = b if out is None else box_hull(out, b)
        return out

    # -- action ------------------------------------------------------------
    def _act_eps(self, v: Field, k: int, panels: int | None = None):
        """T_eps(v) at ladder index k; keeps leading batch dimensions of v."""
        eps = float(self.ladder.values[k])
        n = self.dimension
        total = 0
        for a in self.atoms:
            c = a.coeff[k]
            if c == 0:
                continue
            coords = tuple(np.array([p]) for p in a.loc[k])
            total = total + c * np.asarray(v.evaluate(coords, eps, a.alpha))[..., 0]
        for d in self.densities:
            c = d.coeff[k]
            if c == 0:
                continue
            base = self._density_region(d, eps)
            for s, f in _summands(v, eps):
                region = box_intersect(base, f.support(eps))
                if region is None or not _finite(region):
                    raise SupportError("density term and test object are both without bounded support")
                if any(hi <= lo for lo, hi in region):
                    continue
                bps = tuple(d.field.breakpoints(eps)) + tuple(f.breakpoints(eps)) if n == 1 else ()
                fn = lambda x, f=f, d=d: d.field.evaluate(x, eps) * f.evaluate(x, eps, d.alpha)  # noqa: E731
                total = total + c * s * _integrate(fn, region, bps, panels)
        for st in self.scaled:
            c = st.coeff[k]
            if c == 0:
                continue
            sc = eps**st.power
            ctr = st.center[k]
            for s, f in _summands(v, eps):
                xbox = box_intersect(box_intersect(st.box, self.domain), f.support(eps))
                tbox = st.profile.support(eps)
                if xbox is not None:
                    tb = tuple(((lo - c0) / sc, (hi - c0) / sc) for c0, (lo, hi) in zip(ctr, xbox))
                    tbox = box_intersect(tbox, tb)
                if tbox is None or not _finite(tbox):
                    raise SupportError("scaled term and test object are both without bounded support")
                if any(hi <= lo for lo, hi in tbox):
                    continue
                bps = ()
                if n == 1:
                    bps = tuple(st.profile.breakpoints(eps)) + tuple((b - ctr[0]) / sc for b in f.breakpoints(eps))

                def fn(t, f=f, st=st, ctr=ctr, sc=sc):
                    x = tuple(c0 + sc * np.asarray(ti) for c0, ti in zip(ctr, t))
                    return st.profile.evaluate(t, eps) * f.evaluate(x, eps, st.alpha)

                total = total + c * s * _integrate(fn, tbox, bps, panels)
        for p in self.parts:
            c = p.coeff[k]
            if c == 0:
                continue
            if isinstance(p, _Image):
                w = p.transposer.transpose_field(v, eps)
                total = total + c * p.inner._act_eps(ProductField(p.chi, w), k, panels)
            else:
                total = total + c * p.inner._act_eps(ProductField(p.factor, v), k, panels)
        return total

    def act_field(self, v: Field) -> np.ndarray:
        """Values T_eps(v) for every ladder point, shape (L, *batch)."""
        out = [np.asarray(self._act_eps(v, k), dtype=complex) for k in range(len(self.ladder))]
        out = np.stack([np.broadcast_to(o, out[0].shape) for o in out])
        return out

    def __call__(self, u) -> GeneralizedNumber:
        return act(self, u)

    def __repr__(self):
        parts = []
        if self.atoms:
            parts.append(f"{len(self.atoms)} atoms")
        if self.densities:
            parts.append(f"{len(self.densities)} densities")
        if self.scaled:
            parts.append(f"{len(self.scaled)} scaled")
        if self.parts:
            parts.append(f"{len(self.parts)} composed")
        label = self.name or "BasicFunctional"
        return f"{label}({', '.join(parts) or 'zero'}, n={self.dimension})"


def _integrate(fn, region, bps, panels):
    if panels is None or len(region) != 1:
        return integrate_box(fn, region, bps)
    from .quadrature import composite_nodes

    (lo, hi), = region
    t, w = composite_nodes(lo, hi, bps, panels=panels)
    return (np.asarray(fn((t,))) * w).sum(-1)


def _part_support(p, k: int):
    eps = p.inner.ladder.values[k]
    if isinstance(p, _Image):
        chi = p.chi.support(eps)
        if getattr(p.transposer, "is_local", False):
            inner = p.inner.support_box(k)
            return box_intersect(chi, inner) if inner is not None else chi
        return chi
    inner = p.inner.support_box(k)
    return box_intersect(inner, p.factor.support(eps))


# ------------------------------------------------------------ constructors

def _point_box(x):
    return tuple((float(c), float(c)) for c in np.atleast_1d(x))


def atom(x0, alpha, ladder: EpsilonLadder, coeff=1.0, dimension: int | None = None) -> BasicFunctional:
    """The functional ``u -> coeff * (d^alpha u)(x0)`` (derivative applied directly)."""
    loc = _locations(x0, ladder, dimension)
    n = loc.shape[1]
    alpha = _alpha_tuple(alpha, n)
    cv = _coeff_array(coeff, ladder)
    mags = np.abs(cv)
    N = 0.0
    if np.count_nonzero(mags) >= 4:
        fit = fit_valuation(ladder.values, mags)
        N = max(0.0, -fit.exponent) if np.isfinite(fit.exponent) else 0.0
    K = tuple((float(loc[:, i].min()), float(loc[:, i].max())) for i in range(n))
    return BasicFunctional(n, ladder, atoms=[_Atom(cv, alpha, loc)], certificate=Certificate(K, sum(alpha), N), name="atom")


def delta(x0, ladder: EpsilonLadder, coeff=1.0) -> BasicFunctional:
    """``coeff * delta_{x0}``; ``x0`` may be a callable of eps (moving point)."""
    out = atom(x0, None, ladder, coeff)
    out.name = "delta"
    return out


def ddelta(x0, alpha, ladder: EpsilonLadder, coeff=1.0) -> BasicFunctional:
    """Distributional derivative ``coeff * d^alpha delta_{x0}``: acts as ``(-1)^|alpha| coeff d^alpha u(x0)``."""
    a = tuple(int(v) for v in np.atleast_1d(alpha))
    out = atom(x0, a, ladder, (-1.0) ** sum(a) * _coeff_array(coeff, ladder))
    out.name = "ddelta"
    return out


def integrate(box, ladder: EpsilonLadder) -> BasicFunctional:
    """``u -> int_box u``."""
    box = tuple((float(a), float(b)) for a, b in box)
    n = len(box)
    d = _Density(_coeff_array(1.0, ladder), ConstantField(1.0, n), box, (0,) * n)
    cert = Certificate(box, 0, 0.0) if _finite(box) else None
    return BasicFunctional(n, ladder, densities=[d], certificate=cert, name="integrate")


def density(g, ladder: EpsilonLadder, box=None, dimension: int = 1, coeff=1.0, certificate=None) -> BasicFunctional:
    """``u -> coeff * int_box g u`` for a closed-form expression or field g.

    Without a box the density must have bounded support itself, or the
    functional needs a ``domain`` (see :meth:`BasicFunctional._with`).
    """
    f = g if isinstance(g, Field) else ExpressionField(parse(g, dimension), dimension)
    n = f.dimension
    if box is not None:
        box = tuple((float(a), float(b)) for a, b in box)
    d = _Density(_coeff_array(coeff, ladder), f, box, (0,) * n)
    if certificate is None:
        K = box_intersect(box, f.support(ladder.values[0]))
        certificate = Certificate(K, 0, 0.0) if _finite(K) else None
    return BasicFunctional(n, ladder, densities=[d], certificate=certificate, name="density")


def heaviside(a: float, ladder: EpsilonLadder, sign: int = 1, domain=None) -> BasicFunctional:
    """``u -> int_a^inf u`` (``sign=-1``: ``int_-inf^a u``).

    Not compactly supported: acting on a test object needs the test object's
    support or a finite ``domain``.  The certificate is stated on K = [a-1, a+1].
    """
    a = float(a)
    box = ((a, math.inf),) if sign > 0 else ((-math.inf, a),)
    d = _Density(_coeff_array(1.0, ladder), ConstantField(1.0, 1), box, (0,))
    return BasicFunctional(1, ladder, densities=[d], certificate=Certificate(((a - 1, a + 1),), 0, 0.0), domain=domain, name="heaviside")


def scaled_density(profile: Field | str, center, power: float, ladder: EpsilonLadder, coeff=1.0, dimension: int = 1) -> BasicFunctional:
    """Density ``eps^(-n p) f((x - c) / eps^p)``, stored exactly in the stretched variable.

    ``profile`` is a field (or an expression in x, read as the variable t)
    with bounded support.
    """
    f = profile if isinstance(profile, Field) else ExpressionField(parse(profile, dimension), dimension)
    n = f.dimension
    if f.support(1.0) is None:
        raise SupportError("scaled profile must have bounded support")
    ctr = _locations(center, ladder, n)
    cv = _coeff_array(coeff, ladder)
    s = _Scaled(cv, f, ctr, float(power), None, (0,) * n)
    sup = f.support(1.0)
    K = tuple((float(ctr[:, i].min() + min(0.0, lo)), float(ctr[:, i].max() + max(0.0, hi))) for i, (lo, hi) in enumerate(sup))
    return BasicFunctional(n, ladder, scaled=[s], certificate=Certificate(K, 0, 0.0), name="scaled density")


def from_net(u: RepresentativeNet) -> BasicFunctional:
    """The functional ``v -> int u_eps v`` over the grid box (the embedding of a net)."""
    box = u.support_hint or u.grid.box
    d = _Density(_coeff_array(1.0, u.ladder), u.field(), box, (0,) * u.grid.dimension)
    N = 0.0
    sup = np.max(np.abs(u.samples.reshape(len(u.ladder), -1)), axis=1)
    if np.count_nonzero(sup) >= 4:
        fit = fit_valuation(u.ladder.values, sup)
        N = max(0.0, -fit.exponent) if np.isfinite(fit.exponent) else 0.0
    return BasicFunctional(u.grid.dimension, u.ladder, densities=[d], certificate=Certificate(box, 0, N), name=u.name or "net")


def from_distribution(d: DistributionSpec, ladder: EpsilonLadder, domain=None) -> BasicFunctional:
    """The eps-constant functional of a finite-order distribution (atoms + density)."""
    n = d.dimension
    out = None
    for at in d.atoms:
        alpha = tuple(at.alpha) if at.alpha else (0,) * n
        term = ddelta(at.location, alpha, ladder, at.coeff)
        out = term if out is None else out + term
    if d.density is not None:
        term = density(d.density, ladder, dimension=n)
        term = term._with(domain=domain, certificate=Certificate(domain, 0, 0.0) if domain is not None else None)
        out = term if out is None else out + term
    if out is None:
        out = BasicFunctional(n, ladder, certificate=Certificate(((0.0, 0.0),) * n, 0, 0.0))
    if domain is not None:
        out = out._with(domain=tuple(domain))
    return out


def functional_sum(*terms: BasicFunctional) -> BasicFunctional:
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


# ------------------------------------------------------------------ action

def act(T: BasicFunctional, u) -> GeneralizedNumber:
    """``Tu = (T_eps(u_eps))_eps``.

    Raises
    ------
    SupportError
        If a density of T and the test object both lack bounded support.
    """
    if isinstance(u, RepresentativeNet):
        if u.ladder != T.ladder:
            raise LadderMismatch("functional and net live on different ladders")
        if u.grid.dimension != T.dimension:
            raise ValueError("dimension mismatch")
        v = u.field()
        if u.source is not None and u.support_hint is not None and v.support(T.ladder.values[0]) is None:
            v = ProductField(v, BoxIndicatorField(u.support_hint, T.dimension))
    else:
        v = _as_field(u, T.dimension)
    vals = T.act_field(v)
    return GeneralizedNumber(vals, T.ladder)


def act_field(T: BasicFunctional, v: Field) -> np.ndarray:
    return T.act_field(v)


def act_parametric(T: BasicFunctional, u: RepresentativeNet) -> RepresentativeNet:
    """x -> T(u(x, .)) for a two-variable net on grid_x x grid_y (T acts in y)."""
    if u.grid.dimension != 2 or T.dimension != 1:
        raise ValueError("act_parametric needs a 2D net and a 1D functional")
    if u.ladder != T.ladder:
        raise LadderMismatch("functional and net live on different ladders")
    xs = u.grid.axis(0)
    v = SliceField(u.field(), xs)
    vals = T.act_field(v)
    g = Grid(1, (u.grid.box[0],), u.grid.points, u.grid.periodic)
    if not np.any(vals.imag):
        vals = vals.real
    return RepresentativeNet(g, u.ladder, samples=vals, name="parametric action")


# ------------------------------------------------------------- certificates

@dataclass
class CertificateReport:
    passed: bool
    worst_ratio: float
    fitted_N: float
    declared_N: float
    eta: int
    ratios: np.ndarray
    per_probe: list = dc_field(default_factory=list)
    note: str = "finite probe family: a pass does not prove the estimate"

    def as_dict(self) -> dict:
        return {
            "pass": self.passed,
            "worst_ratio": self.worst_ratio,
            "fitted_N": self.fitted_N,
            "declared_N": self.declared_N,
            "eta": self.eta,
            "note": self.note,
        }


def standard_probes(K, dimension: int = 1) -> list:
    """C-infinity bumps at three scales plus cutoff-localized cos(k x), k in {1, 4, 16}.

    All probes are centered on K with supports reaching past it, so that
    sup over K of the probe and its derivatives is positive.
    """
    c = [0.5 * (lo + hi) for lo, hi in K]
    w = max(max(0.5 * (hi - lo) for lo, hi in K), 0.5)
    out = []
    if dimension == 1:
        x = f"(x - ({c[0]!r}))"
        for s in (2 * w, w, 0.5 * w):
            out.append(ExpressionField(f"bump({x}/{s!r})", 1))
        out.append(ExpressionField(f"bump(({x} - {0.5 * w!r})/{w!r})", 1))
        for k in (1, 4, 16):
            out.append(ExpressionField(f"cos({k}*{x} + 0.3)*cutoff({x}, {2 * w!r})", 1))
        out.append(ExpressionField(f"{x}*cutoff({x}, {2 * w!r})", 1))
    else:
        x = f"(x - ({c[0]!r}))"
        y = f"(y - ({c[1]!r}))"
        for s in (2 * w, w, 0.5 * w):
            out.append(ExpressionField(f"bump({x}/{s!r})*bump({y}/{s!r})", 2))
        for k in (1, 4, 16):
            out.append(ExpressionField(f"cos({k}*{x} + 0.3)*cos({k}*{y} + 0.7)*cutoff({x}, {2 * w!r})*cutoff({y}, {2 * w!r})", 2))
        out.append(ExpressionField(f"({x} + 2*{y})*cutoff({x}, {2 * w!r})*cutoff({y}, {2 * w!r})", 2))
    return out


def _seminorm_on_K(v: Field, K, j: int, eps: float) -> float:
    n = len(K)
    if n == 1:
        (lo, hi), = K
        pts = (np.unique(np.concatenate([np.linspace(lo, hi, 801), [lo, hi]])),)
    else:
        axes = [np.unique(np.concatenate([np.linspace(lo, hi, 81), [lo, hi]])) for lo, hi in K]
        X, Y = np.meshgrid(*axes, indexing="ij")
        pts = (X.ravel(), Y.ravel())
    best = 0.0
    for alpha in multi_indices(n, j):
        vals = np.abs(np.asarray(v.evaluate(pts, eps, alpha)))
        best = max(best, float(np.max(vals)))
    return best


def verify_certificate(
    T: BasicFunctional,
    probes=None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CertificateReport:
    """Check the declared certificate on a probe family.

    Ratios ``|T_eps(u)| / p_{K,j}(u)`` are formed for eps at or below the
    ladder point eta; ``fitted_N`` is minus the fitted exponent of the worst
    ratio over the ladder.  Passes iff ``fitted_N <= N + tau_N``.

    Raises
    ------
    CertificateViolation
        If a probe has ``p_{K,j}(u) = 0`` while ``T_eps(u) != 0``.
    """
    cert = T.certificate
    if cert is None:
        raise ValueError("functional has no certificate to verify")
    if probes is None:
        probes = standard_probes(cert.K, T.dimension)
    fields = [_as_field(p, T.dimension) for p in probes]
    eps_all = T.ladder.values
    idx = list(range(cert.eta, len(eps_all)))
    ratios = np.zeros((len(fields), len(idx)))
    per_probe = []
    for i, v in enumerate(fields):
        for jj, k in enumerate(idx):
            val = abs(complex(np.asarray(T._act_eps(v, k))))
            p = _seminorm_on_K(v, cert.K, cert.j, float(eps_all[k]))
            if p == 0.0:
                if val > 1e-13:
                    raise CertificateViolation(
                        f"probe {i} vanishes to order {cert.j} on K={cert.K} but T(u) = {val:.6g} at eps={eps_all[k]:.3g}"
                    )
                continue
            ratios[i, jj] = val / p
        per_probe.append(float(ratios[i].max()))
    worst = ratios.max(axis=0)
    eps = eps_all[idx]
    if np.count_nonzero(worst) >= 4:
        fit = fit_valuation(eps, worst)
        fitted_N = -fit.exponent
    else:
        fitted_N = -math.inf
    passed = bool(fitted_N <= cert.N + tol.tau_n)
    return CertificateReport(passed, float(worst.max()), float(fitted_N), cert.N, cert.eta, ratios, per_probe)


# -------------------------------------------------------------- convolution

def fourier_multiplier(T: BasicFunctional, ks) -> np.ndarray:
    """``T_eps(exp(-i k . x))`` for each row of ks, shape (L, K).

    Densities are integrated with panels fine enough for the largest k.
    """
    ks = np.asarray(ks, dtype=float).reshape(-1, T.dimension)
    pw = PlaneWaveField(ks, T.dimension)
    kmax = float(np.max(np.abs(ks))) if ks.size else 0.0
    out = []
    for k in range(len(T.ladder)):
        panels = None
        if T.dimension == 1:
            box = T.support_box(k)
            if box is not None and _finite(box):
                length = box[0][1] - box[0][0]
                panels = max(128, int(math.ceil(kmax * length / (2 * math.pi))) + 1)
        out.append(np.asarray(T._act_eps(pw, k, panels), dtype=complex))
    return np.stack(out)


def _minkowski(a, b):
    return tuple((p[0] + q[0], p[1] + q[1]) for p, q in zip(a, b))


def convolve_fun_functional(u: RepresentativeNet, T: BasicFunctional) -> RepresentativeNet:
    """``(u * T)(x) = T(u(x - .))`` on u's grid.

    Closed-form 1D nets are convolved exactly by quadrature at every grid
    point; otherwise the Fourier multiplier ``T(exp(-i k .))`` is applied to
    the FFT of the samples (exact for band-limited data).

    Raises
    ------
    OutOfDomain
        If supp u + supp T leaves the grid box.
    SupportError
        If neither u nor T has a known bounded support.
    """
    if u.ladder != T.ladder:
        raise LadderMismatch("functional and net live on different ladders")
    grid = u.grid
    su = u.support_hint
    if su is None and u.source is not None:
        su = u.source.support(u.ladder.values[0])
        if su is not None:
            for e in u.ladder.values[1:]:
                s2 = u.source.support(e)
                su = None if s2 is None else box_hull(su, s2)
                if su is None:
                    break
    sT = T.support_hull()
    if su is None and sT is None:
        raise SupportError("neither the net nor the functional has bounded support")
    hint = None
    if su is not None and sT is not None:
        hint = _minkowski(su, sT)
        tol = 1e-12 * max(1.0, max(abs(v) for b in grid.box for v in b))
        if not all(lo >= a - tol and hi <= b + tol for (lo, hi), (a, b) in zip(hint, grid.box)):
            raise OutOfDomain(f"supp u + supp T = {hint} leaves the grid box {grid.box}")
    L = len(u.ladder)
    if u.source is not None and T.dimension == 1 and not T.parts:
        v = ReflectTranslateField(u.source, grid.mesh())
        vals = T.act_field(v).reshape((L,) + grid.shape)
    else:
        if not grid.periodic:
            raise ValueError("spectral convolution needs a periodic grid")
        ks = np.stack([k.ravel() for k in np.meshgrid(*[grid.wavenumbers(i) for i in range(grid.dimension)], indexing="ij")], axis=1)
        mult = fourier_multiplier(T, ks).reshape((L,) + grid.shape)
        axes = tuple(range(1, grid.dimension + 1))
        vals = np.fft.ifftn(np.fft.fftn(u.samples, axes=axes) * mult, axes=axes)
    if not np.any(np.abs(vals.imag) > 1e-13 * max(1.0, float(np.abs(vals).max()))):
        vals = vals.real
    if hint is not None:
        hint = tuple((max(lo, a), min(hi, b)) for (lo, hi), (a, b) in zip(hint, grid.box))
        mask = grid.mask(hint)
        vals = np.where(mask[None], vals, 0.0)
    return RepresentativeNet(grid, u.ladder, samples=vals, support_hint=hint, name="u*T")


def _translate(field: Field, shift) -> Field:
    """x -> field(x - shift)."""
    return PullbackField(field, tuple(-float(s) for s in shift), 0.0)


def convolve_functionals(S: BasicFunctional, T: BasicFunctional) -> BasicFunctional:
    """``(S * T)(u) = S_x(T_y(u(x + y)))``.

    Atom locations add and coefficients multiply; densities and scaled terms
    are shifted or convolved by quadrature.  The certificate becomes
    ``(K_S + K_T, j_S + j_T, N_S + N_T)``.
    """
    S._check(T)
    if S.parts or T.parts:
        raise NotImplementedError("convolution of composed functionals")
    ladder = S.ladder
    L = len(ladder)
    n = S.dimension
    add = lambda a, b: tuple(x + y for x, y in zip(a, b))  # noqa: E731
    atoms, dens, scal = [], [], []

    def shift_box(box, loc):
        return None if box is None else tuple((lo + c, hi + c) for (lo, hi), c in zip(box, loc))

    def dens_field(d, dom):
        box = box_intersect(d.box, dom)
        if box is None or not _finite(box):
            raise SupportError("convolution needs bounded densities")
        return ProductField(d.field, BoxIndicatorField(box, n)), box

    for A, B in ((S, T), (T, S)):
        for a in A.atoms:
            # atom * atom handled once (A = S)
            if A is S:
                for b in B.atoms:
                    atoms.append(_Atom(a.coeff * b.coeff, add(a.alpha, b.alpha), a.loc + b.loc))
            for d in B.densities:
                for k in range(L):
                    coeff = np.zeros(L, dtype=complex)
                    coeff[k] = a.coeff[k] * d.coeff[k]
                    if coeff[k] == 0:
                        continue
                    loc = a.loc[k]
                    dens.append(_Density(coeff, _translate(d.field, loc), shift_box(box_intersect(d.box, B.domain), loc), add(a.alpha, d.alpha)))
            for s in B.scaled:
                scal.append(replace(s, coeff=a.coeff * s.coeff, center=s.center + a.loc, box=None, alpha=add(a.alpha, s.alpha)))
    for d1 in S.densities:
        f1, b1 = dens_field(d1, S.domain)
        for d2 in T.densities:
            f2, b2 = dens_field(d2, T.domain)
            conv = ConvolvedField(f2, f1, (0.0,) * n, 0.0, nodes=96 if n == 1 else 32)
            dens.append(_Density(d1.coeff * d2.coeff, conv, _minkowski(b1, b2), add(d1.alpha, d2.alpha)))
    for A, B in ((S, T), (T, S)):
        for s in A.scaled:
            for d in B.densities:
                f, b = dens_field(d, B.domain)
                for k in range(L):
                    coeff = np.zeros(L, dtype=complex)
                    coeff[k] = s.coeff[k] * d.coeff[k]
                    if coeff[k] == 0:
                        continue
                    conv = ConvolvedField(f, s.profile, tuple(s.center[k]), s.power)
                    dens.append(_Density(coeff, conv, None, add(s.alpha, d.alpha)))
    for s1 in S.scaled:
        for s2 in T.scaled:
            wide, narrow = (s1, s2) if s1.power <= s2.power else (s2, s1)
            prof = ConvolvedField(wide.profile, narrow.profile, (0.0,) * n, narrow.power - wide.power)
            scal.append(_Scaled(s1.coeff * s2.coeff, prof, s1.center + s2.center, wide.power, None, add(s1.alpha, s2.alpha)))
    cert = None
    if S.certificate is not None and T.certificate is not None:
        cs, ct = S.certificate, T.certificate
        cert = Certificate(_minkowski(cs.K, ct.K), cs.j + ct.j, cs.N + ct.N, max(cs.eta, ct.eta))
    return BasicFunctional(n, ladder, atoms, dens, scal, (), cert, None, name="S*T")


# ----------------------------------------------------------- multiplication

def _scaled_view(field: Field):
    """(amp, profile, center, power) when field = eps^amp f((x - c)/eps^p), else None."""
    if isinstance(field, ScaledField):
        return field.amp, field.profile, field.center, field.power
    if isinstance(field, DerivedField) and isinstance(field.field, ScaledField):
        s = field.field
        return s.amp - s.power * sum(field.alpha0), DerivedField(s.profile, field.alpha0), s.center, s.power
    return None


def _center_array(center, ladder, n):
    if isinstance(center, PerEps):
        return np.asarray(center.values, dtype=float).reshape(len(ladder), n)
    return _locations(center, ladder, n)


def _factor_order(U: Field, K, j: int, ladder: EpsilonLadder) -> float:
    """Fitted N with sup_{K, |b| <= j} |d^b U| = O(eps^-N)."""
    sups = np.array([_seminorm_on_K(U, K, j, float(e)) for e in ladder.values])
    if np.count_nonzero(sups) < 4:
        return 0.0
    fit = fit_valuation(ladder.values, sups)
    return max(0.0, -fit.exponent) if np.isfinite(fit.exponent) else 0.0


def multiply(u, T: BasicFunctional) -> BasicFunctional:
    """``(uT)(v) = T(u v)``: Leibniz at atoms, pointwise product for densities.

    Densities multiplied by a concentrated factor ``eps^a f((x - c)/eps^p)``
    become scaled densities, so the product stays exact at every eps.
    """
    n = T.dimension
    if isinstance(u, RepresentativeNet):
        if u.ladder != T.ladder:
            raise LadderMismatch("net and functional live on different ladders")
        U = u.field()
    else:
        U = _as_field(u, n)
    ladder = T.ladder
    L = len(ladder)
    eps_v = ladder.values
    if isinstance(U, SumField):
        out = None
        for c, f in U.terms:
            coeff = c.values if isinstance(c, PerEps) else c
            term = multiply(f, T._with(certificate=None)).scale(coeff)
            out = term if out is None else out + term
        cert = T.certificate
        if cert is not None and _finite(cert.K):
            cert = replace(cert, N=cert.N + _factor_order(U, cert.K, cert.j, ladder))
        return out._with(certificate=cert, name="u*T")
    atoms, dens, scal, parts = [], [], [], []
    for a in T.atoms:
        for beta in _sub_indices(a.alpha):
            gamma = tuple(x - y for x, y in zip(a.alpha, beta))
            vals = np.array(
                [complex(np.asarray(U.evaluate(tuple(np.array([p]) for p in a.loc[k]), eps_v[k], gamma)).ravel()[0]) for k in range(L)]
            )
            atoms.append(_Atom(a.coeff * _binom(a.alpha, beta) * vals, tuple(beta), a.loc))
    view = _scaled_view(U)
    for d in T.densities:
        box = box_intersect(d.box, T.domain)
        for beta in _sub_indices(d.alpha):
            gamma = tuple(x - y for x, y in zip(d.alpha, beta))
            c = d.coeff * _binom(d.alpha, beta)
            if view is not None:
                amp, prof, ctr, p = view
                Dprof = DerivedField(prof, gamma) if any(gamma) else prof
                amp_g = amp - p * sum(gamma)
                fac = eps_v ** (amp_g + n * p)
                profile = ProductField(Dprof, PullbackField(d.field, ctr, p))
                scal.append(_Scaled(c * fac, profile, _center_array(ctr, ladder, n), p, box, tuple(beta)))
            else:
                DU = DerivedField(U, gamma) if any(gamma) else U
                dens.append(_Density(c, ProductField(d.field, DU), box, tuple(beta)))
    for s in T.scaled:
        for beta in _sub_indices(s.alpha):
            gamma = tuple(x - y for x, y in zip(s.alpha, beta))
            DU = DerivedField(U, gamma) if any(gamma) else U
            ctr = PerEps(s.center, ladder)
            profile = ProductField(s.profile, PullbackField(DU, ctr, s.power))
            scal.append(replace(s, coeff=s.coeff * _binom(s.alpha, beta), profile=profile, alpha=tuple(beta)))
    for p in T.parts:
        inner = BasicFunctional(n, ladder, parts=[p], domain=T.domain)
        parts.append(_Multiplied(np.ones(L, dtype=complex), U, inner))
    cert = T.certificate
    if cert is not None and _finite(cert.K):
        cert = replace(cert, N=cert.N + _factor_order(U, cert.K, cert.j, ladder))
    return BasicFunctional(n, ladder, atoms, dens, scal, parts, cert, T.domain, name="u*T")


# ------------------------------------------------------------ regularization

def regularize(T: BasicFunctional, rho: Mollifier, q: float, grid: Grid) -> RepresentativeNet:
    """``x -> T_eps(rho_{eps^q}(x - .))`` as a closed-form net on the grid.

    Atoms give ``(-1)^|alpha| c d^alpha rho_{eps^q}(x - x_a)``, densities the
    convolution ``g 1_box * rho_{eps^q}``, scaled terms a convolution of
    their profile with the rescaled mollifier.
    """
    if T.parts:
        raise NotImplementedError("regularization of composed functionals")
    n = T.dimension
    ladder = T.ladder
    q = float(q)
    terms = []
    for a in T.atoms:
        sign = (-1.0) ** sum(a.alpha)
        f = ScaledField(rho.profile, PerEps(a.loc, ladder), q)
        if any(a.alpha):
            f = DerivedField(f, a.alpha)
        terms.append((PerEps(sign * a.coeff, ladder), f))
    for d in T.densities:
        box = box_intersect(d.box, T.domain)
        if box is None or not _finite(box):
            raise SupportError("regularization needs bounded densities")
        inner = ProductField(d.field, BoxIndicatorField(box, n))
        prof = DerivedField(rho.profile, d.alpha) if any(d.alpha) else rho.profile
        f = ConvolvedField(inner, prof, (0.0,) * n, q)
        if any(d.alpha):
            f = EpsPowerField(f, -q * sum(d.alpha))
        terms.append((PerEps((-1.0) ** sum(d.alpha) * d.coeff, ladder), f))
    for s in T.scaled:
        prof = DerivedField(rho.profile, s.alpha) if any(s.alpha) else rho.profile
        inner = ScaledField(prof, (0.0,) * n, q, amp=-n * q - q * sum(s.alpha))
        f = ConvolvedField(inner, s.profile, PerEps(s.center, ladder), s.power)
        terms.append((PerEps((-1.0) ** sum(s.alpha) * s.coeff, ladder), f))
    if not terms:
        terms.append((0.0, ConstantField(0.0, n)))
    src = SumField(terms)
    if not any(np.iscomplexobj(c.values) and np.any(np.imag(c.values)) for c, _ in terms if isinstance(c, PerEps)):
        src = SumField([(PerEps(np.real(c.values), ladder) if isinstance(c, PerEps) else c, f) for c, f in terms])
    hint = None
    sT = T.support_hull()
    if sT is not None:
        R = rho.radius * ladder.anchor**q
        hint = tuple((lo - R, hi + R) for lo, hi in sT)
        if not grid.contains_box(hint):
            hint = None
    return RepresentativeNet(grid, ladder, source=src, support_hint=hint, name=f"regularized (q={q:g})")


def regularization_defect(T: BasicFunctional, rho: Mollifier, q: float, probe: RepresentativeNet) -> GeneralizedNumber:
    """``(T_q - T)(u) = T(rho_{eps^q} * u - u)`` for a band-limited periodic probe.

    The difference ``rho_{eps^q} * u - u`` is formed in Fourier space as
    ``u_hat(k) (rho_hat(eps^q k) - 1)``, which never subtracts nearly equal
    numbers, so valuations up to ~2q are resolved at eps = 2^-18.

    Raises
    ------
    AliasingError
        If the probe has more than 1e-6 of its spectral energy in the top octave.
    """
    grid = probe.grid
    if not grid.periodic:
        raise ValueError("probe must live on a periodic grid")
    ladder = T.ladder
    axes = tuple(range(1, grid.dimension + 1))
    coeffs = np.fft.fftn(probe.samples, axes=axes)
    ks = np.meshgrid(*[grid.wavenumbers(i) for i in range(grid.dimension)], indexing="ij")
    kk = np.sqrt(sum(k**2 for k in ks))
    top = kk > kk.max() / 2
    energy = (np.abs(coeffs) ** 2).sum(axis=axes)
    top_energy = (np.abs(coeffs[:, top]) ** 2).sum(axis=-1)
    if np.any(top_energy > 1e-6 * energy):
        raise AliasingError("probe has spectral energy in the top octave")
    new = np.empty_like(coeffs, dtype=complex)
    for k, e in enumerate(ladder.values):
        new[k] = coeffs[k] * rho.fourier_minus_one(e**q * kk)
    w = TrigPolyField(grid, ladder, new, real=np.isrealobj(probe.samples))
    return GeneralizedNumber(T.act_field(w), ladder)


def regularization_report(T: BasicFunctional, rho: Mollifier, qs, probes) -> dict:
    """Valuations of ``(T_q - T)(u)`` per probe and q, with the fitted offsets ``N_u``.

    ``N_u`` is the smallest offset with ``val >= q - N_u`` over the q grid;
    ``monotone`` records whether valuations increase with q.
    """
    out = {"q": list(qs), "probes": [], "note": "finite probe family"}
    for i, u in enumerate(probes):
        vals = []
        for q in qs:
            fit = regularization_defect(T, rho, q, u).fit()
            vals.append(fit.exponent)
        offsets = [q - v for q, v in zip(qs, vals)]
        out["probes"].append(
            {
                "index": i,
                "valuations": vals,
                "N_u": max(offsets),
                "monotone": bool(all(b > a for a, b in zip(vals, vals[1:]))),
            }
        )
    return out


# ------------------------------------------------------------------ support

def _field_cells(f: Field, region, cells: CellGrid, eps: float, floor: float) -> set:
    """Cells where |f| exceeds floor * max|f| on region."""
    out = set()
    sub = 16
    n = cells.dimension
    idx_range = cells.cells_meeting(region)
    if not idx_range:
        return out
    pts_per_cell = {}
    coords = [[] for _ in range(n)]
    for cell in sorted(idx_range):
        ext = cells.extent(cell)
        ext = tuple((max(lo, a), min(hi, b)) for (lo, hi), (a, b) in zip(ext, region))
        axes = [np.linspace(lo, hi, sub) if hi > lo else np.array([lo]) for lo, hi in ext]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts_per_cell[cell] = mesh[0].size
        for i in range(n):
            coords[i].append(mesh[i].ravel())
    coords = tuple(np.concatenate(c) for c in coords)
    vals = np.abs(np.asarray(f.evaluate(coords, eps)))
    vmax = float(vals.max()) if vals.size else 0.0
    if vmax == 0:
        return out
    pos = 0
    for cell in sorted(idx_range):
        m = pts_per_cell[cell]
        if np.max(vals[pos:pos + m]) > floor * vmax:
            out.add(cell)
        pos += m
    return out


def estimate_support(T: BasicFunctional, cells: CellGrid, floor: float = 1e-12, dilate: int = 0) -> set:
    """Cells meeting supp T_eps for some ladder eps.

    Atoms mark the cells whose closed extent contains them (both neighbours
    of a shared face); densities the cells where |g| exceeds ``floor`` times
    its maximum; scaled terms the cells meeting ``c + eps^p supp f``.
    Unbounded densities are clipped to the cell grid's box.
    """
    out = set()
    for k, e in enumerate(T.ladder.values):
        for a in T.atoms:
            if a.coeff[k] != 0:
                out |= cells.cells_containing(a.loc[k])
        for d in T.densities:
            if d.coeff[k] == 0:
                continue
            region = box_intersect(T._density_region(d, e), cells.box)
            if any(hi < lo for lo, hi in region):
                continue
            out |= _field_cells(d.field, region, cells, e, floor)
        for s in T.scaled:
            if s.coeff[k] == 0:
                continue
            region = T._scaled_region(s, k, e)
            region = box_intersect(region, cells.box) if region is not None else cells.box
            if any(hi < lo for lo, hi in region):
                continue
            out |= cells.cells_meeting(region)
        for p in T.parts:
            if p.coeff[k] == 0:
                continue
            b = _part_support(p, k)
            b = cells.box if b is None else box_intersect(b, cells.box)
            if any(hi < lo for lo, hi in b):
                continue
            if isinstance(p, _Image) and getattr(p.transposer, "is_local", False):
                inner = estimate_support(p.inner, cells, floor)
                out |= inner & cells.cells_meeting(b)
            else:
                out |= cells.cells_meeting(b)
    if dilate:
        out = cells.dilate(out, dilate)
    return out
