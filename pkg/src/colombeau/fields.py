"""Closed-form fields: functions of space (and eps) with exact derivatives.

A field is anything with ``evaluate(coords, eps, alpha)`` returning the
partial derivative ``d^alpha`` at the given coordinates.  Nets built from
fields are evaluated exactly at any point, so objects living on the scale
eps = 2^-18 are handled without grids fine enough to resolve them.

``coords`` is a tuple of arrays (one per axis).  A field may return extra
leading batch dimensions (see :class:`SliceField`); callers reduce over the
trailing axis only.
"""
from __future__ import annotations

import math
from functools import lru_cache
from itertools import product as iproduct

import numpy as np
import sympy as sp
from scipy.special import roots_legendre

from .expr import SYMBOLS, Expression, parse
from .jets import bump_q_jet, plateau_q_jet, radial_derivative

__all__ = [
    "Field",
    "ConstantField",
    "ExpressionField",
    "CutoffField",
    "RadialField",
    "ScaledField",
    "PullbackField",
    "ProductField",
    "SumField",
    "EpsPowerField",
    "LadderCoefficientField",
    "DerivedField",
    "BoxIndicatorField",
    "ConvolvedField",
    "JumpCorrectionField",
    "TrigPolyField",
    "SliceField",
    "ReflectTranslateField",
    "PlaneWaveField",
    "PerEps",
    "gauss_legendre",
    "box_intersect",
    "box_hull",
    "multi_indices",
]

_SPACE = ("x", "y")


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = roots_legendre(n)
    return x, w


def multi_indices(n: int, order: int):
    """All multi-indices of dimension n with total order <= order."""
    return [a for a in iproduct(range(order + 1), repeat=n) if sum(a) <= order]


def _alpha(alpha, n):
    if alpha is None:
        return (0,) * n
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if len(alpha) != n:
        raise ValueError(f"multi-index {alpha} does not match dimension {n}")
    return alpha


def _binom_multi(alpha, beta):
    return math.prod(math.comb(a, b) for a, b in zip(alpha, beta))


def _sub_indices(alpha):
    return list(iproduct(*[range(a + 1) for a in alpha]))


def box_intersect(a, b):
    if a is None:
        return b
    if b is None:
        return a
    out = tuple((max(p[0], q[0]), min(p[1], q[1])) for p, q in zip(a, b))
    return out


def box_hull(a, b):
    if a is None or b is None:
        return None
    return tuple((min(p[0], q[0]), max(p[1], q[1])) for p, q in zip(a, b))


def box_empty(box) -> bool:
    return box is not None and any(lo >= hi for lo, hi in box)


class PerEps:
    """Values indexed by the ladder; ``at(eps)`` looks up the ladder point."""

    def __init__(self, values, ladder):
        self.values = np.asarray(values)
        self.ladder = ladder
        self._eps = ladder.values

    def index(self, eps) -> int:
        k = int(np.argmin(np.abs(self._eps - eps)))
        if abs(self._eps[k] - eps) > 1e-9 * eps:
            raise KeyError(f"eps={eps} is not a ladder point")
        return k

    def at(self, eps):
        return self.values[self.index(eps)]


def _at(value, eps):
    return value.at(eps) if isinstance(value, PerEps) else value


class Field:
    """Base class; subclasses implement ``evaluate``."""

    dimension: int = 1
    depends_on_eps: bool = False

    def evaluate(self, coords, eps, alpha=None):  # pragma: no cover - interface
        raise NotImplementedError

    def support(self, eps):
        """Bounding box of the support, or None when unknown/unbounded."""
        return None

    def breakpoints(self, eps):
        """1D only: points where the field or a derivative may jump."""
        return ()

    def __call__(self, *coords, eps=1.0):
        return self.evaluate(coords, eps)

    def __mul__(self, other):
        if isinstance(other, Field):
            return ProductField(self, other)
        return SumField([(complex(other) if np.iscomplexobj(other) else float(other), self)])

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, Field):
            other = ConstantField(other, self.dimension)
        return SumField([(1.0, self), (1.0, other)])

    __radd__ = __add__

    def __neg__(self):
        return SumField([(-1.0, self)])

    def __sub__(self, other):
        if not isinstance(other, Field):
            other = ConstantField(other, self.dimension)
        return SumField([(1.0, self), (-1.0, other)])

    def derivative(self, alpha):
        return DerivedField(self, alpha)


class ConstantField(Field):
    def __init__(self, value, dimension: int = 1):
        self.value = value
        self.dimension = dimension

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        shape = np.broadcast(*coords).shape
        if any(alpha):
            return np.zeros(shape)
        return np.full(shape, self.value, dtype=np.result_type(self.value, float))

    def __repr__(self):
        return f"ConstantField({self.value})"


def _linear_roots(arg):
    """Roots in x of an expression, as callables of eps."""
    try:
        roots = sp.solve(sp.Eq(arg, 0), SYMBOLS["x"])
    except NotImplementedError:
        return []
    out = []
    for r in roots:
        if r.free_symbols - {SYMBOLS["eps"]}:
            continue
        if not r.is_real and r.is_real is not None:
            continue
        out.append(sp.lambdify(SYMBOLS["eps"], r, "numpy"))
    return out


class ExpressionField(Field):
    """Field given by a closed-form expression in x (and y) and eps."""

    def __init__(self, expr, dimension: int = 1):
        self.expr = parse(expr, dimension)
        self.dimension = dimension
        allowed = {"x", "eps"} if dimension == 1 else {"x", "y", "eps"}
        extra = self.expr.free - allowed
        if extra:
            raise ValueError(f"field expression uses non-space variables {sorted(extra)}")
        self.depends_on_eps = self.expr.depends_on("eps")
        self._roots = None

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        spec = []
        for name, k in zip(_SPACE, alpha):
            spec.extend([name, k])
        e = self.expr.diff(*spec)
        values = {name: c for name, c in zip(_SPACE, coords)}
        shape = np.broadcast(*coords).shape
        out = e.evaluate_checked(eps=eps, **values)
        return np.broadcast_to(out, shape)

    def breakpoints(self, eps):
        if self.dimension != 1:
            return ()
        if self._roots is None:
            roots = []
            kinds = (sp.Heaviside, sp.Abs, sp.sign, sp.DiracDelta)
            for atom in self.expr.sym.atoms(*kinds):
                arg = atom.args[0]
                if SYMBOLS["x"] in arg.free_symbols:
                    roots.extend(_linear_roots(arg))
            self._roots = roots
        return tuple(float(r(eps)) for r in self._roots)

    def __repr__(self):
        return f"ExpressionField({self.expr.text!r})"


class RadialField(Field):
    """``scale * g(|x - center|^2 / radius^2)`` for a radial profile g given by its q-jet."""

    def __init__(self, qjet, center, radius: float, scale: float = 1.0, dimension: int = 1, support_q: float = 1.0):
        self.qjet = qjet
        self.center = tuple(np.atleast_1d(np.asarray(center, dtype=float)))
        self.radius = float(radius)
        self.scale = scale
        self.dimension = dimension
        self._rsupp = self.radius * math.sqrt(support_q)

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        s = tuple((np.asarray(c, dtype=float) - c0) / self.radius for c, c0 in zip(coords, self.center))
        val = radial_derivative(self.qjet, s, alpha)
        return self.scale * self.radius ** (-sum(alpha)) * val

    def support(self, eps):
        return tuple((c - self._rsupp, c + self._rsupp) for c in self.center)

    def __repr__(self):
        return f"{type(self).__name__}(center={self.center}, radius={self.radius})"


class CutoffField(RadialField):
    """Smooth cutoff: 1 on |x - x0| <= r/2, 0 outside |x - x0| < r."""

    def __init__(self, center, radius: float, dimension: int = 1):
        super().__init__(plateau_q_jet, center, radius, 1.0, dimension)


def bump_field(center, radius: float, dimension: int = 1, scale: float = 1.0) -> RadialField:
    """Unnormalized bump exp(-1/(1 - |x-c|^2/r^2)) supported in the r-ball."""
    return RadialField(bump_q_jet, center, radius, scale, dimension)


class ScaledField(Field):
    """``eps^amp * f((x - c) / eps^p)``; default amp = -n p (unit mass scaling)."""

    depends_on_eps = True

    def __init__(self, profile: Field, center, power: float = 1.0, amp: float | None = None):
        self.profile = profile
        self.dimension = profile.dimension
        self.center = center
        self.power = float(power)
        self.amp = -self.dimension * self.power if amp is None else float(amp)

    def _center(self, eps):
        return np.atleast_1d(np.asarray(_at(self.center, eps), dtype=float))

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        sc = eps**self.power
        c = self._center(eps)
        t = tuple((np.asarray(x, dtype=float) - c0) / sc for x, c0 in zip(coords, c))
        fac = eps**self.amp * sc ** (-sum(alpha))
        return fac * self.profile.evaluate(t, eps, alpha)

    def support(self, eps):
        s = self.profile.support(eps)
        if s is None:
            return None
        sc = eps**self.power
        c = self._center(eps)
        return tuple((c0 + sc * lo, c0 + sc * hi) for c0, (lo, hi) in zip(c, s))

    def breakpoints(self, eps):
        sc = eps**self.power
        c0 = float(self._center(eps)[0])
        return tuple(c0 + sc * b for b in self.profile.breakpoints(eps))

    def __repr__(self):
        return f"ScaledField({self.profile!r}, p={self.power}, amp={self.amp})"


class PullbackField(Field):
    """``g(c + eps^p t)``: a field seen in the stretched variable t."""

    def __init__(self, field: Field, center, power: float):
        self.field = field
        self.dimension = field.dimension
        self.center = center
        self.power = float(power)
        self.depends_on_eps = True

    def _center(self, eps):
        return np.atleast_1d(np.asarray(_at(self.center, eps), dtype=float))

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        sc = eps**self.power
        c = self._center(eps)
        x = tuple(c0 + sc * np.asarray(t, dtype=float) for t, c0 in zip(coords, c))
        return sc ** sum(alpha) * self.field.evaluate(x, eps, alpha)

    def support(self, eps):
        s = self.field.support(eps)
        if s is None:
            return None
        sc = eps**self.power
        c = self._center(eps)
        return tuple(((lo - c0) / sc, (hi - c0) / sc) for c0, (lo, hi) in zip(c, s))

    def breakpoints(self, eps):
        sc = eps**self.power
        c0 = float(self._center(eps)[0])
        return tuple((b - c0) / sc for b in self.field.breakpoints(eps))


class ProductField(Field):
    def __init__(self, f: Field, g: Field):
        if f.dimension != g.dimension:
            raise ValueError("dimension mismatch in product")
        self.f, self.g = f, g
        self.dimension = f.dimension
        self.depends_on_eps = f.depends_on_eps or g.depends_on_eps

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        if not any(alpha):
            return self.f.evaluate(coords, eps, alpha) * self.g.evaluate(coords, eps, alpha)
        total = 0
        for beta in _sub_indices(alpha):
            gamma = tuple(a - b for a, b in zip(alpha, beta))
            total = total + _binom_multi(alpha, beta) * self.f.evaluate(coords, eps, beta) * self.g.evaluate(coords, eps, gamma)
        return total

    def support(self, eps):
        return box_intersect(self.f.support(eps), self.g.support(eps))

    def breakpoints(self, eps):
        return tuple(sorted(set(self.f.breakpoints(eps)) | set(self.g.breakpoints(eps))))

    def __repr__(self):
        return f"({self.f!r} * {self.g!r})"


class SumField(Field):
    def __init__(self, terms):
        terms = [(c, f) for c, f in terms]
        if not terms:
            raise ValueError("empty sum")
        self.terms = terms
        self.dimension = terms[0][1].dimension
        self.depends_on_eps = any(f.depends_on_eps or isinstance(c, PerEps) for c, f in terms)

    def evaluate(self, coords, eps, alpha=None):
        total = 0
        for c, f in self.terms:
            total = total + _at(c, eps) * f.evaluate(coords, eps, alpha)
        return total

    def support(self, eps):
        out = None
        for i, (_, f) in enumerate(self.terms):
            s = f.support(eps)
            if s is None:
                return None
            out = s if i == 0 else box_hull(out, s)
        return out

    def breakpoints(self, eps):
        pts = set()
        for _, f in self.terms:
            pts |= set(f.breakpoints(eps))
        return tuple(sorted(pts))

    def flat_terms(self):
        """Expand nested sums into a flat list of (coefficient, field)."""
        out = []
        for c, f in self.terms:
            if isinstance(f, SumField):
                for c2, f2 in f.flat_terms():
                    out.append((_mul_coeff(c, c2), f2))
            else:
                out.append((c, f))
        return out

    def __repr__(self):
        return " + ".join(f"{c}*{f!r}" for c, f in self.terms)


def _mul_coeff(a, b):
    if isinstance(a, PerEps) and isinstance(b, PerEps):
        return PerEps(a.values * b.values, a.ladder)
    if isinstance(a, PerEps):
        return PerEps(a.values * b, a.ladder)
    if isinstance(b, PerEps):
        return PerEps(a * b.values, b.ladder)
    return a * b


class EpsPowerField(Field):
    """``eps^a * field``."""

    def __init__(self, field: Field, power: float):
        self.field = field
        self.power = float(power)
        self.dimension = field.dimension
        self.depends_on_eps = True

    def evaluate(self, coords, eps, alpha=None):
        return eps**self.power * self.field.evaluate(coords, eps, alpha)

    def support(self, eps):
        return self.field.support(eps)

    def breakpoints(self, eps):
        return self.field.breakpoints(eps)


class LadderCoefficientField(Field):
    """Per-ladder-point scalar coefficient times a field."""

    def __init__(self, coeff: PerEps, field: Field):
        self.coeff = coeff
        self.field = field
        self.dimension = field.dimension
        self.depends_on_eps = True

    def evaluate(self, coords, eps, alpha=None):
        return self.coeff.at(eps) * self.field.evaluate(coords, eps, alpha)

    def support(self, eps):
        return self.field.support(eps)

    def breakpoints(self, eps):
        return self.field.breakpoints(eps)


class DerivedField(Field):
    """``d^alpha0 field``."""

    def __init__(self, field: Field, alpha0):
        self.field = field
        self.dimension = field.dimension
        self.alpha0 = _alpha(alpha0, self.dimension)
        self.depends_on_eps = field.depends_on_eps

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        return self.field.evaluate(coords, eps, tuple(a + b for a, b in zip(alpha, self.alpha0)))

    def support(self, eps):
        return self.field.support(eps)

    def breakpoints(self, eps):
        return self.field.breakpoints(eps)

    def __repr__(self):
        return f"D{self.alpha0}({self.field!r})"


class BoxIndicatorField(Field):
    """Indicator of a closed box; derivatives vanish away from the faces."""

    def __init__(self, box, dimension: int = 1):
        self.box = tuple((float(lo), float(hi)) for lo, hi in box)
        self.dimension = dimension

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        shape = np.broadcast(*coords).shape
        if any(alpha):
            return np.zeros(shape)
        inside = np.ones(shape, dtype=bool)
        for c, (lo, hi) in zip(coords, self.box):
            inside &= (np.asarray(c) >= lo) & (np.asarray(c) <= hi)
        return inside.astype(float)

    def support(self, eps):
        return self.box

    def breakpoints(self, eps):
        return self.box[0] if self.dimension == 1 else ()


def _cumulative_bump(t, radius=1.0):
    """Normalized cumulative bump: integral of rho from -radius to t (1D).

    Evaluated as -Phi(-t) + 1 for t > 0 so that the quadrature interval never
    exceeds half the support.
    """
    from .mollifier import BUMP_MASS_1D

    t = np.clip(np.asarray(t, dtype=float) / radius, -1.0, 1.0)
    tn = -np.abs(t)
    x, w = gauss_legendre(64)
    half = 0.5 * (tn + 1.0)
    s = -1.0 + half[..., None] * (x + 1.0)
    vals = np.exp(-1.0 / np.maximum(1.0 - s**2, 1e-300)) * (np.abs(s) < 1)
    low = (vals * w).sum(-1) * half / BUMP_MASS_1D
    return np.where(t > 0, 1.0 - low, low)


class JumpCorrectionField(Field):
    """``Phi(t) - H(t)`` where Phi is the cumulative normalized bump (1D).

    Compactly supported in [-1, 1] with a unit downward jump at 0; together
    with ``H(x - a)`` it gives the exact mollification of a Heaviside step.
    """

    dimension = 1

    def evaluate(self, coords, eps, alpha=None):
        from .mollifier import BUMP_MASS_1D

        (a,) = _alpha(alpha, 1)
        t = np.asarray(coords[0], dtype=float)
        if a == 0:
            return _cumulative_bump(t) - np.heaviside(t, 0.5)
        rho = radial_derivative(bump_q_jet, (t,), (a - 1,)) / BUMP_MASS_1D
        return rho

    def support(self, eps):
        return ((-1.0, 1.0),)

    def breakpoints(self, eps):
        return (0.0,)


class ConvolvedField(Field):
    """Convolution of a field with a scaled profile.

    ``value(x) = integral f(t) inner(x - c - eps^p t) dt``: the convolution of
    ``inner`` with ``eps^(-n p) f((. - c)/eps^p)``.  The profile must have
    bounded support; the integral uses Gauss-Legendre nodes on it.  When
    ``inner`` is itself a narrower :class:`ScaledField` the roles are swapped
    so that the quadrature always runs over the narrower factor.
    """

    def __init__(self, inner: Field, profile: Field, center=None, power: float = 1.0, nodes: int | None = None):
        if profile.support(1.0) is None:
            raise ValueError("convolution profile must be compactly supported")
        self.inner = inner
        self.profile = profile
        self.dimension = inner.dimension
        self.center = center if center is not None else (0.0,) * self.dimension
        self.power = float(power)
        self.nodes = nodes or (64 if self.dimension == 1 else 24)
        self.depends_on_eps = True

    def _center(self, eps):
        return np.atleast_1d(np.asarray(_at(self.center, eps), dtype=float))

    def _roles(self, eps):
        sc = eps**self.power
        if isinstance(self.inner, ScaledField):
            sc_in = eps**self.inner.power
            if sc_in < sc:
                # integrate over the inner profile's variable instead
                wrapped = ScaledField(self.profile, self._center(eps), self.power)
                shift = self.inner._center(eps)
                prof = self.inner.profile
                amp = eps ** (self.inner.amp + self.dimension * self.inner.power)
                return prof, wrapped, shift, sc_in, amp
        return self.profile, self.inner, self._center(eps), sc, 1.0

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        prof, inner, c, sc, amp = self._roles(eps)
        supp = prof.support(eps)
        x, w = gauss_legendre(self.nodes)
        axes = []
        for lo, hi in supp:
            axes.append((0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w))
        if self.dimension == 1:
            tn, wn = axes[0]
            tnodes = (tn,)
            wts = wn
        else:
            (t1, w1), (t2, w2) = axes
            T1, T2 = np.meshgrid(t1, t2, indexing="ij")
            tnodes = (T1.ravel(), T2.ravel())
            wts = np.outer(w1, w2).ravel()
        # a non-smooth inner field is differentiated through the profile:
        # d^a (g * rho_s) = s^-|a| integral rho^(a)(t) g(x - c - s t) dt
        on_profile = any(alpha) and prof is self.profile and bool(inner.breakpoints(eps))
        if on_profile:
            fvals = prof.evaluate(tnodes, eps, alpha) * wts * sc ** (-sum(alpha))
            inner_alpha = None
        else:
            fvals = prof.evaluate(tnodes, eps) * wts
            inner_alpha = alpha
        bps = inner.breakpoints(eps) if self.dimension == 1 else ()
        if bps:
            return amp * self._split_1d(coords[0], eps, prof, inner, c[0], sc, supp[0], bps, alpha if on_profile else None, inner_alpha)
        keep = fvals != 0
        tnodes = tuple(t[keep] for t in tnodes)
        fvals = fvals[keep]
        pts = tuple(np.asarray(xc, dtype=float)[..., None] - c0 - sc * t for xc, c0, t in zip(coords, c, tnodes))
        vals = inner.evaluate(pts, eps, inner_alpha)
        return amp * (vals * fvals).sum(-1)

    def _split_1d(self, xc, eps, prof, inner, c0, sc, supp, bps, prof_alpha, inner_alpha):
        """Gauss-Legendre with the profile support split where x - c - sc t
        crosses a breakpoint of the inner field, separately for each x."""
        x = np.asarray(xc, dtype=float)
        lo, hi = supp
        cuts = [np.full(x.shape, lo)]
        for b in bps:
            cuts.append(np.clip((x - c0 - b) / sc, lo, hi))
        cuts.append(np.full(x.shape, hi))
        edges = np.sort(np.stack(cuts, axis=-1), axis=-1)
        gx, gw = gauss_legendre(self.nodes)
        total = np.zeros(x.shape, dtype=complex)
        for p in range(edges.shape[-1] - 1):
            a, b = edges[..., p, None], edges[..., p + 1, None]
            t = 0.5 * (b - a) * gx + 0.5 * (b + a)
            w = 0.5 * (b - a) * gw
            if prof_alpha is None:
                f = prof.evaluate((t,), eps)
            else:
                f = prof.evaluate((t,), eps, prof_alpha) * sc ** (-sum(prof_alpha))
            vals = inner.evaluate((x[..., None] - c0 - sc * t,), eps, inner_alpha)
            total += (vals * f * w).sum(-1)
        return total if np.any(total.imag) else total.real

    def breakpoints(self, eps):
        if self.dimension != 1:
            return ()
        c0 = float(self._center(eps)[0])
        return tuple(c0 + b for b in self.inner.breakpoints(eps))

    def support(self, eps):
        s_in = self.inner.support(eps)
        if s_in is None:
            return None
        sc = eps**self.power
        c = self._center(eps)
        sp_ = self.profile.support(eps)
        return tuple((a + c0 + sc * lo, b + c0 + sc * hi) for (a, b), c0, (lo, hi) in zip(s_in, c, sp_))


class TrigPolyField(Field):
    """Trigonometric interpolant of sampled data on a periodic grid.

    ``coeffs[k]`` holds the (unnormalized) FFT of the samples at ladder point
    k; evaluation at arbitrary points sums the Fourier series exactly.
    """

    def __init__(self, grid, ladder, coeffs, real: bool, support_hint=None):
        self.grid = grid
        self.ladder = ladder
        self.dimension = grid.dimension
        self.coeffs = coeffs
        self.real = real
        self.hint = support_hint
        self.depends_on_eps = True
        self._index = PerEps(np.arange(len(ladder)), ladder)

    @classmethod
    def from_samples(cls, grid, ladder, samples, support_hint=None):
        axes = tuple(range(1, samples.ndim))
        coeffs = np.fft.fftn(samples, axes=axes)
        return cls(grid, ladder, coeffs, not np.iscomplexobj(samples), support_hint)

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        c = self.coeffs[self._index.index(eps)]
        ks = [self.grid.wavenumbers(i) for i in range(self.dimension)]
        M = self.grid.size
        coords = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in coords])
        shape = coords[0].shape
        pts = [x.ravel() - lo for x, (lo, _) in zip(coords, self.grid.box)]
        out = np.empty(pts[0].size, dtype=complex)
        chunk = max(1, 2**22 // max(1, c.size))
        for s in range(0, pts[0].size, chunk):
            sl = slice(s, s + chunk)
            if self.dimension == 1:
                E = np.exp(1j * np.outer(pts[0][sl], ks[0]))
                out[sl] = E @ (c * (1j * ks[0]) ** alpha[0])
            else:
                E1 = np.exp(1j * np.outer(pts[0][sl], ks[0]))
                E2 = np.exp(1j * np.outer(pts[1][sl], ks[1]))
                cc = c * np.outer((1j * ks[0]) ** alpha[0], (1j * ks[1]) ** alpha[1])
                out[sl] = np.einsum("nk,kl,nl->n", E1, cc, E2)
        out = (out / M).reshape(shape)
        if self.real:
            out = out.real
        return out

    def support(self, eps):
        return self.hint


class SliceField(Field):
    """Batch of 1D slices y -> u(x_i, y) of a 2D field (leading batch axis)."""

    dimension = 1

    def __init__(self, field2d: Field, xs):
        self.field = field2d
        self.xs = np.asarray(xs, dtype=float)
        self.depends_on_eps = field2d.depends_on_eps

    def evaluate(self, coords, eps, alpha=None):
        (a,) = _alpha(alpha, 1)
        y = np.asarray(coords[0], dtype=float)
        X = self.xs.reshape(self.xs.shape + (1,) * y.ndim)
        return self.field.evaluate((X, y[None, ...]), eps, (0, a))

    def support(self, eps):
        s = self.field.support(eps)
        return None if s is None else (s[1],)


class ReflectTranslateField(Field):
    """Batch of y -> u(x_i - y) (leading batch axes = the x points)."""

    def __init__(self, field: Field, xs):
        self.field = field
        self.dimension = field.dimension
        self.xs = tuple(np.asarray(x, dtype=float).ravel() for x in xs)
        self.depends_on_eps = field.depends_on_eps

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        coords = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in coords])
        pts = tuple(x[:, None] - c.ravel()[None, :] for x, c in zip(self.xs, coords))
        sign = (-1) ** sum(alpha)
        vals = sign * self.field.evaluate(pts, eps, alpha)
        return vals.reshape((self.xs[0].size,) + coords[0].shape)

    def support(self, eps):
        s = self.field.support(eps)
        if s is None:
            return None
        return tuple((x.min() - hi, x.max() - lo) for x, (lo, hi) in zip(self.xs, s))


class PlaneWaveField(Field):
    """Batch of plane waves ``exp(-i k . x)``, one per row of ``ks`` (leading batch axis)."""

    def __init__(self, ks, dimension: int = 1):
        ks = np.asarray(ks, dtype=float)
        self.ks = ks.reshape(-1, dimension)
        self.dimension = dimension

    def evaluate(self, coords, eps, alpha=None):
        alpha = _alpha(alpha, self.dimension)
        coords = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in coords])
        shape = coords[0].shape
        phase = 0
        fac = 1
        for i, c in enumerate(coords):
            k = self.ks[:, i].reshape((-1,) + (1,) * len(shape))
            phase = phase + k * c[None]
            fac = fac * (-1j * k) ** alpha[i]
        return fac * np.exp(-1j * phase)
