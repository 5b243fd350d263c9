"""Grids, representative nets and their seminorms.

A :class:`RepresentativeNet` stores one sampled function per ladder point.
When the net comes from a closed form (an expression, a scaled profile, a
mollified distribution) it also keeps that *source* field, and derivatives,
seminorms and point values are then evaluated exactly instead of by
spectral or finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
import sympy as sp
from scipy.interpolate import RegularGridInterpolator

from .asymptotics import (
    DEFAULT_TOLERANCES,
    EpsilonLadder,
    GeneralizedNumber,
    ModerationClass,
    Tolerances,
    classify_net,
    fit_valuation,
)
from .errors import OutOfDomain, UnsupportedOrder
from .expr import SYMBOLS, Expression, parse
from .fields import (
    ConvolvedField,
    DerivedField,
    ExpressionField,
    Field,
    JumpCorrectionField,
    PerEps,
    ProductField,
    ScaledField,
    SumField,
    TrigPolyField,
    box_hull,
    multi_indices,
)
from .mollifier import Mollifier

__all__ = [
    "Grid",
    "RepresentativeNet",
    "SeminormSpec",
    "seminorm",
    "seminorm_fits",
    "classify",
    "embed_smooth",
    "net_from_expression",
    "net_from_field",
    "DistributionAtom",
    "DistributionSpec",
    "embed_distribution",
    "derivative",
    "point_value",
    "CellGrid",
    "MAX_ORDER",
]

MAX_ORDER = 4
SUPPORT_FLOOR = 1e-30


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a box, ``points`` per axis, x_j = a + j h (b excluded).

    ``periodic`` records the wrap convention: periodic grids use spectral
    derivatives, others 4th-order centred differences.
    """

    dimension: int = 1
    box: tuple = ((-4.0, 4.0),)
    points: int = 1024
    periodic: bool = True

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        box = tuple((float(a), float(b)) for a, b in self.box)
        if len(box) != self.dimension:
            raise ValueError("box must give one interval per axis")
        if any(b <= a for a, b in box):
            raise ValueError("box intervals must have positive length")
        object.__setattr__(self, "box", box)
        p = int(self.points)
        if p < 2**6 or p > 2**14 or p & (p - 1):
            raise ValueError("points per axis must be a power of two in [2^6, 2^14]")

    @property
    def spacing(self) -> tuple:
        return tuple((b - a) / self.points for a, b in self.box)

    @property
    def h(self) -> float:
        return self.spacing[0]

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dimension

    @property
    def size(self) -> int:
        return self.points**self.dimension

    def axis(self, i: int = 0) -> np.ndarray:
        a, b = self.box[i]
        return a + np.arange(self.points) * (b - a) / self.points

    def mesh(self) -> tuple:
        axes = [self.axis(i) for i in range(self.dimension)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def wavenumbers(self, i: int = 0) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.points, self.spacing[i])

    def contains(self, point, tol: float = 0.0) -> bool:
        point = np.atleast_1d(point)
        return all(a - tol <= p <= b + tol for p, (a, b) in zip(point, self.box))

    def contains_box(self, box) -> bool:
        return all(a <= lo and hi <= b for (lo, hi), (a, b) in zip(box, self.box))

    def mask(self, box) -> np.ndarray:
        m = np.ones(self.shape, dtype=bool)
        for c, (lo, hi) in zip(self.mesh(), box):
            m &= (c >= lo - 1e-12) & (c <= hi + 1e-12)
        return m


def _spectral_derivative(samples, grid: Grid, alpha):
    axes = tuple(range(1, samples.ndim))
    spec = np.fft.fftn(samples, axes=axes)
    mult = 1.0
    for i, a in enumerate(alpha):
        if a:
            k = grid.wavenumbers(i)
            if grid.points % 2 == 0 and a % 2 == 1:
                k = k.copy()
                k[grid.points // 2] = 0.0
            shape = [1] * samples.ndim
            shape[i + 1] = grid.points
            mult = mult * ((1j * k) ** a).reshape(shape)
    out = np.fft.ifftn(spec * mult, axes=axes)
    return out if np.iscomplexobj(samples) else out.real


def _fd_first(samples, h, axis):
    """4th-order centred first derivative; 2nd-order one-sided at the edges."""
    f = np.moveaxis(samples, axis, -1)
    d = np.empty_like(f)
    d[..., 2:-2] = (f[..., :-4] - 8 * f[..., 1:-3] + 8 * f[..., 3:-1] - f[..., 4:]) / (12 * h)
    edge = np.gradient(f, h, axis=-1, edge_order=2)
    d[..., :2] = edge[..., :2]
    d[..., -2:] = edge[..., -2:]
    return np.moveaxis(d, -1, axis)


def _fd_derivative(samples, grid: Grid, alpha):
    out = samples
    for i, a in enumerate(alpha):
        for _ in range(a):
            out = _fd_first(out, grid.spacing[i], i + 1)
    return out


def _check_order(alpha):
    if sum(alpha) > MAX_ORDER:
        raise UnsupportedOrder(f"derivative order {sum(alpha)} exceeds max_order {MAX_ORDER}")


class RepresentativeNet:
    """Per-ladder samples of a net (u_eps) on a grid.

    Parameters
    ----------
    grid, ladder
        Discretization and epsilon ladder.
    samples : ndarray, optional
        Shape ``(len(ladder), *grid.shape)``.  Computed from ``source`` when
        omitted.
    source : Field, optional
        Closed form of the net; used for exact derivatives and point values.
    support_hint : box, optional
        Sub-box outside which the net is certified to vanish (checked on the
        grid against ``1e-30``).
    tempered_weight : int, optional
        Certified polynomial growth order for tempered seminorms.
    """

    def __init__(
        self,
        grid: Grid,
        ladder: EpsilonLadder,
        samples=None,
        source: Field | None = None,
        support_hint=None,
        tempered_weight: int | None = None,
        name: str = "",
    ):
        if samples is None and source is None:
            raise ValueError("need samples or a source")
        self.grid = grid
        self.ladder = ladder
        self.source = source
        self.tempered_weight = tempered_weight
        self.name = name
        self.discretization_error = 0.0
        self._samples = None
        if samples is not None:
            samples = np.asarray(samples)
            if samples.shape != (len(ladder),) + grid.shape:
                raise ValueError(f"samples must have shape {(len(ladder),) + grid.shape}")
            if not np.all(np.isfinite(samples)):
                raise ValueError("samples must be finite")
            samples.setflags(write=False)
            self._samples = samples
        self.support_hint = None if support_hint is None else tuple((float(a), float(b)) for a, b in support_hint)
        if self.support_hint is not None:
            outside = ~grid.mask(self.support_hint)
            if np.any(outside):
                worst = float(np.max(np.abs(self.samples[:, outside])))
                if worst >= SUPPORT_FLOOR:
                    raise ValueError(f"support hint violated: max |u| outside = {worst:.3g}")

    @property
    def samples(self) -> np.ndarray:
        if self._samples is None:
            mesh = self.grid.mesh()
            out = np.stack([np.asarray(self.source.evaluate(mesh, e)) for e in self.ladder.values])
            if np.isrealobj(out) or not np.any(out.imag):
                out = np.real(out).astype(float)
            out.setflags(write=False)
            self._samples = out
        return self._samples

    def field(self) -> Field:
        """A field view: the source when known, else an interpolant of the samples."""
        if self.source is not None:
            return self.source
        if self.grid.periodic:
            return TrigPolyField.from_samples(self.grid, self.ladder, self.samples, self.support_hint)
        return _GridInterpField(self)

    def derivative_samples(self, alpha) -> np.ndarray:
        alpha = tuple(alpha)
        if not any(alpha):
            return self.samples
        if self.source is not None:
            mesh = self.grid.mesh()
            return np.stack([np.asarray(self.source.evaluate(mesh, e, alpha)) for e in self.ladder.values])
        if self.grid.periodic:
            return _spectral_derivative(self.samples, self.grid, alpha)
        return _fd_derivative(self.samples, self.grid, alpha)

    def _combine(self, other, op):
        if isinstance(other, RepresentativeNet):
            if other.grid != self.grid or other.ladder != self.ladder:
                raise ValueError("nets live on different grids or ladders")
            src = None
            if self.source is not None and other.source is not None:
                src = SumField([(1.0, self.source), (op, other.source)])
            hint = box_hull(self.support_hint, other.support_hint)
            return RepresentativeNet(self.grid, self.ladder, self.samples + op * other.samples, src, hint)
        raise TypeError("can only combine nets with nets")

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, other):
        if isinstance(other, RepresentativeNet):
            src = None
            if self.source is not None and other.source is not None:
                src = ProductField(self.source, other.source)
            return RepresentativeNet(self.grid, self.ladder, self.samples * other.samples, src)
        src = None if self.source is None else SumField([(other, self.source)])
        return RepresentativeNet(self.grid, self.ladder, self.samples * other, src, self.support_hint)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def __repr__(self):
        kind = "closed-form" if self.source is not None else "sampled"
        return f"RepresentativeNet({self.name or kind}, grid={self.grid.points}^{self.grid.dimension}, ladder={len(self.ladder)})"


class _GridInterpField(Field):
    """Cubic interpolation of samples on a non-periodic grid."""

    def __init__(self, net: RepresentativeNet):
        self.net = net
        self.dimension = net.grid.dimension
        self.depends_on_eps = True
        self._index = PerEps(np.arange(len(net.ladder)), net.ladder)
        self._cache = {}

    def evaluate(self, coords, eps, alpha=None):
        alpha = tuple(alpha) if alpha is not None else (0,) * self.dimension
        k = self._index.index(eps)
        key = (k, alpha)
        if key not in self._cache:
            data = self.net.derivative_samples(alpha)[k]
            axes = [self.net.grid.axis(i) for i in range(self.dimension)]
            self._cache[key] = RegularGridInterpolator(axes, data, method="cubic", bounds_error=False, fill_value=None)
        coords = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in coords])
        pts = np.stack([c.ravel() for c in coords], axis=-1)
        return self._cache[key](pts).reshape(coords[0].shape)

    def support(self, eps):
        return self.net.support_hint


@dataclass(frozen=True)
class SeminormSpec:
    """``compact``: p_{K,i} = sup_{x in K, |a| <= i} |d^a u|;
    ``tempered``: p_h = sup_x, |a| <= h of (1 + |x|)^h |d^a u|."""

    kind: str = "compact"
    order: int = 0
    K: tuple | None = None

    @classmethod
    def compact(cls, K, order: int = 0) -> "SeminormSpec":
        return cls("compact", int(order), tuple((float(a), float(b)) for a, b in K))

    @classmethod
    def tempered(cls, order: int) -> "SeminormSpec":
        return cls("tempered", int(order), None)

    def label(self) -> str:
        if self.kind == "compact":
            return f"p_K{list(self.K)},{self.order}"
        return f"p_{self.order}"


def seminorm(u: RepresentativeNet, spec: SeminormSpec, max_order: int = MAX_ORDER) -> np.ndarray:
    """One seminorm value per ladder point."""
    if spec.order > max_order:
        raise UnsupportedOrder(f"order {spec.order} exceeds max_order {max_order}")
    return _order_maxima(u, spec)[: spec.order + 1].max(axis=0)


def _order_maxima(u: RepresentativeNet, spec: SeminormSpec) -> np.ndarray:
    """Row i: sup over the seminorm's region of max_{|a| = i} |d^a u_eps|."""
    n = u.grid.dimension
    if spec.kind == "compact":
        if not u.grid.contains_box(spec.K):
            raise OutOfDomain(f"K={spec.K} not inside grid box {u.grid.box}")
        mask = u.grid.mask(spec.K)
        weight = None
    elif spec.kind == "tempered":
        if u.tempered_weight is None:
            raise ValueError("tempered seminorm needs a net with tempered_weight")
        mask = np.ones(u.grid.shape, dtype=bool)
        r = np.sqrt(sum(c**2 for c in u.grid.mesh()))
        weight = (1 + r) ** spec.order
    else:
        raise ValueError(f"unknown seminorm kind {spec.kind!r}")
    out = np.zeros((spec.order + 1, len(u.ladder)))
    extra = None
    if spec.kind == "compact" and u.source is not None:
        extra = [_refinement_points(u.source, e, u.grid, spec.K) for e in u.ladder.values]
    for alpha in multi_indices(n, spec.order):
        row = out[sum(alpha)]
        d = np.abs(u.derivative_samples(alpha))
        if weight is not None:
            d = d * weight
        np.maximum(row, d[:, mask].max(axis=1), out=row)
        if extra is not None:
            for k, (e, pts) in enumerate(zip(u.ladder.values, extra)):
                if pts is not None:
                    v = np.abs(np.asarray(u.source.evaluate(pts, e, alpha)))
                    row[k] = max(row[k], float(v.max()))
    return out


def _refinement_points(src: Field, eps: float, grid: Grid, K):
    """Extra points in K where ``src`` may have features the grid misses:
    geometrically shrinking windows around 1D breakpoints and a dense sample
    of each compactly supported summand.  Returns None when there is nothing
    to refine."""
    h = min(grid.spacing)
    anchors = []
    if grid.dimension == 1:
        anchors.extend((float(b),) for b in src.breakpoints(eps))
    terms = src.flat_terms() if isinstance(src, SumField) else [(1.0, src)]
    boxes = []
    for _, f in terms:
        supp = f.support(eps)
        if supp is not None:
            boxes.append(supp)
    anchors = [c for c in anchors if all(lo - 2 * h <= x <= hi + 2 * h for x, (lo, hi) in zip(c, K))]
    boxes = [b for b in boxes if all(lo <= bhi and blo <= hi for (blo, bhi), (lo, hi) in zip(b, K))]
    if not anchors and not boxes:
        return None
    if grid.dimension == 1:
        ratio, floor, m = 4.0, max(eps**3, 1e-13), 65
    else:
        ratio, floor, m = 4.0, max(eps**2, 1e-13), 41
    t = np.linspace(-1.0, 1.0, m)
    scales = []
    s = 4 * h
    while s > floor:
        scales.append(s)
        s /= ratio
    cols = [[] for _ in range(grid.dimension)]
    for c in anchors:
        for s in scales:
            if grid.dimension == 1:
                cols[0].append(c[0] + s * t)
            else:
                X, Y = np.meshgrid(c[0] + s * t, c[1] + s * t, indexing="ij")
                cols[0].append(X.ravel())
                cols[1].append(Y.ravel())
    # a compact summand is sampled densely across its whole support
    for b in boxes:
        if grid.dimension == 1:
            cols[0].append(np.linspace(b[0][0], b[0][1], 1025))
        else:
            X, Y = np.meshgrid(np.linspace(*b[0], 97), np.linspace(*b[1], 97), indexing="ij")
            cols[0].append(X.ravel())
            cols[1].append(Y.ravel())
    pts = [np.concatenate(col) for col in cols]
    keep = np.ones(pts[0].shape, dtype=bool)
    for x, (lo, hi) in zip(pts, K):
        keep &= (x >= lo) & (x <= hi)
    if not np.any(keep):
        return None
    return tuple(x[keep] for x in pts)


def seminorm_fits(u: RepresentativeNet, K, max_order: int = MAX_ORDER, floor: float = 0.0) -> dict:
    """Scaling fits of p_{K,i}(u_eps) for i = 0..max_order."""
    if max_order > MAX_ORDER:
        raise UnsupportedOrder(f"order {max_order} exceeds max_order {MAX_ORDER}")
    rows = np.maximum.accumulate(_order_maxima(u, SeminormSpec.compact(K, max_order)), axis=0)
    return {i: fit_valuation(u.ladder.values, rows[i], floor=floor) for i in range(max_order + 1)}


def classify(
    u: RepresentativeNet,
    K,
    max_order: int = MAX_ORDER,
    q_max: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ModerationClass:
    """Moderateness class of u from its compact seminorms on K."""
    return classify_net(seminorm_fits(u, K, max_order), q_max, tol)


def net_from_field(src: Field, grid: Grid, ladder: EpsilonLadder, support_hint=None, name: str = "") -> RepresentativeNet:
    if support_hint is None:
        s = [src.support(e) for e in ladder.values]
        if all(b is not None for b in s):
            hint = s[0]
            for b in s[1:]:
                hint = box_hull(hint, b)
            if grid.contains_box(hint):
                support_hint = hint
    return RepresentativeNet(grid, ladder, source=src, support_hint=support_hint, name=name)


def net_from_expression(expr, grid: Grid, ladder: EpsilonLadder, name: str = "") -> RepresentativeNet:
    """Net u_eps(x) given by a closed form that may involve eps."""
    e = parse(expr, grid.dimension)
    return RepresentativeNet(grid, ladder, source=ExpressionField(e, grid.dimension), name=name or e.text)


def embed_smooth(expr, grid: Grid, ladder: EpsilonLadder) -> RepresentativeNet:
    """Constant-in-eps net of a smooth function.

    Raises
    ------
    EvaluationError
        If the expression is not finite at some grid point.
    """
    e = parse(expr, grid.dimension)
    if e.depends_on("eps"):
        raise ValueError("embed_smooth takes an eps-independent expression; use net_from_expression")
    net = net_from_expression(e, grid, ladder)
    net.samples  # evaluate eagerly so non-finite values surface here
    return net


@dataclass(frozen=True)
class DistributionAtom:
    """The distribution ``coeff * d^alpha delta_location``.

    This is the distributional derivative: on a test function it gives
    ``coeff * (-1)^|alpha| * d^alpha u(location)``.
    """

    coeff: complex
    alpha: tuple
    location: tuple


@dataclass(frozen=True)
class DistributionSpec:
    """Finite-order distribution: delta atoms plus a piecewise-smooth density.

    Heaviside factors ``c * heaviside(+-(x - a))`` in a 1D density are split
    off and mollified exactly; the rest is mollified by quadrature.
    """

    dimension: int = 1
    atoms: tuple = ()
    density: object = None

    def density_parts(self):
        """Split the density into (smooth expression, [(coeff, location, sign)])."""
        if self.density is None:
            return None, []
        e = parse(self.density, self.dimension)
        if self.dimension != 1:
            return e, []
        x = SYMBOLS["x"]
        smooth = sp.Integer(0)
        jumps = []
        for term in sp.Add.make_args(sp.expand(e.sym)):
            hs = [a for a in term.atoms(sp.Heaviside)]
            coeff = term / hs[0] if len(hs) == 1 else None
            if coeff is not None and not coeff.free_symbols and sp.Poly(hs[0].args[0], x).degree() == 1:
                arg = hs[0].args[0]
                slope = float(sp.diff(arg, x))
                loc = float(sp.solve(arg, x)[0])
                c = complex(coeff)
                c = c.real if c.imag == 0 else c
                if slope > 0:
                    jumps.append((c, loc, 1))
                else:
                    smooth += coeff
                    jumps.append((-c, loc, 1))
            else:
                smooth += term
        return (None if smooth == 0 else Expression(smooth)), jumps


def embed_distribution(
    d: DistributionSpec,
    rho: Mollifier,
    grid: Grid,
    ladder: EpsilonLadder,
) -> RepresentativeNet:
    """u_eps = d * rho_eps with rho_eps(x) = eps^-n rho(x / eps).

    Atoms become scaled derivatives of rho (closed form), Heaviside steps the
    scaled cumulative bump, and the remaining density a Gauss-Legendre
    convolution.

    Raises
    ------
    OutOfDomain
        If an atom lies outside the grid box.
    """
    n = grid.dimension
    if rho.dimension != n:
        raise ValueError("mollifier dimension does not match the grid")
    terms = []
    compact = True
    for atom in d.atoms:
        loc = tuple(np.atleast_1d(np.asarray(atom.location, dtype=float)))
        if not grid.contains(loc):
            raise OutOfDomain(f"atom at {loc} outside grid box {grid.box}")
        alpha = tuple(atom.alpha) if atom.alpha else (0,) * n
        terms.append((atom.coeff, DerivedField(ScaledField(rho.profile, loc, 1.0), alpha)))
    smooth, jumps = d.density_parts()
    for c, loc, _ in jumps:
        if not grid.contains((loc,)):
            raise OutOfDomain(f"step at {loc} outside grid box {grid.box}")
        step = ExpressionField(parse(f"heaviside(x - ({loc!r}))", 1), 1)
        corr = ScaledField(JumpCorrectionField(), (loc,), 1.0, amp=0.0)
        # shrink the correction profile to the mollifier radius
        if rho.radius != 1.0:
            corr = ScaledField(_RadiusScaled(JumpCorrectionField(), rho.radius), (loc,), 1.0, amp=0.0)
        terms.append((c, step))
        terms.append((c, corr))
        compact = False
    if smooth is not None:
        terms.append((1.0, ConvolvedField(ExpressionField(smooth, n), rho.profile, None, 1.0)))
        compact = False
    if not terms:
        from .fields import ConstantField

        terms.append((0.0, ConstantField(0.0, n)))
    src = SumField(terms)
    hint = None
    if compact and d.atoms:
        R = rho.radius * ladder.anchor
        hint = None
        for atom in d.atoms:
            loc = np.atleast_1d(np.asarray(atom.location, dtype=float))
            b = tuple((c - R, c + R) for c in loc)
            hint = b if hint is None else box_hull(hint, b)
        if not grid.contains_box(hint):
            hint = None
    return RepresentativeNet(grid, ladder, source=src, support_hint=hint, name="embedded distribution")


class _RadiusScaled(Field):
    """f(t / R): a unit-radius profile rescaled to radius R."""

    def __init__(self, f: Field, R: float):
        self.f, self.R = f, float(R)
        self.dimension = f.dimension

    def evaluate(self, coords, eps, alpha=None):
        alpha = tuple(alpha) if alpha is not None else (0,) * self.dimension
        t = tuple(np.asarray(c, dtype=float) / self.R for c in coords)
        return self.R ** (-sum(alpha)) * self.f.evaluate(t, eps, alpha)

    def support(self, eps):
        s = self.f.support(eps)
        return None if s is None else tuple((self.R * a, self.R * b) for a, b in s)

    def breakpoints(self, eps):
        return tuple(self.R * b for b in self.f.breakpoints(eps))


def derivative(u: RepresentativeNet, alpha) -> RepresentativeNet:
    """d^alpha u per ladder point.

    The returned net carries ``discretization_error``: 0 for closed-form
    nets, the top-octave spectral tail for spectral derivatives, and the
    difference between 4th- and 2nd-order stencils for finite differences.
    """
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if len(alpha) != u.grid.dimension:
        raise ValueError("multi-index does not match dimension")
    _check_order(alpha)
    if u.source is not None:
        out = RepresentativeNet(u.grid, u.ladder, source=DerivedField(u.source, alpha), support_hint=u.support_hint)
        out.discretization_error = 0.0
        return out
    data = u.derivative_samples(alpha)
    out = RepresentativeNet(u.grid, u.ladder, samples=data, support_hint=None)
    if u.grid.periodic:
        axes = tuple(range(1, u.samples.ndim))
        spec = np.abs(np.fft.fftn(u.samples, axes=axes)) / u.grid.size
        kk = np.sqrt(sum(k**2 for k in np.meshgrid(*[u.grid.wavenumbers(i) for i in range(u.grid.dimension)], indexing="ij")))
        kmax = float(kk.max())
        top = kk > kmax / 2
        out.discretization_error = float((spec[:, top] * kk[top] ** sum(alpha)).sum(axis=1).max()) if np.any(top) else 0.0
    else:
        lo = u.samples
        for i, a in enumerate(alpha):
            for _ in range(a):
                lo = np.gradient(lo, u.grid.spacing[i], axis=i + 1, edge_order=2)
        out.discretization_error = float(np.max(np.abs(lo - data)))
    return out


def point_value(u: RepresentativeNet, points) -> GeneralizedNumber:
    """Value of u_eps at x_eps for each ladder point.

    ``points`` is one point (used at every eps) or an array of shape
    ``(len(ladder),)`` / ``(len(ladder), n)``.  Closed-form nets are
    evaluated exactly; sampled nets by multilinear interpolation.
    """
    L = len(u.ladder)
    n = u.grid.dimension
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = np.full((L, n), float(pts))
    elif pts.ndim == 1 and pts.size == n and n != L:
        pts = np.tile(pts, (L, 1))
    elif pts.ndim == 1:
        pts = pts.reshape(L, 1)
    if pts.shape != (L, n):
        raise ValueError(f"points must have shape ({L}, {n})")
    for p in pts:
        if not u.grid.contains(p):
            raise OutOfDomain(f"point {tuple(p)} outside grid box {u.grid.box}")
    vals = np.empty(L, dtype=complex)
    if u.source is not None:
        for k, e in enumerate(u.ladder.values):
            coords = tuple(np.array([p]) for p in pts[k])
            vals[k] = np.asarray(u.source.evaluate(coords, e)).ravel()[0]
    else:
        axes = [u.grid.axis(i) for i in range(n)]
        for k in range(L):
            data = u.samples[k]
            if u.grid.periodic:
                # wrap so the last cell interpolates back to the first point
                axes_w = [np.append(a, b) for a, (_, b) in zip(axes, u.grid.box)]
                data = np.pad(data, [(0, 1)] * n, mode="wrap")
            else:
                axes_w = axes
            interp = RegularGridInterpolator(axes_w, data, method="linear", bounds_error=False, fill_value=None)
            vals[k] = interp(pts[k][None, :])[0]
    return GeneralizedNumber(vals, u.ladder)


@dataclass(frozen=True)
class CellGrid:
    """Partition of a box into equal cells, ``counts`` per axis.

    Cells are indexed by integer tuples; cell i on an axis covers
    [lo + i*width, lo + (i+1)*width].
    """

    box: tuple
    counts: tuple

    def __post_init__(self):
        box = tuple((float(a), float(b)) for a, b in self.box)
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if len(counts) == 1 and len(box) > 1:
            counts = counts * len(box)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "counts", counts)

    @property
    def dimension(self) -> int:
        return len(self.box)

    @property
    def widths(self) -> tuple:
        return tuple((b - a) / c for (a, b), c in zip(self.box, self.counts))

    def center(self, index) -> tuple:
        return tuple(a + (i + 0.5) * w for (a, _), i, w in zip(self.box, index, self.widths))

    def extent(self, index) -> tuple:
        return tuple((a + i * w, a + (i + 1) * w) for (a, _), i, w in zip(self.box, index, self.widths))

    def all_cells(self) -> list:
        return list(np.ndindex(*self.counts))

    def cells_containing(self, point, tol: float = 1e-12) -> set:
        """Cells whose closed extent contains the point (two on a shared face)."""
        ranges = []
        for p, (a, _), w, c in zip(np.atleast_1d(point), self.box, self.widths, self.counts):
            f = (p - a) / w
            lo = int(np.floor(f - tol))
            hi = int(np.floor(f + tol))
            ranges.append([i for i in range(lo, hi + 1) if 0 <= i < c])
        return {tuple(r[i] for r, i in zip(ranges, ix)) for ix in np.ndindex(*[len(r) for r in ranges])}

    def cells_meeting(self, box) -> set:
        """Cells whose open interior meets the box (closed for degenerate boxes)."""
        ranges = []
        for (lo, hi), (a, _), w, c in zip(box, self.box, self.widths, self.counts):
            if hi - lo <= 0:
                f = (lo - a) / w
                r = range(int(np.floor(f - 1e-12)), int(np.floor(f + 1e-12)) + 1)
            else:
                r = range(int(np.floor((lo - a) / w + 1e-12)), int(np.ceil((hi - a) / w - 1e-12)))
            ranges.append([i for i in r if 0 <= i < c])
        out = set()
        for ix in np.ndindex(*[len(r) for r in ranges]):
            out.add(tuple(r[i] for r, i in zip(ranges, ix)))
        return out

    def dilate(self, cells, steps: int = 1) -> set:
        out = set()
        for cell in cells:
            for off in np.ndindex(*([2 * steps + 1] * self.dimension)):
                nb = tuple(c + o - steps for c, o in zip(cell, off))
                if all(0 <= v < n for v, n in zip(nb, self.counts)):
                    out.add(nb)
        return out
