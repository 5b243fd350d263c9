"""Composite Gauss-Legendre quadrature over boxes, split at breakpoints."""
from __future__ import annotations

import math

import numpy as np

from .fields import gauss_legendre

__all__ = ["composite_nodes", "integrate_box", "PANELS_1D", "NODES_1D"]

PANELS_1D = 128
NODES_1D = 16
PANELS_2D = 32
NODES_2D = 8


def composite_nodes(lo: float, hi: float, breakpoints=(), panels: int = PANELS_1D, nodes: int = NODES_1D):
    """Nodes and weights on [lo, hi], with panel edges at every breakpoint.

    Panels are distributed over the pieces in proportion to their length
    (at least two per piece).
    """
    cuts = sorted({float(b) for b in breakpoints if lo < b < hi})
    edges = [lo] + cuts + [hi]
    total = hi - lo
    x, w = gauss_legendre(nodes)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        m = max(2, int(math.ceil(panels * (b - a) / total)))
        pe = np.linspace(a, b, m + 1)
        half = 0.5 * np.diff(pe)
        mid = 0.5 * (pe[1:] + pe[:-1])
        xs.append((mid[:, None] + half[:, None] * x).ravel())
        ws.append((half[:, None] * w).ravel())
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def integrate_box(fn, box, breakpoints=()):
    """Integral of ``fn(coords)`` over a finite box (1D or 2D).

    ``fn`` receives a tuple of node arrays and may return leading batch
    dimensions; the result keeps them.  Degenerate boxes integrate to 0.
    """
    if any(hi <= lo for lo, hi in box):
        return 0.0
    if len(box) == 1:
        (lo, hi), = box
        t, w = composite_nodes(lo, hi, breakpoints)
        return (np.asarray(fn((t,))) * w).sum(-1)
    axes = [composite_nodes(lo, hi, (), PANELS_2D, NODES_2D) for lo, hi in box]
    (t1, w1), (t2, w2) = axes
    T1, T2 = np.meshgrid(t1, t2, indexing="ij")
    W = np.outer(w1, w2).ravel()
    return (np.asarray(fn((T1.ravel(), T2.ravel()))) * W).sum(-1)
