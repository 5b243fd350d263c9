"""Truncated Taylor arithmetic for the radial C-infinity profiles.

The cutoff plateau and the mollifier bump are functions of q = |s|^2 built
from exp(-1/t).  Their derivatives to order ~12 are needed at arbitrary
points (Leibniz expansions, endpoint asymptotics), and symbolic
differentiation of these piecewise expressions is prohibitively slow.  A jet
is an array ``c`` of shape ``(K + 1, *pts)`` holding normalized Taylor
coefficients ``f^(k)(t0) / k!``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "jet_mul",
    "jet_recip",
    "jet_exp",
    "flat_exp_jet",
    "plateau_q_jet",
    "bump_q_jet",
    "radial_derivative",
]

# exp(-1/t) and all its derivatives are below 1e-150 for t below this
_FLAT_CUTOFF = 2e-3


def jet_mul(a, b):
    K = a.shape[0] - 1
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for k in range(K + 1):
        for i in range(k + 1):
            out[k] += a[i] * b[k - i]
    return out


def jet_recip(a):
    K = a.shape[0] - 1
    r = np.zeros_like(a)
    r[0] = 1.0 / a[0]
    for k in range(1, K + 1):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc += a[j] * r[k - j]
        r[k] = -acc * r[0]
    return r


def jet_exp(a):
    K = a.shape[0] - 1
    e = np.zeros_like(a)
    e[0] = np.exp(a[0])
    for k in range(1, K + 1):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc += j * a[j] * e[k - j]
        e[k] = acc / k
    return e


def _variable(t0, K, slope=1.0):
    t0 = np.asarray(t0, dtype=float)
    c = np.zeros((K + 1,) + t0.shape)
    c[0] = t0
    if K >= 1:
        c[1] = slope
    return c


def flat_exp_jet(t0, K, slope=1.0):
    """Jet of f(t) = exp(-1/t) (0 for t <= 0) at the points a + slope*h."""
    t0 = np.asarray(t0, dtype=float)
    out = np.zeros((K + 1,) + t0.shape)
    live = t0 > _FLAT_CUTOFF
    if np.any(live):
        t = _variable(t0[live], K, slope)
        out[:, live] = jet_exp(-jet_recip(t))
    return out


def plateau_q_jet(q0, K):
    """Jet in q of the plateau: 1 for q <= 1/4, 0 for q >= 1, C-infinity between."""
    q0 = np.asarray(q0, dtype=float)
    out = np.zeros((K + 1,) + q0.shape)
    out[0] = np.where(q0 <= 0.25, 1.0, 0.0)
    mid = (q0 > 0.25) & (q0 < 1.0)
    if np.any(mid):
        a = flat_exp_jet(1.0 - q0[mid], K, slope=-1.0)
        b = flat_exp_jet(q0[mid] - 0.25, K, slope=1.0)
        out[:, mid] = jet_mul(a, jet_recip(a + b))
    return out


def bump_q_jet(q0, K):
    """Jet in q of exp(-1/(1-q)) for q < 1, 0 otherwise (unnormalized bump)."""
    return flat_exp_jet(1.0 - np.asarray(q0, dtype=float), K, slope=-1.0)


@lru_cache(maxsize=None)
def _compositions(n: int, K: int):
    """Index bookkeeping: monomials h^beta with |beta| <= K in n variables."""
    if n == 1:
        return [(k,) for k in range(K + 1)]
    return [(i, j) for i in range(K + 1) for j in range(K + 1 - i)]


def radial_derivative(qjet_fn, s, alpha):
    """Partial derivative d^alpha_s of g(|s|^2) at points s.

    Parameters
    ----------
    qjet_fn : callable
        ``qjet_fn(q0, K)`` returns the Taylor jet of g in q.
    s : tuple of arrays
        One array per coordinate (broadcastable).
    alpha : tuple of int
        Derivative multi-index.

    Notes
    -----
    With q(s0 + h) - q0 = sum_i (2 s0_i h_i + h_i^2), the Taylor polynomial of
    g(q(s0 + h)) in h is sum_j c_j (q(s0+h) - q0)^j, truncated at total degree
    |alpha|.  The coefficient of h^alpha times alpha! is the derivative.
    """
    s = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in s])
    n = len(s)
    K = int(sum(alpha))
    q0 = sum(c**2 for c in s)
    cj = qjet_fn(q0, K)
    if K == 0:
        return cj[0]
    shape = q0.shape
    # polynomials in h stored densely: (K+1,)*n + shape
    dims = (K + 1,) * n

    def zero():
        return np.zeros(dims + shape)

    delta = zero()
    for i in range(n):
        idx1 = [0] * n
        idx1[i] = 1
        delta[tuple(idx1)] += 2 * s[i]
        if K >= 2:
            idx2 = [0] * n
            idx2[i] = 2
            delta[tuple(idx2)] += 1.0

    def pmul(a, b):
        out = zero()
        for ia in np.ndindex(*dims):
            if sum(ia) > K:
                continue
            av = a[ia]
            if not np.any(av):
                continue
            for ib in np.ndindex(*dims):
                tot = tuple(x + y for x, y in zip(ia, ib))
                if sum(tot) > K or any(t > K for t in tot):
                    continue
                out[tot] += av * b[ib]
        return out

    total = zero()
    power = zero()
    power[(0,) * n] = 1.0
    for j in range(K + 1):
        total += cj[j] * power
        if j < K:
            power = pmul(power, delta)
    fact = math.prod(math.factorial(a) for a in alpha)
    return fact * total[tuple(alpha)]
