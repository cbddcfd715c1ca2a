"""Solutions of ``-u'' = lam u`` on a single edge.

Everything is written in the basis ``c, s`` with ``c(0)=1, c'(0)=0`` and
``s(0)=0, s'(0)=1``.  Both functions are entire in ``lam``, so the code never
branches on the sign of ``lam`` in a way that is visible to callers: near
``lam * x**2 = 0`` the power series is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResonanceError

SERIES_THRESHOLD = 1e-4
DELTA_D = 1e-6

_SERIES_TERMS = 8
# 1/(2n)! and 1/(2n+1)!
_C_COEF = [1.0 / math.factorial(2 * n) for n in range(_SERIES_TERMS)]
_S_COEF = [1.0 / math.factorial(2 * n + 1) for n in range(_SERIES_TERMS)]


def _cs(lam: float, x):
    x = np.asarray(x, dtype=float)
    z = lam * x * x
    small = np.abs(z) < SERIES_THRESHOLD
    c = np.empty_like(x)
    s = np.empty_like(x)
    if np.any(small):
        w = -z[small]
        cc = np.zeros_like(w)
        ss = np.zeros_like(w)
        for n in reversed(range(_SERIES_TERMS)):
            cc = cc * w + _C_COEF[n]
            ss = ss * w + _S_COEF[n]
        c[small] = cc
        s[small] = ss * x[small]
    big = ~small
    if np.any(big):
        xb = x[big]
        if lam > 0:
            k = math.sqrt(lam)
            c[big] = np.cos(k * xb)
            s[big] = np.sin(k * xb) / k
        else:
            k = math.sqrt(-lam)
            c[big] = np.cosh(k * xb)
            s[big] = np.sinh(k * xb) / k
    return c, s


def _cs_scalar(lam: float, x: float):
    z = lam * x * x
    if abs(z) < SERIES_THRESHOLD:
        w = -z
        cc = ss = 0.0
        for n in reversed(range(_SERIES_TERMS)):
            cc = cc * w + _C_COEF[n]
            ss = ss * w + _S_COEF[n]
        return cc, ss * x
    if lam > 0:
        k = math.sqrt(lam)
        return math.cos(k * x), math.sin(k * x) / k
    k = math.sqrt(-lam)
    return math.cosh(k * x), math.sinh(k * x) / k


def basis_eval(lam: float, x):
    """Return ``(c, s, c', s')`` at ``x`` (scalar or array).

    >>> basis_eval(0.0, 2.0)
    (1.0, 2.0, -0.0, 1.0)
    """
    if isinstance(x, float):
        c, s = _cs_scalar(float(lam), x)
        return c, s, -lam * s, c
    c, s = _cs(float(lam), x)
    dc = -lam * s
    ds = c
    if np.ndim(c) == 0:
        return float(c), float(s), float(dc), float(ds)
    return c, s, dc, ds


def edge_transfer(lam: float, l: float) -> np.ndarray:
    """Matrix taking ``(u(0), u'(0))`` to ``(u(l), u'(l))``."""
    c, s, dc, ds = basis_eval(lam, l)
    return np.array([[c, s], [dc, ds]])


def dirichlet_values(l: float, lam_max: float, lam_min: float = 0.0) -> list[float]:
    """``pi^2 n^2 / l^2`` for ``n >= 1`` inside ``[lam_min, lam_max]``."""
    out = []
    if lam_max <= 0:
        return out
    n = max(1, math.ceil(l * math.sqrt(max(lam_min, 0.0)) / math.pi) - 1)
    while True:
        v = (math.pi * n / l) ** 2
        if v > lam_max:
            break
        if v >= lam_min:
            out.append(v)
        n += 1
    return out


def nearest_dirichlet(lam: float, l: float) -> float:
    """Closest Dirichlet eigenvalue of an edge of length ``l`` (the lowest one for lam <= 0)."""
    if lam <= 0:
        return (math.pi / l) ** 2
    n = max(1, round(l * math.sqrt(lam) / math.pi))
    return (math.pi * n / l) ** 2


def is_resonant(lam: float, l: float, delta: float = DELTA_D) -> bool:
    return abs(lam - nearest_dirichlet(lam, l)) <= delta


def edge_dtn_block(lam: float, l: float, delta: float = DELTA_D, edge=None) -> np.ndarray:
    """Outgoing derivatives at both ends in terms of the two end values.

    ``[[u'_out(tail)], [u'_out(head)]] = D @ [[u(tail)], [u(head)]]`` with
    ``D = [[-c, 1], [1, -c]] / s`` evaluated at ``l``.
    """
    if is_resonant(lam, l, delta):
        raise ResonanceError(lam, edge, nearest_dirichlet(lam, l))
    c, s, _, _ = basis_eval(lam, l)
    return np.array([[-c, 1.0], [1.0, -c]]) / s


@dataclass(frozen=True)
class EdgeWave:
    """``u(x) = a c(x) + b s(x)`` on one edge (coefficients may be complex)."""

    edge: object
    lam: float
    a: complex
    b: complex

    def __call__(self, x):
        c, s, _, _ = basis_eval(self.lam, x)
        return self.a * c + self.b * s

    def derivative(self, x):
        _, _, dc, ds = basis_eval(self.lam, x)
        return self.a * dc + self.b * ds

    def second_derivative(self, x):
        return -self.lam * self(x)

    def shifted(self, x0: float) -> "EdgeWave":
        """Same function with the coordinate origin moved to ``x0``."""
        return EdgeWave(self.edge, self.lam, self(x0), self.derivative(x0))

    def scaled(self, factor) -> "EdgeWave":
        return EdgeWave(self.edge, self.lam, self.a * factor, self.b * factor)

    def norm2(self, l: float) -> float:
        """``int_0^l |u|^2``."""
        return quadratic_integral(self.lam, l, self.a, self.b)

    def derivative_norm2(self, l: float) -> float:
        """``int_0^l |u'|^2`` (``u' = b c - lam a s``)."""
        return quadratic_integral(self.lam, l, self.b, -self.lam * self.a)


# Gauss-Legendre nodes for the near-zero regime of the Gram integrals
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def gram(lam: float, l: float) -> np.ndarray:
    """``[[int c^2, int cs], [int cs, int s^2]]`` over ``[0, l]``."""
    z = lam * l * l
    if abs(z) < 1e-2:
        x = 0.5 * l * (_GL_X + 1.0)
        w = 0.5 * l * _GL_W
        c, s = _cs(lam, x)
        return np.array([[w @ (c * c), w @ (c * s)], [w @ (c * s), w @ (s * s)]])
    if lam > 0:
        k = math.sqrt(lam)
        s2 = math.sin(2 * k * l) / (4 * k)
        cc = l / 2 + s2
        ss = (l / 2 - s2) / lam
        cs = math.sin(k * l) ** 2 / (2 * lam)
    else:
        k = math.sqrt(-lam)
        s2 = math.sinh(2 * k * l) / (4 * k)
        cc = l / 2 + s2
        ss = (s2 - l / 2) / (-lam)
        cs = math.sinh(k * l) ** 2 / (-2 * lam)
    return np.array([[cc, cs], [cs, ss]])


def quadratic_integral(lam: float, l: float, a, b) -> float:
    """``int_0^l |a c + b s|^2 dx`` in closed form."""
    v = np.array([a, b])
    return float(np.real(np.conj(v) @ gram(lam, l) @ v))


def sqrt_signed(lam: float) -> float:
    return math.copysign(math.sqrt(abs(lam)), lam)


def lam_from_signed(t: float) -> float:
    return math.copysign(t * t, t)


@dataclass(frozen=True)
class DirichletSpectrum:
    """Merged Dirichlet eigenvalues of all edges up to ``lam_max``.

    ``entries`` is a sorted list of ``(value, edge id, n)``.
    """

    entries: tuple
    lam_max: float
    delta: float = DELTA_D

    @property
    def values(self) -> list[float]:
        return [v for v, _, _ in self.entries]

    def distinct(self, tol: float = 1e-12) -> list[float]:
        out: list[float] = []
        for v in self.values:
            if not out or v - out[-1] > tol * max(1.0, v):
                out.append(v)
        return out

    def multiplicity(self, value: float, tol: float = 1e-12) -> int:
        return sum(1 for v in self.values if abs(v - value) <= tol * max(1.0, value))

    def excludes(self, lam: float) -> bool:
        """True when ``lam`` is clear of every exclusion zone."""
        return all(abs(lam - v) > self.delta for v in self.values)


def dirichlet_spectrum(g, lam_max: float, lam_min: float = 0.0, delta: float = DELTA_D) -> DirichletSpectrum:
    entries = []
    for e in g.edges:
        for v in dirichlet_values(e.length, lam_max, lam_min):
            n = round(e.length * math.sqrt(v) / math.pi)
            entries.append((v, e.id, n))
    entries.sort(key=lambda t: (t[0], str(t[1])))
    return DirichletSpectrum(tuple(entries), lam_max, delta)
