"""Periodic difference operators on combinatorial graphs.

An operator on ``W x Z^n`` is given by finitely many hoppings
``(v, w, g, amp)``: ``(A u)(h.v) += amp * u((h+g).w)``.  With the transform
``u_hat(w, z) = sum_g u(g.w) z^g`` it becomes multiplication by the Laurent
matrix ``A(z)[v, w] = sum amp * z^(-g)``, and a vector of polynomials ``Q``
with ``(A(z) - lam) Q(z) = 0`` is the transform of a finitely supported
solution of ``A u = lam u``.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .bands import BandStructure, align_bands, gaps_from_bands, torus_grid
from .errors import SolverError

ESCALATION = (0, 1, 2, 4, 8)
KERNEL_RTOL = 1e-10


@dataclass(frozen=True)
class PeriodicDifferenceOperator:
    vertices: tuple
    hoppings: tuple
    rank: int = 1

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        hops = []
        for v, w, g, amp in self.hoppings:
            g = tuple(int(x) for x in (g if isinstance(g, (tuple, list)) else (g,)))
            if len(g) != self.rank:
                raise ValueError(f"shift {g} does not have rank {self.rank}")
            if v not in self.vertices or w not in self.vertices:
                raise ValueError(f"hopping between unknown vertices {v!r}, {w!r}")
            hops.append((v, w, g, amp))
        object.__setattr__(self, "hoppings", tuple(hops))

    def merged(self) -> dict:
        out: dict = defaultdict(complex)
        for v, w, g, amp in self.hoppings:
            out[(v, w, g)] += amp
        return dict(out)

    def is_self_adjoint(self, tol: float = 1e-12) -> bool:
        m = self.merged()
        for (v, w, g), amp in m.items():
            back = m.get((w, v, tuple(-x for x in g)), 0.0)
            if abs(amp - np.conj(back)) > tol * max(1.0, abs(amp)):
                return False
        return True

    @property
    def exact(self) -> bool:
        return all(isinstance(a, Rational) for *_, a in self.hoppings)

    def apply(self, u: dict, targets) -> dict:
        """``(A u)`` at the vertices ``targets`` (pairs ``(v, cell)``)."""
        out = {}
        for v, h in targets:
            total = 0
            for vv, w, g, amp in self.hoppings:
                if vv != v:
                    continue
                key = (w, tuple(a + b for a, b in zip(h, g)))
                if key in u:
                    total = total + amp * u[key]
            out[(v, h)] = total
        return out


def operator_from_adjacency(vertices, edges, rank: int = 1, weight=1) -> PeriodicDifferenceOperator:
    """Symmetric adjacency operator: each ``(v, w, g)`` links ``v`` in cell 0 to ``w`` in cell ``g``."""
    hops = []
    for v, w, g in edges:
        g = tuple(g) if isinstance(g, (tuple, list)) else (g,)
        hops.append((v, w, g, weight))
        hops.append((w, v, tuple(-x for x in g), weight))
    return PeriodicDifferenceOperator(tuple(vertices), tuple(hops), rank)


def z_adjacency() -> PeriodicDifferenceOperator:
    return operator_from_adjacency(("v",), [("v", "v", (1,))])


def diamond_chain() -> PeriodicDifferenceOperator:
    """Chain of diamonds: ``a`` joined to ``b``, ``c`` in its cell and to ``b``, ``c`` of the previous cell."""
    return operator_from_adjacency(
        ("a", "b", "c"),
        [("a", "b", (0,)), ("a", "c", (0,)), ("b", "a", (1,)), ("c", "a", (1,))],
    )


# ---------------------------------------------------------------------------
# symbol
# ---------------------------------------------------------------------------


@dataclass
class LaurentMatrix:
    vertices: tuple
    entries: dict
    rank: int

    def degree_box(self) -> list[tuple[int, int]]:
        exps = [e for poly in self.entries.values() for e in poly]
        if not exps:
            return [(0, 0)] * self.rank
        return [(min(e[j] for e in exps), max(e[j] for e in exps)) for j in range(self.rank)]

    def __call__(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        n = len(self.vertices)
        out = np.zeros((n, n), dtype=complex)
        for (i, j), poly in self.entries.items():
            for e, c in poly.items():
                out[i, j] += complex(c) * np.prod(z ** np.array(e))
        return out

    def at_k(self, k) -> np.ndarray:
        return self(np.exp(1j * np.atleast_1d(np.asarray(k, dtype=float))))

    def is_hermitian_on(self, ks, tol: float = 1e-12) -> bool:
        for k in ks:
            A = self.at_k(k)
            if np.abs(A - A.conj().T).max() > tol * max(1.0, np.abs(A).max()):
                return False
        return True


def floquet_symbol(op: PeriodicDifferenceOperator) -> LaurentMatrix:
    pos = {v: i for i, v in enumerate(op.vertices)}
    entries: dict = defaultdict(lambda: defaultdict(int))
    for v, w, g, amp in op.hoppings:
        entries[(pos[v], pos[w])][tuple(-x for x in g)] += amp
    clean = {}
    for key, poly in entries.items():
        p = {e: c for e, c in poly.items() if c != 0}
        if p:
            clean[key] = p
    return LaurentMatrix(op.vertices, clean, op.rank)


def discrete_band_structure(op: PeriodicDifferenceOperator, ks=None, n_k: int = 64) -> BandStructure:
    if not op.is_self_adjoint():
        raise SolverError("band structure needs a self-adjoint operator")
    sym = floquet_symbol(op)
    ks = ks if ks is not None else torus_grid(op.rank, n_k)
    roots = [np.linalg.eigvalsh(sym.at_k(k)) for k in ks]
    bands = align_bands(roots, [0] * len(roots))
    lo = float(min(r.min() for r in roots)) if roots and len(op.vertices) else 0.0
    hi = float(max(r.max() for r in roots)) if roots and len(op.vertices) else 0.0
    bs = BandStructure(list(ks), [list(map(float, r)) for r in roots], (lo, hi), bands)
    bs.gaps = gaps_from_bands(bs.band_intervals, lo, hi, 1e-9 * max(1.0, abs(lo), abs(hi)))
    bs.flat = [float(a) for a, b in bs.band_intervals if b - a <= 1e-9 * max(1.0, abs(a))]
    return bs


def _torus_samples(counts, offset: float = 0.3183098861837907):
    axes = [[2 * math.pi * (m + offset) / n for m in range(n)] for n in counts]
    return itertools.product(*axes)


def discrete_flat_band_test(op: PeriodicDifferenceOperator, lam: float, tol: float = 1e-8) -> bool:
    """Whether ``det(A(z) - lam)`` vanishes identically on the torus.

    The Laurent degree of the determinant in ``z_j`` spans at most
    ``|W| (M_j - m_j)``, so vanishing at one more point per dimension on a
    tensor grid proves the identity.  ``|det|`` is compared with
    ``tol * max(1, ||A(z) - lam||)**|W|``.
    """
    n = len(op.vertices)
    if n == 0:
        return False
    sym = floquet_symbol(op)
    counts = [n * (hi - lo) + 1 for lo, hi in sym.degree_box()]
    for k in _torus_samples(counts):
        B = sym.at_k(k) - lam * np.eye(n)
        scale = max(1.0, np.linalg.norm(B, 2)) ** n
        if abs(np.linalg.det(B)) > tol * scale:
            return False
    return True


# ---------------------------------------------------------------------------
# finitely supported solutions
# ---------------------------------------------------------------------------


@dataclass
class PolyKernelVector:
    """``Q_w(z) = sum_e coeffs[w][e] z^e`` with exponents in ``[0, degree]^n``."""

    vertices: tuple
    coeffs: tuple
    lam: object
    degree: int
    rank: int
    exact: bool = False
    generators: list = field(default_factory=list)

    def as_vector(self) -> list:
        return [self.coeffs[i].get((0,) * self.rank, 0) for i in range(len(self.vertices))]

    def shifted(self, g) -> "PolyKernelVector":
        """Multiply by ``z^g`` (translate the solution by ``g``)."""
        g = tuple(g)
        coeffs = tuple({tuple(a + b for a, b in zip(e, g)): c for e, c in poly.items()} for poly in self.coeffs)
        return PolyKernelVector(self.vertices, coeffs, self.lam, self.degree, self.rank, self.exact)

    def residual(self, op: PeriodicDifferenceOperator):
        """Largest monomial coefficient of ``(A(z) - lam) Q(z)``; exact zero in rational mode."""
        sym = floquet_symbol(op)
        pos = {v: i for i, v in enumerate(op.vertices)}
        out: dict = defaultdict(int)
        for (i, j), poly in sym.entries.items():
            for e, a in poly.items():
                for f, q in self.coeffs[j].items():
                    key = (i, tuple(x + y for x, y in zip(e, f)))
                    out[key] = out[key] + a * q
        lam = self.lam
        for i in range(len(pos)):
            for f, q in self.coeffs[i].items():
                out[(i, f)] = out[(i, f)] - lam * q
        return max((abs(v) for v in out.values()), default=0)


def _exponents(rank, d):
    return [tuple(p) for p in itertools.product(range(d + 1), repeat=rank)]


def _coefficient_system(op, lam, d, exact):
    sym = floquet_symbol(op)
    n = len(op.vertices)
    exps = _exponents(op.rank, d)
    cols = {(j, f): c for c, (j, f) in enumerate(itertools.product(range(n), exps))}
    rows: dict = {}
    entries = defaultdict(lambda: 0)
    for (i, j), poly in sym.entries.items():
        for e, a in poly.items():
            for f in exps:
                key = (i, tuple(x + y for x, y in zip(e, f)))
                r = rows.setdefault(key, len(rows))
                entries[(r, cols[(j, f)])] += a
    for i in range(n):
        for f in exps:
            r = rows.setdefault((i, f), len(rows))
            entries[(r, cols[(i, f)])] -= lam
    return rows, cols, entries


def _normalize_first_max(vec):
    mags = [abs(x) for x in vec]
    top = max(mags)
    if top == 0:
        return vec
    tol = 1e-9 * top if not all(isinstance(x, Rational) or hasattr(x, "is_Rational") for x in vec) else 0
    pivot = next(x for x, m in zip(vec, mags) if m >= top - tol)
    return [x / pivot for x in vec]


def compact_kernel_solution(op: PeriodicDifferenceOperator, lam, degree: int = 0, exact: bool | None = None,
                            rtol: float = KERNEL_RTOL) -> PolyKernelVector | None:
    """Polynomial solution of ``(A(z) - lam) Q = 0`` with exponents in ``[0, degree]^n``.

    ``exact=True`` solves the coefficient system in rational arithmetic
    (amplitudes and ``lam`` must be rational).  Returns ``None`` when there is
    no nonzero solution at this degree.  The returned vector is scaled so that
    its first entry of largest magnitude is 1; ``generators`` holds a kernel
    basis at this degree.
    """
    if exact is None:
        exact = False
    n = len(op.vertices)
    if n == 0:
        return None
    rows, cols, entries = _coefficient_system(op, lam, degree, exact)
    if exact:
        import sympy

        if not (op.exact and isinstance(lam, (int, Fraction, Rational)) or _is_sympy_rational(lam)):
            raise ValueError("rational mode needs rational amplitudes and lam")
        M = sympy.zeros(len(rows), len(cols))
        for (r, c), v in entries.items():
            M[r, c] = sympy.Rational(v) if not _is_sympy_rational(v) else v
        basis = [list(b) for b in M.nullspace()]
        lam_out = sympy.Rational(lam) if not _is_sympy_rational(lam) else lam
    else:
        M = np.zeros((len(rows), len(cols)), dtype=complex)
        for (r, c), v in entries.items():
            M[r, c] = complex(v)
        _, sv, vh = np.linalg.svd(M)
        sv_full = np.zeros(len(cols))
        sv_full[: sv.size] = sv
        scale = max(sv[0] if sv.size else 0.0, 1.0)
        null = np.where(sv_full <= rtol * scale)[0]
        basis = [list(_real_if_close(vh[j].conj())) for j in null]
        lam_out = lam
    if not basis:
        return None
    order = sorted(cols.items(), key=lambda t: t[1])

    def to_coeffs(vec):
        vec = _normalize_first_max(vec)
        coeffs = [dict() for _ in range(n)]
        for (j, f), c in order:
            x = vec[c]
            if (x != 0) if exact else abs(x) > 1e-14:
                coeffs[j][f] = x
        return tuple(coeffs)

    gens = [to_coeffs(b) for b in basis]
    out = PolyKernelVector(op.vertices, gens[0], lam_out, degree, op.rank, exact)
    out.generators = [PolyKernelVector(op.vertices, g, lam_out, degree, op.rank, exact) for g in gens]
    return out


def _is_sympy_rational(x) -> bool:
    return getattr(x, "is_Rational", False) is True


def _real_if_close(v):
    v = np.asarray(v)
    if np.abs(v.imag).max(initial=0.0) <= 1e-12 * max(np.abs(v).max(initial=0.0), 1e-300):
        return [float(x) for x in v.real]
    # rotate so that the largest entry is real before giving up on realness
    i = int(np.argmax(np.abs(v)))
    w = v * (abs(v[i]) / v[i])
    if np.abs(w.imag).max() <= 1e-12 * np.abs(w).max():
        return [float(x) for x in w.real]
    return [complex(x) for x in w]


def find_compact_kernel(op: PeriodicDifferenceOperator, lam, d_max: int = 8, exact: bool | None = None):
    """Escalate the degree bound over 0, 1, 2, 4, 8 (up to ``d_max``)."""
    for d in ESCALATION:
        if d > d_max:
            break
        q = compact_kernel_solution(op, lam, d, exact)
        if q is not None:
            return q
    return None


def inverse_floquet(q: PolyKernelVector) -> dict:
    """Finitely supported vertex function ``{(w, g): value}``."""
    out = {}
    for w, poly in zip(q.vertices, q.coeffs):
        for e, c in poly.items():
            out[(w, tuple(e))] = c
    return out


def floquet_transform(u: dict, vertices, rank: int = 1):
    """Inverse of :func:`inverse_floquet`: per-vertex exponent maps."""
    coeffs = [dict() for _ in vertices]
    pos = {v: i for i, v in enumerate(vertices)}
    for (w, g), c in u.items():
        coeffs[pos[w]][tuple(g)] = c
    return tuple(coeffs)


def window_residual(op: PeriodicDifferenceOperator, u: dict, lam, cells):
    """``max |(A u - lam u)|`` over every vertex of the cells ``cells``."""
    targets = [(v, tuple(h)) for h in cells for v in op.vertices]
    au = op.apply(u, targets)
    return max(abs(au[t] - lam * u.get(t, 0)) for t in targets)
