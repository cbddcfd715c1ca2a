"""Eigenvalues and eigenfunctions of Laplacians on compact metric graphs.

Away from the Dirichlet spectrum of the edges, eigenfunctions are determined by
their vertex values and the eigenvalue problem reduces to the vertex-indexed
secular matrix ``M(lam)``; row ``v`` of ``M f`` is the sum of outgoing
derivatives at ``v`` minus ``alpha_v(lam) f(v)``.  ``M(lam)`` is increasing in
the Loewner order between its poles, so the number of eigenvalues in a pole
free interval ``(a, b]`` equals ``neg(M(a)) - neg(M(b))`` where ``neg`` counts
negative eigenvalues.  The solver brackets on a grid in ``sqrt(lam)`` and then
bisects on that count.

At Dirichlet eigenvalues of edges the reduction breaks down; there the full
``2|E|`` edge-coefficient system is solved directly.

With a quasimomentum ``k`` the same code handles the Bloch problem on the
fundamental domain of a periodic graph.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .edge import (DELTA_D, EdgeWave, basis_eval, dirichlet_spectrum,
                   edge_dtn_block, is_resonant, lam_from_signed, nearest_dirichlet,
                   sqrt_signed)
from .errors import ResonanceError, SolverError
from .graph import Dirichlet, MetricGraph, as_conditions

RANK_TOL = 1e-7
KERNEL_TOL = 1e-8


def _phase(k, shift) -> complex:
    if k is None or not shift:
        return 1.0
    return cmath.exp(1j * float(np.dot(k, shift)))


def free_vertices(g: MetricGraph, cond=None) -> list:
    """Vertices that carry an unknown value (all but the Dirichlet ones)."""
    cond = as_conditions(g, cond)
    return [v for v in g.vertices if not isinstance(cond[v], Dirichlet)]


@dataclass
class SecularMatrix:
    lam: float
    k: tuple | None
    matrix: np.ndarray
    index: list

    @property
    def det(self):
        return np.linalg.det(self.matrix) if self.matrix.size else 1.0

    def negative_count(self) -> int:
        if not self.matrix.size:
            return 0
        return int(np.sum(np.linalg.eigvalsh(self.matrix) < 0))

    def smallest_singular(self) -> float:
        if not self.matrix.size:
            return math.inf
        return float(np.linalg.svd(self.matrix, compute_uv=False)[-1])

    def scale(self) -> float:
        return float(np.linalg.norm(self.matrix, 2)) if self.matrix.size else 1.0


def assemble_secular(g: MetricGraph, cond=None, lam: float = 0.0, k=None, delta: float = DELTA_D) -> SecularMatrix:
    """Vertex-value matrix at ``lam`` (and quasimomentum ``k`` if given).

    Raises :class:`ResonanceError` within ``delta`` of an edge's Dirichlet
    spectrum.
    """
    cond = as_conditions(g, cond)
    index = free_vertices(g, cond)
    pos = {v: i for i, v in enumerate(index)}
    n = len(index)
    complex_mode = k is not None and g.rank > 0
    M = np.zeros((n, n), dtype=complex if complex_mode else float)
    for e in g.edges:
        D = edge_dtn_block(lam, e.length, delta, e.id)
        p = _phase(k, e.shift) if complex_mode else 1.0
        i = pos.get(e.tail)
        j = pos.get(e.head)
        if i is not None:
            M[i, i] += D[0, 0]
        if j is not None:
            M[j, j] += D[1, 1]
        if i is not None and j is not None:
            M[i, j] += D[0, 1] * p
            M[j, i] += D[1, 0] * np.conj(p)
    for v, i in pos.items():
        M[i, i] -= cond.alpha(v, lam)
    return SecularMatrix(float(lam), None if k is None else tuple(k), M, index)


def secular_function(g: MetricGraph, cond=None, lam: float = 0.0, k=None) -> float:
    """``det M(lam) * prod_e s(l_e; lam)``: free of the edge poles (real)."""
    sm = assemble_secular(g, cond, lam, k, delta=0.0)
    prod = math.prod(basis_eval(lam, e.length)[1] for e in g.edges)
    return float(np.real(sm.det)) * prod


# ---------------------------------------------------------------------------
# full edge-coefficient system
# ---------------------------------------------------------------------------


def _endpoint_rows(g, lam, k):
    """Per edge end: (value row, outgoing-derivative row) over the 2|E| unknowns."""
    m = len(g.edges)
    ends = {}
    for idx, e in enumerate(g.edges):
        c, s, dc, ds = basis_eval(lam, e.length)
        val0 = np.zeros(2 * m, dtype=complex)
        der0 = np.zeros(2 * m, dtype=complex)
        val0[2 * idx] = 1.0
        der0[2 * idx + 1] = 1.0
        q = np.conj(_phase(k, e.shift)) if g.rank and k is not None else 1.0
        val1 = np.zeros(2 * m, dtype=complex)
        der1 = np.zeros(2 * m, dtype=complex)
        val1[2 * idx] = c * q
        val1[2 * idx + 1] = s * q
        der1[2 * idx] = -dc * q
        der1[2 * idx + 1] = -ds * q
        ends[(e.id, 0)] = (val0, der0)
        ends[(e.id, 1)] = (val1, der1)
    return ends


def matching_matrix(g: MetricGraph, cond=None, lam: float = 0.0, k=None) -> np.ndarray:
    """Square ``2|E|`` system for the coefficients ``(a_e, b_e)`` of all edges.

    Rows impose continuity and the derivative-sum condition at every vertex
    (or vanishing values at Dirichlet vertices).  Its kernel is the eigenspace
    at ``lam``, also on the Dirichlet spectrum.
    """
    cond = as_conditions(g, cond)
    ends = _endpoint_rows(g, lam, k)
    rows = []
    for v in g.vertices:
        inc = g.incident(v)
        if not inc:
            continue
        vals = [ends[(e.id, side)][0] for e, side in inc]
        ders = [ends[(e.id, side)][1] for e, side in inc]
        if isinstance(cond[v], Dirichlet):
            rows.extend(vals)
            continue
        for r in vals[1:]:
            rows.append(r - vals[0])
        rows.append(sum(ders) - cond.alpha(v, lam) * vals[0])
    A = np.array(rows, dtype=complex) if rows else np.zeros((0, 2 * len(g.edges)), dtype=complex)
    if k is None or not g.rank:
        A = A.real.copy()
    return A


def null_space(A: np.ndarray, rtol: float = KERNEL_TOL):
    """Orthonormal kernel basis (columns) and singular values of ``A``."""
    n = A.shape[1]
    if n == 0:
        return np.zeros((0, 0)), np.zeros(0)
    if A.shape[0] < n:
        A = np.vstack([A, np.zeros((n - A.shape[0], n), dtype=A.dtype)])
    _, sv, vh = np.linalg.svd(A)
    # entries are O(1) by construction, so the threshold is never below rtol
    mask = sv <= rtol * max(sv[0], 1.0)
    return vh[mask].conj().T, sv


def matching_kernel(g: MetricGraph, cond=None, lam: float = 0.0, k=None, rtol: float = KERNEL_TOL):
    """Kernel of :func:`matching_matrix` as coefficient vectors ``(a_e, b_e)``.

    Works in the units ``b / kappa`` with ``kappa = max(1, sqrt|lam|)``, where
    value and derivative rows have comparable size.
    """
    A = matching_matrix(g, cond, lam, k)
    kappa = max(1.0, math.sqrt(abs(lam)))
    cols = np.ones(A.shape[1])
    cols[1::2] = kappa
    cond = as_conditions(g, cond)
    rows = []
    for v in g.vertices:
        inc = g.incident(v)
        if not inc:
            continue
        if isinstance(cond[v], Dirichlet):
            rows.extend([1.0] * len(inc))
        else:
            rows.extend([1.0] * (len(inc) - 1) + [1.0 / kappa])
    B = A * np.array(rows)[:, None] * cols[None, :] if A.size else A
    basis, sv = null_space(B, rtol)
    if basis.size:
        basis = basis * cols[:, None]
        basis, _ = np.linalg.qr(basis)
    return basis, sv


def _waves_from_coefficients(g, lam, vec) -> dict:
    return {e.id: EdgeWave(e.id, lam, vec[2 * i], vec[2 * i + 1]) for i, e in enumerate(g.edges)}


def _clean(z):
    z = complex(z)
    return z.real if abs(z.imag) <= 1e-14 * max(1.0, abs(z)) else z


def l2_norm2(g: MetricGraph, waves: dict) -> float:
    return math.fsum(waves[e.id].norm2(e.length) for e in g.edges if e.id in waves)


def l2_inner(g: MetricGraph, u: dict, v: dict) -> complex:
    """``int conj(u) v`` over the graph, edge by edge in closed form."""
    from .edge import gram

    total = 0.0
    for e in g.edges:
        if e.id in u and e.id in v:
            x = np.array([u[e.id].a, u[e.id].b])
            y = np.array([v[e.id].a, v[e.id].b])
            total += np.conj(x) @ gram(u[e.id].lam, e.length) @ y
    return complex(total)


def orthonormalize(g: MetricGraph, states: list) -> list:
    """Gram-Schmidt in L2(graph)."""
    out = []
    for st in states:
        w = dict(st)
        for q in out:
            c = l2_inner(g, q, w)
            w = {eid: EdgeWave(x.edge, x.lam, x.a - c * q[eid].a, x.b - c * q[eid].b) for eid, x in w.items()}
        if l2_norm2(g, w) > 1e-20:
            out.append(normalize(g, w))
    return out


def outgoing_derivative_sum(g: MetricGraph, waves: dict, v, k=None) -> complex:
    total = 0.0
    for e, side in g.incident(v):
        w = waves.get(e.id)
        if w is None:
            continue
        if side == 0:
            total += w.derivative(0.0)
        else:
            q = np.conj(_phase(k, e.shift)) if g.rank and k is not None else 1.0
            total += -w.derivative(e.length) * q
    return _clean(total)


def normalize(g: MetricGraph, waves: dict) -> dict:
    n = math.sqrt(l2_norm2(g, waves))
    if n == 0:
        return waves
    # fix the global phase so real problems give real functions
    ref = max(waves.values(), key=lambda w: abs(w.a) + abs(w.b))
    z = ref.a if abs(ref.a) >= abs(ref.b) else ref.b
    ph = z / abs(z) if abs(z) else 1.0
    return {eid: EdgeWave(w.edge, w.lam, _clean(w.a / ph / n), _clean(w.b / ph / n)) for eid, w in waves.items()}


# ---------------------------------------------------------------------------
# eigenfunctions
# ---------------------------------------------------------------------------


def eigenfunction_reconstruct(g: MetricGraph, cond, lam: float, values, k=None, delta: float = DELTA_D) -> dict:
    """Edge waves with prescribed vertex values (mapping or array over free vertices)."""
    cond = as_conditions(g, cond)
    if not isinstance(values, dict):
        values = dict(zip(free_vertices(g, cond), values))
    out = {}
    for e in g.edges:
        if is_resonant(lam, e.length, delta):
            raise ResonanceError(lam, e.id, nearest_dirichlet(lam, e.length))
        c, s, _, _ = basis_eval(lam, e.length)
        A = values.get(e.tail, 0.0)
        B = values.get(e.head, 0.0) * (_phase(k, e.shift) if g.rank and k is not None else 1.0)
        out[e.id] = EdgeWave(e.id, lam, _clean(A), _clean((B - A * c) / s))
    return out


def dirichlet_resonant_states(g: MetricGraph, cond=None, lam: float = 0.0, k=None, delta: float = DELTA_D) -> list[dict]:
    """Eigenfunctions at ``lam`` that vanish at every vertex.

    Only edges with a Dirichlet eigenvalue at ``lam`` can carry such a
    function (``b sin``-type waves); the derivative sums at the non-Dirichlet
    vertices give a homogeneous system for the amplitudes.  Returns an
    orthonormal basis as a list of ``{edge id: EdgeWave}`` maps.
    """
    cond = as_conditions(g, cond)
    res = [e for e in g.edges if is_resonant(lam, e.length, delta)]
    if not res:
        return []
    col = {e.id: i for i, e in enumerate(res)}
    rows = []
    for v in g.vertices:
        if isinstance(cond[v], Dirichlet):
            continue
        row = np.zeros(len(res), dtype=complex)
        touched = False
        for e, side in g.incident(v):
            if e.id not in col:
                continue
            touched = True
            if side == 0:
                row[col[e.id]] += 1.0
            else:
                c = basis_eval(lam, e.length)[0]
                q = np.conj(_phase(k, e.shift)) if g.rank and k is not None else 1.0
                row[col[e.id]] += -c * q
        if touched:
            rows.append(row)
    A = np.array(rows) if rows else np.zeros((0, len(res)), dtype=complex)
    if k is None or not g.rank:
        A = A.real
    basis, _ = null_space(A)
    states = []
    for j in range(basis.shape[1] if basis.size else 0):
        waves = {e.id: EdgeWave(e.id, lam, 0.0, _clean(basis[col[e.id], j])) for e in res}
        states.append(normalize(g, waves))
    return states


def vertex_residual(g: MetricGraph, cond, lam: float, waves: dict, k=None) -> float:
    """Largest violation of continuity / derivative-sum conditions.

    Edges missing from ``waves`` count as identically zero, which is how the
    boundary of a compact support is checked.
    """
    cond = as_conditions(g, cond)
    zero = EdgeWave(None, lam, 0.0, 0.0)
    worst = 0.0
    for v in g.vertices:
        vals, ders = [], []
        for e, side in g.incident(v):
            w = waves.get(e.id, zero)
            if side == 0:
                vals.append(w(0.0))
                ders.append(w.derivative(0.0))
            else:
                q = np.conj(_phase(k, e.shift)) if g.rank and k is not None else 1.0
                vals.append(w(e.length) * q)
                ders.append(-w.derivative(e.length) * q)
        if not vals:
            continue
        if isinstance(cond[v], Dirichlet):
            worst = max(worst, max(abs(x) for x in vals))
            continue
        worst = max(worst, max(abs(x - vals[0]) for x in vals))
        worst = max(worst, abs(sum(ders) - cond.alpha(v, lam) * vals[0]))
    return worst


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


@dataclass
class EigenResult:
    lam: float
    multiplicity: int
    eigenfunctions: list = field(default_factory=list)
    residual: float = 0.0
    resonant: int = 0

    def __repr__(self):
        return f"EigenResult(lam={self.lam!r}, multiplicity={self.multiplicity})"


class _Counter:
    def __init__(self, g, cond, k, delta):
        self.g, self.cond, self.k, self.delta = g, cond, k, delta
        self.cache: dict = {}

    def __call__(self, lam):
        if lam not in self.cache:
            self.cache[lam] = assemble_secular(self.g, self.cond, lam, self.k, delta=0.0).negative_count()
        return self.cache[lam]


def singular_points(g: MetricGraph, cond, lo: float, hi: float, delta: float = DELTA_D) -> tuple[list, list]:
    """Edge Dirichlet eigenvalues and coupling singularities near ``[lo, hi]``."""
    cond = as_conditions(g, cond)
    sd = dirichlet_spectrum(g, hi + delta, lo - delta).distinct()
    robin = cond.singularities(lo - delta, hi + delta)
    return sd, robin


def _segments(lo, hi, points, delta):
    # excise slightly more than delta so segment ends are safely outside the zone
    delta = 1.01 * delta
    pts = sorted(points)
    segs = []
    a = lo
    for p in pts:
        if p + delta < a:
            continue
        if p - delta > a:
            segs.append((a, min(p - delta, hi)))
        a = max(a, p + delta)
        if a >= hi:
            break
    if a < hi:
        segs.append((a, hi))
    return [(x, y) for x, y in segs if y > x]


def _isolate(counter, a, b, na, nb, tol, out):
    if na - nb < 0:
        raise SolverError(
            f"eigenvalue count decreased on ({a!r}, {b!r}); spectral coupling is not monotone there"
        )
    if na == nb:
        return
    stack = [(a, b, na, nb)]
    while stack:
        a, b, na, nb = stack.pop()
        if b - a <= tol * max(1.0, abs(a), abs(b)):
            out.append((0.5 * (a + b), na - nb))
            continue
        m = 0.5 * (a + b)
        nm = counter(m)
        if nm > na or nm < nb:
            raise SolverError(f"non-monotone eigenvalue count near lambda={m!r}")
        if na > nm:
            stack.append((a, m, na, nm))
        if nm > nb:
            stack.append((m, b, nm, nb))


def default_step(g: MetricGraph) -> float:
    return min(0.01, g.l0 / 20.0)


def _grid(a, b, step):
    ta, tb = sqrt_signed(a), sqrt_signed(b)
    n = max(1, math.ceil((tb - ta) / step))
    pts = [lam_from_signed(ta + (tb - ta) * i / n) for i in range(n + 1)]
    pts[0], pts[-1] = a, b
    return pts


def solve_spectrum(g: MetricGraph, cond=None, lo: float = 0.0, hi: float = 100.0, tol: float = 1e-12,
                   k=None, step: float | None = None, delta: float = DELTA_D,
                   eigenfunctions: bool = True) -> list[EigenResult]:
    """All eigenvalues in ``[lo, hi]`` with multiplicities and eigenfunctions.

    Eigenvalues closer than ``delta`` to an edge Dirichlet eigenvalue (but not
    on it) or to a singular point of a spectral coupling are not found.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise SolverError(f"bad window [{lo!r}, {hi!r}]")
    if tol <= 0:
        raise SolverError("tol must be positive")
    cond = as_conditions(g, cond)
    pad = 1e-8 * max(1.0, abs(lo), abs(hi))
    a0, b0 = lo - pad, hi + pad
    step = step or default_step(g)
    sd, robin = singular_points(g, cond, a0, b0, delta)
    counter = _Counter(g, cond, k, delta)

    roots: list[tuple[float, int]] = []
    for a, b in _segments(a0, b0, sd + robin, delta):
        grid = _grid(a, b, step)
        counts = [counter(x) for x in grid]
        for x, y, nx, ny in zip(grid, grid[1:], counts, counts[1:]):
            _isolate(counter, x, y, nx, ny, tol, roots)

    results = []
    for lam, mult in sorted(roots):
        sm = assemble_secular(g, cond, lam, k, delta=0.0)
        res = EigenResult(lam, mult)
        if sm.matrix.size:
            _, sv, vh = np.linalg.svd(sm.matrix)
            res.residual = float(sv[-mult:].max() / max(sv[0], 1e-300))
            if eigenfunctions:
                for j in range(1, mult + 1):
                    vec = vh[-j].conj()
                    res.eigenfunctions.append(normalize(g, eigenfunction_reconstruct(g, cond, lam, vec, k, delta=0.0)))
                if mult > 1:
                    res.eigenfunctions = orthonormalize(g, res.eigenfunctions)
        results.append(res)

    for p in sd:
        # points shared with a coupling singularity are not resolved
        if not (a0 <= p <= b0) or any(abs(p - q) <= delta for q in robin):
            continue
        try:
            basis, sv = matching_kernel(g, cond, p, k)
        except (ArithmeticError, ValueError):
            continue
        mult = basis.shape[1] if basis.size else 0
        if mult == 0:
            continue
        res = EigenResult(p, mult)
        res.resonant = len(dirichlet_resonant_states(g, cond, p, k, delta))
        res.residual = float(sv[-mult:].max() / max(sv[0], 1e-300)) if sv.size else 0.0
        if eigenfunctions:
            res.eigenfunctions = orthonormalize(
                g, [_waves_from_coefficients(g, p, basis[:, j]) for j in range(mult)])
        results.append(res)

    results.sort(key=lambda r: r.lam)
    return results


def eigenvalues(results: list[EigenResult]) -> list[float]:
    """Flatten results into a sorted list with repeats for multiplicity."""
    out = []
    for r in results:
        out.extend([r.lam] * r.multiplicity)
    return out
