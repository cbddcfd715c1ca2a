"""Dirichlet-to-Neumann functions of decorations and gap opening.

For a finite graph ``G1`` rooted at ``v1`` the function ``Lambda(lam)`` is the
sum of outgoing derivatives at ``v1`` of the solution that equals 1 at ``v1``
and satisfies ``G1``'s conditions elsewhere.  Its poles are eigenvalues of the
Dirichlet-at-root operator ``H1``; near a simple pole ``lam0`` the residue is
``-Psi**2`` where ``Psi`` is the outgoing derivative sum of the normalized
eigenfunction.

Decorating every vertex of a base graph with ``G1`` is equivalent to the
coupling ``alpha(lam) = -Lambda(lam)`` on the base graph alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .edge import DELTA_D, dirichlet_spectrum, is_resonant, nearest_dirichlet
from .errors import CertificateNotFound, PoleError, ResonanceError, SolverError
from .graph import (DIRICHLET, NEUMANN, Dirichlet, MetricGraph, SpectralRobin,
                    as_conditions)
from .spectrum import (assemble_secular, outgoing_derivative_sum, solve_spectrum)

POLE_COND = 1e12


@dataclass(frozen=True)
class PoleData:
    lam0: float
    residue: float
    psi: float
    simple: bool
    multiplicity: int = 1
    in_sigma_d: bool = False
    residue_error: float = float("nan")

    @property
    def applicable(self) -> bool:
        """Hypotheses of the gap-opening statement (simple, Psi != 0, off sigma_D)."""
        return self.simple and abs(self.psi) > 1e-8 and not self.in_sigma_d


class DtnFunction:
    """Dirichlet-to-Neumann function of ``graph`` rooted at ``root``."""

    def __init__(self, graph: MetricGraph, root, cond=None, delta: float = DELTA_D):
        if graph.is_periodic:
            raise SolverError("decoration graph must be finite")
        self.graph = graph
        self.root = root if root is not None else graph.root
        if self.root not in graph._vertex_pos:
            raise SolverError(f"root {self.root!r} is not a vertex of the decoration")
        cond = as_conditions(graph, cond)
        self.cond = cond.updated({self.root: NEUMANN})
        self.h1_cond = cond.updated({self.root: DIRICHLET})
        self.delta = delta
        self._eval = lru_cache(maxsize=4096)(self._evaluate)
        self._pole_cache: dict = {}

    def __call__(self, lam: float) -> float:
        return self._eval(float(lam))

    def _evaluate(self, lam: float) -> float:
        for e in self.graph.edges:
            if is_resonant(lam, e.length, self.delta):
                raise ResonanceError(lam, e.id, nearest_dirichlet(lam, e.length))
        sm = assemble_secular(self.graph, self.cond, lam, delta=0.0)
        M = sm.matrix
        i0 = sm.index.index(self.root)
        rest = [i for i in range(len(sm.index)) if i != i0]
        if not rest:
            return float(M[i0, i0])
        A = M[np.ix_(rest, rest)]
        rhs = -M[rest, i0]
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] * POLE_COND <= max(sv[0], np.linalg.norm(M, 2)):
            raise PoleError(f"decoration problem is singular at lambda={lam!r}")
        x = np.linalg.solve(A, rhs)
        return float(M[i0, i0] + M[i0, rest] @ x)

    def sigma_d(self, lo: float, hi: float) -> list[float]:
        return dirichlet_spectrum(self.graph, hi, lo).distinct()

    def h1_spectrum(self, lo: float, hi: float):
        key = (lo, hi)
        if key not in self._pole_cache:
            self._pole_cache[key] = solve_spectrum(self.graph, self.h1_cond, lo, hi)
        return self._pole_cache[key]

    def singularities(self, lo: float, hi: float) -> list[float]:
        """Points of ``[lo, hi]`` where the bordered solve is undefined."""
        pts = set(self.sigma_d(lo, hi))
        pts.update(r.lam for r in self.h1_spectrum(lo, hi))
        return sorted(p for p in pts if lo <= p <= hi)

    def __repr__(self):
        return f"DtnFunction(root={self.root!r}, {self.graph!r})"


def dtn_function(g1: MetricGraph, v1, cond, lam: float) -> float:
    return DtnFunction(g1, v1, cond)(lam)


def dtn_residue(dtn: DtnFunction, lam0: float, h_list=(1e-2, 1e-3, 1e-4), rtol: float = 1e-3):
    """Residue of ``dtn`` at ``lam0`` and an error estimate.

    Uses the symmetric quotient ``h (Lambda(lam0+h) - Lambda(lam0-h)) / 2``,
    which is even in ``h``, and extrapolates it polynomially in ``h**2`` to 0.
    """
    hs = np.array(sorted(h_list, reverse=True), dtype=float)
    vals = np.array([0.5 * h * (dtn(lam0 + h) - dtn(lam0 - h)) for h in hs])
    x = hs ** 2
    # Neville tableau at x = 0
    table = [vals.copy()]
    for level in range(1, len(hs)):
        prev = table[-1]
        cur = np.array([
            (x[i + level] * prev[i] - x[i] * prev[i + 1]) / (x[i + level] - x[i])
            for i in range(len(prev) - 1)
        ])
        table.append(cur)
    best = float(table[-1][0])
    err = float(abs(best - table[-2][-1])) if len(table) > 1 else float("nan")
    if not math.isfinite(best) or err > rtol * max(abs(best), 1e-8) + 1e-10:
        raise SolverError(
            f"residue extrapolation at {lam0!r} did not converge (estimate {best!r}, error {err!r})"
        )
    return best, err


def dtn_pole_candidates(dtn: DtnFunction, lo: float, hi: float, fit_residue: bool = True) -> list[PoleData]:
    """Eigenvalues of the Dirichlet-at-root operator, annotated for gap opening."""
    out = []
    sd = dtn.sigma_d(lo - dtn.delta, hi + dtn.delta)
    for r in dtn.h1_spectrum(lo, hi):
        psis = [outgoing_derivative_sum(dtn.graph, w, dtn.root) for w in r.eigenfunctions]
        psi2 = math.fsum(abs(p) ** 2 for p in psis)
        psi = float(np.real(psis[0])) if r.multiplicity == 1 else math.sqrt(psi2)
        in_sd = any(abs(r.lam - p) <= dtn.delta for p in sd)
        residue, err = float("nan"), float("nan")
        if fit_residue:
            try:
                residue, err = dtn_residue(dtn, r.lam)
            except (SolverError, ResonanceError):
                pass
        out.append(PoleData(r.lam, residue, psi, r.multiplicity == 1, r.multiplicity, in_sd, err))
    return out


# ---------------------------------------------------------------------------
# reduction to the base graph
# ---------------------------------------------------------------------------


def _robin(base_cond, v, dtn: DtnFunction) -> SpectralRobin:
    c0 = base_cond[v]

    def alpha(lam, c0=c0):
        return c0.value(lam) - dtn(lam)

    return SpectralRobin(alpha, dtn.singularities, name=f"-Lambda at {v!r}")


def decorated_reduction(g0: MetricGraph, cond0, dtn):
    """Base-graph conditions equivalent to decorating every vertex.

    ``dtn`` is a single :class:`DtnFunction` or a mapping vertex -> function
    (different decorations per vertex).  Dirichlet base vertices are left alone.
    """
    cond0 = as_conditions(g0, cond0)
    changes = {}
    for v in g0.vertices:
        if isinstance(cond0[v], Dirichlet):
            continue
        f = dtn[v] if isinstance(dtn, dict) else dtn
        if f is None:
            continue
        changes[v] = _robin(cond0, v, f)
    return cond0.updated(changes)


# ---------------------------------------------------------------------------
# gap certificate
# ---------------------------------------------------------------------------


def _k_grid(rank: int, n_k: int):
    import itertools

    ks = [2 * math.pi * j / n_k for j in range(n_k)]
    return [tuple(p) for p in itertools.product(ks, repeat=rank)]


def _k_lipschitz(pg: MetricGraph, lam: float) -> float:
    """Bound on ``||dM/dk||`` (operator norm) at ``lam``."""
    from .edge import basis_eval

    total = 0.0
    for e in pg.edges:
        if e.is_periodic:
            s = basis_eval(lam, e.length)[1]
            total += math.sqrt(sum(t * t for t in e.shift)) / abs(s)
    return total


@dataclass
class _Sample:
    ok: bool
    inertia: tuple = ()


def gap_certificate(pg: MetricGraph, cond0, dtn, lam0: float, width: float, n_lam: int = 400, n_k: int = 64,
                    tol: float = 1e-8, delta: float = DELTA_D):
    """Certified spectral gap around ``lam0`` for the decorated periodic graph.

    A sample ``lam`` passes when, at every quasimomentum of the grid, the
    Bloch secular matrix of the reduced problem has all eigenvalues away from
    zero by more than the Lipschitz bound of ``k -> M(lam, k)`` over half a
    grid cell (and ``tol`` relative).  Consecutive passing samples with equal
    inertia at every ``k`` enclose no spectrum because ``M`` is increasing in
    ``lam``.  Returns ``(gap_lo, gap_hi)``: the punctured interval around
    ``lam0`` covered by passing runs on both sides.
    """
    if not pg.is_periodic:
        raise SolverError("gap certificate needs a periodic base graph")
    for e in pg.edges:
        if is_resonant(lam0, e.length, delta):
            raise CertificateNotFound(
                f"lambda0={lam0!r} lies on the Dirichlet spectrum of base edge {e.id!r}; subdivide the base first"
            )
    cond = decorated_reduction(pg, cond0, dtn)
    grid = np.linspace(lam0 - width, lam0 + width, n_lam)
    h = grid[1] - grid[0]
    ks = _k_grid(pg.rank, n_k)
    reach = math.sqrt(pg.rank) * math.pi / n_k
    sing = set(dirichlet_spectrum(pg, lam0 + width + delta, lam0 - width - delta).distinct())
    sing.update(cond.singularities(lam0 - width - delta, lam0 + width + delta))
    sing.discard(lam0)
    sing = sorted(p for p in sing if abs(p - lam0) > delta)

    def sample(lam) -> _Sample:
        if any(abs(lam - p) <= max(delta, 1e-12) for p in sing):
            return _Sample(False)
        try:
            lip = _k_lipschitz(pg, lam) * reach
            inertia = []
            for k in ks:
                M = assemble_secular(pg, cond, lam, k, delta=0.0).matrix
                ev = np.linalg.eigvalsh(M)
                scale = max(np.abs(ev).max(), 1e-300)
                if np.abs(ev).min() <= max(lip, tol * scale):
                    return _Sample(False)
                inertia.append(int(np.sum(ev < 0)))
            return _Sample(True, tuple(inertia))
        except (ResonanceError, PoleError, ArithmeticError):
            return _Sample(False)

    left = [x for x in grid if x <= lam0 - h]
    right = [x for x in grid if x >= lam0 + h]
    if not left or not right:
        raise CertificateNotFound("window too narrow for the grid")

    def run(points):
        end = None
        prev = None
        for x in points:
            # a singular point between two samples breaks the run
            if end is not None and any(min(end, x) < p < max(end, x) for p in sing):
                break
            s = sample(x)
            if not s.ok or (prev is not None and s.inertia != prev.inertia):
                break
            end, prev = x, s
        return end

    lo = run(reversed(left))
    hi = run(right)
    if lo is None or hi is None:
        raise CertificateNotFound(f"no certifiable gap around lambda0={lam0!r} at this resolution")
    return float(lo), float(hi)
