"""Bloch analysis of periodic quantum graphs: bands, flat bands and scars.

The fundamental domain carries translation tags on its edges.  With the Bloch
convention ``u(g.x) = exp(i k.g) u(x)`` an edge with tag ``t`` couples its
tail to ``exp(i k.t)`` times its head value, which turns the secular matrix
into a Hermitian function of the quasimomentum.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bands import BandStructure, align_bands, gaps_from_bands, torus_grid
from .discrete import (PeriodicDifferenceOperator, find_compact_kernel,
                       inverse_floquet)
from .edge import DELTA_D, EdgeWave, dirichlet_spectrum, edge_dtn_block, is_resonant
from .errors import SolverError
from .graph import (NEUMANN, Dirichlet, MetricGraph, VertexConditionSet,
                    as_conditions, box_cells, subdivide_all, unfold)
from .spectrum import (assemble_secular, dirichlet_resonant_states,
                       eigenfunction_reconstruct, eigenvalues, l2_inner,
                       l2_norm2, matching_kernel, solve_spectrum,
                       vertex_residual)

FLAT_TOL = 1e-8
SCAR_TOL = 1e-8


def bloch_secular(pg: MetricGraph, cond, lam: float, k, delta: float = DELTA_D):
    if not pg.is_periodic:
        raise SolverError("Bloch secular matrix needs a periodic graph")
    k = tuple(float(x) for x in np.atleast_1d(k))
    if len(k) != pg.rank:
        raise SolverError(f"quasimomentum has {len(k)} components, lattice rank is {pg.rank}")
    return assemble_secular(pg, cond, lam, k, delta)


def _below_count(pg, cond, lam, k) -> int:
    """Eigenvalues below ``lam`` at ``k`` up to a k-independent constant."""
    return -assemble_secular(pg, cond, lam, k, delta=0.0).negative_count()


def _safe_point(pg, cond, x, delta):
    # nudge x off edge Dirichlet values and coupling singularities
    bad = dirichlet_spectrum(pg, x + 10 * delta, x - 10 * delta).values
    bad += list(as_conditions(pg, cond).singularities(x - 10 * delta, x + 10 * delta))
    while any(abs(x - p) <= 2 * delta for p in bad):
        x -= 3 * delta
    return x


def band_structure(pg: MetricGraph, cond=None, ks=None, lo: float = 0.0, hi: float = 40.0, n_k: int = 64,
                   tol: float = 1e-12, step: float | None = None, delta: float = DELTA_D,
                   gap_tol: float = 1e-7) -> BandStructure:
    """Per-k spectra in ``[lo, hi]``, the bands they form and the gaps between.

    Bands are indexed consistently across ``k`` by counting eigenvalues below
    the window with the inertia of ``M(lo, k)``.  Edge Dirichlet values in the
    window are tested once for flat bands.  Gaps narrower than ``gap_tol``
    (relative) are dropped as solver noise.
    """
    cond = as_conditions(pg, cond)
    ks = [tuple(np.atleast_1d(k).astype(float)) for k in ks] if ks is not None else torus_grid(pg.rank, n_k)
    ref = _safe_point(pg, cond, lo - 1e-7 * max(1.0, abs(lo)), delta)
    roots, offsets = [], []
    for k in ks:
        res = solve_spectrum(pg, cond, lo, hi, tol, k=k, step=step, delta=delta, eigenfunctions=False)
        lams = [x for x in eigenvalues(res)]
        offsets.append(_below_count(pg, cond, ref, k) + sum(1 for x in lams if x < ref))
        roots.append(sorted(lams))
    bands = align_bands(roots, offsets)
    bs = BandStructure(ks, roots, (lo, hi), bands)
    bs.gaps = gaps_from_bands(bs.band_intervals, lo, hi, gap_tol * max(1.0, abs(lo), abs(hi)))
    flat = set()
    singular = cond.singularities(lo - delta, hi + delta)
    for p in dirichlet_spectrum(pg, hi, lo).distinct():
        if any(abs(p - q) <= delta for q in singular):
            continue
        if flat_band_test(pg, cond, p, delta=delta):
            flat.add(p)
    bs.flat = sorted(flat)
    return bs


def _sample_ks(pg: MetricGraph, offset: float = 0.2360679774997897):
    """Tensor grid with ``2 D_j + 1`` points in dimension ``j`` (``D_j = sum |t_j|``)."""
    counts = []
    for j in range(pg.rank):
        d = sum(abs(e.shift[j]) for e in pg.edges)
        counts.append(2 * d + 1)
    axes = [[2 * math.pi * (m + offset) / n for m in range(n)] for n in counts]
    return [tuple(p) for p in itertools.product(*axes)]


def flat_band_test(pg: MetricGraph, cond=None, lam: float = 0.0, tol: float = FLAT_TOL,
                   delta: float = DELTA_D) -> bool:
    """Whether ``lam`` is an eigenvalue at every quasimomentum.

    ``det M(lam, k) prod s_e`` is a trigonometric polynomial of degree
    ``D_j`` in ``k_j``, so vanishing on ``2 D_j + 1`` samples per dimension
    forces it to vanish identically.  Vanishing is tested as
    ``sigma_min(M) <= tol * ||M||``.  On the edge Dirichlet spectrum the full
    matching system is used instead.
    """
    cond = as_conditions(pg, cond)
    if any(abs(lam - q) <= delta for q in cond.singularities(lam - delta, lam + delta)):
        raise SolverError(f"lambda={lam!r} is a singular point of the vertex coupling")
    resonant = any(is_resonant(lam, e.length, delta) for e in pg.edges)
    for k in _sample_ks(pg):
        if resonant:
            basis, _ = matching_kernel(pg, cond, lam, k)
            if basis.size == 0 or basis.shape[1] == 0:
                return False
        else:
            M = assemble_secular(pg, cond, lam, k, delta).matrix
            if M.size == 0:
                return False
            sv = np.linalg.svd(M, compute_uv=False)
            if sv[-1] > tol * max(sv[0], 1e-300):
                return False
    return True


# ---------------------------------------------------------------------------
# scars
# ---------------------------------------------------------------------------


@dataclass
class Scar:
    """Compactly supported eigenfunction on a window of the unfolded graph.

    ``window`` is the unfolded piece (vertices ``(v, cell)``, edges
    ``(edge id, cell)``); ``waves`` lists the edges of the support and
    ``residual`` the largest violation of the eigen-equation conditions at
    every window vertex, including where the function meets zero.
    """

    lam: float
    window: MetricGraph
    cells: list
    waves: dict
    vertex_values: dict
    residual: float
    route: str
    base: MetricGraph | None = None
    kernel: object = None

    @property
    def support_edges(self) -> list:
        return sorted(self.waves, key=repr)

    @property
    def support_vertices(self) -> list:
        out = set()
        for eid in self.waves:
            e = self.window.edge(eid)
            out.update((e.tail, e.head))
        return sorted(out, key=repr)

    @property
    def support_cells(self) -> list:
        return sorted({eid[1] for eid in self.waves})

    def norm(self) -> float:
        return math.sqrt(l2_norm2(self.window, self.waves))


def _window(pg: MetricGraph, cond, cells):
    w = unfold(pg, cells)
    conds = {(v, g): cond[v] for g in cells for v in pg.vertices if cond[v] != NEUMANN}
    wc = VertexConditionSet(conds)
    return MetricGraph(w.vertices, w.edges, wc, None, 0), wc


def _trim(waves: dict, tol: float = 1e-12) -> dict:
    kept = {}
    for eid, w in waves.items():
        if abs(w.a) > tol or abs(w.b) > tol:
            kept[eid] = w
    return kept


def _unit(window, waves):
    n = math.sqrt(l2_norm2(window, waves))
    return {eid: w.scaled(1.0 / n) for eid, w in waves.items()}


def vertex_reduction_operator(pg: MetricGraph, cond, lam: float, delta: float = DELTA_D) -> PeriodicDifferenceOperator:
    """Discrete operator ``A(lam)`` on fundamental-domain vertices.

    ``(A f)(v)`` is the sum of outgoing derivatives at ``v`` minus
    ``alpha_v f(v)`` for the edge waves with vertex values ``f``; its kernel
    is the vertex-value sector of the eigenspace at ``lam``.
    """
    cond = as_conditions(pg, cond)
    free = [v for v in pg.vertices if not isinstance(cond[v], Dirichlet)]
    zero = (0,) * pg.rank
    hops = []
    for e in pg.edges:
        D = edge_dtn_block(lam, e.length, delta, e.id)
        t, h = e.tail in free, e.head in free
        back = tuple(-x for x in e.shift)
        if t:
            hops.append((e.tail, e.tail, zero, float(D[0, 0])))
        if h:
            hops.append((e.head, e.head, zero, float(D[1, 1])))
        if t and h:
            hops.append((e.tail, e.head, tuple(e.shift), float(D[0, 1])))
            hops.append((e.head, e.tail, back, float(D[1, 0])))
    for v in free:
        a = cond.alpha(v, lam)
        if a:
            hops.append((v, v, zero, -float(a)))
    return PeriodicDifferenceOperator(tuple(free), tuple(hops), pg.rank)


def _resonant_scar(pg, cond, lam, delta, max_cells):
    for width in range(1, max_cells + 1):
        cells = box_cells(pg.rank, 0, width)
        window, wc = _window(pg, cond, cells)
        states = dirichlet_resonant_states(window, wc, lam, delta=delta)
        if states:
            waves = _unit(window, _trim(states[0]))
            res = vertex_residual(window, wc, lam, waves)
            values = {v: 0.0 for v in window.vertices}
            return Scar(lam, window, cells, waves, values, res, "resonant", pg)
    return None


def _kernel_scar(pg, cond, lam, d_max, delta, route):
    op = vertex_reduction_operator(pg, cond, lam, delta)
    q = find_compact_kernel(op, 0.0, d_max)
    if q is None:
        return None
    u = inverse_floquet(q)
    span = [g for _, g in u]
    lo = min(min(g) for g in span) - 1
    hi = max(max(g) for g in span) + 1
    cells = box_cells(pg.rank, lo, hi)
    window, wc = _window(pg, cond, cells)
    values = {(w, g): complex(c) for (w, g), c in u.items()}
    waves = eigenfunction_reconstruct(window, wc, lam, values, delta=delta)
    waves = _trim(waves)
    n = math.sqrt(l2_norm2(window, waves))
    waves = {eid: w.scaled(1.0 / n) for eid, w in waves.items()}
    values = {v: x / n for v, x in values.items()}
    res = vertex_residual(window, wc, lam, waves)
    return Scar(lam, window, cells, waves, values, res, route, pg, q)


def quantum_scar(pg: MetricGraph, cond=None, lam: float = 0.0, degree_bound: int = 8, route: str = "auto",
                 delta: float = DELTA_D, max_cells: int = 4) -> Scar:
    """Compactly supported eigenfunction at a flat-band energy.

    ``route="resonant"`` builds a vertex-vanishing state on a small window
    (``lam`` on the edge Dirichlet spectrum); ``"kernel"`` solves the
    vertex-reduced difference operator for a finitely supported kernel vector
    and rebuilds edge waves; ``"subdivide"`` first splits every edge so that
    the kernel route applies at Dirichlet values.  ``"auto"`` picks resonant
    on the Dirichlet spectrum and kernel elsewhere.
    """
    cond = as_conditions(pg, cond)
    if not pg.is_periodic:
        raise SolverError("scars are defined for periodic graphs")
    on_sd = any(is_resonant(lam, e.length, delta) for e in pg.edges)
    if route == "auto":
        route = "resonant" if on_sd else "kernel"
    if route == "resonant":
        scar = _resonant_scar(pg, cond, lam, delta, max_cells)
    elif route == "kernel":
        if on_sd:
            raise SolverError("kernel route needs lam off the edge Dirichlet spectrum; use route='subdivide'")
        scar = _kernel_scar(pg, cond, lam, degree_bound, delta, "kernel")
    elif route == "subdivide":
        fine = subdivide_all(pg)
        fine_cond = cond.updated({v: NEUMANN for v in fine.vertices if v not in pg._vertex_pos})
        if any(is_resonant(lam, e.length, delta) for e in fine.edges):
            raise SolverError("subdivision did not move the Dirichlet spectrum off lam")
        scar = _kernel_scar(fine, fine_cond, lam, degree_bound, delta, "subdivide")
    else:
        raise ValueError(f"unknown route {route!r}")
    if scar is None:
        raise SolverError(f"no compactly supported eigenfunction found at lambda={lam!r} (degree bound {degree_bound})")
    if scar.residual > SCAR_TOL:
        raise SolverError(f"scar residual {scar.residual:.3e} exceeds {SCAR_TOL:g}")
    return scar


def refine_scar(scar: Scar, fraction: float = 1 / math.sqrt(2)) -> dict:
    """Restate a scar on the subdivided window (edge ids ``"{id}.1"`` style).

    Returns ``{(sub edge id, cell): EdgeWave}``, comparable with a scar found
    by the subdivide route.
    """
    out = {}
    for (eid, cell), w in scar.waves.items():
        e = scar.window.edge((eid, cell))
        s = fraction * e.length
        out[(f"{eid}.1", cell)] = EdgeWave((f"{eid}.1", cell), w.lam, w.a, w.b)
        out[(f"{eid}.2", cell)] = w.shifted(s)
    return out


def scar_overlap(a: dict, b: dict, window: MetricGraph) -> float:
    """``|<a, b>|`` for unit-norm wave maps on the same window."""
    return abs(l2_inner(window, a, b))


def necklace_flat_energies(lam_max: float, length: float = 1.0) -> list[float]:
    """Flat-band energies ``(n pi / l)^2`` of the necklace with equal rungs."""
    out, n = [], 1
    while (n * math.pi / length) ** 2 <= lam_max:
        out.append((n * math.pi / length) ** 2)
        n += 1
    return out
