"""Growth of generalized eigenfunctions and Schnol-type distance bounds.

A generalized eigenfunction ``phi`` on a ball is cut off by ``theta`` which is
1 on the full-edge core ``Gamma_r`` of ``B_r``, stays 1 up to the middle of
every edge leaving ``Gamma_r``, drops to 0 over a profile of width ``l0/4``
and vanishes beyond.  Since ``theta`` is locally constant at vertices,
``theta phi`` keeps the vertex conditions and

    (H - lam)(theta phi) = -2 theta' phi' - theta'' phi,

so the Rayleigh quotient ``||(H - lam)(theta phi)|| / ||theta phi||`` bounds
``dist(lam, sigma(H))`` from above.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .edge import EdgeWave, basis_eval
from .errors import GraphError, SolverError
from .graph import Dirichlet, MetricGraph, as_conditions, metric_ball, vertex_distances

_DIST_TOL = 1e-12


@dataclass
class GeneralizedEigenfunction:
    """Solution of ``-u'' = lam u`` on a finite piece of a graph.

    Vertex conditions hold at interior vertices; vertices at the edge of the
    generated piece (``outer``) are exempt.
    """

    graph: MetricGraph
    cond: object
    lam: float
    waves: dict
    outer: frozenset = frozenset()

    @property
    def root(self):
        return self.graph.root

    def radius(self) -> float:
        return max(vertex_distances(self.graph, self.root).values())

    def residual(self) -> float:
        """Largest violation of the vertex conditions at interior vertices."""
        cond = as_conditions(self.graph, self.cond)
        worst = 0.0
        for v in self.graph.vertices:
            if v in self.outer:
                continue
            vals, ders = [], []
            for e, side in self.graph.incident(v):
                w = self.waves[e.id]
                x = 0.0 if side == 0 else e.length
                vals.append(w(x))
                ders.append(w.derivative(x) if side == 0 else -w.derivative(x))
            if isinstance(cond[v], Dirichlet):
                worst = max(worst, max(abs(x) for x in vals))
                continue
            worst = max(worst, max(abs(x - vals[0]) for x in vals))
            worst = max(worst, abs(sum(ders) - cond.alpha(v, self.lam) * vals[0]))
        return worst


def _wave_from_end(edge, lam, u, d, at_head: bool) -> EdgeWave:
    """Wave with value ``u`` and outgoing derivative ``d`` at one end."""
    if not at_head:
        return EdgeWave(edge.id, lam, u, d)
    c, s, dc, ds = basis_eval(lam, edge.length)
    # (u(l), u'(l)) = (u, -d); the transfer matrix has determinant 1
    up = -d
    return EdgeWave(edge.id, lam, ds * u - s * up, -dc * u + c * up)


def generate_generalized_eigenfunction(g: MetricGraph, cond=None, lam: float = 0.0,
                                       seed=(1.0, 0.0)) -> GeneralizedEigenfunction:
    """Propagate root data ``seed = (u, u')`` outward through a tree.

    ``u'`` is the total outgoing derivative at the root; it is shared equally
    among the root's edges, and at every later vertex the outgoing derivative
    required by the vertex condition is shared equally among the child edges.
    """
    if g.root is None:
        raise GraphError("generalized eigenfunctions are propagated from the root")
    cond = as_conditions(g, cond)
    if any(e.tail == e.head for e in g.edges) or len(g.edges) != len(g.vertices) - 1:
        raise GraphError("propagation needs a tree; supply the generalized eigenfunction explicitly")
    u0, d0 = seed
    if isinstance(cond[g.root], Dirichlet) and u0 != 0:
        raise GraphError("the root is Dirichlet; seed value must be 0")
    waves = {}
    seen = {g.root}
    queue = deque([(g.root, u0, d0, None)])
    outer = set()
    while queue:
        v, u, total, came = queue.popleft()
        children = [(e, side) for e, side in g.incident(v) if e.id != came]
        children = [(e, side) for e, side in children if (e.head if side == 0 else e.tail) not in seen]
        if not children:
            if came is not None:
                outer.add(v)
            continue
        share = total / len(children)
        for e, side in children:
            w = _wave_from_end(e, lam, u, share, at_head=(side == 1))
            waves[e.id] = w
            nxt = e.head if side == 0 else e.tail
            seen.add(nxt)
            x = e.length if side == 0 else 0.0
            val = w(x)
            # derivative arriving at nxt, pointing away from v
            arriving = w.derivative(x) if side == 0 else -w.derivative(x)
            if isinstance(cond[nxt], Dirichlet):
                outer.add(nxt)
                continue
            need = cond.alpha(nxt, lam) * val + arriving
            queue.append((nxt, val, need, e.id))
    if len(seen) != len(g.vertices):
        raise GraphError("graph is not connected to the root")
    return GeneralizedEigenfunction(g, cond, lam, waves, frozenset(outer))


# ---------------------------------------------------------------------------
# growth
# ---------------------------------------------------------------------------


@dataclass
class GrowthProfile:
    radii: list
    J: list
    eps: float
    L: float
    selected: list = field(default_factory=list)

    @property
    def first(self):
        return self.selected[0] if self.selected else None


def growth_J(phi: GeneralizedEigenfunction, r: float, distances: dict | None = None) -> float:
    """``J(r)``: squared L2 norm of ``phi`` over the full-edge core of ``B_r``."""
    ball = metric_ball(phi.graph, r + _DIST_TOL, distances)
    return math.fsum(phi.waves[eid].norm2(phi.graph.edge(eid).length) for eid in ball.core_edges)


def growth_profile(phi: GeneralizedEigenfunction, radii, eps: float) -> GrowthProfile:
    """``J`` on ``radii`` and the radii with ``J(r + L) <= e^eps J(r)``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    dist = vertex_distances(phi.graph, phi.root)
    R = max(dist.values())
    L = phi.graph.L
    radii = [float(r) for r in radii]
    if any(r > R for r in radii):
        raise GraphError(f"radius beyond the generated piece (R={R!r})")
    J = [growth_J(phi, r, dist) for r in radii]
    sel = []
    for r, j in zip(radii, J):
        if r + L <= R and j > 0 and growth_J(phi, r + L, dist) <= math.exp(eps) * j:
            sel.append(r)
    return GrowthProfile(radii, J, eps, L, sel)


# ---------------------------------------------------------------------------
# cutoff
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Decreasing transition from 1 to 0 on ``[0, width]`` with derivatives."""

    width: float
    f: Callable
    df: Callable
    d2f: Callable


def cubic_profile(width: float) -> Profile:
    """``1 - 3 s^2 + 2 s^3`` with ``s = t / width``; flat first derivative at both ends."""
    h = float(width)

    def clamp(t):
        return np.clip(np.asarray(t, dtype=float) / h, 0.0, 1.0)

    def f(t):
        s = clamp(t)
        return 1 - 3 * s ** 2 + 2 * s ** 3

    def df(t):
        s = clamp(t)
        return (-6 * s + 6 * s ** 2) / h

    def d2f(t):
        t = np.asarray(t, dtype=float)
        s = clamp(t)
        inside = (t >= 0) & (t <= h)
        return np.where(inside, (-6 + 12 * s) / h ** 2, 0.0)

    return Profile(h, f, df, d2f)


@dataclass
class CutoffFunction:
    """``theta`` for inner radius ``r``.

    ``kind[eid]`` is ``1`` (identically one), ``0`` (identically zero) or
    ``("ramp", side)`` with ``side`` the end (0 tail, 1 head) inside.
    """

    graph: MetricGraph
    r: float
    profile: Profile
    kind: dict
    inner: frozenset
    degenerate: bool = False

    def _start(self, eid):
        return 0.5 * self.graph.edge(eid).length

    def _local(self, eid, x):
        """Coordinate along the transition, increasing away from the inner end."""
        e = self.graph.edge(eid)
        _, side = self.kind[eid]
        x = np.asarray(x, dtype=float)
        return (x - 0.5 * e.length) if side == 0 else (0.5 * e.length - x), (1.0 if side == 0 else -1.0)

    def theta(self, eid, x):
        k = self.kind[eid]
        if k in (0, 1):
            return np.full_like(np.asarray(x, dtype=float), float(k))
        t, _ = self._local(eid, x)
        return np.where(t <= 0, 1.0, self.profile.f(t))

    def dtheta(self, eid, x):
        k = self.kind[eid]
        if k in (0, 1):
            return np.zeros_like(np.asarray(x, dtype=float))
        t, sign = self._local(eid, x)
        return np.where(t <= 0, 0.0, sign * self.profile.df(t))

    def d2theta(self, eid, x):
        k = self.kind[eid]
        if k in (0, 1):
            return np.zeros_like(np.asarray(x, dtype=float))
        t, _ = self._local(eid, x)
        return np.where(t <= 0, 0.0, self.profile.d2f(t))

    def transition(self, eid) -> tuple[float, float]:
        """Support of ``theta'`` on a ramp edge."""
        e = self.graph.edge(eid)
        _, side = self.kind[eid]
        m, h = 0.5 * e.length, self.profile.width
        return (m, m + h) if side == 0 else (m - h, m)

    @property
    def ramps(self) -> list:
        return [eid for eid, k in self.kind.items() if k not in (0, 1)]


def build_cutoff(g: MetricGraph, r: float, profile: Profile | None = None) -> CutoffFunction:
    """Cutoff for the core of ``B_r``; raises if its support leaves ``g``."""
    dist = vertex_distances(g, g.root)
    R = max(dist.values())
    profile = profile or cubic_profile(g.l0 / 4.0)
    if profile.width > g.l0 / 4.0 + 1e-15:
        raise ValueError("profile must fit in l0/4")
    inner = frozenset(v for v, d in dist.items() if d <= r + _DIST_TOL)
    kind = {}
    for e in g.edges:
        a, b = e.tail in inner, e.head in inner
        if a and b:
            kind[e.id] = 1
        elif a or b:
            kind[e.id] = ("ramp", 0 if a else 1)
        else:
            kind[e.id] = 0
    # every inner vertex must have all its edges present in the generated piece
    if r + g.L > R + _DIST_TOL:
        raise GraphError(f"cutoff at r={r!r} needs the ball of radius {r + g.L!r}; generated piece has {R!r}")
    degenerate = not any(k not in (0, 1) for k in kind.values())
    return CutoffFunction(g, float(r), profile, kind, inner, degenerate)


# ---------------------------------------------------------------------------
# bound
# ---------------------------------------------------------------------------


@dataclass
class SchnolBound:
    value: float
    numerator2: float
    denominator2: float
    J: float
    degenerate: bool


def _quad(f, a, b):
    val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-10, limit=200)
    return val


def schnol_bound_details(phi: GeneralizedEigenfunction, cutoff: CutoffFunction) -> SchnolBound:
    g = phi.graph
    num = 0.0
    den = 0.0
    # identical transition pieces (trees, chains) are integrated once
    memo: dict = {}
    for eid, k in cutoff.kind.items():
        if k == 0:
            continue
        e = g.edge(eid)
        w = phi.waves[eid]
        if k == 1:
            den += w.norm2(e.length)
            continue
        a, b = cutoff.transition(eid)
        _, side = k
        # theta == 1 between the inner end and the transition
        flat = w.norm2(a) if side == 0 else w.shifted(b).norm2(e.length - b)
        den += flat

        def resid(x, eid=eid, w=w):
            v = -2 * cutoff.dtheta(eid, x) * w.derivative(x) - cutoff.d2theta(eid, x) * w(x)
            return float(abs(v) ** 2)

        def mass(x, eid=eid, w=w):
            return float(abs(cutoff.theta(eid, x) * w(x)) ** 2)

        key = (k[1], e.length, a, b, complex(w.a), complex(w.b))
        if key not in memo:
            memo[key] = (_quad(resid, a, b), _quad(mass, a, b))
        dn, dd = memo[key]
        num += dn
        den += dd
    J = growth_J(phi, cutoff.r)
    if den <= 0:
        raise SolverError("theta * phi vanishes identically")
    return SchnolBound(math.sqrt(num / den), num, den, J, cutoff.degenerate)


def schnol_distance_bound(phi: GeneralizedEigenfunction, cutoff: CutoffFunction) -> float:
    """Upper bound on ``dist(phi.lam, sigma(H))`` from the cut-off ``phi``."""
    return schnol_bound_details(phi, cutoff).value


def cutoff_domain_residual(phi: GeneralizedEigenfunction, cutoff: CutoffFunction) -> float:
    """Vertex-condition violation of ``theta phi`` at every vertex of its support."""
    g = phi.graph
    cond = as_conditions(g, phi.cond)
    worst = 0.0
    for v in g.vertices:
        vals, ders = [], []
        for e, side in g.incident(v):
            if cutoff.kind[e.id] == 0:
                vals.append(0.0)
                ders.append(0.0)
                continue
            w = phi.waves[e.id]
            x = 0.0 if side == 0 else e.length
            t, dt = float(cutoff.theta(e.id, x)), float(cutoff.dtheta(e.id, x))
            val = t * w(x)
            der = dt * w(x) + t * w.derivative(x)
            vals.append(val)
            ders.append(der if side == 0 else -der)
        if all(abs(x) == 0 for x in vals + ders):
            continue
        if isinstance(cond[v], Dirichlet):
            worst = max(worst, max(abs(x) for x in vals))
            continue
        worst = max(worst, max(abs(x - vals[0]) for x in vals))
        worst = max(worst, abs(sum(ders) - cond.alpha(v, phi.lam) * vals[0]))
    return worst


def cutoff_identity_residual(phi: GeneralizedEigenfunction, cutoff: CutoffFunction, n_points: int = 1000,
                             seed: int = 0) -> float:
    """Compare ``-(theta phi)'' - lam theta phi`` (symbolic) with ``-2 theta' phi' - theta'' phi``.

    The left side is differentiated symbolically from the polynomial profile
    and the closed-form edge wave; points are drawn on the transition zones
    and the flat parts of the support.
    """
    import sympy as sp

    rng = np.random.default_rng(seed)
    x = sp.Symbol("x", real=True)
    lam = phi.lam
    worst = 0.0
    edges = [eid for eid, k in cutoff.kind.items() if k != 0]
    if not edges:
        return 0.0
    ramps = cutoff.ramps or edges
    picks = rng.integers(0, len(ramps), n_points)
    h = cutoff.profile.width
    for idx in range(len(ramps)):
        eid = ramps[idx]
        count = int(np.sum(picks == idx))
        if count == 0:
            continue
        e = phi.graph.edge(eid)
        w = phi.waves[eid]
        kq = sp.sqrt(sp.Float(abs(lam), 30))
        if lam > 0:
            c, s = sp.cos(kq * x), sp.sin(kq * x) / kq
        elif lam < 0:
            c, s = sp.cosh(kq * x), sp.sinh(kq * x) / kq
        else:
            c, s = sp.Integer(1), x
        ph = complex(w.a).real * c + complex(w.b).real * s
        k = cutoff.kind[eid]
        if k == 1:
            th = sp.Integer(1)
            xs = rng.uniform(0, e.length, count)
        else:
            _, side = k
            t = (x - e.length / 2) if side == 0 else (e.length / 2 - x)
            sv = t / h
            th = 1 - 3 * sv ** 2 + 2 * sv ** 3
            a, b = cutoff.transition(eid)
            xs = rng.uniform(a, b, count)
        lhs = sp.lambdify(x, -sp.diff(th * ph, x, 2) - lam * th * ph, "numpy")
        vals = np.asarray(lhs(xs), dtype=float) * np.ones_like(xs)
        rhs = -2 * cutoff.dtheta(eid, xs) * np.real(w.derivative(xs)) - cutoff.d2theta(eid, xs) * np.real(w(xs))
        worst = max(worst, float(np.max(np.abs(vals - rhs))))
    return worst
