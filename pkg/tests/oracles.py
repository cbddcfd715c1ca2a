"""Reference computations that share no code with the library solver.

The eigenvalue oracle works with the full edge-coefficient system written out
from scratch: unknowns ``(u_e(0), u_e'(0))`` per edge, end data by the
explicit cos/sin transfer matrix, rows for continuity and derivative sums.
Eigenvalues are local minima of its smallest singular value, refined by
golden-section search; multiplicity is the nullity there.
"""
from __future__ import annotations

import math
import random

import numpy as np


def transfer(lam, l):
    """Transfer matrices for an array of ``lam >= 0``; shape ``(m, 2, 2)``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    k = np.sqrt(lam)
    c = np.cos(k * l)
    # sin(kl)/k without a 0/0 at lam = 0
    s = l * np.sinc(k * l / np.pi)
    return np.stack([np.stack([c, s], -1), np.stack([-lam * s, c], -1)], -2)


def system(edges, dirichlet, lam):
    """``edges`` is a list of ``(tail, head, length)``; returns ``(m, 2E, 2E)``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    m, n = len(lam), len(edges)
    one = np.broadcast_to(np.array([1.0, 0.0]), (m, 2))
    dee = np.broadcast_to(np.array([0.0, 1.0]), (m, 2))
    ends = {}
    for i, (t, h, l) in enumerate(edges):
        T = transfer(lam, l)
        # value / outgoing derivative rows in terms of (u(0), u'(0))
        ends.setdefault(t, []).append((i, one, dee))
        ends.setdefault(h, []).append((i, T[:, 0, :], -T[:, 1, :]))
    rows = []

    def row():
        return np.zeros((m, 2 * n))

    for v, items in ends.items():
        if v in dirichlet:
            for i, val, _ in items:
                r = row()
                r[:, 2 * i:2 * i + 2] = val
                rows.append(r)
            continue
        i0, v0, _ = items[0]
        for i, val, _ in items[1:]:
            r = row()
            r[:, 2 * i:2 * i + 2] += val
            r[:, 2 * i0:2 * i0 + 2] -= v0
            rows.append(r)
        r = row()
        for i, _, der in items:
            r[:, 2 * i:2 * i + 2] += der
        rows.append(r)
    return np.stack(rows, axis=1)


def _smin(edges, dirichlet, lam):
    sv = np.linalg.svd(system(edges, dirichlet, lam), compute_uv=False)
    return sv[:, -1] / np.maximum(sv[:, 0], 1.0)


def _nullity(edges, dirichlet, lam, thresh=1e-7):
    sv = np.linalg.svd(system(edges, dirichlet, lam), compute_uv=False)[0]
    return int(np.sum(sv / max(sv[0], 1.0) < thresh))


def _golden(f, a, b, iters=90):
    # plain golden-section search; the objective has a V-shaped minimum
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def oracle_spectrum(edges, dirichlet=(), lo=0.0, hi=100.0, n_scan=24000):
    """Eigenvalues in ``[lo, hi]`` (``lo >= 0``) with repeats for multiplicity.

    Candidates are local minima of the scaled smallest singular value and
    sign changes of the determinant on a fine grid in ``sqrt(lam)``.
    """
    dirichlet = set(dirichlet)
    ts = np.linspace(math.sqrt(lo), math.sqrt(hi), n_scan)
    A = system(edges, dirichlet, ts * ts)
    vals = _smin(edges, dirichlet, ts * ts)
    dets = np.sign(np.linalg.det(A))
    brackets = set()
    for i in range(1, len(ts) - 1):
        if vals[i] <= vals[i - 1] and vals[i] < vals[i + 1]:
            brackets.add(i)
        if dets[i] != dets[i + 1] and vals[i] >= vals[i + 1]:
            brackets.add(min(i + 1, len(ts) - 2))
    out = []
    if lo == 0.0:
        out += [0.0] * _nullity(edges, dirichlet, 0.0)
    found = []
    for i in sorted(brackets):
        t, fun = _golden(lambda t: float(_smin(edges, dirichlet, t * t)[0]), ts[i - 1], ts[i + 1])
        if fun < 1e-9 and t > 1e-6 and lo <= t * t <= hi:
            if found and abs(t - found[-1]) < 1e-9:
                continue
            found.append(t)
            out += [t * t] * max(1, _nullity(edges, dirichlet, t * t, 1e-6))
    return sorted(out)


def random_graph(rng: random.Random, max_edges=6, max_vertices=5):
    """Random connected multigraph (loops allowed) with lengths in [0.5, 2]."""
    nv = rng.randint(1, max_vertices)
    edges = []
    for v in range(1, nv):
        edges.append((rng.randrange(v), v, rng.uniform(0.5, 2.0)))
    while len(edges) < max(1, min(max_edges, rng.randint(nv - 1, max_edges))):
        a, b = rng.randrange(nv), rng.randrange(nv)
        edges.append((a, b, rng.uniform(0.5, 2.0)))
    if not edges:
        edges.append((0, 0, rng.uniform(0.5, 2.0)))
    return nv, edges


def match_sorted(a, b):
    """Largest pairwise difference of two sorted lists (inf if counts differ)."""
    if len(a) != len(b):
        return math.inf
    return max((abs(x - y) for x, y in zip(a, b)), default=0.0)
