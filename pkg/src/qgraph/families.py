"""Generators for the graphs used throughout the examples and tests.

Infinite graphs are only ever produced as finite pieces: balls of chains and
trees up to a radius, or fundamental domains of periodic structures.
"""
from __future__ import annotations

from .graph import (DIRICHLET, NEUMANN, Edge, MetricGraph, PeriodicStructure,
                    VertexConditionSet)


def interval(length=1.0, left=NEUMANN, right=NEUMANN) -> MetricGraph:
    conds = VertexConditionSet({0: left, 1: right})
    return MetricGraph((0, 1), (Edge("e", 0, 1, length),), conds, root=0).validate()


def pendant(length=1.0, tip=NEUMANN) -> MetricGraph:
    """Single edge rooted at vertex ``"root"``; the far end carries ``tip``."""
    conds = VertexConditionSet({"tip": tip})
    return MetricGraph(("root", "tip"), (Edge("p", "root", "tip", length),), conds, root="root").validate()


def loop(length=1.0) -> MetricGraph:
    return MetricGraph((0,), (Edge("loop", 0, 0, length),), root=0).validate()


def cycle(lengths) -> MetricGraph:
    n = len(lengths)
    edges = tuple(Edge(f"c{i}", i, (i + 1) % n, l) for i, l in enumerate(lengths))
    return MetricGraph(tuple(range(n)), edges, root=0).validate()


def star(lengths, leaf=NEUMANN, center=NEUMANN) -> MetricGraph:
    n = len(lengths)
    conds = {i + 1: leaf for i in range(n)}
    conds[0] = center
    edges = tuple(Edge(f"s{i}", 0, i + 1, l) for i, l in enumerate(lengths))
    return MetricGraph(tuple(range(n + 1)), edges, VertexConditionSet(conds), root=0).validate()


def chain(cells: int, length=1.0) -> MetricGraph:
    """Piece of the Z-chain with vertices ``-cells..cells``, rooted at 0."""
    vertices = tuple(range(-cells, cells + 1))
    edges = tuple(Edge(f"c{i}", i, i + 1, length) for i in range(-cells, cells))
    return MetricGraph(vertices, edges, root=0).validate()


def half_chain(cells: int, length=1.0) -> MetricGraph:
    vertices = tuple(range(cells + 1))
    edges = tuple(Edge(f"c{i}", i, i + 1, length) for i in range(cells))
    return MetricGraph(vertices, edges, root=0).validate()


def binary_tree(depth: int, length=1.0) -> MetricGraph:
    """Rooted binary tree: the root has two children, every other inner vertex
    has degree 3.  Vertices are the strings of 0/1 along the path from the root."""
    vertices = [""]
    edges = []
    frontier = [""]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            for b in "01":
                w = v + b
                vertices.append(w)
                edges.append(Edge(f"t{w}", v, w, length))
                nxt.append(w)
        frontier = nxt
    return MetricGraph(tuple(vertices), tuple(edges), root="").validate()


# -- periodic structures ----------------------------------------------------


def periodic_chain(length=1.0) -> PeriodicStructure:
    """Z-chain: one vertex per cell, one edge to the next cell."""
    return PeriodicStructure(("v",), (Edge("e", "v", "v", length, (1,)),), rank=1).validate()


def necklace(lengths=(1.0, 1.0)) -> PeriodicStructure:
    """Two parallel edges between consecutive vertices of the Z-chain."""
    edges = tuple(Edge(f"r{i}", "v", "v", l, (1,)) for i, l in enumerate(lengths))
    return PeriodicStructure(("v",), edges, rank=1).validate()


def square_lattice(length=1.0) -> PeriodicStructure:
    edges = (Edge("x", "v", "v", length, (1, 0)), Edge("y", "v", "v", length, (0, 1)))
    return PeriodicStructure(("v",), edges, rank=2).validate()


def truncated_chain(cells: int, length=1.0) -> MetricGraph:
    """Compact chain with ``cells`` edges and free (Neumann) ends."""
    return half_chain(cells, length)


__all__ = [
    "DIRICHLET", "NEUMANN", "interval", "pendant", "loop", "cycle", "star", "chain",
    "half_chain", "binary_tree", "periodic_chain", "necklace", "square_lattice",
    "truncated_chain",
]
