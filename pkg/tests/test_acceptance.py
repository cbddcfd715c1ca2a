"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines.
"""
import math
import random
import time

import numpy as np
import pytest

from qgraph import (DtnFunction, Edge, MetricGraph, band_structure, compact_kernel_solution,
                    decorate, decorated_reduction, discrete_flat_band_test,
                    dtn_pole_candidates, dtn_residue, eigenvalues, flat_band_test, gap_certificate,
                    inverse_floquet, quantum_scar, solve_spectrum, subdivide_edge, supercell)
from qgraph.discrete import diamond_chain, window_residual
from qgraph.edge import dirichlet_spectrum
from qgraph.families import (binary_tree, chain, cycle, interval, loop, necklace, pendant,
                             periodic_chain, star, truncated_chain)
from qgraph.schnol import (build_cutoff, cutoff_identity_residual, generate_generalized_eigenfunction,
                           schnol_distance_bound)
from qgraph.spectrum import l2_norm2

from oracles import match_sorted, oracle_spectrum, random_graph

PI2 = math.pi ** 2


def report(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def _graph(nv, edges):
    es = tuple(Edge(f"e{j}", a, b, l) for j, (a, b, l) in enumerate(edges))
    return MetricGraph(tuple(range(nv)), es).validate()


def test_ac1_closed_form_spectra():
    t0 = time.perf_counter()
    got = eigenvalues(solve_spectrum(interval(1.0), None, -1.0, 9 * PI2 + 1.0))
    want = [0.0, PI2, 4 * PI2, 9 * PI2]
    d_int = match_sorted(got, want)

    res = solve_spectrum(loop(1.0), None, -1.0, 16 * PI2 + 1.0)
    want_loop = [0.0] + [4 * PI2] * 2 + [16 * PI2] * 2
    d_loop = match_sorted(eigenvalues(res), want_loop)
    sin_branch = all(r.resonant >= 1 for r in res if r.lam > 1.0)
    dt = time.perf_counter() - t0
    ok = d_int <= 1e-8 and d_loop <= 1e-8 and sin_branch and dt < 1.0
    report("AC1", ok, f"interval err {d_int:.1e}, loop err {d_loop:.1e}, "
                      f"sin branch resonant={sin_branch}, {dt:.2f}s")


def test_ac2_oracle_equivalence():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    worst, bad = 0.0, []
    for i in range(25):
        nv, edges = random_graph(rng, max_edges=6)
        ours = eigenvalues(solve_spectrum(_graph(nv, edges), None, 0.0, 100.0, eigenfunctions=False))
        ref = oracle_spectrum(edges, lo=0.0, hi=100.0)
        d = match_sorted(ours, ref)
        if d > 1e-7:
            bad.append((i, len(ours), len(ref), d))
        else:
            worst = max(worst, d)
    dt = time.perf_counter() - t0
    report("AC2", not bad and dt < 60, f"25 graphs, worst {worst:.1e}, mismatches {bad}, {dt:.1f}s")


def test_ac3_subdivision_invariance():
    rng = random.Random(77)
    worst, bad = 0.0, 0
    for _ in range(10):
        nv, edges = random_graph(rng)
        g = _graph(nv, edges)
        before = eigenvalues(solve_spectrum(g, None, 0.0, 100.0, eigenfunctions=False))
        h = g
        for j in range(rng.randint(1, 3)):
            e = rng.choice(h.edges)
            h = subdivide_edge(h, e.id, rng.uniform(0.2, 0.8) * e.length, new_vertex=f"s{j}")
        after = eigenvalues(solve_spectrum(h, None, 0.0, 100.0, eigenfunctions=False))
        d = match_sorted(before, after)
        if d > 1e-8:
            bad += 1
        else:
            worst = max(worst, d)
    report("AC3", bad == 0, f"10 graphs, worst {worst:.1e}, failures {bad}")


def _dtn_grid(n=200, hi=60.0, margin=0.05):
    poles = [((j + 0.5) * math.pi) ** 2 for j in range(10)]
    zeros = [(j * math.pi) ** 2 for j in range(1, 10)]
    xs = np.linspace(0.05, hi, 4 * n)
    keep = [x for x in xs if all(abs(x - p) > margin for p in poles + zeros)]
    return keep[:: max(1, len(keep) // n)][:n]


def test_ac4_dtn_closed_form_and_residue():
    dtn = DtnFunction(pendant(1.0), "root")
    grid = _dtn_grid()
    err = max(abs(dtn(x) - math.sqrt(x) * math.tan(math.sqrt(x))) / max(1.0, abs(math.sqrt(x) * math.tan(math.sqrt(x))))
              for x in grid)
    lam0 = (math.pi / 2) ** 2
    residue, _ = dtn_residue(dtn, lam0)
    pole = [p for p in dtn_pole_candidates(dtn, 0.0, 5.0, fit_residue=False) if abs(p.lam0 - lam0) < 1e-9][0]
    d_closed = abs(residue + PI2 / 2)
    d_psi = abs(residue + pole.psi ** 2)
    ok = len(grid) == 200 and err <= 1e-8 and d_closed <= 1e-3 and d_psi <= 1e-3
    report("AC4", ok, f"{len(grid)} points, max rel err {err:.1e}; residue {residue:.6f} "
                      f"(vs -pi^2/2: {d_closed:.1e}, vs -Psi^2: {d_psi:.1e})")


def _host(eid):
    return int(eid[1:]) if eid.startswith("c") else int(str(eid).split("/")[0])


def test_ac5_gap_opening():
    t0 = time.perf_counter()
    bs = band_structure(periodic_chain(), None, lo=0.0, hi=40.0)
    no_gap = not bs.gaps

    lam0 = (math.pi / 2) ** 2
    dtn = DtnFunction(pendant(1.0), "root")
    lo, hi = gap_certificate(periodic_chain(), None, dtn, lam0, 1.0)
    punctured = lo < lam0 < hi

    cells = 20
    g = decorate(truncated_chain(cells), pendant(1.0), "root")
    interior = []
    for r in solve_spectrum(g, None, lo, hi):
        for w in r.eigenfunctions:
            near = math.fsum(l2_norm2(g, {e: w[e]}) for e in w if _host(e) < 3 or _host(e) >= cells - 3)
            if near / l2_norm2(g, w) < 0.9:
                interior.append(r.lam)
    dt = time.perf_counter() - t0
    ok = no_gap and punctured and not interior and dt < 120
    report("AC5", ok, f"chain gaps {bs.gaps}; certified ({lo:.6f}, {hi:.6f}) around {lam0:.6f}; "
                      f"interior eigenvalues of 20-cell piece {interior}; {dt:.1f}s")


COMPACT_DECORATIONS = [
    (interval(1.3), pendant(0.7), "root"),
    (star([1.0, 1.2, 0.8]), pendant(1.0), "root"),
    (cycle([1.0, 1.1, 0.9]), pendant(0.6), "root"),
    (loop(1.0), pendant(1.0), "root"),
    (cycle([1.0, 1.4]), star([0.5, 0.7]), 0),
]


def test_ac6_two_path_decoration():
    hi = 60.0
    worst, bad = 0.0, []
    for i, (g0, g1, v1) in enumerate(COMPACT_DECORATIONS):
        dtn = DtnFunction(g1, v1)
        reduced = eigenvalues(solve_spectrum(g0, decorated_reduction(g0, None, dtn), 0.0, hi, eigenfunctions=False))
        explicit = eigenvalues(solve_spectrum(decorate(g0, g1, v1), None, 0.0, hi, eigenfunctions=False))
        # the reduction does not see spectrum on these points
        excluded = dirichlet_spectrum(g0, hi + 1).distinct() + dtn.singularities(0.0, hi + 1)

        def off(xs):
            return [x for x in xs if all(abs(x - p) > 1e-5 for p in excluded)]

        d = match_sorted(off(reduced), off(explicit))
        if d >= 1e-7:
            bad.append(i)
        else:
            worst = max(worst, d)
    report("AC6", not bad, f"5 examples, worst {worst:.1e}, failures {bad}")


def test_ac7_flat_bands_and_scars():
    nk = necklace((1.0, 1.0))
    flat = flat_band_test(nk, None, PI2)
    scar = quantum_scar(nk, None, PI2)
    one_rung = len({e[1] for e in scar.support_edges}) == 1 and scar.residual < 1e-8
    incommensurate = flat_band_test(necklace((1.0, 1.3)), None, PI2)

    op = diamond_chain()
    d_flat = discrete_flat_band_test(op, 0)
    q = compact_kernel_solution(op, 0, degree=0, exact=True)
    vec = q.as_vector() if q is not None else None
    u = inverse_floquet(q) if q is not None else {}
    win = window_residual(op, u, 0, [(c,) for c in range(-3, 4)]) if q is not None else None
    ok = (flat and one_rung and not incommensurate and d_flat and q is not None
          and [complex(x) for x in vec] == [0, 1, -1] and win == 0)
    report("AC7", ok, f"necklace flat={flat}, scar cells {scar.support_cells} residual {scar.residual:.1e}; "
                      f"incommensurate flat={incommensurate}; diamond flat={d_flat}, Q={vec}, "
                      f"7-cell residual {win}")


def test_ac8_schnol_bounds():
    radii = [10, 20, 40, 80, 160]
    g = chain(162)
    phi = generate_generalized_eigenfunction(g, None, 1.0)
    cos_b = [schnol_distance_bound(phi, build_cutoff(g, r)) for r in radii]
    cos_ok = all(b < a for a, b in zip(cos_b, cos_b[1:])) and cos_b[-1] < 0.05

    phi_h = generate_generalized_eigenfunction(g, None, -1.0)
    cosh_b = [schnol_distance_bound(phi_h, build_cutoff(g, r)) for r in radii]
    cosh_ok = min(cosh_b) >= 0.2

    tree = binary_tree(13)
    phi_t = generate_generalized_eigenfunction(tree, None, 0.0)
    tree_b = [schnol_distance_bound(phi_t, build_cutoff(tree, r)) for r in range(13)]
    tree_ok = min(tree_b) > 0.2

    ident = cutoff_identity_residual(phi, build_cutoff(g, 40), n_points=1000)
    ident_ok = ident <= 1e-8
    ok = cos_ok and cosh_ok and tree_ok and ident_ok
    fmt = ", ".join
    report("AC8", ok, f"cos bounds [{fmt(f'{b:.3f}' for b in cos_b)}] decreasing<0.05: {cos_ok}; "
                      f"cosh min {min(cosh_b):.3f}: {cosh_ok}; tree min {min(tree_b):.3f}: {tree_ok}; "
                      f"identity residual {ident:.1e}: {ident_ok}")


def test_ac9_floquet_folding():
    worst = 0.0
    counts_ok = True
    for pg in (periodic_chain(), necklace((1.0, 1.0))):
        sc = supercell(pg, 2)
        for K in np.linspace(0.0, 2 * math.pi, 17)[:-1]:
            big = eigenvalues(solve_spectrum(sc, None, 0.0, 40.0, k=(K,), eigenfunctions=False))
            small = []
            for k in (K / 2, K / 2 + math.pi):
                small += eigenvalues(solve_spectrum(pg, None, 0.0, 40.0, k=(k,), eigenfunctions=False))
            d = match_sorted(big, sorted(small))
            if not math.isfinite(d):
                counts_ok = False
            else:
                worst = max(worst, d)
    report("AC9", counts_ok and worst <= 1e-8, f"chain and necklace, 16 quasimomenta, worst {worst:.1e}")


if __name__ == "__main__":
    pytest.main([__file__, "-s", "-q"])
