import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgraph import (DtnFunction, SolverError, band_structure, bloch_secular, decorated_reduction,
                    eigenvalues, flat_band_test, quantum_scar, solve_spectrum, supercell,
                    vertex_reduction_operator)
from qgraph.families import necklace, pendant, periodic_chain, square_lattice
from qgraph.floquet import necklace_flat_energies, refine_scar, scar_overlap
from qgraph.spectrum import l2_norm2, vertex_residual

PI2 = math.pi ** 2


def chain_dispersion(k, hi):
    # cos(sqrt(lam)) = cos(k)
    out = []
    for n in range(-10, 11):
        for t in (k + 2 * math.pi * n, -k + 2 * math.pi * n):
            if t >= 0 and t * t <= hi:
                out.append(t * t)
    return sorted(set(round(x, 12) for x in out))


@pytest.mark.parametrize("k", [0.3, 1.0, 2.5, math.pi - 0.01])
def test_chain_dispersion(k):
    got = eigenvalues(solve_spectrum(periodic_chain(), None, 0.0, 100.0, k=(k,)))
    assert got == pytest.approx(chain_dispersion(k, 100.0), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 60.0), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_bloch_matrix_hermitian_and_k_symmetric(lam, k1, k2):
    pg = square_lattice(1.0)
    if any(abs(lam - (n * math.pi) ** 2) < 1e-3 for n in range(1, 4)):
        return
    m = bloch_secular(pg, None, lam, (k1, k2)).matrix
    mm = bloch_secular(pg, None, lam, (-k1, -k2)).matrix
    assert np.allclose(m, m.conj().T, atol=1e-12)
    assert np.allclose(np.linalg.eigvalsh(m), np.linalg.eigvalsh(mm), atol=1e-10)


def test_bloch_rejects_wrong_rank():
    with pytest.raises(SolverError):
        bloch_secular(square_lattice(), None, 1.0, (0.3,))


def test_chain_bands_have_no_gaps():
    bs = band_structure(periodic_chain(), None, lo=0.0, hi=40.0, n_k=32)
    assert bs.gaps == []
    assert bs.flat == []
    assert bs.band_intervals[0][0] == pytest.approx(0.0, abs=1e-9)


def test_necklace_bands():
    bs = band_structure(necklace(), None, lo=0.0, hi=45.0, n_k=32)
    assert bs.flat == pytest.approx([PI2, 4 * PI2])
    assert necklace_flat_energies(45.0) == pytest.approx([PI2, 4 * PI2])


def test_decorated_chain_opens_gap_at_pole():
    f = DtnFunction(pendant(1.0), "root")
    cond = decorated_reduction(periodic_chain(), None, f)
    bs = band_structure(periodic_chain(), cond, lo=0.0, hi=10.0, n_k=32)
    lam0 = PI2 / 4
    assert any(a < lam0 < b for a, b in bs.gaps)


def test_flat_band_negatives():
    assert not flat_band_test(periodic_chain(), None, 1.0)
    assert not flat_band_test(periodic_chain(), None, PI2)
    assert not flat_band_test(necklace((1.0, 1.3)), None, PI2)
    assert not flat_band_test(necklace(), None, 5.0)


def test_flat_band_test_refuses_coupling_singularity():
    f = DtnFunction(pendant(1.0), "root")
    cond = decorated_reduction(periodic_chain(), None, f)
    with pytest.raises(SolverError):
        flat_band_test(periodic_chain(), cond, PI2 / 4)


def test_necklace_scar_routes_agree():
    pg = necklace()
    a = quantum_scar(pg, None, PI2, route="resonant")
    b = quantum_scar(pg, None, PI2, route="subdivide")
    assert a.residual < 1e-8 and b.residual < 1e-8
    assert a.support_cells == [(0,)]
    assert l2_norm2(a.window, a.waves) == pytest.approx(1.0)
    # vertex values vanish: the state is the loop r0 - r1
    assert all(abs(v) < 1e-12 for v in a.vertex_values.values())
    assert scar_overlap(refine_scar(a), b.waves, b.window) == pytest.approx(1.0, abs=1e-8)


def test_scar_at_second_flat_energy():
    s = quantum_scar(necklace(), None, 4 * PI2)
    assert vertex_residual(s.window, None, s.lam, s.waves) < 1e-8


def test_scar_absent_off_flat_band():
    with pytest.raises(SolverError):
        quantum_scar(necklace((1.0, 1.3)), None, PI2, route="resonant")
    with pytest.raises(SolverError):
        quantum_scar(periodic_chain(), None, 5.0, degree_bound=3)


def test_vertex_reduction_operator_is_self_adjoint():
    op = vertex_reduction_operator(necklace((1.0, 1.3)), None, 5.0)
    assert op.is_self_adjoint()


@pytest.mark.parametrize("pg", [periodic_chain(), necklace((1.0, 1.3))], ids=["chain", "necklace"])
def test_supercell_folding(pg):
    sc = supercell(pg, 3)
    for K in (0.4, 2.0):
        big = eigenvalues(solve_spectrum(sc, None, 0.0, 40.0, k=(K,), eigenfunctions=False))
        small = []
        for j in range(3):
            small += eigenvalues(solve_spectrum(pg, None, 0.0, 40.0, k=((K + 2 * math.pi * j) / 3,),
                                                eigenfunctions=False))
        assert big == pytest.approx(sorted(small), abs=1e-8)


def test_supercell_folding_second_axis():
    pg = square_lattice(1.0)
    sc = supercell(pg, 2, axis=1)
    big = eigenvalues(solve_spectrum(sc, None, 0.0, 30.0, k=(0.5, 1.2), eigenfunctions=False))
    small = []
    for q in (0.6, 0.6 + math.pi):
        small += eigenvalues(solve_spectrum(pg, None, 0.0, 30.0, k=(0.5, q), eigenfunctions=False))
    assert big == pytest.approx(sorted(small), abs=1e-8)
