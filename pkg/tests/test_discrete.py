import math
import numbers

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgraph import (PeriodicDifferenceOperator, compact_kernel_solution, discrete_band_structure,
                    discrete_flat_band_test, find_compact_kernel, floquet_symbol, inverse_floquet)
from qgraph.discrete import (diamond_chain, floquet_transform, operator_from_adjacency, window_residual,
                             z_adjacency)


def lieb():
    # corner a, edge centres b (x-bond) and c (y-bond)
    return operator_from_adjacency(("a", "b", "c"), [
        ("b", "a", (0, 0)), ("b", "a", (1, 0)), ("c", "a", (0, 0)), ("c", "a", (0, 1))], rank=2)


def square():
    return operator_from_adjacency(("v",), [("v", "v", (1, 0)), ("v", "v", (0, 1))], rank=2)


@pytest.mark.parametrize("k", [0.0, 0.7, 2.0, math.pi])
def test_diamond_symbol_eigenvalues(k):
    ev = np.linalg.eigvalsh(floquet_symbol(diamond_chain()).at_k((k,)))
    r = 2 * math.sqrt(2) * abs(math.cos(k / 2))
    assert ev == pytest.approx([-r, 0.0, r], abs=1e-12)


def test_diamond_band_structure():
    bs = discrete_band_structure(diamond_chain(), n_k=32)
    assert bs.flat == pytest.approx([0.0], abs=1e-12)
    lo, hi = bs.band_intervals[0][0], bs.band_intervals[-1][1]
    assert lo == pytest.approx(-2 * math.sqrt(2)) and hi == pytest.approx(2 * math.sqrt(2))


def test_symbol_convention_matches_shift_action():
    # (A u)(v, h) = sum amp u(w, h + g) becomes A(z) acting on sum_g u(g) z^g
    op = z_adjacency()
    u = {("v", (0,)): 1.0, ("v", (1,)): 2.0}
    au = op.apply(u, [("v", (h,)) for h in range(-1, 3)])
    coeffs = floquet_transform({k: v for k, v in au.items() if v}, op.vertices)[0]
    z = np.exp(0.37j)
    lhs = sum(c * z ** e[0] for e, c in coeffs.items())
    uz = 1.0 + 2.0 * z
    assert lhs == pytest.approx(floquet_symbol(op)(z)[0, 0] * uz)


@pytest.mark.parametrize("op, lam, flat", [
    (diamond_chain(), 0.0, True),
    (diamond_chain(), 1.0, False),
    (z_adjacency(), 0.0, False),
    (lieb(), 0.0, True),
    (lieb(), 0.5, False),
    (square(), 0.0, False),
])
def test_flat_band_detection(op, lam, flat):
    assert discrete_flat_band_test(op, lam) is flat


def test_diamond_compact_kernel_exact():
    op = diamond_chain()
    q = compact_kernel_solution(op, 0, degree=0, exact=True)
    assert q.as_vector() == [0, 1, -1]
    assert q.residual(op) == 0
    u = inverse_floquet(q)
    assert window_residual(op, u, 0, [(h,) for h in range(-3, 4)]) == 0
    assert all(isinstance(v, numbers.Rational) for v in u.values())


def test_compact_kernel_float_mode_normalised():
    q = compact_kernel_solution(diamond_chain(), 0.0, degree=0, exact=False)
    v = q.as_vector()
    assert max(abs(x) for x in v) == pytest.approx(1.0)
    assert q.residual(diamond_chain()) < 1e-12


def test_no_compact_kernel_for_chain():
    assert find_compact_kernel(z_adjacency(), 0, d_max=6, exact=True) is None
    assert compact_kernel_solution(diamond_chain(), 1, degree=2, exact=True) is None


def test_lieb_plaquette_state():
    op = lieb()
    q = find_compact_kernel(op, 0, d_max=4, exact=True)
    assert q is not None and q.degree == 1
    u = inverse_floquet(q)
    cells = [(i, j) for i in range(-2, 4) for j in range(-2, 4)]
    assert window_residual(op, u, 0, cells) == 0
    assert any(u.values())


def test_translation_of_kernel_vector():
    op = diamond_chain()
    q = compact_kernel_solution(op, 0, degree=0, exact=True).shifted((2,))
    u = inverse_floquet(q)
    assert set(g for _, g in u) == {(2,)}
    assert window_residual(op, u, 0, [(h,) for h in range(-1, 5)]) == 0


def test_bad_operator_rejected():
    with pytest.raises(ValueError):
        PeriodicDifferenceOperator(("a",), (("a", "b", (0,), 1),))
    with pytest.raises(ValueError):
        PeriodicDifferenceOperator(("a",), (("a", "a", (0, 1), 1),), rank=1)


hop = st.tuples(st.sampled_from("abc"), st.sampled_from("abc"), st.integers(-2, 2))


@settings(max_examples=40, deadline=None)
@given(st.lists(hop, min_size=1, max_size=6), st.floats(-math.pi, math.pi))
def test_symbol_hermitian_for_self_adjoint_operators(hops, k):
    edges = [(v, w, (g,)) for v, w, g in hops]
    op = operator_from_adjacency(("a", "b", "c"), edges)
    assert op.is_self_adjoint()
    assert floquet_symbol(op).is_hermitian_on([(k,)])


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.tuples(st.sampled_from("ab"), st.tuples(st.integers(-4, 4))),
                       st.integers(-5, 5).filter(lambda x: x != 0), max_size=8))
def test_transform_round_trip(u):
    coeffs = floquet_transform(u, ("a", "b"))
    back = {}
    for w, poly in zip(("a", "b"), coeffs):
        for e, c in poly.items():
            back[(w, e)] = c
    assert back == u
