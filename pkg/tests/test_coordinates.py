from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from birkhoff_rlc import exact
from birkhoff_rlc.coordinates import auto_selection, build_chart, kernels_agree, loop_transform
from birkhoff_rlc.errors import BadSelection, KernelMismatch
from birkhoff_rlc.topology import incidence_matrix, loop_matrix

from oracles import EX1_A, EX1_B, EX1_N, EX1_SELECTION, EX2_A, EX2_B, EX2_N, EX2_SELECTION
from test_topology import graphs


def as_int(N):
    assert all(x.denominator == 1 for row in N for x in row)
    return [[int(x) for x in row] for row in N]


@pytest.mark.parametrize("B,A,sel,N", [(EX1_B, EX1_A, EX1_SELECTION, EX1_N),
                                       (EX2_B, EX2_A, EX2_SELECTION, EX2_N)])
def test_fixture_charts_reproduce_reference_N(B, A, sel, N):
    chart = build_chart(np.array(B), np.array(A), selection=sel)
    assert as_int(chart.N) == N
    T = chart.loop_transform
    assert exact.matmul(T, exact.transpose(exact.to_fractions(A))) == exact.transpose(exact.to_fractions(N))
    assert exact.det(T) != 0


def test_reference_N_against_sympy_elimination():
    B = sympy.Matrix(EX1_B)
    x = sympy.symbols("x1:8")
    sol = sympy.solve(list(B.T * sympy.Matrix(x)), [x[l] for l in range(7) if l not in EX1_SELECTION])
    q = [x[s] for s in EX1_SELECTION]
    for l in range(7):
        expr = x[l] if l in EX1_SELECTION else sol[x[l]]
        assert [sympy.diff(expr, qk) for qk in q] == EX1_N[l]


def test_two_branch_loop_chart():
    B = np.array([[-1], [1]])
    assert as_int(build_chart(B, selection=[0]).N) == [[1], [1]]
    B = np.array([[-1], [-1]])  # antiparallel orientation flips the sign
    assert as_int(build_chart(B, selection=[0]).N) == [[1], [-1]]


def test_bad_selection():
    with pytest.raises(BadSelection):
        build_chart(np.array(EX1_B), selection=(0, 1, 2))
    with pytest.raises(BadSelection):
        # r1, L1, L3 close a loop, so r1, L1, L3, C1 leave a singular complement
        build_chart(np.array(EX1_B), selection=(0, 1, 3, 4))


def test_loop_transform_identity_and_permutation():
    N = exact.to_fractions(EX1_A)
    assert loop_transform(np.array(EX1_A), N) == exact.identity(4)
    perm = [2, 0, 3, 1]
    Ap = np.array(EX1_A)[:, perm]
    T = loop_transform(np.array(EX1_A), exact.to_fractions(EX1_N))
    Tp = loop_transform(Ap, exact.to_fractions(EX1_N))
    assert Tp == [[row[p] for p in perm] for row in T]


def test_kernel_mismatch_detected():
    A = np.array(EX1_A)
    wrong = exact.to_fractions(EX2_N[:7])
    assert not kernels_agree(A, wrong)
    with pytest.raises(KernelMismatch):
        loop_transform(A, wrong)


def test_initial_charges_touch_only_offsets_and_c():
    B, A = np.array(EX1_B), np.array(EX1_A)
    x0 = np.array([0.3, -0.1, 0.2, 0.5, -0.7, 0.4, 1.1])
    c0 = build_chart(B, A, None, EX1_SELECTION)
    c1 = build_chart(B, A, x0, EX1_SELECTION)
    assert c0.N == c1.N and c0.loop_transform == c1.loop_transform
    assert np.allclose(c1.charges(c1.initial_q(x0)), x0, atol=1e-15)
    assert np.allclose(c1.c, B.T @ x0)
    assert not np.allclose(c1.offsets, 0)


@given(graphs(), st.data())
@settings(max_examples=60, deadline=None)
def test_chart_invariants_on_random_graphs(graph, data):
    B = incidence_matrix(graph)
    A = loop_matrix(graph)
    chart = build_chart(B, A)
    N = [list(r) for r in chart.N]
    Bq = exact.to_fractions(B.tolist())
    assert exact.is_zero(exact.matmul(exact.transpose(Bq), N))
    assert exact.rank(N) == graph.m
    for k, l in enumerate(chart.selection):
        assert N[l] == [Fraction(int(j == k)) for j in range(graph.m)]
    T = chart.loop_transform
    assert exact.matmul(T, exact.transpose(exact.to_fractions(A.tolist()))) == exact.transpose(N)
    assert kernels_agree(A, N)
    # rational round trip: B^T x(q) = c exactly
    x0 = [Fraction(data.draw(st.integers(-5, 5)), 7) for _ in range(graph.b)]
    q = [Fraction(data.draw(st.integers(-9, 9)), 4) for _ in range(graph.m)]
    sel = chart.selection
    x = [sum((N[l][k] * q[k] for k in range(graph.m)), Fraction(0))
         + x0[l] - sum((N[l][k] * x0[s] for k, s in enumerate(sel)), Fraction(0)) for l in range(graph.b)]
    c = exact.matmul(exact.transpose(Bq), [[v] for v in x0])
    assert exact.matmul(exact.transpose(Bq), [[v] for v in x]) == c


def test_auto_selection_is_a_valid_complement():
    sel = auto_selection(np.array(EX2_B))
    assert len(sel) == 4
    build_chart(np.array(EX2_B), selection=sel)
