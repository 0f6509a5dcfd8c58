import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birkhoff_rlc import exact
from birkhoff_rlc.devices import BranchKind
from birkhoff_rlc.errors import BadLoopCount, NotAClosedWalk, RankDeficient
from birkhoff_rlc.netlist import CircuitGraph, elaborate
from birkhoff_rlc.topology import (fundamental_loops, incidence_matrix, loop_matrix,
                                   spanning_tree, verify_kirchhoff_structure)

from oracles import EX1_A, EX1_B, EX2_A, EX2_B, fixture_doc


def fixture_graph(name):
    doc = fixture_doc(name)
    graph, _ = elaborate(doc)
    loops = [[(graph.branch_index(b), s) for b, s in lp] for lp in doc.loops]
    return graph, loops


@st.composite
def graphs(draw, max_nodes=6, max_extra=4):
    n = draw(st.integers(2, max_nodes))
    edges = []
    for j in range(1, n):
        p = draw(st.integers(0, j - 1))
        edges.append((j, p) if draw(st.booleans()) else (p, j))
    for _ in range(draw(st.integers(1, max_extra))):
        a = draw(st.integers(0, n - 1))
        b = draw(st.integers(0, n - 1))
        edges.append((a, b))
    order = draw(st.permutations(range(len(edges))))
    edges = [edges[i] for i in order]
    return CircuitGraph(tuple(f"v{j}" for j in range(n)), draw(st.integers(0, n - 1)), tuple(edges),
                        tuple(f"b{l}" for l in range(len(edges))), tuple(BranchKind.C for _ in edges))


@pytest.mark.parametrize("name,B,A", [("example1", EX1_B, EX1_A), ("example2", EX2_B, EX2_A)])
def test_fixture_matrices(name, B, A):
    graph, loops = fixture_graph(name)
    assert incidence_matrix(graph).tolist() == B
    assert loop_matrix(graph, loops).tolist() == A
    report = verify_kirchhoff_structure(B, A)
    assert report.ok and report.tellegen and report.kernel_equals_image
    assert (report.rank_B, report.rank_A) == (graph.n, graph.m)


def test_two_branch_loop():
    g = CircuitGraph(("a", "b"), 1, ((0, 1), (1, 0)), ("x", "y"), (BranchKind.L, BranchKind.C))
    assert incidence_matrix(g).tolist() == [[-1], [1]]
    assert loop_matrix(g, [[(0, 1), (1, 1)]]).tolist() == [[1], [1]]
    assert loop_matrix(g).tolist() == [[1], [1]]


def test_fundamental_loops_span_the_supplied_cycle_space():
    graph, loops = fixture_graph("example1")
    auto = loop_matrix(graph)
    B = exact.to_fractions(incidence_matrix(graph).tolist())
    assert exact.is_zero(exact.matmul(exact.transpose(B), exact.to_fractions(auto.tolist())))
    assert exact.rank(exact.to_fractions(auto.tolist())) == 4
    assert exact.same_column_space(exact.to_fractions(auto.tolist()), exact.to_fractions(EX1_A))


def test_duplicated_column_flags_rank_deficiency():
    A = [row[:3] + [row[0]] for row in EX1_A]
    report = verify_kirchhoff_structure(EX1_B, A)
    assert not report.ok
    assert any(f.startswith("RankDeficient") for f in report.failures)
    graph, loops = fixture_graph("example1")
    with pytest.raises(RankDeficient):
        loop_matrix(graph, loops[:3] + [loops[0]])


def test_supplied_loop_errors():
    graph, loops = fixture_graph("example1")
    with pytest.raises(BadLoopCount):
        loop_matrix(graph, loops[:3])
    broken = [loops[0][:2]] + loops[1:]
    with pytest.raises(NotAClosedWalk):
        loop_matrix(graph, broken)
    twice = [loops[0] + loops[0]] + loops[1:]
    with pytest.raises(NotAClosedWalk):
        loop_matrix(graph, twice)


def test_disjoint_cycles_are_not_one_walk():
    # two vertex-disjoint cycles joined by a bridge; their sum balances every node
    g = CircuitGraph(("a", "b", "c", "d"), 0, ((0, 1), (1, 0), (2, 3), (3, 2), (1, 2)),
                     ("x", "y", "z", "w", "t"), (BranchKind.C,) * 5)
    with pytest.raises(NotAClosedWalk):
        loop_matrix(g, [[(0, 1), (1, 1), (2, 1), (3, 1)], [(2, 1), (3, 1)]])


@given(graphs())
@settings(max_examples=80, deadline=None)
def test_structure_holds_for_random_graphs(graph):
    B = incidence_matrix(graph)
    A = loop_matrix(graph)
    report = verify_kirchhoff_structure(B, A)
    assert report.ok, report.failures
    assert graph.b == graph.m + graph.n


@given(graphs())
@settings(max_examples=60, deadline=None)
def test_spanning_tree_is_deterministic_and_spanning(graph):
    t1, t2 = spanning_tree(graph), spanning_tree(graph)
    assert t1 == t2 and len(t1) == graph.n
    assert len(fundamental_loops(graph)) == graph.m


def test_incidence_rows_sum_to_zero_with_reference_column():
    graph, _ = fixture_graph("example2")
    B = incidence_matrix(graph)
    full = np.zeros((graph.b, graph.n + 1), dtype=int)
    for l, (t, h) in enumerate(graph.branches):
        full[l, t] -= 1
        full[l, h] += 1
    cols = graph.non_reference_nodes()
    assert (full[:, cols] == B).all()
    assert (full.sum(axis=1) == 0).all()
