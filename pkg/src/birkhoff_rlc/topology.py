"""Incidence and loop matrices, and the exact Kirchhoff/Tellegen checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import exact
from .errors import BadLoopCount, NotAClosedWalk, RankDeficient
from .netlist import CircuitGraph


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def incidence_matrix(graph: CircuitGraph) -> np.ndarray:
    """b x n matrix: +1 where a branch enters a node, -1 where it leaves.

    The reference node's column is dropped; remaining columns follow node
    declaration order.
    """
    cols = graph.non_reference_nodes()
    pos = {node: j for j, node in enumerate(cols)}
    B = np.zeros((graph.b, graph.n), dtype=np.int64)
    for l, (tail, head) in enumerate(graph.branches):
        if tail == head:
            continue
        if tail in pos:
            B[l, pos[tail]] -= 1
        if head in pos:
            B[l, pos[head]] += 1
    return _frozen(B)


def spanning_tree(graph: CircuitGraph) -> list[int]:
    """Branch indices of the spanning tree grown lowest-index-first."""
    parent = list(range(len(graph.node_names)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for l, (a, b) in enumerate(graph.branches):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.append(l)
    return tree


def _tree_path(graph: CircuitGraph, tree: list[int], start: int, goal: int) -> list[tuple[int, int]]:
    """Signed branches walking from ``start`` to ``goal`` along the tree."""
    adj: dict[int, list[tuple[int, int, int]]] = {}
    for l in tree:
        a, b = graph.branches[l]
        adj.setdefault(a, []).append((b, l, +1))
        adj.setdefault(b, []).append((a, l, -1))
    prev: dict[int, tuple[int, int, int] | None] = {start: None}
    stack = [start]
    while stack:
        u = stack.pop()
        if u == goal:
            break
        for v, l, s in sorted(adj.get(u, []), key=lambda t: t[1]):
            if v not in prev:
                prev[v] = (u, l, s)
                stack.append(v)
    path = []
    node = goal
    while prev[node] is not None:
        u, l, s = prev[node]
        path.append((l, s))
        node = u
    return path[::-1]


def fundamental_loops(graph: CircuitGraph) -> list[list[tuple[int, int]]]:
    """One loop per co-tree branch, oriented along that branch."""
    tree = spanning_tree(graph)
    in_tree = set(tree)
    loops = []
    for l, (tail, head) in enumerate(graph.branches):
        if l in in_tree:
            continue
        loops.append([(l, +1)] + _tree_path(graph, tree, head, tail))
    return loops


def _check_closed_walk(graph: CircuitGraph, loop: Sequence[tuple[int, int]]) -> None:
    ids = [graph.branch_ids[l] for l, _ in loop]
    if not loop:
        raise NotAClosedWalk("empty loop")
    if len(set(l for l, _ in loop)) != len(loop):
        raise NotAClosedWalk(f"loop {ids} uses a branch twice")
    net = [0] * len(graph.node_names)
    for l, s in loop:
        tail, head = graph.branches[l]
        net[tail] -= s
        net[head] += s
    if any(net):
        bad = [graph.node_names[j] for j, v in enumerate(net) if v]
        raise NotAClosedWalk(f"loop {ids} does not close at nodes {bad}")
    # balanced and connected support => Eulerian, i.e. a closed walk
    touched = sorted({x for l, _ in loop for x in graph.branches[l]})
    remap = {x: i for i, x in enumerate(touched)}
    parent = list(range(len(touched)))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for l, _ in loop:
        a, b = graph.branches[l]
        parent[find(remap[a])] = find(remap[b])
    if len({find(i) for i in range(len(touched))}) != 1:
        raise NotAClosedWalk(f"loop {ids} is not a single closed walk")


def loop_matrix(graph: CircuitGraph, loops: Sequence[Sequence[tuple[int, int]]] | None = None) -> np.ndarray:
    """b x m loop matrix, transcribed from ``loops`` or from fundamental cycles.

    ``loops`` entries are ``(branch_index, sign)`` with sign +1 when the
    branch orientation agrees with the loop direction.
    """
    if loops is None:
        loops = fundamental_loops(graph)
    elif len(loops) != graph.m:
        raise BadLoopCount(f"expected {graph.m} loops (b - n), got {len(loops)}")
    A = np.zeros((graph.b, len(loops)), dtype=np.int64)
    for j, loop in enumerate(loops):
        _check_closed_walk(graph, loop)
        for l, s in loop:
            A[l, j] = s
    if exact.rank(exact.to_fractions(A.tolist())) < graph.m:
        raise RankDeficient("supplied loops are not linearly independent")
    return _frozen(A)


@dataclass(frozen=True, eq=False)
class TopologyMatrices:
    B: np.ndarray
    A: np.ndarray

    @property
    def b(self) -> int:
        return self.B.shape[0]

    @property
    def n(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class StructureReport:
    b: int
    n: int
    m: int
    rank_B: int
    rank_A: int
    tellegen: bool  # B^T A == 0
    kernel_equals_image: bool  # Ker(B^T) == Im(A)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_kirchhoff_structure(B, A) -> StructureReport:
    Bq = exact.to_fractions(np.asarray(B).tolist())
    Aq = exact.to_fractions(np.asarray(A).tolist())
    b, n = exact.shape(Bq)
    m = exact.shape(Aq)[1]
    rB, rA = exact.rank(Bq), exact.rank(Aq)
    BtA = exact.matmul(exact.transpose(Bq), Aq)
    tellegen = exact.is_zero(BtA)
    # Im(A) is inside Ker(B^T) when B^T A = 0; equality then needs matching dimension
    ker_dim = b - rB
    kernel_ok = tellegen and rA == ker_dim
    failures = []
    if rB != n:
        failures.append(f"rank(B) = {rB}, expected {n}")
    if rA != m:
        failures.append(f"RankDeficient: rank(A) = {rA}, expected {m}")
    if b != m + n:
        failures.append(f"b = {b} but m + n = {m + n}")
    if not tellegen:
        failures.append("B^T A is not zero")
    if not kernel_ok:
        failures.append("Ker(B^T) differs from Im(A)")
    return StructureReport(b, n, m, rB, rA, tellegen, kernel_ok, failures)


def build_topology(graph: CircuitGraph, loops=None) -> TopologyMatrices:
    return TopologyMatrices(incidence_matrix(graph), loop_matrix(graph, loops))
