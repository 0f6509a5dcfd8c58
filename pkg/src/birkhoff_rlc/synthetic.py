"""Random connected circuits, emitted as netlist text.

A random spanning tree is grown over the nodes and extra co-tree branches are
added.  Co-tree branches are inductors, which puts an inductor on every loop
and keeps the system regular.  ``defect=True`` turns one fundamental cycle
entirely into resistors and capacitors, which makes it structurally
singular.
"""

from __future__ import annotations

import numpy as np

KINDS = ("R", "L", "C")


def _model_line(rng: np.random.Generator, mid: str, kind: str, nonlinear: bool) -> str:
    lo, hi = 0.5, 2.0
    v = float(np.round(rng.uniform(lo, hi), 3))
    if not nonlinear:
        return f"model {mid} linear {v!r}"
    pick = int(rng.integers(3))
    if kind == "L":
        c2 = float(np.round(rng.uniform(0.0, 0.5), 3))
        return f"model {mid} poly {v!r} 0 {c2!r}" if pick else f"model {mid} linear {v!r}"
    if kind == "RV":
        c3 = float(np.round(rng.uniform(0.05, 0.5), 3))
        return f"model {mid} poly 0 {v!r} 0 {c3!r}"
    if pick == 0:
        return f"model {mid} linear {v!r}"
    if pick == 1:
        c3 = float(np.round(rng.uniform(0.05, 0.5), 3))
        return f"model {mid} poly 0 {v!r} 0 {c3!r}"
    b = float(np.round(rng.uniform(lo, hi), 3))
    return f"model {mid} tanh {v!r} {b!r}"


def random_netlist(seed: int, nodes: int = 4, extra: int = 2, defect: bool = False,
                   nonlinear: bool = False, voltage_controlled: bool = False,
                   resistors: bool = True) -> str:
    """Netlist text for a random circuit with ``extra`` independent loops.

    ``resistors=False`` replaces every resistor by a linear capacitor, which
    gives the resistor-free variant of the same graph.
    """
    rng = np.random.default_rng(seed)
    names = [f"n{j}" for j in range(nodes)]
    edges = []  # (tail, head, kind, in_tree)
    for j in range(1, nodes):
        p = int(rng.integers(j))
        a, b = (j, p) if rng.random() < 0.5 else (p, j)
        edges.append([a, b, KINDS[int(rng.integers(3))], True])
    for _ in range(extra):
        a, b = rng.choice(nodes, size=2, replace=False)
        edges.append([int(a), int(b), "L", False])
    if defect:
        # make the first co-tree branch and its tree path inductor-free
        cot = nodes - 1
        path = _tree_path([e[:2] for e in edges[:nodes - 1]], edges[cot][1], edges[cot][0], nodes)
        for l in [cot, *path]:
            edges[l][2] = "C" if rng.random() < 0.5 else "R"
    lines = ["node " + " ".join(names), f"ref {names[0]}"]
    for l, (a, b, kind, _) in enumerate(edges):
        # draw the same random numbers whatever the flags, so variants share values
        as_rv = rng.random() < 0.5
        if kind == "R" and voltage_controlled and as_rv:
            kind = "RV"
        mid = f"m{l}"
        line = _model_line(rng, mid, kind, nonlinear)
        if kind in ("R", "RV") and not resistors:
            kind, line = "C", f"model {mid} linear 1.0"
        lines.append(line)
        lines.append(f"branch b{l} {names[a]} {names[b]} {kind} {mid}")
    return "\n".join(lines) + "\n"


def _tree_path(tree: list[list[int]], start: int, goal: int, nodes: int) -> list[int]:
    adj: dict[int, list[tuple[int, int]]] = {j: [] for j in range(nodes)}
    for l, (a, b) in enumerate(tree):
        adj[a].append((b, l))
        adj[b].append((a, l))
    prev: dict[int, tuple[int, int] | None] = {start: None}
    stack = [start]
    while stack:
        u = stack.pop()
        for v, l in adj[u]:
            if v not in prev:
                prev[v] = (u, l)
                stack.append(v)
    out, node = [], goal
    while prev[node] is not None:
        u, l = prev[node]
        out.append(l)
        node = u
    return out
