"""Line-based netlist format.

Grammar (one record per line, ``#`` starts a comment)::

    node <name>...
    ref <name>
    model <id> linear <value>
    model <id> poly <c0> <c1> ... <cK>
    model <id> tanh <a> <b>
    branch <id> <from> <to> <R|RV|L|C> <model-id>
    loop <branch-id>:<+|-> ...
    coords <branch-id>...

A branch is oriented from ``<from>`` to ``<to>``: it leaves ``from`` and
enters ``to``.  For capacitors the model is the elastance ``v = f(q)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

from .devices import (BranchKind, ConstitutiveModel, Device, DeviceSet, Linear, make_model,
                      is_strictly_increasing, passivity_check)
from .errors import (DisconnectedGraph, InputError, InvalidModel, NoLoop, NotMonotone,
                     NotPassive)


@dataclass(frozen=True)
class Diagnostic:
    code: str  # SyntaxError | DuplicateId | UnknownNode | UnknownModel | UnknownBranch
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.code}: {self.message}"


class NetlistError(InputError):
    """Raised by :func:`parse_netlist`; carries every diagnostic found."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))

    @property
    def code(self) -> str:
        return self.diagnostics[0].code


@dataclass(frozen=True)
class ModelSpec:
    id: str
    family: str
    params: tuple[float, ...]

    def build(self) -> ConstitutiveModel:
        return make_model(self.family, self.params)


@dataclass(frozen=True)
class BranchSpec:
    id: str
    from_node: str
    to_node: str
    kind: BranchKind
    model: str


@dataclass(frozen=True)
class NetlistDoc:
    nodes: tuple[str, ...]
    reference: str
    branches: tuple[BranchSpec, ...]
    models: dict[str, ModelSpec]
    loops: tuple[tuple[tuple[str, int], ...], ...] | None = None
    coords: tuple[str, ...] | None = None
    line_info: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def branch(self, branch_id: str) -> BranchSpec:
        for b in self.branches:
            if b.id == branch_id:
                return b
        raise KeyError(branch_id)

    def with_models(self, replacements: dict[str, ConstitutiveModel | ModelSpec]) -> "NetlistDoc":
        """Copy with some model ids re-bound (handy for building variants)."""
        models = dict(self.models)
        for mid, model in replacements.items():
            if isinstance(model, ModelSpec):
                models[mid] = model
            else:
                models[mid] = ModelSpec(mid, model.family, tuple(model.params()))
        return NetlistDoc(self.nodes, self.reference, self.branches, models, self.loops,
                          self.coords, dict(self.line_info))


def _number(tok: str) -> float:
    value = float(tok)
    if not math.isfinite(value):
        raise ValueError(tok)
    return value


def parse_netlist(text: str) -> NetlistDoc:
    """Parse ``text``; raise :class:`NetlistError` listing every problem found."""
    diags: list[Diagnostic] = []
    nodes: list[str] = []
    node_lines: dict[str, int] = {}
    reference: str | None = None
    ref_line = 0
    models: dict[str, ModelSpec] = {}
    branches: list[BranchSpec] = []
    branch_lines: dict[str, int] = {}
    model_lines: dict[str, int] = {}
    loops: list[tuple[list[tuple[str, int]], int]] = []
    coords: tuple[list[str], int] | None = None

    def err(code, lineno, msg):
        diags.append(Diagnostic(code, lineno, msg))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        if key == "node":
            if not args:
                err("SyntaxError", lineno, "node record needs at least one name")
            for name in args:
                if name in node_lines:
                    err("DuplicateId", lineno, f"node {name!r} already declared on line {node_lines[name]}")
                else:
                    node_lines[name] = lineno
                    nodes.append(name)
        elif key == "ref":
            if len(args) != 1:
                err("SyntaxError", lineno, "ref takes exactly one node name")
            elif reference is not None:
                err("SyntaxError", lineno, f"reference node already set on line {ref_line}")
            else:
                reference, ref_line = args[0], lineno
        elif key == "model":
            if len(args) < 2:
                err("SyntaxError", lineno, "model record is 'model <id> <family> <numbers>...'")
                continue
            mid, family, nums = args[0], args[1], args[2:]
            try:
                params = tuple(_number(t) for t in nums)
            except ValueError:
                err("SyntaxError", lineno, f"model {mid!r}: parameters must be decimal numbers")
                continue
            try:
                make_model(family, params)
            except InvalidModel as exc:
                err("SyntaxError", lineno, f"model {mid!r}: {exc}")
                continue
            if mid in models:
                err("DuplicateId", lineno, f"model {mid!r} already declared on line {model_lines[mid]}")
                continue
            models[mid] = ModelSpec(mid, family, params)
            model_lines[mid] = lineno
        elif key == "branch":
            if len(args) != 5:
                err("SyntaxError", lineno, "branch record is 'branch <id> <from> <to> <R|RV|L|C> <model>'")
                continue
            bid, a, b, kind, mid = args
            try:
                bkind = BranchKind(kind)
            except ValueError:
                err("SyntaxError", lineno, f"branch {bid!r}: kind must be R, RV, L or C, got {kind!r}")
                continue
            if bid in branch_lines:
                err("DuplicateId", lineno, f"branch {bid!r} already declared on line {branch_lines[bid]}")
                continue
            branch_lines[bid] = lineno
            branches.append(BranchSpec(bid, a, b, bkind, mid))
        elif key == "loop":
            entries = []
            ok = bool(args)
            for tok in args:
                bid, sep, sign = tok.rpartition(":")
                if not sep or not bid or sign not in ("+", "-"):
                    ok = False
                    break
                entries.append((bid, 1 if sign == "+" else -1))
            if not ok:
                err("SyntaxError", lineno, "loop entries are '<branch-id>:+' or '<branch-id>:-'")
                continue
            loops.append((entries, lineno))
        elif key == "coords":
            if coords is not None:
                err("SyntaxError", lineno, f"coords already given on line {coords[1]}")
            elif not args:
                err("SyntaxError", lineno, "coords record needs at least one branch id")
            else:
                coords = (list(args), lineno)
        else:
            err("SyntaxError", lineno, f"unknown record {key!r}")

    if not nodes:
        err("SyntaxError", 0, "no nodes declared")
    if reference is None:
        if nodes:
            err("SyntaxError", 0, "no reference node declared")
    elif nodes and reference not in node_lines:
        err("UnknownNode", ref_line, f"reference node {reference!r} is not declared")
    for br in branches:
        ln = branch_lines[br.id]
        for nd in (br.from_node, br.to_node):
            if nd not in node_lines:
                err("UnknownNode", ln, f"branch {br.id!r} uses undeclared node {nd!r}")
        if br.model not in models:
            err("UnknownModel", ln, f"branch {br.id!r} uses undeclared model {br.model!r}")
    for entries, ln in loops:
        seen = set()
        for bid, _ in entries:
            if bid not in branch_lines:
                err("UnknownBranch", ln, f"loop uses undeclared branch {bid!r}")
            elif bid in seen:
                err("SyntaxError", ln, f"loop uses branch {bid!r} twice")
            seen.add(bid)
    if coords is not None:
        names, ln = coords
        for bid in names:
            if bid not in branch_lines:
                err("UnknownBranch", ln, f"coords uses undeclared branch {bid!r}")
        if len(set(names)) != len(names):
            err("SyntaxError", ln, "coords lists a branch twice")

    if diags:
        raise NetlistError(sorted(diags, key=lambda d: d.line))

    line_info = {f"branch:{k}": v for k, v in branch_lines.items()}
    line_info.update({f"model:{k}": v for k, v in model_lines.items()})
    line_info.update({f"node:{k}": v for k, v in node_lines.items()})
    for i, (_, ln) in enumerate(loops):
        line_info[f"loop:{i}"] = ln
    return NetlistDoc(
        nodes=tuple(nodes),
        reference=reference,
        branches=tuple(branches),
        models=models,
        loops=tuple(tuple(e) for e, _ in loops) if loops else None,
        coords=tuple(coords[0]) if coords else None,
        line_info=line_info,
    )


def serialize(doc: NetlistDoc) -> str:
    lines = ["node " + " ".join(doc.nodes), f"ref {doc.reference}"]
    for spec in doc.models.values():
        lines.append(" ".join(["model", spec.id, spec.family, *(repr(float(p)) for p in spec.params)]))
    for b in doc.branches:
        lines.append(f"branch {b.id} {b.from_node} {b.to_node} {b.kind.value} {b.model}")
    for loop in doc.loops or ():
        lines.append("loop " + " ".join(f"{bid}:{'+' if s > 0 else '-'}" for bid, s in loop))
    if doc.coords:
        lines.append("coords " + " ".join(doc.coords))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CircuitGraph:
    """Oriented multigraph with branches in canonical R, L, C order."""

    node_names: tuple[str, ...]
    reference: int
    branches: tuple[tuple[int, int], ...]  # (tail, head) node indices
    branch_ids: tuple[str, ...]
    kinds: tuple[BranchKind, ...]

    @property
    def b(self) -> int:
        return len(self.branches)

    @property
    def n(self) -> int:
        return len(self.node_names) - 1

    @property
    def m(self) -> int:
        return self.b - self.n

    def branch_index(self, branch_id: str) -> int:
        return self.branch_ids.index(branch_id)

    def non_reference_nodes(self) -> list[int]:
        return [j for j in range(len(self.node_names)) if j != self.reference]


def _connected(n_nodes: int, edges: Iterable[tuple[int, int]]) -> bool:
    parent = list(range(n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(x) for x in range(n_nodes)}) == 1


def _class_rank(kind: BranchKind) -> int:
    return 0 if kind.is_resistor else 1 if kind is BranchKind.L else 2


def validate_device(kind: BranchKind, model: ConstitutiveModel, branch_id: str,
                    strict_passivity: bool = False) -> None:
    if kind in (BranchKind.L, BranchKind.C) and isinstance(model, Linear) and model.value == 0:
        raise InvalidModel(f"branch {branch_id}: linear {kind.value} model must be nonzero")
    if kind.is_resistor:
        report = passivity_check(model)
        if not report.passed:
            msg = (f"branch {branch_id}: resistor is not passive "
                   f"(f(x)*x = {report.product:.3g} at x = {report.first_violation:.3g})")
            if strict_passivity:
                raise NotPassive(msg)
            warnings.warn(msg, stacklevel=3)
    if kind is BranchKind.RV and not is_strictly_increasing(model):
        raise NotMonotone(f"branch {branch_id}: voltage-controlled resistor model must be strictly increasing")


def elaborate(doc: NetlistDoc, strict_passivity: bool = False) -> tuple[CircuitGraph, DeviceSet]:
    """Order branches R, L, C (stable within each class) and build the graph."""
    order = sorted(range(len(doc.branches)), key=lambda i: (_class_rank(doc.branches[i].kind), i))
    node_index = {name: j for j, name in enumerate(doc.nodes)}
    specs = [doc.branches[i] for i in order]
    graph = CircuitGraph(
        node_names=doc.nodes,
        reference=node_index[doc.reference],
        branches=tuple((node_index[s.from_node], node_index[s.to_node]) for s in specs),
        branch_ids=tuple(s.id for s in specs),
        kinds=tuple(s.kind for s in specs),
    )
    if not _connected(len(doc.nodes), graph.branches):
        raise DisconnectedGraph("circuit graph is not connected")
    if graph.m < 1:
        raise NoLoop("circuit graph has no loop (b - n = 0)")
    devices = []
    for s in specs:
        model = doc.models[s.model].build()
        validate_device(s.kind, model, s.id, strict_passivity)
        devices.append(Device(s.id, s.kind, model))
    return graph, DeviceSet(tuple(devices))
