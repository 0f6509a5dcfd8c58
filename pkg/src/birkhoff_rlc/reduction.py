"""Removing defect loops: capacitor-loop and resistor-loop reduction, and
regularization by a series inductor.

A reduction drops one chart coordinate ``d`` of a parent system (a
:class:`~birkhoff_rlc.birkhoff.BirkhoffSystem` or another reduced system) and
recovers it from the loop constraint: for a capacitor loop the holonomic
``G_d(q) = 0`` gives ``q_d = f(q_kept)``; for a resistor loop the velocity
constraint ``H_d(q') = 0`` gives ``q'_d = h(q'_kept)``.  Reductions stack, so
``m`` defect loops are removed by ``m`` single-coordinate steps.
"""

from __future__ import annotations

import copy
import enum
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .birkhoff import BirkhoffSystem, defect_loops, exact_columns
from .coordinates import build_chart
from .devices import (BranchKind, ConstitutiveModel, Device, DeviceSet, Linear, make_model,
                      solve_scalar)
from .errors import (BadSelection, LoopHasInductor, NewtonDiverged, NoBracket,
                     NonMonotoneConstraint, NonPositiveResistance, NotACapacitorLoop,
                     NotALinearResistorLoop)
from .netlist import CircuitGraph
from .topology import build_topology

DEFAULT_INDUCTANCE = 1e-6


class ReductionKind(str, enum.Enum):
    CAP_LOOP = "CapLoop"
    RES_LOOP_LINEAR = "ResLoopLinear"
    RES_LOOP_NONLINEAR = "ResLoopNonlinear"


@dataclass(frozen=True)
class NewtonConfig:
    rtol: float = 1e-12
    max_iter: int = 200
    jump_distance: float = 1.0  # report solutions this far from the warm start


def _embed(x, d: int, value: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.insert(x, d, value)


def _schur(K: np.ndarray, d: int) -> np.ndarray:
    keep = [j for j in range(K.shape[0]) if j != d]
    Kkk = K[np.ix_(keep, keep)]
    if K[d, d] == 0.0:
        return Kkk
    return Kkk - np.outer(K[keep, d], K[d, keep]) / K[d, d]


class ReducedSystem:
    """Parent system with coordinate ``d`` eliminated.

    Carries a mutable warm-start cache for the implicit solve, so one
    instance must not be shared between threads; use :meth:`clone`.
    """

    def __init__(self, parent, d: int, kind: ReductionKind, newton: NewtonConfig | None = None):
        self.parent = parent
        self.d = d
        self.kind = ReductionKind(kind)
        self.newton = newton or NewtonConfig()
        self.keep = [j for j in range(parent.m) if j != d]
        # warm start: a charge for capacitor loops, a current for resistor loops
        self._cache = float(parent.initial_q()[d]) if self.kind is ReductionKind.CAP_LOOP else 0.0
        self.branch_jumps: list[tuple[np.ndarray, float, float]] = []
        self.g: np.ndarray | None = None
        self._q_shift = 0.0
        if self.kind is ReductionKind.RES_LOOP_LINEAR:
            D = parent.damping(np.zeros(parent.m))
            self.g = -D[d, self.keep] / D[d, d]
            q0 = parent.initial_q()
            # q_d = g . q_kept + shift, matching the parent's initial state
            self._q_shift = float(q0[d] - self.g @ q0[self.keep])
        self._held_q = float(parent.initial_q()[d])

    # -- bookkeeping ----------------------------------------------------------

    @property
    def m(self) -> int:
        return self.parent.m - 1

    @property
    def base(self) -> BirkhoffSystem:
        return self.parent.base

    @property
    def coords(self) -> tuple[int, ...]:
        pc = self.parent.coords
        return tuple(pc[j] for j in self.keep)

    @property
    def dropped(self) -> int:
        """Base coordinate index removed by this step."""
        return self.parent.coords[self.d]

    @property
    def steps(self) -> tuple:
        return self.parent.steps + ((self.kind, self.d),)

    def coordinate_names(self) -> list[str]:
        return [self.base.coordinate_branch(j) for j in self.coords]

    def initial_q(self) -> np.ndarray:
        return self.parent.initial_q()[self.keep]

    def clone(self) -> "ReducedSystem":
        out = copy.copy(self)
        out.branch_jumps = []
        if isinstance(self.parent, ReducedSystem):
            out.parent = self.parent.clone()
        return out

    # -- implicit solves ------------------------------------------------------

    def _solve(self, fun, dfun, point) -> float:
        guess = self._cache
        d0 = abs(dfun(guess))
        ftol = self.newton.rtol * max(1.0, d0 * max(1.0, abs(guess)))
        try:
            x = solve_scalar(fun, dfun, guess, ftol, max_iter=self.newton.max_iter)
        except NoBracket as exc:
            raise NewtonDiverged(f"constraint solve failed at {np.asarray(point).tolist()}: {exc}",
                                 point=np.asarray(point)) from exc
        if abs(x - guess) > self.newton.jump_distance * max(1.0, abs(guess)):
            self.branch_jumps.append((np.asarray(point, dtype=float).copy(), guess, x))
        self._cache = x
        return x

    def dropped_charge(self, q) -> float:
        q = np.asarray(q, dtype=float)
        if self.kind is ReductionKind.CAP_LOOP:
            d, p = self.d, self.parent
            return self._solve(lambda s: float(p.capacitive_force(_embed(q, d, s))[d]),
                               lambda s: float(p.stiffness(_embed(q, d, s))[d, d]), q)
        if self.kind is ReductionKind.RES_LOOP_LINEAR:
            return float(self.g @ q + self._q_shift)
        return self._held_q

    def dropped_current(self, q, qd) -> float:
        """``q'_d`` for this state; ``q`` is ignored by resistor reductions."""
        qd = np.asarray(qd, dtype=float)
        if self.kind is ReductionKind.RES_LOOP_LINEAR:
            return float(self.g @ qd)
        if self.kind is ReductionKind.RES_LOOP_NONLINEAR:
            d, p = self.d, self.parent
            x = self._solve(lambda s: float(p.resistive_force(_embed(qd, d, s))[d]),
                            lambda s: float(p.damping(_embed(qd, d, s))[d, d]), qd)
            if not p.damping(_embed(qd, d, x))[d, d] > 0:
                raise NonMonotoneConstraint(
                    f"velocity constraint of loop {self.parent.coordinate_names()[d]} is flat at the solution")
            return x
        K = self.parent.stiffness(_embed(q, self.d, self.dropped_charge(q)))
        return float(-K[self.d, self.keep] @ qd / K[self.d, self.d])

    def parent_state(self, q, qd):
        q_p = _embed(q, self.d, self.dropped_charge(q))
        qd_p = _embed(qd, self.d, self.dropped_current(q, qd))
        return q_p, qd_p

    def lift(self, q, qd):
        return self.parent.lift(*self.parent_state(q, qd))

    # -- components -----------------------------------------------------------

    def _velocity(self, qd) -> np.ndarray:
        # cap loops carry no inductor or resistor current, so q'_d is irrelevant there
        if self.kind is ReductionKind.CAP_LOOP:
            return _embed(qd, self.d, 0.0)
        return _embed(qd, self.d, self.dropped_current(None, qd))

    def _position(self, q) -> np.ndarray:
        return _embed(q, self.d, self.dropped_charge(q))

    def mass_matrix(self, qd) -> np.ndarray:
        M = self.parent.mass_matrix(_embed(qd, self.d, 0.0))
        return M[np.ix_(self.keep, self.keep)]

    def resistive_force(self, qd) -> np.ndarray:
        return self.parent.resistive_force(self._velocity(qd))[self.keep]

    def damping(self, qd) -> np.ndarray:
        D = self.parent.damping(self._velocity(qd))
        if self.kind is ReductionKind.CAP_LOOP:
            return D[np.ix_(self.keep, self.keep)]
        return _schur(D, self.d)

    def capacitive_force(self, q) -> np.ndarray:
        return self.parent.capacitive_force(self._position(q))[self.keep]

    def stiffness(self, q) -> np.ndarray:
        K = self.parent.stiffness(self._position(q))
        if self.kind is ReductionKind.CAP_LOOP:
            return _schur(K, self.d)
        return K[np.ix_(self.keep, self.keep)]

    def components(self, q, qd, qdd) -> np.ndarray:
        return (self.mass_matrix(qd) @ np.asarray(qdd, dtype=float)
                + self.resistive_force(qd) + self.capacitive_force(q))

    def constraint_residual(self, q, qd) -> float:
        """The dropped component of the parent, zero by construction."""
        q_p, qd_p = self.parent_state(q, qd)
        if self.kind is ReductionKind.CAP_LOOP:
            return float(self.parent.capacitive_force(q_p)[self.d])
        return float(self.parent.resistive_force(qd_p)[self.d])

    def effective_resistance(self) -> np.ndarray:
        """Linear reduction only: Schur complement over the loop's own resistors.

        Row/column ``j`` refers to the kept coordinates.  Resistors off the
        eliminated loop are excluded so that the entries are the star-like
        combinations of the loop's resistances.
        """
        if self.kind is not ReductionKind.RES_LOOP_LINEAR:
            raise ValueError("effective resistance exists for linear resistor-loop reductions only")
        base = self.base
        Nk = base.chart.N_float[:, list(self.parent.coords)]
        rows = [g for g in base.kind_rows("R") if Nk[g, self.d] != 0.0]
        slopes = base.resistor_slopes(np.zeros(base.m))
        Ns = Nk[rows]
        D = Ns.T @ (slopes[rows][:, None] * Ns)
        return _schur(D, self.d)

    # -- branch variables and energy -------------------------------------------

    def branch_currents(self, q, qd) -> np.ndarray:
        return self.parent.branch_currents(*self.parent_state(q, qd))

    def branch_charges(self, q) -> np.ndarray:
        return self.parent.branch_charges(self._position(q))

    def energy(self, q, qd) -> float:
        return self.parent.energy(self._position(q), self._velocity(qd))

    def dissipated_power(self, q, qd) -> float:
        return self.parent.dissipated_power(self._position(q), self._velocity(qd))


# -- preconditions ----------------------------------------------------------------


def _column_support(sys, d: int) -> dict[str, list[int]]:
    """Branch rows with a nonzero base ``N`` entry in coordinate ``d`` of ``sys``."""
    base = sys.base
    col = sys.coords[d]
    N = base.chart.N
    out = {}
    for kind in ("R", "L", "C"):
        out[kind] = [l for l in base.kind_rows(kind) if N[l][col] != 0]
    return out


def _loop_label(sys, d: int) -> str:
    sup = _column_support(sys, d)
    ids = [sys.base.graph.branch_ids[l] for l in sorted(sum(sup.values(), []))]
    return f"coordinate {sys.coordinate_names()[d]} (loop [{' '.join(ids)}])"


def _resolve_coordinate(sys, loop, ok, what: str, error: type[Exception]) -> int:
    if loop in (None, "auto"):
        for d in range(sys.m):
            if ok(d):
                return d
        raise error(f"no coordinate carries a {what}")
    d = int(loop)
    if not 0 <= d < sys.m:
        raise BadSelection(f"loop coordinate {d} out of range 0..{sys.m - 1}")
    if not ok(d):
        raise error(f"{_loop_label(sys, d)} is not a {what}")
    return d


def is_capacitor_loop(sys, d: int) -> bool:
    sup = _column_support(sys, d)
    return not sup["L"] and not sup["R"] and bool(sup["C"])


def is_resistor_loop(sys, d: int) -> bool:
    sup = _column_support(sys, d)
    return not sup["L"] and not sup["C"] and bool(sup["R"])


def reduce_capacitor_loop(sys, loop="auto", newton: NewtonConfig | None = None) -> ReducedSystem:
    d = _resolve_coordinate(sys, loop, lambda j: is_capacitor_loop(sys, j), "pure capacitor loop",
                            NotACapacitorLoop)
    return ReducedSystem(sys, d, ReductionKind.CAP_LOOP, newton)


def _linear_resistance(dev: Device) -> float | None:
    if not isinstance(dev.model, Linear):
        return None
    v = dev.model.value
    if dev.kind is BranchKind.RV:
        return 1.0 / v if v != 0 else float("inf")
    return v


def reduce_resistor_loop_linear(sys, loop="auto") -> ReducedSystem:
    d = _resolve_coordinate(sys, loop, lambda j: is_resistor_loop(sys, j), "pure resistor loop",
                            NotALinearResistorLoop)
    base = sys.base
    for l in _column_support(sys, d)["R"]:
        dev = base.devices[l]
        r = _linear_resistance(dev)
        if r is None:
            raise NotALinearResistorLoop(f"resistor {dev.branch_id} on {_loop_label(sys, d)} is not linear")
        if not 0 < r < float("inf"):
            raise NonPositiveResistance(f"resistor {dev.branch_id} has non-positive resistance {r!r}")
    return ReducedSystem(sys, d, ReductionKind.RES_LOOP_LINEAR)


def reduce_resistor_loop_nonlinear(sys, loop="auto", newton: NewtonConfig | None = None) -> ReducedSystem:
    d = _resolve_coordinate(sys, loop, lambda j: is_resistor_loop(sys, j), "pure resistor loop",
                            NotALinearResistorLoop)
    base = sys.base
    for l in _column_support(sys, d)["R"]:
        dev = base.devices[l]
        if dev.kind is not BranchKind.R:
            raise NotALinearResistorLoop(
                f"resistor {dev.branch_id} is voltage controlled; the velocity elimination needs R branches")
    return ReducedSystem(sys, d, ReductionKind.RES_LOOP_NONLINEAR, newton)


def reduce_resistor_loop(sys, loop="auto", newton: NewtonConfig | None = None) -> ReducedSystem:
    """Linear elimination when every loop resistor is linear, otherwise Newton."""
    d = _resolve_coordinate(sys, loop, lambda j: is_resistor_loop(sys, j), "pure resistor loop",
                            NotALinearResistorLoop)
    if all(_linear_resistance(sys.base.devices[l]) is not None for l in _column_support(sys, d)["R"]):
        return reduce_resistor_loop_linear(sys, d)
    return reduce_resistor_loop_nonlinear(sys, d, newton)


# -- series inductor insertion ------------------------------------------------------


def _fresh_name(taken: Sequence[str], stem: str) -> str:
    name, k = stem, 1
    while name in taken:
        k += 1
        name = f"{stem}{k}"
    return name


def _insert_into_base(sys: BirkhoffSystem, partner: int, model: ConstitutiveModel,
                      name: str | None = None) -> BirkhoffSystem:
    """Split branch ``partner`` with a new node and put an inductor in series."""
    g = sys.graph
    pid = g.branch_ids[partner]
    new_node = _fresh_name(g.node_names, f"{pid}_n")
    new_id = name or _fresh_name(g.branch_ids, f"L_{pid}")
    if new_id in g.branch_ids:
        raise BadSelection(f"branch id {new_id!r} already exists")
    nn = len(g.node_names)
    pos = sys.devices.r + sys.devices.k  # end of the inductor block
    tail, head = g.branches[partner]
    branches = list(g.branches)
    branches[partner] = (tail, nn)
    branches.insert(pos, (nn, head))
    ids = list(g.branch_ids)
    ids.insert(pos, new_id)
    kinds = list(g.kinds)
    kinds.insert(pos, BranchKind.L)
    graph = CircuitGraph(g.node_names + (new_node,), g.reference, tuple(branches), tuple(ids), tuple(kinds))

    def remap(l: int) -> int:
        return l + 1 if l >= pos else l

    A = sys.topology.A
    loops = []
    for j in range(A.shape[1]):
        loop = [(remap(l), int(A[l, j])) for l in range(A.shape[0]) if A[l, j]]
        if A[partner, j]:
            loop.append((pos, int(A[partner, j])))
        loops.append(loop)
    topo = build_topology(graph, loops)
    x0 = np.insert(np.asarray(sys.initial_charges, dtype=float), pos, sys.initial_charges[partner])
    selection = [remap(l) for l in sys.chart.selection]
    chart = build_chart(topo.B, topo.A, x0, selection)
    devs = list(sys.devices.devices)
    devs.insert(pos, Device(new_id, BranchKind.L, model))
    return BirkhoffSystem(graph, topo, chart, DeviceSet(tuple(devs)), x0, sys.inserted + (new_id,))


def _rebuild(sys, partner: int, model, name):
    if isinstance(sys, BirkhoffSystem):
        return _insert_into_base(sys, partner, model, name)
    parent = _rebuild(sys.parent, partner, model, name)
    return ReducedSystem(parent, sys.d, sys.kind, sys.newton)


def _auto_partner(sys) -> int:
    base = sys.base
    loops = defect_loops(sys)
    if not loops:
        raise LoopHasInductor("every loop already carries an inductor")
    Nk = exact_columns(sys)
    dropped = [j for j in range(base.m) if j not in sys.coords]
    N = base.chart.N
    v = loops[0].direction
    cands = [l for l in range(base.graph.b)
             if sum(Nk[l][j] * v[j] for j in range(len(v))) != 0
             and all(N[l][j] == 0 for j in dropped)
             and base.graph.kinds[l] is not BranchKind.L]
    if not cands:
        raise LoopHasInductor(f"no branch of {loops[0].describe()} can take a series inductor "
                              "without touching an eliminated loop")
    cands.sort(key=lambda l: (base.graph.kinds[l] is not BranchKind.C, l))
    return cands[0]


def series_partner(sys, loop="auto", branch: str | None = None) -> str:
    """Netlist id of the branch that a series inductor would be attached to.

    ``branch`` names the partner explicitly; otherwise ``loop`` is ``"auto"``
    (first defect loop, capacitor partners preferred) or a coordinate index
    whose own branch becomes the partner.
    """
    base = sys.base
    if branch is not None:
        if branch not in base.graph.branch_ids:
            raise BadSelection(f"unknown branch {branch!r}")
        if base.graph.kinds[base.graph.branch_index(branch)] is BranchKind.L:
            raise LoopHasInductor(f"branch {branch} is itself an inductor")
        return branch
    if loop in (None, "auto"):
        return base.graph.branch_ids[_auto_partner(sys)]
    d = int(loop)
    if not 0 <= d < sys.m:
        raise BadSelection(f"loop coordinate {d} out of range 0..{sys.m - 1}")
    if _column_support(sys, d)["L"]:
        raise LoopHasInductor(f"{_loop_label(sys, d)} already contains an inductor")
    return base.graph.branch_ids[base.chart.selection[sys.coords[d]]]


def insert_series_inductor(sys, loop="auto", model: ConstitutiveModel | None = None,
                           branch: str | None = None, name: str | None = None):
    """Regularize an inductor-free loop with an inductor in series to one of its branches.

    The partner branch is chosen by :func:`series_partner`.  Returns a system
    of the same type and dimension over the extended graph.
    """
    partner = series_partner(sys, loop, branch)
    if model is None:
        model = Linear(DEFAULT_INDUCTANCE)
        warnings.warn(f"inserting a {DEFAULT_INDUCTANCE:g} H inductor; the extended system is stiff",
                      stacklevel=2)
    return _rebuild(sys, sys.base.graph.branch_index(partner), model, name)


def replay(sys, steps: Sequence[dict]):
    """Apply serialized reduction steps (as written by the CLI) in order."""
    for step in steps:
        action = step["action"]
        if action == "cap-reduce":
            sys = reduce_capacitor_loop(sys, step["coordinate"])
        elif action == "res-reduce-linear":
            sys = reduce_resistor_loop_linear(sys, step["coordinate"])
        elif action == "res-reduce-nonlinear":
            sys = reduce_resistor_loop_nonlinear(sys, step["coordinate"])
        elif action == "insert":
            model = make_model(step["model"]["family"], step["model"]["params"])
            sys = insert_series_inductor(sys, model=model, branch=step["partner"], name=step.get("name"))
        else:
            raise ValueError(f"unknown reduction step {action!r}")
    return sys
