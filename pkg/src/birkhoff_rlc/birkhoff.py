"""Assembly of the components ``Q = M(q') q'' + H(q') + G(q)`` and regularity.

``M`` comes from the inductor rows of ``N``, ``H`` from the resistor rows and
``G`` from the capacitor rows.  A :class:`BirkhoffSystem` is the unreduced
system on the full chart; reduced systems in :mod:`birkhoff_rlc.reduction`
expose the same evaluation interface.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Mapping, Sequence

import numpy as np

from . import exact
from .coordinates import CoordinateChart, build_chart
from .devices import BranchKind, DeviceSet, Linear, inductance, invert, stored_energy
from .errors import BadSelection
from .netlist import CircuitGraph, NetlistDoc, elaborate, parse_netlist
from .topology import TopologyMatrices, build_topology

DEFAULT_SEED = 20240917
SINGULAR_RTOL = 1e-9


class BirkhoffSystem:
    """Unreduced system on the chart of a circuit.

    Instances are immutable; every evaluation is a pure function of its
    arguments.
    """

    def __init__(self, graph: CircuitGraph, topology: TopologyMatrices, chart: CoordinateChart,
                 devices: DeviceSet, initial_charges: Sequence[float] | None = None,
                 inserted: Sequence[str] = ()):
        if [d.branch_id for d in devices] != list(graph.branch_ids):
            raise ValueError("devices and graph disagree on branch order")
        self.graph = graph
        self.topology = topology
        self.chart = chart
        self.devices = devices
        b = graph.b
        x0 = np.zeros(b) if initial_charges is None else np.asarray(initial_charges, dtype=float)
        x0.setflags(write=False)
        self.initial_charges = x0
        self.inserted = tuple(inserted)
        r, k = devices.r, devices.k
        self._R = slice(0, r)
        self._L = slice(r, r + k)
        self._C = slice(r + k, b)
        N = chart.N_float
        self._NR, self._NL, self._NC = N[self._R], N[self._L], N[self._C]
        self._offC = chart.offsets[self._C]

    # -- shape and bookkeeping ------------------------------------------------

    @property
    def m(self) -> int:
        return self.chart.m

    @property
    def base(self) -> "BirkhoffSystem":
        return self

    @property
    def coords(self) -> tuple[int, ...]:
        """Base coordinate indices that this system keeps (all of them)."""
        return tuple(range(self.m))

    @property
    def steps(self) -> tuple:
        return ()

    def coordinate_branch(self, j: int) -> str:
        """Netlist id of the branch whose charge is coordinate ``j``."""
        return self.graph.branch_ids[self.chart.selection[j]]

    def coordinate_names(self) -> list[str]:
        return [self.coordinate_branch(j) for j in self.coords]

    def initial_q(self) -> np.ndarray:
        return self.chart.initial_q(self.initial_charges)

    def kind_rows(self, kind: str) -> range:
        s = {"R": self._R, "L": self._L, "C": self._C}[kind]
        return range(s.start, s.stop)

    def lift(self, q, qd):
        """Base coordinates for a state of this system (identity here)."""
        return np.asarray(q, dtype=float), np.asarray(qd, dtype=float)

    # -- components -----------------------------------------------------------

    def mass_matrix(self, qd) -> np.ndarray:
        i_L = self._NL @ np.asarray(qd, dtype=float)
        Lv = np.array([inductance(d.model, i) for d, i in zip(self.devices.inductors, i_L)], dtype=float)
        return self._NL.T @ (Lv[:, None] * self._NL)

    def resistor_voltages(self, qd) -> np.ndarray:
        i_R = self._NR @ np.asarray(qd, dtype=float)
        out = np.empty(len(i_R))
        for g, (d, i) in enumerate(zip(self.devices.resistors, i_R)):
            if d.kind is BranchKind.R:
                out[g] = d.model.eval(i)
            else:
                slope = float(d.model.deriv(0.0))
                out[g] = invert(d.model, float(i), guess=i / slope if slope > 0 else 0.0)
        return out

    def resistive_force(self, qd) -> np.ndarray:
        return self._NR.T @ self.resistor_voltages(qd)

    def resistor_slopes(self, qd) -> np.ndarray:
        """``dv/di`` of every resistor at the given velocities."""
        i_R = self._NR @ np.asarray(qd, dtype=float)
        v = self.resistor_voltages(qd)
        out = np.empty(len(i_R))
        for g, d in enumerate(self.devices.resistors):
            if d.kind is BranchKind.R:
                out[g] = d.model.deriv(i_R[g])
            else:
                out[g] = 1.0 / float(d.model.deriv(v[g]))
        return out

    def damping(self, qd) -> np.ndarray:
        """Jacobian of the resistive force."""
        s = self.resistor_slopes(qd)
        return self._NR.T @ (s[:, None] * self._NR)

    def capacitor_charges(self, q) -> np.ndarray:
        return self._NC @ np.asarray(q, dtype=float) + self._offC

    def capacitive_force(self, q) -> np.ndarray:
        x = self.capacitor_charges(q)
        Cv = np.array([d.model.eval(v) for d, v in zip(self.devices.capacitors, x)], dtype=float)
        return self._NC.T @ Cv

    def stiffness(self, q) -> np.ndarray:
        """Jacobian of the capacitive force."""
        x = self.capacitor_charges(q)
        s = np.array([d.model.deriv(v) for d, v in zip(self.devices.capacitors, x)], dtype=float)
        return self._NC.T @ (s[:, None] * self._NC)

    def components(self, q, qd, qdd) -> np.ndarray:
        return (self.mass_matrix(qd) @ np.asarray(qdd, dtype=float)
                + self.resistive_force(qd) + self.capacitive_force(q))

    # -- branch variables and energy -------------------------------------------

    def branch_currents(self, q, qd) -> np.ndarray:
        return self.chart.currents(qd)

    def branch_charges(self, q) -> np.ndarray:
        return self.chart.charges(q)

    def energy(self, q, qd) -> float:
        i_L = self._NL @ np.asarray(qd, dtype=float)
        x_C = self.capacitor_charges(q)
        e = sum(stored_energy(BranchKind.L, d.model, float(i)) for d, i in zip(self.devices.inductors, i_L))
        e += sum(stored_energy(BranchKind.C, d.model, float(x)) for d, x in zip(self.devices.capacitors, x_C))
        return float(e)

    def dissipated_power(self, q, qd) -> float:
        i_R = self._NR @ np.asarray(qd, dtype=float)
        return float(np.dot(self.resistor_voltages(qd), i_R))


# -- construction ---------------------------------------------------------------


def _charges_vector(graph: CircuitGraph, charges) -> np.ndarray | None:
    if charges is None:
        return None
    if isinstance(charges, Mapping):
        x0 = np.zeros(graph.b)
        for bid, val in charges.items():
            if bid not in graph.branch_ids:
                raise BadSelection(f"initial charge given for unknown branch {bid!r}")
            x0[graph.branch_index(bid)] = float(val)
        return x0
    x0 = np.asarray(charges, dtype=float)
    if x0.shape != (graph.b,):
        raise ValueError(f"initial charges must have length {graph.b}")
    return x0


def build_system(doc: NetlistDoc | str, initial_charges=None,
                 strict_passivity: bool = False) -> BirkhoffSystem:
    """Netlist (text or parsed) to system, honouring its ``loop``/``coords`` lines.

    ``initial_charges`` maps branch ids to charges (missing ones are zero), or
    is a vector in canonical branch order.
    """
    if isinstance(doc, str):
        doc = parse_netlist(doc)
    graph, devices = elaborate(doc, strict_passivity=strict_passivity)
    loops = None
    if doc.loops is not None:
        loops = [[(graph.branch_index(bid), s) for bid, s in loop] for loop in doc.loops]
    topo = build_topology(graph, loops)
    selection = None
    if doc.coords is not None:
        selection = [graph.branch_index(bid) for bid in doc.coords]
    x0 = _charges_vector(graph, initial_charges)
    chart = build_chart(topo.B, topo.A, x0, selection)
    return BirkhoffSystem(graph, topo, chart, devices, x0)


# -- regularity ------------------------------------------------------------------


class Verdict(str, enum.Enum):
    REGULAR = "Regular"
    STRUCTURALLY_SINGULAR = "StructurallySingular"
    NUMERICALLY_SINGULAR = "NumericallySingular"


@dataclass(frozen=True)
class DefectLoop:
    direction: tuple[Fraction, ...]  # in the system's own coordinates
    branches: tuple[tuple[str, Fraction], ...]  # nonzero current pattern over branches
    category: str  # "C", "R" or "RC"

    def describe(self) -> str:
        kind = {"C": "pure capacitor", "R": "pure resistor", "RC": "RC"}[self.category]
        return f"{kind} loop [{' '.join(bid for bid, _ in self.branches)}]"


@dataclass(frozen=True)
class RegularityReport:
    structural_defect_loops: list[DefectLoop]
    listed_defect_loops: list[tuple[int, tuple[str, ...]]]
    numeric_dets: list[float]
    scales: list[float]
    verdict: Verdict
    witness: list[tuple[str, float]] = field(default_factory=list)

    @property
    def regular(self) -> bool:
        return self.verdict is Verdict.REGULAR


def exact_columns(sys) -> list[list[Fraction]]:
    """Exact base ``N`` restricted to the columns kept by ``sys``."""
    cols = sys.coords
    return [[row[j] for j in cols] for row in sys.base.chart.N]


def _integer_direction(v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    den = lcm(*(x.denominator for x in v))
    w = [x * den for x in v]
    first = next(x for x in w if x != 0)
    if first < 0:
        w = [-x for x in w]
    return tuple(w)


def defect_loops(sys) -> list[DefectLoop]:
    """Directions in ``q'`` that drive no inductor current, exactly."""
    base = sys.base
    Nk = exact_columns(sys)
    L_rows = [Nk[a] for a in base.kind_rows("L")]
    m = len(sys.coords)
    if L_rows:
        basis = exact.nullspace(L_rows, m)
    else:
        basis = [[Fraction(int(i == j)) for i in range(m)] for j in range(m)]
    out = []
    for v in basis:
        v = _integer_direction(v)
        pattern = [sum((row[j] * v[j] for j in range(m)), Fraction(0)) for row in Nk]
        branches = tuple((base.graph.branch_ids[l], x) for l, x in enumerate(pattern) if x != 0)
        kinds = {base.graph.kinds[l] for l, x in enumerate(pattern) if x != 0}
        has_c = BranchKind.C in kinds
        has_r = any(k.is_resistor for k in kinds)
        category = "RC" if has_c and has_r else "C" if has_c else "R"
        out.append(DefectLoop(v, branches, category))
    return out


def listed_defect_loops(sys: BirkhoffSystem) -> list[tuple[int, tuple[str, ...]]]:
    """Columns of the loop matrix with no inductor entries."""
    A = sys.topology.A
    rows = sys.kind_rows("L")
    out = []
    for j in range(A.shape[1]):
        if not any(A[a, j] for a in rows):
            ids = tuple(sys.graph.branch_ids[l] for l in range(A.shape[0]) if A[l, j])
            out.append((j, ids))
    return out


def mass_singular(M: np.ndarray) -> tuple[float, float, bool]:
    """Determinant, diagonal scale and the relative singularity verdict."""
    d = float(np.linalg.det(M))
    scale = float(np.prod(np.abs(np.diag(M)))) if M.size else 1.0
    return d, scale, scale == 0.0 or abs(d) <= SINGULAR_RTOL * scale


def nonconservative_witness(sys, qd) -> list[tuple[str, float]]:
    """Coordinates with ``dH_j/dq'^j != 0``; any entry rules out a potential."""
    D = sys.damping(qd)
    names = sys.coordinate_names()
    return [(names[j], float(D[j, j])) for j in range(sys.m) if D[j, j] != 0.0]


def regularity(sys, sample_count: int = 20, seed: int = DEFAULT_SEED) -> RegularityReport:
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    loops = defect_loops(sys)
    listed = listed_defect_loops(sys) if sys.base is sys else []
    rng = np.random.default_rng(seed)
    dets, scales, singular = [], [], []
    witness: list[tuple[str, float]] = []
    for s in range(sample_count):
        qd = rng.standard_normal(sys.m)
        d, scale, sing = mass_singular(sys.mass_matrix(qd))
        dets.append(d)
        scales.append(scale)
        singular.append(sing)
        if s == 0:
            witness = nonconservative_witness(sys, qd)
    if loops or listed:
        verdict = Verdict.STRUCTURALLY_SINGULAR
    elif any(singular):
        verdict = Verdict.NUMERICALLY_SINGULAR
    else:
        verdict = Verdict.REGULAR
    return RegularityReport(loops, listed, dets, scales, verdict, witness)


def single_loop_system(kinds: Sequence[str], models: Sequence, initial_charges=None) -> BirkhoffSystem:
    """Series loop of the given branch kinds; small circuits for tests and demos."""
    n_nodes = len(kinds)
    lines = ["node " + " ".join(f"n{j}" for j in range(n_nodes)), "ref n0"]
    for j, (kind, model) in enumerate(zip(kinds, models)):
        if not hasattr(model, "family"):
            model = Linear(float(model))
        lines.append(f"model m{j} {model.family} " + " ".join(repr(float(p)) for p in model.params()))
        lines.append(f"branch b{j} n{j} n{(j + 1) % n_nodes} {kind} m{j}")
    return build_system("\n".join(lines) + "\n", initial_charges)
