import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birkhoff_rlc.birkhoff import Verdict, build_system, regularity, single_loop_system
from birkhoff_rlc.devices import Linear, Poly, Tanh
from birkhoff_rlc.synthetic import random_netlist

from helpers import fixture_system
from oracles import (EX1_N, EX1_NONLINEAR, EX1_SELECTION, EX2_N, EX2_NONLINEAR, EX2_SELECTION,
                     consts, ex1_reference, ex2_reference, generic_components)

EX1_CHARGES = {"r1": 0.2, "L1": -0.4, "L2": 0.1, "L3": 0.3, "C1": 0.7, "C2": -0.5, "C3": 0.25}
EX2_CHARGES = {"R1": 0.1, "R4": -0.2, "L2": 0.3, "C1": 0.6, "C2": -0.35}


def canonical_x0(sys, charges):
    return [charges.get(bid, 0.0) for bid in sys.graph.branch_ids]


def test_mass_matrix_example1_linear():
    sys = fixture_system("example1")
    M = sys.mass_matrix(np.array([0.3, -1.0, 2.0, 0.5]))
    assert M.tolist() == [[0, 0, 0, 0], [0, 4, 1, 0], [0, 1, 1, 0], [0, 0, 0, 2]]


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
@settings(max_examples=50, deadline=None)
def test_mass_matrix_symmetric_psd(qd):
    sys = fixture_system("example1", EX1_NONLINEAR)
    M = sys.mass_matrix(np.array(qd))
    assert np.array_equal(M, M.T)
    assert np.linalg.eigvalsh(M).min() >= -1e-12


def test_resistive_force_example2_unit_direction():
    sys = fixture_system("example2")
    assert sys.resistive_force(np.array([1.0, 0, 0, 0])).tolist() == [6.0, -3.0, -2.0, 0.0]


def test_voltage_controlled_linear_resistor():
    lc = single_loop_system(["RV", "L"], [Linear(0.25), Linear(1.0)])
    assert lc.resistive_force([2.0]) == pytest.approx([8.0], abs=1e-12)
    cur = single_loop_system(["R", "L"], [Linear(4.0), Linear(1.0)])
    assert cur.damping([0.3])[0, 0] == pytest.approx(lc.damping([0.3])[0, 0], rel=1e-12)


def test_capacitive_force_example1():
    sys = fixture_system("example1")
    # rows of N: C1 (-1,1,0,1), C2 (1,0,1,0), C3 (1,0,0,0); voltage is value * charge
    q = np.array([1.0, 2.0, 3.0, 4.0])
    G = sys.capacitive_force(q)
    c1, c2, c3 = 1 * (-1 + 2 + 4), 2 * (1 + 3), 4 * 1
    assert G.tolist() == [-c1 + c2 + c3, c1, c2, c1]


def test_components_are_affine_in_acceleration():
    sys = fixture_system("example1", EX1_NONLINEAR)
    rng = np.random.default_rng(3)
    q, qd, a, b = (rng.standard_normal(4) for _ in range(4))
    Q = lambda qdd: sys.components(q, qd, qdd)
    assert np.allclose(Q(a + 2 * b) - Q(a), 2 * (Q(b) - Q(np.zeros(4))), atol=1e-12)


def test_verdicts():
    ex1 = regularity(fixture_system("example1"))
    assert ex1.verdict is Verdict.STRUCTURALLY_SINGULAR
    assert [d.describe() for d in ex1.structural_defect_loops] == ["pure capacitor loop [C1 C2 C3]"]
    assert [ids for _, ids in ex1.listed_defect_loops] == [("C1", "C2", "C3")]
    ex2 = regularity(fixture_system("example2"))
    assert ex2.verdict is Verdict.STRUCTURALLY_SINGULAR
    assert sorted(d.category for d in ex2.structural_defect_loops) == ["R", "RC"]
    lc = regularity(single_loop_system(["L", "C"], [1.0, 1.0]))
    assert lc.regular and len(lc.numeric_dets) == 20


def test_numerically_singular_for_badly_scaled_inductors():
    # Lb couples every coordinate; det(M) is eps^2 against a diagonal product near 1
    text = ("node a b\nref b\nmodel big linear 1\nmodel eps linear 1e-6\nmodel c linear 1\n"
            "branch La a b L eps\nbranch Lb a b L big\nbranch Lc a b L eps\nbranch C a b C c\n"
            "coords La Lc C\n")
    rep = regularity(build_system(text))
    assert rep.structural_defect_loops == [] and rep.verdict is Verdict.NUMERICALLY_SINGULAR


def test_witness_is_the_damping_diagonal():
    rep = regularity(fixture_system("example2"))
    assert [name for name, _ in rep.witness] == ["R1", "R5", "C1", "C2"]
    rep = regularity(single_loop_system(["L", "C"], [1.0, 1.0]))
    assert rep.witness == []


@pytest.mark.parametrize("name,N,sel,models,charges,which", [
    ("example1", EX1_N, EX1_SELECTION, EX1_NONLINEAR, EX1_CHARGES, "ex1"),
    ("example2", EX2_N, EX2_SELECTION, EX2_NONLINEAR, EX2_CHARGES, "ex2"),
])
def test_components_against_transcriptions_and_general_formulas(name, N, sel, models, charges, which):
    sys = fixture_system(name, models, charges)
    x0 = canonical_x0(sys, charges)
    k_all = consts(N, sel, x0)
    ids = sys.graph.branch_ids
    k = {"C1": k_all[ids.index("C1")], "C2": k_all[ids.index("C2")]}
    dev = {d.branch_id.lower() if name == "example2" else _ex1_model(d.branch_id): d.model
           for d in sys.devices}
    rng = np.random.default_rng(11)
    kinds = [k.value for k in sys.graph.kinds]
    for _ in range(30):
        q, qd, qdd = (rng.uniform(-1.5, 1.5, 4) for _ in range(3))
        got = sys.components(q, qd, qdd)
        gen = generic_components(N, kinds, [d.model for d in sys.devices], k_all, q, qd, qdd)
        assert np.allclose(got, gen, rtol=0, atol=1e-10)
        if which == "ex1":
            ref = ex1_reference(dev, k, q, qd, qdd)
        else:
            ref = ex2_reference(dev, (1.0, 2.0, 3.0), k, q, qd, qdd)
        assert np.allclose(got, ref, rtol=0, atol=1e-10)


def _ex1_model(bid):
    return {"r1": "rr"}.get(bid, bid.lower())


@pytest.mark.parametrize("seed", range(8))
def test_general_formulas_on_random_circuits(seed):
    text = random_netlist(seed, nodes=5, extra=3, nonlinear=True, voltage_controlled=True)
    rng = np.random.default_rng(seed)
    b = build_system(text).graph.b
    sys = build_system(text, rng.uniform(-0.5, 0.5, b))
    offsets = sys.chart.offsets
    kinds = [k.value for k in sys.graph.kinds]
    for _ in range(10):
        q, qd, qdd = (rng.uniform(-1, 1, sys.m) for _ in range(3))
        ref = generic_components(sys.chart.N, kinds, [d.model for d in sys.devices], offsets, q, qd, qdd)
        assert np.allclose(sys.components(q, qd, qdd), ref, atol=1e-9)


def test_energy_and_power_of_a_simple_loop():
    sys = single_loop_system(["R", "L", "C"], [Linear(2.0), Linear(1.0), Tanh(1.0, 1.0)])
    assert sys.energy([0.0], [1.0]) == pytest.approx(0.5)
    assert sys.dissipated_power([0.0], [1.5]) == pytest.approx(4.5)
    assert sys.energy([0.7], [0.0]) == pytest.approx(np.log(np.cosh(0.7)))
