"""Nonlinear RLC circuits as Birkhoffian systems.

Typical use::

    from birkhoff_rlc import build_system, regularity
    sys = build_system(open("circuit.net").read())
    print(regularity(sys).verdict)
"""

from .birkhoff import BirkhoffSystem, RegularityReport, Verdict, build_system, regularity
from .coordinates import CoordinateChart, build_chart, loop_transform
from .devices import Linear, Poly, Tanh
from .dynamics import SimState, Trajectory, dissipation_certificate, integrate, vector_field
from .netlist import parse_netlist, serialize
from .reduction import (ReducedSystem, insert_series_inductor, reduce_capacitor_loop,
                        reduce_resistor_loop, reduce_resistor_loop_linear,
                        reduce_resistor_loop_nonlinear)

__all__ = [
    "BirkhoffSystem", "RegularityReport", "Verdict", "build_system", "regularity",
    "CoordinateChart", "build_chart", "loop_transform",
    "Linear", "Poly", "Tanh",
    "SimState", "Trajectory", "dissipation_certificate", "integrate", "vector_field",
    "parse_netlist", "serialize",
    "ReducedSystem", "insert_series_inductor", "reduce_capacitor_loop", "reduce_resistor_loop",
    "reduce_resistor_loop_linear", "reduce_resistor_loop_nonlinear",
]
