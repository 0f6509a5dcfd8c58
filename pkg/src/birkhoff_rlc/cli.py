"""Command line: ``analyze``, ``verify``, ``reduce`` and ``simulate``.

Exit status is 0 on success, 1 when the circuit cannot support the request
(singular, non-passive, diverged) and 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import exact
from .birkhoff import DEFAULT_SEED, build_system, regularity
from .devices import make_model
from .dynamics import SimState, dissipation_certificate, integrate, write_csv
from .errors import CircuitError, DomainError, InputError
from .netlist import parse_netlist
from .reduction import (DEFAULT_INDUCTANCE, ReductionKind, insert_series_inductor,
                        reduce_capacitor_loop, reduce_resistor_loop, replay, series_partner)
from .topology import verify_kirchhoff_structure

REPORT_FORMAT = "birkhoff-rlc-reduction/1"


class UsageError(InputError):
    pass


# -- formatting ------------------------------------------------------------------


def _cell(x) -> str:
    if isinstance(x, Fraction):
        return exact.format_fraction(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def format_grid(title: str, row_labels: Sequence[str], col_labels: Sequence[str], rows) -> str:
    cells = [[_cell(x) for x in row] for row in rows]
    lw = max([len(s) for s in row_labels] + [0])
    cw = max([len(s) for s in col_labels] + [len(c) for row in cells for c in row] + [1])
    out = [title, " " * lw + "".join(f" {c:>{cw}}" for c in col_labels)]
    for label, row in zip(row_labels, cells):
        out.append(f"{label:<{lw}}" + "".join(f" {c:>{cw}}" for c in row))
    return "\n".join(out)


def _regularity_lines(rep) -> list[str]:
    lines = [f"verdict: {rep.verdict.value}"]
    for lp in rep.structural_defect_loops:
        lines.append(f"  defect: {lp.describe()}")
    for j, ids in rep.listed_defect_loops:
        lines.append(f"  listed loop I{j + 1} has no inductor: [{' '.join(ids)}]")
    return lines


# -- inputs ----------------------------------------------------------------------


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _parse_charges(spec: str | None) -> dict[str, float] | None:
    if not spec:
        return None
    out = {}
    for item in spec.split(","):
        bid, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--charges entries look like BRANCH=VALUE, got {item!r}")
        try:
            out[bid.strip()] = float(val)
        except ValueError:
            raise UsageError(f"bad charge value {val!r} for {bid}") from None
    return out


def _parse_vector(spec: str | None, m: int, what: str) -> np.ndarray | None:
    if spec is None:
        return None
    try:
        v = np.array([float(x) for x in spec.split(",")])
    except ValueError:
        raise UsageError(f"{what} must be comma separated numbers") from None
    if v.shape != (m,):
        raise UsageError(f"{what} needs {m} values, got {v.size}")
    return v


def _load_report(path: str) -> dict:
    try:
        report = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not a reduction report: {exc}") from None
    if not isinstance(report, dict) or report.get("format") != REPORT_FORMAT:
        raise UsageError(f"{path} is not a reduction report")
    return report


def _system_from(args):
    """System plus its provenance (netlist text, charges, steps) from the CLI inputs."""
    if getattr(args, "from_report", None):
        if args.netlist:
            raise UsageError("give either a netlist or --from-report, not both")
        report = _load_report(args.from_report)
        text, charges, steps = report["netlist"], report.get("charges"), report["steps"]
    elif args.netlist:
        text, charges, steps = _read_text(args.netlist), _parse_charges(args.charges), []
    else:
        raise UsageError("a netlist path (or --from-report) is required")
    system = replay(build_system(parse_netlist(text), charges), steps)
    return system, text, charges, list(steps)


# -- commands ---------------------------------------------------------------------


def cmd_analyze(args, out) -> int:
    system, _, _, _ = _system_from(args)
    base = system.base
    g, topo, chart = base.graph, base.topology, base.chart
    nodes = [g.node_names[j] for j in g.non_reference_nodes()]
    loops = [f"I{j + 1}" for j in range(topo.m)]
    names = [f"q{j + 1}" for j in range(chart.m)]
    dev = base.devices
    print(f"branches b={g.b} (r={dev.r}, k={dev.k}, p={dev.p}), nodes n={g.n} + reference "
          f"{g.node_names[g.reference]}, loops m={topo.m}", file=out)
    print("order: " + " ".join(g.branch_ids), file=out)
    print(format_grid("B (incidence)", g.branch_ids, nodes, topo.B.tolist()), file=out)
    print(format_grid("A (loops)", g.branch_ids, loops, topo.A.tolist()), file=out)
    st = verify_kirchhoff_structure(topo.B, topo.A)
    print(f"rank(B)={st.rank_B} rank(A)={st.rank_A} B^T A = 0: {st.tellegen} "
          f"Ker(B^T) = Im(A): {st.kernel_equals_image}", file=out)
    sel = " ".join(f"{n}={g.branch_ids[l]}" for n, l in zip(names, chart.selection))
    print(f"coordinates: {sel}", file=out)
    print(format_grid("N (i = N q')", g.branch_ids, names, chart.N), file=out)
    if chart.loop_transform is not None:
        print(format_grid("loop transform T (T A^T = N^T)", names, loops, chart.loop_transform), file=out)
    if system is not base:
        print("reduced coordinates: " + " ".join(system.coordinate_names()), file=out)
    rep = regularity(system, args.samples, args.seed)
    print("\n".join(_regularity_lines(rep)), file=out)
    return 0


def cmd_verify(args, out) -> int:
    system, _, _, _ = _system_from(args)
    base = system.base
    st = verify_kirchhoff_structure(base.topology.B, base.topology.A)
    print(f"structure: {'ok' if st.ok else 'FAILED'}", file=out)
    for f in st.failures:
        print(f"  {f}", file=out)
    rep = regularity(system, args.samples, args.seed)
    print("\n".join(_regularity_lines(rep)), file=out)
    print(f"sampled det(M) at {len(rep.numeric_dets)} velocities (seed {args.seed}):", file=out)
    for d, s in zip(rep.numeric_dets, rep.scales):
        print(f"  det={d!r} scale={s!r}", file=out)
    if rep.witness:
        print("non-conservative: dH_j/dq'^j != 0 for " +
              ", ".join(f"{n} ({v!r})" for n, v in rep.witness), file=out)
    else:
        print("no resistive coupling: H is independent of q'", file=out)
    return 0 if st.ok else 1


def cmd_reduce(args, out) -> int:
    system, text, charges, steps = _system_from(args)
    before = regularity(system, args.samples, args.seed)
    loop = args.loop
    if loop != "auto":
        try:
            loop = int(loop)
        except ValueError:
            raise UsageError(f"--loop takes 'auto' or a coordinate number, got {loop!r}") from None
        loop -= 1  # coordinates are numbered from 1 on the command line
    names = system.coordinate_names()
    if args.strategy == "cap-reduce":
        new = reduce_capacitor_loop(system, loop)
        step = {"action": "cap-reduce", "coordinate": new.d, "branch": names[new.d]}
    elif args.strategy == "res-reduce":
        new = reduce_resistor_loop(system, loop)
        action = ("res-reduce-linear" if new.kind is ReductionKind.RES_LOOP_LINEAR
                  else "res-reduce-nonlinear")
        step = {"action": action, "coordinate": new.d, "branch": names[new.d]}
    else:
        partner = series_partner(system, loop)
        if args.inductance is None:
            print(f"warning: no --inductance given, inserting {DEFAULT_INDUCTANCE:g} H; "
                  "the extended system is stiff", file=sys.stderr)
            value = DEFAULT_INDUCTANCE
        else:
            value = args.inductance
        model = make_model("linear", [value])
        new = insert_series_inductor(system, model=model, branch=partner)
        step = {"action": "insert", "partner": partner, "name": new.base.inserted[-1],
                "model": {"family": model.family, "params": list(model.params())}}
    after = regularity(new, args.samples, args.seed)
    report = {
        "format": REPORT_FORMAT,
        "netlist": text,
        "charges": charges,
        "steps": steps + [step],
        "before": {"verdict": before.verdict.value,
                   "defect_loops": [lp.describe() for lp in before.structural_defect_loops]},
        "after": {"verdict": after.verdict.value,
                  "defect_loops": [lp.describe() for lp in after.structural_defect_loops],
                  "coordinates": new.coordinate_names()},
    }
    payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
        print(f"{step['action']}: {after.verdict.value}; report written to {args.out}", file=sys.stderr)
    else:
        out.write(payload)
    return 0


def cmd_simulate(args, out) -> int:
    system, _, _, _ = _system_from(args)
    if not args.dt > 0 or not args.t_end > 0:
        raise UsageError("--dt and --t-end must be positive")
    q0 = _parse_vector(args.q0, system.m, "--q0")
    qd0 = _parse_vector(args.qdot0, system.m, "--qdot0")
    q0 = system.initial_q() if q0 is None else q0
    qd0 = np.zeros(system.m) if qd0 is None else qd0
    steps = int(round(args.t_end / args.dt))
    traj = integrate(system, SimState(0.0, q0, qd0), args.dt, steps)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_csv(traj, fh)
    else:
        write_csv(traj, out)
    cert = dissipation_certificate(system, traj)
    print(f"certificate: {cert.label} (max |dE/dt + P_diss| = {cert.max_identity_residual:.3g})",
          file=sys.stderr)
    return 0


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="birkhoff-rlc", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for sampled velocities")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, report=True):
        sp.add_argument("netlist", nargs="?", help="netlist file ('-' for stdin)")
        sp.add_argument("--charges", help="initial branch charges, e.g. C1=0.1,C2=-0.2")
        sp.add_argument("--samples", type=int, default=20, help="velocities sampled for det(M)")
        if report:
            sp.add_argument("--from-report", metavar="PATH",
                            help="start from a reduction report ('-' for stdin)")

    common(sub.add_parser("analyze", help="print B, A, N, the loop transform and the regularity verdict"))
    common(sub.add_parser("verify", help="check Kirchhoff structure, regularity and non-conservativeness"))
    sp = sub.add_parser("reduce", help="remove one defect loop and write a reduction report")
    common(sp)
    sp.add_argument("--strategy", required=True, choices=["cap-reduce", "res-reduce", "insert"])
    sp.add_argument("--loop", default="auto", help="coordinate number (1-based) or 'auto'")
    sp.add_argument("--inductance", type=float, help="inserted inductance in henry")
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp = sub.add_parser("simulate", help="integrate with RK4 and write a CSV trajectory")
    common(sp)
    sp.add_argument("--t-end", type=float, required=True)
    sp.add_argument("--dt", type=float, required=True)
    sp.add_argument("--q0", help="initial coordinates, comma separated")
    sp.add_argument("--qdot0", help="initial velocities, comma separated")
    sp.add_argument("--out", help="CSV path (default stdout)")
    return p


COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "reduce": cmd_reduce, "simulate": cmd_simulate}


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = COMMANDS[args.command](args, out)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return code
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (DomainError, CircuitError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
