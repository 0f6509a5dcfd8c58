"""Solving for accelerations, RK4 integration, energy and the dissipation certificate."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .birkhoff import defect_loops, mass_singular
from .errors import SingularMass


@dataclass(frozen=True)
class SimState:
    t: float
    q: np.ndarray
    qd: np.ndarray


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray  # (samples, m)
    qd: np.ndarray
    E: np.ndarray
    P: np.ndarray
    dt: float
    names: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> SimState:
        return SimState(float(self.t[i]), self.q[i], self.qd[i])


def _singular_message(sys) -> str:
    loops = defect_loops(sys)
    if loops:
        what = "; ".join(lp.describe() for lp in loops)
        return f"structurally non-regular: {what}; run `reduce`"
    return "mass matrix is numerically singular at this state; run `reduce` or change the inductor models"


def vector_field(sys, q, qd) -> np.ndarray:
    """Accelerations solving ``M(q') q'' = -(H(q') + G(q))``."""
    M = sys.mass_matrix(qd)
    _, _, singular = mass_singular(M)
    if singular:
        raise SingularMass(_singular_message(sys))
    rhs = -(sys.resistive_force(qd) + sys.capacitive_force(q))
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMass(_singular_message(sys)) from exc


def energy(sys, q, qd) -> float:
    return sys.energy(q, qd)


def integrate(sys, initial: SimState, dt: float, steps: int) -> Trajectory:
    """Classical fixed-step RK4 on the first-order form ``(q, q')``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    m = sys.m
    q = np.array(initial.q, dtype=float).reshape(m)
    v = np.array(initial.qd, dtype=float).reshape(m)
    t0 = float(initial.t)
    Q = np.empty((steps + 1, m))
    V = np.empty((steps + 1, m))
    Q[0], V[0] = q, v

    def acc(t, q, v):
        try:
            return vector_field(sys, q, v)
        except SingularMass as exc:
            raise SingularMass(f"at t = {t:.6g}: {exc}") from None

    for s in range(steps):
        t = t0 + s * dt
        a1 = acc(t, q, v)
        q2, v2 = q + 0.5 * dt * v, v + 0.5 * dt * a1
        a2 = acc(t + 0.5 * dt, q2, v2)
        q3, v3 = q + 0.5 * dt * v2, v + 0.5 * dt * a2
        a3 = acc(t + 0.5 * dt, q3, v3)
        q4, v4 = q + dt * v3, v + dt * a3
        a4 = acc(t + dt, q4, v4)
        q = q + dt / 6.0 * (v + 2 * v2 + 2 * v3 + v4)
        v = v + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        Q[s + 1], V[s + 1] = q, v
    E = np.array([sys.energy(Q[i], V[i]) for i in range(steps + 1)])
    P = np.array([sys.dissipated_power(Q[i], V[i]) for i in range(steps + 1)])
    t = t0 + dt * np.arange(steps + 1)
    return Trajectory(t, Q, V, E, P, dt, list(sys.coordinate_names()))


@dataclass
class CertificateReport:
    identity_ok: bool
    positivity_ok: bool
    monotone_ok: bool
    conservative: bool | None  # only decided for resistor-free circuits
    max_identity_residual: float
    energy_drift: float
    violations: list[tuple[float, str, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.identity_ok and self.positivity_ok and self.monotone_ok
                and self.conservative is not False)

    @property
    def label(self) -> str:
        if not self.ok:
            return "violated"
        return "conservative" if self.conservative else "dissipative"


def energy_rate(E: np.ndarray, dt: float) -> np.ndarray:
    """Centered 5-point derivative at samples ``2 .. len-3``."""
    return (E[:-4] - 8 * E[1:-3] + 8 * E[3:-1] - E[4:]) / (12.0 * dt)


def dissipation_certificate(sys, traj: Trajectory, atol: float = 1e-6, rtol: float = 1e-4,
                            step_tol: float = 1e-9, drift_tol: float = 1e-8) -> CertificateReport:
    """Check ``dE/dt = -P_diss``, ``P_diss >= 0`` and monotone ``E`` along ``traj``."""
    E, P, t = traj.E, traj.P, traj.t
    violations = []
    max_res = 0.0
    identity_ok = True
    if len(E) >= 5:
        rate = energy_rate(E, traj.dt)
        Pin = P[2:-2]
        res = np.abs(rate + Pin)
        tol = np.maximum(atol, rtol * np.abs(Pin))
        max_res = float(res.max())
        for i in np.flatnonzero(res > tol):
            identity_ok = False
            violations.append((float(t[i + 2]), "dE/dt + P_diss", float(res[i])))
    pos_bad = np.flatnonzero(P < -1e-12)
    for i in pos_bad:
        violations.append((float(t[i]), "P_diss < 0", float(P[i])))
    steps = np.diff(E)
    mono_bad = np.flatnonzero(steps > step_tol)
    for i in mono_bad:
        violations.append((float(t[i + 1]), "E increased", float(steps[i])))
    drift = float(np.max(np.abs(E - E[0]))) if len(E) else 0.0
    conservative = None
    if sys.base.devices.r == 0:
        conservative = drift <= drift_tol
        if not conservative:
            violations.append((float(t[int(np.argmax(np.abs(E - E[0])))]), "E drift", drift))
    return CertificateReport(identity_ok, not pos_bad.size, not mono_bad.size, conservative,
                             max_res, drift, violations)


def write_csv(traj: Trajectory, out: TextIO | None = None) -> str:
    """CSV with header ``t,q1..qm,qd1..qdm,E,P_diss``; returns the text."""
    m = traj.q.shape[1]
    buf = io.StringIO()
    header = ["t"] + [f"q{j + 1}" for j in range(m)] + [f"qd{j + 1}" for j in range(m)] + ["E", "P_diss"]
    buf.write(",".join(header) + "\n")
    for i in range(len(traj)):
        row = [traj.t[i], *traj.q[i], *traj.qd[i], traj.E[i], traj.P[i]]
        buf.write(",".join(format(float(x), ".17g") for x in row) + "\n")
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text
