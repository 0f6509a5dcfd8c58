"""Charge coordinates on the affine configuration space ``B^T x = c``.

A chart selects ``m`` branch charges as the coordinates ``q``; every branch
charge is then ``x = N q + offsets`` and every branch current ``i = N q'``.
``N`` and the loop transform (the matrix relating loop currents to ``q'``)
are kept exact; ``offsets`` and ``c`` come from physical initial charges and
are floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from . import exact
from .errors import BadSelection, KernelMismatch


@dataclass(frozen=True, eq=False)
class CoordinateChart:
    selection: tuple[int, ...]
    N: tuple[tuple[Fraction, ...], ...]
    offsets: np.ndarray
    c: np.ndarray
    loop_transform: tuple[tuple[Fraction, ...], ...] | None = None

    @property
    def m(self) -> int:
        return len(self.selection)

    @property
    def b(self) -> int:
        return len(self.N)

    @cached_property
    def N_float(self) -> np.ndarray:
        a = np.array([[float(x) for x in row] for row in self.N], dtype=float).reshape(self.b, self.m)
        a.setflags(write=False)
        return a

    def initial_q(self, initial_charges: Sequence[float] | None = None) -> np.ndarray:
        """Coordinates at which the chart reproduces the initial charges."""
        if initial_charges is None:
            return np.zeros(self.m)
        x0 = np.asarray(initial_charges, dtype=float)
        return x0[list(self.selection)].copy()

    def charges(self, q) -> np.ndarray:
        return self.N_float @ np.asarray(q, dtype=float) + self.offsets

    def currents(self, qdot) -> np.ndarray:
        return self.N_float @ np.asarray(qdot, dtype=float)


def auto_selection(B) -> tuple[int, ...]:
    """Free columns of RREF(B^T) with lowest-index pivoting."""
    Bt = exact.transpose(exact.to_fractions(np.asarray(B).tolist()))
    b = np.asarray(B).shape[0]
    _, pivots = exact.rref(Bt)
    return tuple(c for c in range(b) if c not in pivots)


def build_chart(B, A=None, initial_charges: Sequence[float] | None = None,
                selection: Sequence[int] | None = None) -> CoordinateChart:
    """Solve ``B^T x = c`` for the non-selected charges in terms of ``q``.

    ``q^k`` is the charge of branch ``selection[k]``.  When ``A`` is given the
    loop transform is computed as well.
    """
    B = np.asarray(B)
    b, n = B.shape
    m = b - n
    if selection is None:
        selection = auto_selection(B)
    selection = tuple(int(s) for s in selection)
    if len(selection) != m or len(set(selection)) != m or not all(0 <= s < b for s in selection):
        raise BadSelection(f"need {m} distinct coordinate branches, got {list(selection)}")
    dependent = [l for l in range(b) if l not in selection]
    Bt = exact.transpose(exact.to_fractions(B.tolist()))
    B_dep = [[row[l] for l in dependent] for row in Bt]  # n x n
    B_sel = [[row[l] for l in selection] for row in Bt]  # n x m
    if n and exact.det(B_dep) == 0:
        raise BadSelection("the non-coordinate charges cannot be solved for; choose other coords")
    N: list[list[Fraction]] = [[Fraction(0)] * m for _ in range(b)]
    for k, l in enumerate(selection):
        N[l][k] = Fraction(1)
    if n:
        rhs = [[-x for x in row] for row in B_sel]
        sol = exact.solve(B_dep, rhs)  # n x m
        for i, l in enumerate(dependent):
            N[l] = list(sol[i])
    x0 = np.zeros(b) if initial_charges is None else np.asarray(initial_charges, dtype=float)
    if x0.shape != (b,):
        raise ValueError(f"initial charges must have length {b}")
    Nf = np.array([[float(x) for x in row] for row in N], dtype=float).reshape(b, m)
    offsets = x0 - Nf @ x0[list(selection)]
    offsets[list(selection)] = 0.0
    offsets.setflags(write=False)
    c = B.T.astype(float) @ x0
    c.setflags(write=False)
    frozen_N = tuple(tuple(row) for row in N)
    transform = None
    if A is not None:
        transform = tuple(tuple(row) for row in loop_transform(A, frozen_N))
    return CoordinateChart(selection, frozen_N, offsets, c, transform)


def loop_transform(A, N) -> list[list[Fraction]]:
    """The unique nonsingular ``T`` with ``T A^T = N^T``."""
    Aq = exact.to_fractions(A.tolist() if isinstance(A, np.ndarray) else A)
    Nq = exact.to_fractions(N)
    try:
        Xt = exact.solve(Aq, Nq)  # A X = N with X = T^T
    except ValueError as exc:
        raise KernelMismatch("loop matrix is rank deficient") from exc
    if Xt is None:
        raise KernelMismatch("Ker(A^T) != Ker(N^T): loop matrix and chart disagree")
    T = exact.transpose(Xt)
    if exact.det(T) == 0:
        raise KernelMismatch("loop transform is singular")
    return T


def kernels_agree(A, N) -> bool:
    """Exact check of ``Ker(A^T) == Ker(N^T)``, i.e. equal column spaces."""
    return exact.same_column_space(exact.to_fractions(np.asarray(A).tolist()), exact.to_fractions(N))
