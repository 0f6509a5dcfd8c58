"""Constitutive models for resistor, inductor and capacitor branches.

Every model is a smooth scalar function ``f`` with an analytic derivative.
The role of ``f`` depends on the branch kind:

========  ==========================================
kind      constitutive relation
========  ==========================================
``R``     ``v = f(i)``           (current controlled)
``RV``    ``i = f(v)``           (voltage controlled)
``L``     ``v = f(i) di/dt``     (inductance function; see below)
``C``     ``v = f(q)``           (elastance function)
========  ==========================================

A ``linear`` model on an inductor branch is the constant inductance
``f(i) = value``; read as ``value * i`` it would vanish at zero current.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import InvalidModel, NoBracket, NotMonotone


class BranchKind(str, enum.Enum):
    R = "R"
    RV = "RV"
    L = "L"
    C = "C"

    @property
    def is_resistor(self) -> bool:
        return self in (BranchKind.R, BranchKind.RV)


class ConstitutiveModel:
    """Base class; subclasses implement ``eval`` and ``deriv``."""

    family: str = ""

    def eval(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def params(self) -> tuple[float, ...]:
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(x)


@dataclass(frozen=True)
class Linear(ConstitutiveModel):
    value: float
    family = "linear"

    def eval(self, x):
        return self.value * x

    def deriv(self, x):
        return self.value + 0.0 * x

    def params(self):
        return (self.value,)


@dataclass(frozen=True)
class Poly(ConstitutiveModel):
    """``f(x) = c0 + c1 x + ... + cK x^K``."""

    coeffs: tuple[float, ...]
    family = "poly"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise InvalidModel("poly model needs at least one coefficient")

    def eval(self, x):
        acc = 0.0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def deriv(self, x):
        acc = 0.0 * x
        for k in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * x + k * self.coeffs[k]
        return acc

    def params(self):
        return self.coeffs


@dataclass(frozen=True)
class Tanh(ConstitutiveModel):
    """``f(x) = a tanh(b x)``."""

    a: float
    b: float
    family = "tanh"

    def eval(self, x):
        return self.a * np.tanh(self.b * x)

    def deriv(self, x):
        t = np.tanh(self.b * x)
        return self.a * self.b * (1.0 - t * t)

    def params(self):
        return (self.a, self.b)


def make_model(family: str, params: Sequence[float]) -> ConstitutiveModel:
    if family == "linear":
        if len(params) != 1:
            raise InvalidModel("linear model takes exactly one value")
        return Linear(float(params[0]))
    if family == "poly":
        return Poly(tuple(params))
    if family == "tanh":
        if len(params) != 2:
            raise InvalidModel("tanh model takes exactly two values a b")
        return Tanh(float(params[0]), float(params[1]))
    raise InvalidModel(f"unknown model family {family!r}")


@dataclass(frozen=True)
class PassivityReport:
    passed: bool
    first_violation: float | None = None
    product: float | None = None


def _symmetric_grid(lo: float, hi: float, samples: int) -> np.ndarray:
    # ordered by distance from zero, alternating sides
    k = np.arange(1, samples + 1)
    pos = hi * k / samples
    neg = lo * k / samples
    return np.column_stack([neg, pos]).ravel()


def passivity_check(model: ConstitutiveModel, lo: float = -10.0, hi: float = 10.0,
                    samples: int = 1000) -> PassivityReport:
    """Check ``f(x) x > 0`` on a grid symmetric about (and excluding) zero."""
    if not lo < 0 < hi:
        raise ValueError("passivity range must straddle zero")
    grid = _symmetric_grid(lo, hi, samples)
    prod = model.eval(grid) * grid
    bad = np.flatnonzero(~(prod > 0))
    if bad.size:
        i = bad[0]
        return PassivityReport(False, float(grid[i]), float(prod[i]))
    return PassivityReport(True)


def is_strictly_increasing(model: ConstitutiveModel, lo: float = -10.0, hi: float = 10.0,
                           samples: int = 1000) -> bool:
    grid = np.linspace(lo, hi, 2 * samples + 1)
    return bool(np.all(np.diff(model.eval(grid)) > 0) and np.all(model.deriv(grid) > 0))


def inductance(model: ConstitutiveModel, i):
    """Inductance function of an L branch at current ``i``."""
    if isinstance(model, Linear):
        return model.value + 0.0 * i
    return model.eval(i)


def _poly_antiderivative(coeffs: Sequence[float], x: float, shift: int) -> float:
    # integral_0^x sum c_k s^(k + shift - 1) ds
    return sum(c * x ** (k + shift) / (k + shift) for k, c in enumerate(coeffs))


def stored_energy(kind: BranchKind | str, model: ConstitutiveModel, x: float) -> float:
    """Energy held by an inductor at current ``x`` or a capacitor at charge ``x``.

    ``W_L(i) = int_0^i L(s) s ds`` and ``W_C(q) = int_0^q C(s) ds``.
    """
    kind = BranchKind(kind)
    if kind is BranchKind.L:
        if isinstance(model, Linear):
            return 0.5 * model.value * x * x
        if isinstance(model, Poly):
            return _poly_antiderivative(model.coeffs, x, 2)
        integrand: Callable[[float], float] = lambda s: float(model.eval(s)) * s
    elif kind is BranchKind.C:
        if isinstance(model, Linear):
            return 0.5 * model.value * x * x
        if isinstance(model, Poly):
            return _poly_antiderivative(model.coeffs, x, 1)
        integrand = lambda s: float(model.eval(s))
    else:
        raise ValueError("stored energy is defined for L and C branches only")
    if x == 0.0:
        return 0.0
    value, _ = integrate.quad(integrand, 0.0, x, epsabs=1e-12, epsrel=1e-12, limit=200)
    return value


def solve_scalar(fun: Callable[[float], float], dfun: Callable[[float], float], guess: float,
                 ftol: float, xtol: float = 1e-15, max_iter: int = 200,
                 step: float | None = None) -> float:
    """Safeguarded Newton iteration for an increasing-or-decreasing scalar root.

    Newton steps are taken while they reduce the residual; once a sign change
    is bracketed, iterates that leave the bracket are replaced by bisection.
    The bracket is grown geometrically from ``guess`` when Newton stalls.
    """
    x = float(guess)
    fx = fun(x)
    if abs(fx) <= ftol:
        return x
    # plain Newton first: cheap and usually enough with a warm start
    for _ in range(8):
        d = dfun(x)
        if d == 0 or not math.isfinite(d):
            break
        xn = x - fx / d
        fn = fun(xn)
        if not math.isfinite(fn) or abs(fn) >= abs(fx):
            break
        x, fx = xn, fn
        if abs(fx) <= ftol:
            return x

    # bracket the root
    h = step if step is not None else max(1.0, abs(x)) * 1e-3
    lo, flo, hi, fhi = x, fx, x, fx
    for _ in range(200):
        if flo * fhi <= 0:
            break
        lo, hi = lo - h, hi + h
        flo, fhi = fun(lo), fun(hi)
        h *= 2.0
        if not (math.isfinite(flo) and math.isfinite(fhi)):
            raise NoBracket(f"residual not finite while bracketing near {guess!r}")
    else:
        raise NoBracket(f"no sign change found around {guess!r}")
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    # keep fun(lo) < 0 < fun(hi)
    if flo > 0:
        lo, hi = hi, lo
    x = 0.5 * (lo + hi)
    fx = fun(x)
    for _ in range(max_iter):
        if abs(fx) <= ftol:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        d = dfun(x)
        xn = x - fx / d if d != 0 and math.isfinite(d) else None
        if xn is None or not (min(lo, hi) < xn < max(lo, hi)):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= xtol * max(1.0, abs(x)) and abs(hi - lo) <= 4 * xtol * max(1.0, abs(x)):
            x = xn
            fx = fun(x)
            break
        x = xn
        fx = fun(x)
    if abs(fx) <= ftol:
        return x
    raise NoBracket(f"root refinement stalled at x={x!r}, residual {fx!r}")


def invert(model: ConstitutiveModel, y: float, guess: float = 0.0) -> float:
    """Return ``v`` with ``model(v) = y``; the model must be strictly monotone."""
    if isinstance(model, Linear):
        if model.value <= 0:
            raise NotMonotone("linear model with non-positive slope cannot be inverted")
        return y / model.value
    tol = 1e-12 * max(1.0, abs(y))
    v = solve_scalar(lambda s: float(model.eval(s)) - y, lambda s: float(model.deriv(s)),
                     guess, tol)
    if not float(model.deriv(v)) > 0:
        raise NotMonotone(f"model is not increasing at the solution v={v!r}")
    return v


@dataclass(frozen=True)
class Device:
    branch_id: str
    kind: BranchKind
    model: ConstitutiveModel


@dataclass(frozen=True)
class DeviceSet:
    """Devices in canonical branch order: resistors, inductors, capacitors."""

    devices: tuple[Device, ...]

    def __post_init__(self):
        order = [0 if d.kind.is_resistor else 1 if d.kind is BranchKind.L else 2
                 for d in self.devices]
        if order != sorted(order):
            raise ValueError("devices are not in canonical R, L, C order")

    @property
    def resistors(self) -> tuple[Device, ...]:
        return tuple(d for d in self.devices if d.kind.is_resistor)

    @property
    def inductors(self) -> tuple[Device, ...]:
        return tuple(d for d in self.devices if d.kind is BranchKind.L)

    @property
    def capacitors(self) -> tuple[Device, ...]:
        return tuple(d for d in self.devices if d.kind is BranchKind.C)

    @property
    def r(self) -> int:
        return len(self.resistors)

    @property
    def k(self) -> int:
        return len(self.inductors)

    @property
    def p(self) -> int:
        return len(self.capacitors)

    def __len__(self) -> int:
        return len(self.devices)

    def __getitem__(self, i) -> Device:
        return self.devices[i]
