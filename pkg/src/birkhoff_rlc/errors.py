"""Exception hierarchy.

Two families: :class:`InputError` means the netlist or the requested
operation is malformed (CLI exit status 2); :class:`DomainError` means the
circuit is well formed but the requested computation is impossible for it,
e.g. a singular mass matrix (CLI exit status 1).
"""

from __future__ import annotations


class CircuitError(Exception):
    """Base class of every error raised by this package."""


class InputError(CircuitError):
    pass


class DomainError(CircuitError):
    pass


# elaboration / topology / chart
class DisconnectedGraph(InputError):
    pass


class NoLoop(InputError):
    pass


class BadLoopCount(InputError):
    pass


class NotAClosedWalk(InputError):
    pass


class RankDeficient(InputError):
    pass


class BadSelection(InputError):
    pass


class KernelMismatch(DomainError):
    pass


# devices
class NotPassive(DomainError):
    pass


class NotMonotone(DomainError):
    pass


class NoBracket(DomainError):
    pass


class InvalidModel(InputError):
    pass


# dynamics / reduction
class SingularMass(DomainError):
    pass


class NewtonDiverged(DomainError):
    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class NotACapacitorLoop(DomainError):
    pass


class NotALinearResistorLoop(DomainError):
    pass


class NonPositiveResistance(DomainError):
    pass


class NonMonotoneConstraint(DomainError):
    pass


class LoopHasInductor(DomainError):
    pass
