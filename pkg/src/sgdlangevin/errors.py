"""Exception types shared across the package."""

from __future__ import annotations


class InvalidArgument(ValueError):
    pass


class UnsupportedTarget(ValueError):
    """The target lacks a constant the requested theorem needs (e.g. no Hessian-Lipschitz constant)."""


class NumericFailure(ArithmeticError):
    def __init__(self, message, theta=None, step=None):
        super().__init__(message)
        self.theta = theta
        self.step = step


class ResourceLimit(RuntimeError):
    pass


class InfeasiblePlan(InvalidArgument):
    """No schedule satisfies the theorem's preconditions.

    ``conditions`` holds every checked inequality, failed ones included.
    """

    def __init__(self, message, conditions=()):
        super().__init__(message)
        self.conditions = list(conditions)

    @property
    def failed(self):
        return [c for c in self.conditions if not c.passed]
