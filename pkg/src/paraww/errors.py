"""Exception types raised by the solvers and the time stepper."""
from __future__ import annotations


class ParawwError(Exception):
    """Base class for package errors."""


class DepthViolation(ParawwError):
    """The fluid depth ``1 + eta`` dropped below the admissible bound ``h0``."""

    def __init__(self, depth_min: float, h0: float):
        super().__init__(f"min(1 + eta) = {depth_min:.6g} < h0 = {h0:.6g}")
        self.depth_min = depth_min
        self.h0 = h0


class FlatteningFailure(ParawwError):
    """No smoothing parameter delta kept ``d_z rho >= h0/2`` on the grid."""


class NoConvergence(ParawwError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class EllipticityViolation(ParawwError):
    """``4 alpha |xi|^2 - (beta . xi)^2`` is not positive, or a symbol lost its sign."""


class TaylorSignViolation(ParawwError):
    """The Taylor coefficient ``a`` is not positive where a square root is needed."""


class InstabilityError(ParawwError):
    """A marching scheme amplified its solution beyond the allowed factor."""


class OutsideDomain(ParawwError, ValueError):
    """A physical sample point lies outside the fluid domain."""
