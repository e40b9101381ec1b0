"""Custom service layer exceptions"""

from typing import Any, Dict, Optional


class ServiceException(Exception):
    """Base exception for service layer"""

    default_code: str = "SERVICE_ERROR"

    def __init__(self, message: str, error_code: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.error_code = error_code or self.default_code
        self.details = details or {}
        super().__init__(self.message)


class ValidationError(ServiceException):
    """Raised when input is malformed or inconsistent"""
    default_code = "VALIDATION_ERROR"


class BusinessRuleError(ServiceException):
    """Raised when the structure of an instance violates an operation's precondition"""
    default_code = "BUSINESS_RULE_ERROR"


class InfeasibleError(ServiceException):
    """Raised when a well-formed instance has a negative answer"""
    default_code = "INFEASIBLE"


class InvariantViolation(ServiceException):
    """Raised when an internal invariant fails; always a bug"""
    default_code = "INVARIANT_VIOLATION"


# Input errors

class VertexMismatch(ValidationError):
    default_code = "VERTEX_MISMATCH"


class NotAPartialOrder(ValidationError):
    default_code = "NOT_A_PARTIAL_ORDER"


class NotAPath(ValidationError):
    default_code = "NOT_A_PATH"


class MissingPath(ValidationError):
    default_code = "MISSING_PATH"


class WeightMismatch(ValidationError):
    default_code = "WEIGHT_MISMATCH"


class UnrepresentableField(ValidationError):
    default_code = "UNREPRESENTABLE_FIELD"


class NotATree(ValidationError):
    default_code = "NOT_A_TREE"


class NotASingleCycle(ValidationError):
    default_code = "NOT_A_SINGLE_CYCLE"


class WrongShape(ValidationError):
    default_code = "WRONG_SHAPE"


class NotStrictlyPositive(ValidationError):
    default_code = "NOT_STRICTLY_POSITIVE"


class NotALattice(ValidationError):
    default_code = "NOT_A_LATTICE"


class NotMinimalForm(ValidationError):
    default_code = "NOT_MINIMAL_FORM"


class MalformedInput(ValidationError):
    default_code = "MALFORMED_JSON"


class NegativeTarget(ValidationError):
    default_code = "NEGATIVE_TARGET"


class UnsummableBoundary(ValidationError):
    default_code = "UNSUMMABLE_BOUNDARY"


class TooLarge(ValidationError):
    default_code = "TOO_LARGE"


# Structural preconditions

class CyclicInput(BusinessRuleError):
    default_code = "CYCLIC_INPUT"


class CyclicSupport(BusinessRuleError):
    default_code = "CYCLIC_SUPPORT"


class Disconnected(BusinessRuleError):
    default_code = "DISCONNECTED"


class Unreachable(BusinessRuleError):
    default_code = "UNREACHABLE"


# Negative answers

class Infeasible(InfeasibleError):
    default_code = "INFEASIBLE"


class NotDominated(InfeasibleError):
    default_code = "NOT_DOMINATED"


# Internal assertions

class InsufficientMass(InvariantViolation):
    default_code = "INSUFFICIENT_MASS"


class FluxImbalance(InvariantViolation):
    default_code = "FLUX_IMBALANCE"


class DriftBoundViolation(InvariantViolation):
    default_code = "DRIFT_BOUND_VIOLATION"
