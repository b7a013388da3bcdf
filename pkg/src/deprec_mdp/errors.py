"""
Error Types for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

Exception hierarchy shared by all modules. The CLI maps these onto exit
codes: ValidationError -> 2, SolverError -> 3.
"""

from typing import Any, List, Optional


class DeprecMdpError(Exception):
    """Base class for all deprec-mdp errors."""


class ValidationError(DeprecMdpError, ValueError):
    """
    An MDP (or other model input) violates its definition.

    Attributes:
        violations: Violation records from validate_mdp (may be empty when
                    the failure is not tied to a specific table entry)
    """

    def __init__(self, message: str, violations: Optional[List[Any]] = None):
        super().__init__(message)
        self.violations = list(violations or [])


class ParseError(ValidationError):
    """
    Malformed MdpDocument text.

    Attributes:
        line: 1-based line number of the offending token
        column: 1-based column of the offending token
    """

    def __init__(
        self,
        message: str,
        line: int,
        column: int,
        violations: Optional[List[Any]] = None
    ):
        super().__init__(f"line {line}, column {column}: {message}", violations)
        self.line = line
        self.column = column
        self.reason = message


class SolverError(DeprecMdpError, RuntimeError):
    """A solver could not produce a result (iteration cap, singular system)."""


class UnsupportedStructureError(SolverError):
    """
    The MDP has a chain structure the average-reward solver does not handle.

    Attributes:
        witness: Policy whose chain has two or more closed recurrent classes
    """

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


class EnumerationCapError(SolverError):
    """The stationary deterministic policy class is larger than the cap."""


class PolicyExtractionError(SolverError):
    """No action at some state carries positive dual weight."""

    def __init__(self, message: str, state: Optional[str] = None):
        super().__init__(message)
        self.state = state
