"""Closed-form orthogonal solutions for Mochon f-assignments."""
from .assignments import (
    Assignment,
    PolySpec,
    F0,
    monomial,
    lagrange_weights,
    split_h_g,
    check_validity,
)
from .errors import GeometryError, InputError, ScheduleError, WcfError
from .verify import SolutionCertificate, VerifyConfig, verify_solution

__version__ = "0.1.0"
