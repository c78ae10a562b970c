"""Partial pole assignment for symmetric quadratic pencils with delayed feedback.

The closed loop ``lam^2 M + lam (C - B F^T e^{-lam tau}) + K - B G^T e^{-lam tau}``
gets ``p`` chosen open-loop poles moved to prescribed values while every
other eigenpair is left untouched. Single-input gains have a closed form;
several inputs are handled one channel at a time with only p x p solves.
"""

from . import errors
from .baseline import assign_multi_baseline
from .model import (
    DEFAULT_TOL,
    AssignmentTarget,
    FeedbackSolution,
    QuadraticSystem,
    SpectrumPartition,
    Tolerances,
    build_partition,
    make_target,
    validate_system,
)
from .multi_input import assign_multi
from .qep import EigenpairSet, open_loop_spectrum, orthogonality_diagnostics
from .single_input import assign_single, beta_explicit, feedback_from_beta
from .verification import VerificationReport, verify_solution

__version__ = "0.1.0"

__all__ = [
    "errors",
    "DEFAULT_TOL",
    "Tolerances",
    "QuadraticSystem",
    "SpectrumPartition",
    "AssignmentTarget",
    "FeedbackSolution",
    "EigenpairSet",
    "VerificationReport",
    "validate_system",
    "build_partition",
    "make_target",
    "open_loop_spectrum",
    "orthogonality_diagnostics",
    "assign_single",
    "assign_multi",
    "assign_multi_baseline",
    "beta_explicit",
    "feedback_from_beta",
    "verify_solution",
]
