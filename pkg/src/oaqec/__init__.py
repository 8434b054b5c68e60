"""Operator-algebra quantum error correction for finite-dimensional channels."""

__version__ = "0.1.0"

from .algebra import (
    AlgebraStructure,
    Block,
    DegeneracyError,
    VnAlgebra,
    center,
    commutant,
    generated_algebra,
    is_factor,
    structure,
)
from .channel import KrausChannel, choi, choi_distance, compose, validate
from .matcore import DEFAULT_TOL, DimensionError, DomainError, NumericalInstabilityError
from .qec import (
    build_package,
    check_kl,
    check_restricted_noiseless,
    check_subsystem,
    correctable_algebra,
    correction_channel,
    homomorphism_residual,
    noiseless_algebra,
    remix_robustness,
    restricted_code,
    verify_correction,
    verify_fixed,
)

__all__ = [
    "AlgebraStructure",
    "Block",
    "DEFAULT_TOL",
    "DegeneracyError",
    "DimensionError",
    "DomainError",
    "KrausChannel",
    "NumericalInstabilityError",
    "VnAlgebra",
    "build_package",
    "center",
    "check_kl",
    "check_restricted_noiseless",
    "check_subsystem",
    "choi",
    "choi_distance",
    "commutant",
    "compose",
    "correctable_algebra",
    "correction_channel",
    "generated_algebra",
    "homomorphism_residual",
    "is_factor",
    "noiseless_algebra",
    "remix_robustness",
    "restricted_code",
    "structure",
    "validate",
    "verify_correction",
    "verify_fixed",
]
