"""Curves whose normal planes stay at a constant distance from a fixed point."""

from .geom_core import CurveSamples, DomainError, GeometryError, Tolerances, DEFAULT_TOLERANCES
from .frenet_engine import FrameSeries, NaturalEquations, compute_frenet, integrate_natural_equations
from .sphere_map import SphereAssociation, lift_from_sphere, project_to_sphere, s1_of_s, s_of_s1
from .curve_families import (
    CircleInvolute,
    ConstantCurvatureNP,
    PlaneInvolute,
    RectifyingLift,
    SphereCircle,
    TwistedExample,
    generate,
)
from .verifier import VerificationReport, classify, recover_fixed_point

__all__ = [
    "CurveSamples", "DomainError", "GeometryError", "Tolerances", "DEFAULT_TOLERANCES",
    "FrameSeries", "NaturalEquations", "compute_frenet", "integrate_natural_equations",
    "SphereAssociation", "lift_from_sphere", "project_to_sphere", "s1_of_s", "s_of_s1",
    "CircleInvolute", "ConstantCurvatureNP", "PlaneInvolute", "RectifyingLift", "SphereCircle",
    "TwistedExample", "generate", "VerificationReport", "classify", "recover_fixed_point",
]
