"""Multi-task learning classifier system with tree-structured boolean
features, observed-list relatedness estimation, and automatic fragment
transfer between tasks."""

__version__ = "0.1.0"

from .fragments import CodeFragment, build, combine, leaf, negate, parse, render
from .problems import ProblemSpec, enumerate_all, parse_problem, sample_instance
from .xcs import Classifier, XcsParams, XcsSystem
from .features import FeatureModule, FeatureParams, ObservedList, SharedCfPopulation
from .coordinator import (
    CoordinatorParams,
    MultiTaskCoordinator,
    adjusted_vote,
    build_boolean_coordinator,
    build_broadcast_coordinator,
    fragment_relatedness,
    relatedness,
)

__all__ = [
    "CodeFragment", "build", "combine", "leaf", "negate", "parse", "render",
    "ProblemSpec", "enumerate_all", "parse_problem", "sample_instance",
    "Classifier", "XcsParams", "XcsSystem",
    "FeatureModule", "FeatureParams", "ObservedList", "SharedCfPopulation",
    "CoordinatorParams", "MultiTaskCoordinator", "adjusted_vote",
    "build_boolean_coordinator", "build_broadcast_coordinator",
    "fragment_relatedness", "relatedness",
]
