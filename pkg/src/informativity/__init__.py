"""Informativity of noisy input-state-output data for structural system properties."""

from .linalg import InputError, Subspace, Tolerances
from .pencil import Pencil, RankVerdict, Region
from .problem import (
    DataSet,
    InconsistentDataError,
    NoisePattern,
    Reduction,
    SystemStructure,
    build_reduction,
    consistency_check,
    load_problem,
)
from .properties import Property, Status, Verdict
from .rank_tests import informativity_test
from .geometric import geometric_test, jstar, lstar

__all__ = [
    "DataSet", "InconsistentDataError", "InputError", "NoisePattern", "Pencil", "Property",
    "RankVerdict", "Reduction", "Region", "Status", "Subspace", "SystemStructure", "Tolerances",
    "Verdict", "build_reduction", "consistency_check", "geometric_test", "informativity_test",
    "jstar", "load_problem", "lstar",
]
