"""Four-particle interference on the hypercube multiport.

Simulates output statistics of four partially distinguishable bosons or
fermions, inverts them into indistinguishability quantifiers and
pairwise overlaps, and rebuilds the reduced external state for pure
internal states.
"""

from .external import ExternalState, Quantifiers, build_external_state, projector_expectations, quantifiers
from .extraction import ClassProbabilities, ExtractionReport, extract, extract_from_ensemble, solve_pair
from .interferometer import EventClass, OutputStatistics, full_statistics, hypercube_unitary
from .internal import InternalEnsemble, InternalState, Statistics
from .permgroup import Cycle, Permutation
from .reconstruction import ReconstructionResult, reconstruct, reconstruct_from_ensemble
from .sampling import ShotRecord, estimate, sample
from .tolerances import Tolerances

__version__ = "0.1.0"

__all__ = [
    "ClassProbabilities",
    "Cycle",
    "EventClass",
    "ExternalState",
    "ExtractionReport",
    "InternalEnsemble",
    "InternalState",
    "OutputStatistics",
    "Permutation",
    "Quantifiers",
    "ReconstructionResult",
    "ShotRecord",
    "Statistics",
    "Tolerances",
    "build_external_state",
    "estimate",
    "extract",
    "extract_from_ensemble",
    "full_statistics",
    "hypercube_unitary",
    "projector_expectations",
    "quantifiers",
    "reconstruct",
    "reconstruct_from_ensemble",
    "sample",
    "solve_pair",
]
