"""Internal (non-interfering) degrees of freedom of the four particles.

Each particle carries an independent density operator.  Overlaps between
them enter the interference only through traces of matrix products taken
along the cycles of a permutation.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .permgroup import Cycle

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-12
PURITY_TOL = 1e-10
EPS_ORTH = 1e-9
DEFAULT_DIMENSION = 4

PAIRS = tuple(itertools.combinations(range(1, 5), 2))
TRIADS = tuple(Cycle(t) for t in itertools.combinations(range(1, 5), 3))
# one representative per inverse pair of 4-cycles, in the order used by the
# class probabilities of symmetries 1, 2, 3
FOURCYCLES = (Cycle((1, 2, 3, 4)), Cycle((1, 3, 2, 4)), Cycle((1, 2, 4, 3)))


class Statistics(str, enum.Enum):
    BOSON = "boson"
    FERMION = "fermion"

    @property
    def sign(self) -> int:
        """+1 for bosons, -1 for fermions (the upper/lower sign convention)."""
        return 1 if self is Statistics.BOSON else -1

    def exchange_factor(self, perm_sign: int) -> int:
        return 1 if self is Statistics.BOSON else perm_sign


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class InternalState:
    """Single-particle internal density operator."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidStateError(f"density operator must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise InvalidStateError("density operator is not Hermitian")
        if abs(np.trace(m) - 1) > TRACE_TOL:
            raise InvalidStateError(f"density operator has trace {np.trace(m).real:.3g}")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise InvalidStateError("density operator is not positive semi-definite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, vec) -> "InternalState":
        v = np.asarray(vec, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            raise InvalidStateError("zero state vector")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    @property
    def is_pure(self) -> bool:
        return self.purity >= 1 - PURITY_TOL


@dataclass(frozen=True, eq=False)
class InternalEnsemble:
    """Four uncorrelated particles: rho = rho_1 x rho_2 x rho_3 x rho_4."""

    states: tuple[InternalState, ...]
    statistics: Statistics = Statistics.BOSON

    def __post_init__(self):
        states = tuple(s if isinstance(s, InternalState) else InternalState(s) for s in self.states)
        if len(states) != 4:
            raise InvalidStateError(f"need exactly 4 internal states, got {len(states)}")
        dims = {s.dimension for s in states}
        if len(dims) != 1:
            raise InvalidStateError(f"internal states have mismatched dimensions {sorted(dims)}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "statistics", Statistics(self.statistics))
        if self.statistics is Statistics.FERMION and self.is_pure:
            if all(trace_product(self, Cycle(p)).real > 1 - 1e-12 for p in PAIRS):
                warnings.warn(
                    "identical pure internal states for fermions: the external state is "
                    "formally defined but such a preparation is not physical",
                    stacklevel=2,
                )

    @classmethod
    def from_vectors(cls, vectors, statistics=Statistics.BOSON) -> "InternalEnsemble":
        return cls(tuple(InternalState.from_vector(v) for v in vectors), statistics)

    @property
    def dimension(self) -> int:
        return self.states[0].dimension

    @property
    def is_pure(self) -> bool:
        return all(s.is_pure for s in self.states)

    def with_statistics(self, statistics) -> "InternalEnsemble":
        return InternalEnsemble(self.states, Statistics(statistics))

    def rho(self, alpha: int) -> np.ndarray:
        return self.states[alpha - 1].matrix


@dataclass(frozen=True)
class OverlapTrace:
    """Polar form ``T exp(i phi)`` of a trace product along a cycle.

    ``phase`` is ``None`` when the magnitude is below the orthogonality
    threshold, in which case no collective phase exists.
    """

    cycle: Cycle
    value: complex
    magnitude: float
    phase: float | None

    @property
    def present(self) -> bool:
        return self.phase is not None


def _as_cycle(cycle) -> Cycle:
    return cycle if isinstance(cycle, Cycle) else Cycle(tuple(cycle))


def trace_product(ensemble: InternalEnsemble, cycle) -> complex:
    """``Tr(rho_a rho_b ... rho_c)`` for the cycle ``(a b ... c)``."""
    cycle = _as_cycle(cycle)
    if not set(cycle.entries) <= {1, 2, 3, 4}:
        raise ValueError(f"cycle {cycle} refers to particles outside 1..4")
    prod = ensemble.rho(cycle.entries[0])
    for a in cycle.entries[1:]:
        # sequential sum over the inner index instead of BLAS: zero padding
        # then only appends exact zeros, keeping results bit-identical
        prod = (prod[:, :, None] * ensemble.rho(a)[None, :, :]).sum(axis=1)
    return complex(np.trace(prod))


def wrap_phase(phi: float) -> float:
    """Map an angle into [-pi, pi)."""
    out = (phi + np.pi) % (2 * np.pi) - np.pi
    return float(out)


def collective_phase(ensemble: InternalEnsemble, cycle, eps_orth: float = EPS_ORTH) -> OverlapTrace:
    cycle = _as_cycle(cycle)
    value = trace_product(ensemble, cycle)
    magnitude = abs(value)
    if len(cycle) <= 2:
        # Tr(rho_a rho_b) >= 0 for positive operators
        return OverlapTrace(cycle, value, magnitude, 0.0 if magnitude >= eps_orth else None)
    if magnitude < eps_orth:
        return OverlapTrace(cycle, value, magnitude, None)
    return OverlapTrace(cycle, value, magnitude, wrap_phase(np.angle(value)))


# --- overlap graphs ---------------------------------------------------------

TOPOLOGIES = ("a", "b", "c", "d", "e", "none")


@dataclass(frozen=True, eq=False)
class OverlapGraph:
    adjacency: np.ndarray
    topology: str

    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a, b in PAIRS if self.adjacency[a - 1, b - 1]]

    def has_edge(self, a: int, b: int) -> bool:
        return bool(self.adjacency[a - 1, b - 1])

    def cycle_present(self, cycle) -> bool:
        ent = _as_cycle(cycle).entries
        if len(ent) == 1:
            return True
        return all(self.has_edge(a, b) for a, b in zip(ent, ent[1:] + ent[:1]))


def classify_topology(adjacency: np.ndarray) -> str:
    """Name the overlap-graph pattern: a (complete) through e, else ``"none"``.

    ``"none"`` covers every graph without a closed loop, where no collective
    phase can exist.
    """
    missing = [(a, b) for a, b in PAIRS if not adjacency[a - 1, b - 1]]
    if not missing:
        return "a"
    if len(missing) == 1:
        return "b"
    if len(missing) == 2:
        shared = set(missing[0]) & set(missing[1])
        return "c" if shared else "d"
    if len(missing) == 3:
        # three surviving edges carry a loop only if they close a triangle,
        # i.e. the missing edges all touch one isolated particle
        common = set(missing[0]) & set(missing[1]) & set(missing[2])
        return "e" if common else "none"
    return "none"


def graph_from_pair_overlaps(pair_overlaps: dict, eps_orth: float = EPS_ORTH) -> OverlapGraph:
    adj = np.zeros((4, 4), dtype=bool)
    for (a, b), t in pair_overlaps.items():
        if t > eps_orth:
            adj[a - 1, b - 1] = adj[b - 1, a - 1] = True
    adj.setflags(write=False)
    return OverlapGraph(adj, classify_topology(adj))


def pair_overlaps(ensemble: InternalEnsemble) -> dict[tuple[int, int], float]:
    return {p: trace_product(ensemble, Cycle(p)).real for p in PAIRS}


def overlap_graph(ensemble: InternalEnsemble, eps_orth: float = EPS_ORTH) -> OverlapGraph:
    if eps_orth <= 0:
        raise ValueError("eps_orth must be positive")
    return graph_from_pair_overlaps(pair_overlaps(ensemble), eps_orth)


# --- marking a particle -----------------------------------------------------

def make_distinguishable(ensemble: InternalEnsemble, marked: int) -> InternalEnsemble:
    """Embed into one extra internal dimension and park ``marked`` there.

    The other three operators are zero-padded, so their mutual trace
    products are unchanged while every product involving ``marked``
    vanishes.
    """
    if marked not in (1, 2, 3, 4):
        raise ValueError(f"marked particle must be in 1..4, got {marked}")
    d = ensemble.dimension
    states = []
    for alpha in range(1, 5):
        m = np.zeros((d + 1, d + 1), dtype=complex)
        if alpha == marked:
            m[d, d] = 1.0
        else:
            m[:d, :d] = ensemble.rho(alpha)
        states.append(InternalState(m))
    return InternalEnsemble(tuple(states), ensemble.statistics)


# --- random states ------------------------------------------------------------

def random_pure_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_mixed_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> InternalState:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return InternalState(m / np.trace(m).real)


def random_ensemble(
    rng: np.random.Generator,
    dimension: int = DEFAULT_DIMENSION,
    pure: bool = True,
    statistics=Statistics.BOSON,
) -> InternalEnsemble:
    if pure:
        return InternalEnsemble.from_vectors(
            [random_pure_vector(dimension, rng) for _ in range(4)], statistics
        )
    return InternalEnsemble(tuple(random_mixed_state(dimension, rng) for _ in range(4)), statistics)


# orthogonal pairs realising each overlap-graph pattern for particles 1..4
TOPOLOGY_ORTHOGONALITIES = {
    "a": (),
    "b": ((1, 3),),
    "c": ((1, 3), (1, 4)),
    "d": ((1, 3), (2, 4)),
    "e": ((1, 2), (1, 3), (1, 4)),
    "none": ((1, 2), (1, 3), (1, 4), (2, 3)),
}


def random_pure_ensemble_with_topology(
    topology: str,
    rng: np.random.Generator,
    dimension: int = DEFAULT_DIMENSION,
    statistics=Statistics.BOSON,
    relabel: bool = True,
) -> InternalEnsemble:
    """Random pure ensemble whose overlap graph has the requested pattern.

    Required orthogonalities are imposed by projecting each new vector onto
    the complement of the earlier vectors it must be orthogonal to.  With
    ``relabel`` the particle labels are shuffled afterwards.
    """
    zero_pairs = TOPOLOGY_ORTHOGONALITIES[topology]
    vecs: list[np.ndarray] = []
    for k in range(1, 5):
        v = random_pure_vector(dimension, rng)
        against = [vecs[a - 1] for a, b in zero_pairs if b == k]
        if against:
            q, _ = np.linalg.qr(np.array(against).T)
            v = v - q @ (q.conj().T @ v)
        vecs.append(v / np.linalg.norm(v))
    if relabel:
        vecs = [vecs[i] for i in rng.permutation(4)]
    return InternalEnsemble.from_vectors(vecs, statistics)


def basis_vector(dim: int, k: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v
