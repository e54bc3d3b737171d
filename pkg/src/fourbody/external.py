"""Reduced external state of four particles and the quantifiers built on it.

Rows and columns of the 24 x 24 matrix are particle labellings, ordered as
in :func:`fourbody.permgroup.enumerate_s4`.  Entry ``(pi, pi')`` depends
only on ``kappa = pi (pi')^-1``, so the whole matrix is an expansion of the
24 numbers ``[rho_E]_{kappa, eps}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .internal import (
    FOURCYCLES,
    PAIRS,
    TRIADS,
    InternalEnsemble,
    Statistics,
    trace_product,
)
from .permgroup import Cycle, enumerate_s4, kappa_index_table

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
DIAGONAL_TOL = 1e-12
EIGEN_TOL = 1e-9


class InvariantError(RuntimeError):
    """A computed object violates an invariant it must satisfy by construction."""


@dataclass(frozen=True, eq=False)
class ExternalState:
    matrix: np.ndarray
    statistics: Statistics = Statistics.BOSON

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (24, 24):
            raise ValueError(f"external state must be 24x24, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "statistics", Statistics(self.statistics))

    def check(self) -> None:
        """Raise :class:`InvariantError` unless this is a valid reduced state."""
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise InvariantError("external state is not Hermitian")
        if abs(np.trace(m) - 1) > TRACE_TOL:
            raise InvariantError("external state does not have unit trace")
        if np.max(np.abs(np.diag(m) - 1 / 24)) > DIAGONAL_TOL:
            raise InvariantError("diagonal entries differ from 1/24")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -PSD_TOL:
            raise InvariantError("external state is not positive semi-definite")

    def kappa_elements(self) -> np.ndarray:
        """The first column, ``[rho_E]_{kappa, eps}`` for every kappa."""
        return self.matrix[:, 0].copy()

    def conjugate(self) -> "ExternalState":
        return ExternalState(self.matrix.conj(), self.statistics)

    def index_reduction_residual(self) -> float:
        """Largest deviation of any entry from ``[rho_E]_{kappa, eps}``."""
        return float(np.max(np.abs(self.matrix - self.kappa_elements()[kappa_index_table()])))


def expand_kappa_elements(elements, statistics=Statistics.BOSON) -> ExternalState:
    elements = np.asarray(elements, dtype=complex)
    return ExternalState(elements[kappa_index_table()], statistics)


def kappa_element(ensemble: InternalEnsemble, kappa) -> complex:
    """``[rho_E]_{kappa, eps}`` from trace products over the cycles of kappa."""
    value = complex(ensemble.statistics.exchange_factor(kappa.sign)) / 24
    for cyc in kappa.cycles:
        if len(cyc) > 1:
            value *= trace_product(ensemble, cyc)
    return value


def build_external_state(ensemble: InternalEnsemble) -> ExternalState:
    elements = [kappa_element(ensemble, k) for k in enumerate_s4()]
    return expand_kappa_elements(elements, ensemble.statistics)


# --- indistinguishability quantifiers ---------------------------------------

@dataclass(frozen=True)
class Quantifiers:
    I_112: float
    I_13: float
    I_22: float
    I_4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.I_112, self.I_13, self.I_22, self.I_4)

    def as_dict(self) -> dict[str, float]:
        return {"I_112": self.I_112, "I_13": self.I_13, "I_22": self.I_22, "I_4": self.I_4}


def _t(ensemble, *labels) -> complex:
    return trace_product(ensemble, Cycle(labels))


def _two_re(ensemble, cycle: Cycle) -> float:
    # Tr(...) + Tr(inverse ...) = 2 T cos(phi)
    return 2 * trace_product(ensemble, cycle).real


def quantifiers(ensemble: InternalEnsemble) -> Quantifiers:
    t = {p: _t(ensemble, *p).real for p in PAIRS}
    i112 = sum(t.values())
    i22 = t[1, 2] * t[3, 4] + t[1, 3] * t[2, 4] + t[1, 4] * t[2, 3]
    i13 = sum(_two_re(ensemble, c) for c in TRIADS)
    i4 = sum(_two_re(ensemble, c) for c in FOURCYCLES)
    return Quantifiers(float(i112), float(i13), float(i22), float(i4))


def projector_expectation(ensemble: InternalEnsemble, subset) -> float:
    """Expectation of the (anti)symmetric projector for a subset of particles.

    Subsets of two and three particles refer to the state built from those
    particles alone; the full set gives the four-particle value.
    """
    subset = tuple(sorted(subset))
    if len(subset) not in (2, 3, 4) or not set(subset) <= {1, 2, 3, 4} or len(set(subset)) != len(subset):
        raise ValueError(f"subset must hold 2, 3 or 4 distinct particles, got {subset}")
    if len(subset) == 4:
        q = quantifiers(ensemble)
        return (1 + q.I_112 + q.I_13 + q.I_22 + q.I_4) / 24
    if len(subset) == 3:
        a, b, c = subset
        pairs = _t(ensemble, a, b).real + _t(ensemble, a, c).real + _t(ensemble, b, c).real
        return (1 + pairs + _two_re(ensemble, Cycle(subset))) / 6
    return (1 + _t(ensemble, *subset).real) / 2


@dataclass(frozen=True)
class ProjectorExpectations:
    four_particle: float
    three_particle_avg: float
    two_particle_avg: float
    per_subset: dict = field(default_factory=dict)


def projector_expectations(ensemble: InternalEnsemble) -> ProjectorExpectations:
    q = quantifiers(ensemble)
    per_subset = {}
    for n in (2, 3):
        for sub in itertools.combinations(range(1, 5), n):
            per_subset[sub] = projector_expectation(ensemble, sub)
    return ProjectorExpectations(
        four_particle=(1 + q.I_112 + q.I_13 + q.I_22 + q.I_4) / 24,
        three_particle_avg=(1 + q.I_112 / 2 + q.I_13 / 4) / 6,
        two_particle_avg=(1 + q.I_112 / 6) / 2,
        per_subset=per_subset,
    )


# --- reduced states of fewer particles ---------------------------------------

@dataclass(frozen=True, eq=False)
class ReducedExternalState:
    """State of the leading ``n`` particles after tracing out the rest.

    The basis is every ordered tuple of ``n`` distinct modes, so the matrix
    is block diagonal with one ``n! x n!`` block per set of occupied modes.
    """

    basis: tuple[tuple[int, ...], ...]
    matrix: np.ndarray
    statistics: Statistics

    @property
    def n(self) -> int:
        return len(self.basis[0])

    def blocks(self) -> dict[frozenset, np.ndarray]:
        groups: dict[frozenset, list[int]] = {}
        for i, b in enumerate(self.basis):
            groups.setdefault(frozenset(b), []).append(i)
        return {k: self.matrix[np.ix_(v, v)] for k, v in groups.items()}

    def projector_expectation(self) -> float:
        """``Tr(P rho)`` with ``P`` the n-particle (anti)symmetric projector."""
        index = {b: i for i, b in enumerate(self.basis)}
        total = 0j
        for tau in itertools.permutations(range(self.n)):
            sgn = self.statistics.exchange_factor(_perm_sign(tau))
            for j, b in enumerate(self.basis):
                # <b'| P_tau |b> is nonzero only for b' = b permuted by tau
                bp = tuple(b[t] for t in tau)
                total += sgn * self.matrix[j, index[bp]]
        return float((total / math.factorial(self.n)).real)


def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def partial_trace(state: ExternalState, keep: int) -> ReducedExternalState:
    """Trace out particles ``keep + 1 .. 4``; ``keep`` is 2 or 3."""
    if keep not in (2, 3):
        raise ValueError(f"can keep 2 or 3 particles, got {keep}")
    elems = enumerate_s4()
    basis = tuple(sorted({p.images[:keep] for p in elems}))
    index = {b: i for i, b in enumerate(basis)}
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for i, p in enumerate(elems):
        for j, q in enumerate(elems):
            if p.images[keep:] == q.images[keep:]:
                out[index[p.images[:keep]], index[q.images[:keep]]] += state.matrix[i, j]
    return ReducedExternalState(basis, out, state.statistics)


def symmetric_vector(statistics: Statistics) -> np.ndarray:
    """Totally (anti)symmetric state over the 24 labellings."""
    v = np.array([statistics.exchange_factor(p.sign) for p in enumerate_s4()], dtype=complex)
    return v / np.sqrt(24)


def symmetric_eigenvalue(state: ExternalState) -> float:
    psi = symmetric_vector(state.statistics)
    image = state.matrix @ psi
    lam = complex(psi.conj() @ image)
    if abs(lam.imag) > EIGEN_TOL or np.linalg.norm(image - lam * psi) > EIGEN_TOL:
        raise InvariantError("(anti)symmetric state is not an eigenvector of rho_E")
    return float(lam.real)
