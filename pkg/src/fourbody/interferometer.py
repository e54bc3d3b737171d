"""Hypercube multiport, its symmetries, and output-event probabilities."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .external import ExternalState, Quantifiers, build_external_state, quantifiers
from .internal import InternalEnsemble, Statistics, trace_product
from .permgroup import Cycle, Permutation, enumerate_s4

UNITARY_TOL = 1e-12
IMAG_TOL = 1e-10
NEGATIVE_CLAMP = 1e-12
NORMALIZATION_TOL = 1e-10
CLASS_SPREAD_TOL = 1e-9


class NumericalIntegrityError(RuntimeError):
    pass


class SymmetryViolationError(RuntimeError):
    pass


# --- unitary -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModeUnitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"mode unitary must be 4x4, got {m.shape}")
        if np.max(np.abs(m @ m.conj().T - np.eye(4))) > UNITARY_TOL:
            raise ValueError("matrix is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def is_hypercube(self) -> bool:
        return bool(np.max(np.abs(self.matrix - _HYPERCUBE)) < 1e-14)


_HYPERCUBE = 0.5 * np.array(
    [[1, 1j, 1j, -1], [1j, 1, -1, 1j], [1j, -1, 1, 1j], [-1, 1j, 1j, 1]], dtype=complex
)
_HYPERCUBE.setflags(write=False)


def hypercube_unitary() -> ModeUnitary:
    return ModeUnitary(_HYPERCUBE)


def coupling_hamiltonian(coupling: float = 1.0) -> np.ndarray:
    """Square-graph Hamiltonian (in units of hbar) whose evolution gives the hypercube."""
    adj = np.array([[0, 1, 1, 0], [1, 0, 0, 1], [1, 0, 0, 1], [0, 1, 1, 0]], dtype=float)
    return coupling * adj


def evolve(hamiltonian: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i H t)`` through the eigendecomposition of a Hermitian ``H``."""
    w, v = np.linalg.eigh(hamiltonian)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def random_unitary(rng: np.random.Generator) -> ModeUnitary:
    z = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return ModeUnitary(q * (d / np.abs(d)))


# --- Rademacher / Walsh --------------------------------------------------------

def rademacher(j: int, s: int) -> int:
    if j not in (1, 2, 3, 4) or s not in (1, 2):
        raise ValueError(f"rademacher defined for j in 1..4, s in 1..2; got ({j}, {s})")
    return -1 if ((2**s * (j - 1)) // 4) % 2 else 1


def walsh(j: int, s: int) -> int:
    if s == 3:
        return rademacher(j, 1) * rademacher(j, 2)
    return rademacher(j, s)


def hypercube_from_rademacher() -> np.ndarray:
    u = np.empty((4, 4), dtype=complex)
    for k in range(1, 5):
        for j in range(1, 5):
            r = sum(rademacher(k, s) * rademacher(j, s) for s in (1, 2))
            u[k - 1, j - 1] = 0.5 * np.exp(1j * np.pi / 4 * (2 - r))
    return u


def sylvester_decomposition() -> tuple[np.ndarray, np.ndarray]:
    """``(Theta, U_S)`` with ``U = Theta U_S Theta``; ``U_S`` is the real Sylvester-Hadamard matrix."""
    u_s = np.kron(np.array([[1, 1], [1, -1]]), np.array([[1, 1], [1, -1]])) / 2
    theta = np.diag([np.exp(1j * np.pi / 4 * sum(1 - rademacher(j, l) for l in (1, 2))) for j in range(1, 5)])
    return theta, u_s


def coefficient_K(kappa: Permutation, s: int) -> int:
    return sum(walsh(j, s) * walsh(kappa(j), s) for j in range(1, 5))


def symmetry_sets(s: int) -> tuple[frozenset, frozenset, frozenset]:
    """Partition of S4 into the sets where K(kappa, s) is +4, -4 and 0."""
    plus, minus, zero = set(), set(), set()
    for k in enumerate_s4():
        {4: plus, -4: minus, 0: zero}[coefficient_K(k, s)].add(k)
    return frozenset(plus), frozenset(minus), frozenset(zero)


# --- events ------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class OccupationEvent:
    occupation: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(x) for x in self.occupation)
        if len(occ) != 4 or any(x < 0 for x in occ) or sum(occ) != 4:
            raise ValueError(f"occupation must be 4 non-negative integers summing to 4, got {occ}")
        object.__setattr__(self, "occupation", occ)

    @property
    def assignment(self) -> tuple[int, ...]:
        """Modes occupied by the particles, ascending."""
        return tuple(j for j, n in enumerate(self.occupation, start=1) for _ in range(n))

    @property
    def multiplicity(self) -> int:
        return 24 // math.prod(math.factorial(n) for n in self.occupation)

    def permuted(self, sigma: Permutation) -> "OccupationEvent":
        return OccupationEvent(tuple(self.occupation[sigma(j) - 1] for j in range(1, 5)))

    def __str__(self):
        return "(" + ",".join(map(str, self.occupation)) + ")"


@lru_cache(maxsize=None)
def all_events() -> tuple[OccupationEvent, ...]:
    """The 35 output occupations in reverse-lexicographic order."""
    occs = [c for c in itertools.product(range(4, -1, -1), repeat=4) if sum(c) == 4]
    return tuple(OccupationEvent(c) for c in occs)


class EventClass(str, enum.Enum):
    F1_I = "F1_I"
    F2_I = "F2_I"
    F3_I = "F3_I"
    F1_II = "F1_II"
    F2_II = "F2_II"
    F3_II = "F3_II"
    A_A = "A_A"
    A_B = "A_B"
    A_1 = "A_1"
    A_2 = "A_2"
    A_3 = "A_3"

    @property
    def size(self) -> int:
        return CLASS_SIZES[self]

    @property
    def symmetry(self) -> int | None:
        """Hypercube symmetry index the class is tied to, if any."""
        digits = [ch for ch in self.value if ch in "123"]
        return int(digits[0]) if digits else None


CLASS_SIZES = {
    EventClass.F1_I: 4, EventClass.F2_I: 4, EventClass.F3_I: 4,
    EventClass.F1_II: 4, EventClass.F2_II: 4, EventClass.F3_II: 4,
    EventClass.A_A: 1, EventClass.A_B: 4,
    EventClass.A_1: 2, EventClass.A_2: 2, EventClass.A_3: 2,
}


def classify_event(event: OccupationEvent) -> EventClass:
    s = event.occupation
    pattern = tuple(sorted(s, reverse=True))
    if pattern == (1, 1, 1, 1):
        return EventClass.A_A
    if pattern == (4, 0, 0, 0):
        return EventClass.A_B
    if pattern == (2, 2, 0, 0):
        # modes 1 and partner hold equal counts (both 2 or both 0)
        for sym, partner in ((1, 2), (2, 3), (3, 4)):
            if s[0] == s[partner - 1]:
                return EventClass(f"A_{sym}")
    kind = "I" if pattern == (3, 1, 0, 0) else "II"
    for sym, partner in ((1, 2), (2, 3), (3, 4)):
        if (s[0] + s[partner - 1]) % 2 == 0:
            return EventClass(f"F{sym}_{kind}")
    raise AssertionError(f"unclassifiable event {s}")


@lru_cache(maxsize=None)
def class_members() -> dict[EventClass, tuple[OccupationEvent, ...]]:
    out: dict[EventClass, list] = {c: [] for c in EventClass}
    for ev in all_events():
        out[classify_event(ev)].append(ev)
    return {c: tuple(v) for c, v in out.items()}


# --- probabilities -----------------------------------------------------------------

def _as_external(state) -> ExternalState:
    if isinstance(state, ExternalState):
        return state
    if isinstance(state, InternalEnsemble):
        return build_external_state(state)
    raise TypeError(f"expected InternalEnsemble or ExternalState, got {type(state).__name__}")


def _amplitudes(u: np.ndarray, event: OccupationEvent) -> np.ndarray:
    """``prod_a U[F_a, pi(a)]`` for every labelling pi."""
    f = np.array(event.assignment) - 1
    perms = np.array([p.images for p in enumerate_s4()]) - 1
    return np.prod(u[f[None, :], perms], axis=1)


def _clean_probability(value: complex, what: str) -> float:
    if abs(value.imag) > IMAG_TOL:
        raise NumericalIntegrityError(f"{what}: imaginary residue {value.imag:.3g}")
    p = value.real
    if p < 0:
        if p < -NEGATIVE_CLAMP:
            raise NumericalIntegrityError(f"{what}: negative probability {p:.3g}")
        p = 0.0
    return float(p)


def transition_probability(state, unitary: ModeUnitary | None, event) -> float:
    """Probability of an output occupation from the full double sum over labellings."""
    rho = _as_external(state).matrix
    u = (unitary or hypercube_unitary()).matrix
    event = event if isinstance(event, OccupationEvent) else OccupationEvent(event)
    a = _amplitudes(u, event)
    value = event.multiplicity * complex(a @ rho @ a.conj())
    return _clean_probability(value, f"event {event}")


def coefficient_A(kappa: Permutation, event, unitary: ModeUnitary | None = None):
    """``S sum_pi prod_a U[F_a, kappa(pi(a))] U*[F_a, pi(a)]``.

    Real for the hypercube (returned as float); complex otherwise.
    """
    unitary = unitary or hypercube_unitary()
    u = unitary.matrix
    event = event if isinstance(event, OccupationEvent) else OccupationEvent(event)
    f = [x - 1 for x in event.assignment]
    total = 0j
    for pi in enumerate_s4():
        term = 1 + 0j
        for a in range(4):
            term *= u[f[a], kappa(pi(a + 1)) - 1] * np.conj(u[f[a], pi(a + 1) - 1])
        total += term
    total *= event.multiplicity
    if unitary.is_hypercube:
        if abs(total.imag) > IMAG_TOL:
            raise NumericalIntegrityError(f"A({kappa}, {event}) not real for the hypercube")
        return float(total.real)
    return complex(total)


@dataclass(frozen=True, eq=False)
class OutputStatistics:
    per_event: dict
    per_class: dict
    statistics: Statistics
    hypercube: bool = True
    pure: bool | None = None
    marked: int | None = None

    def probability(self, event) -> float:
        event = event if isinstance(event, OccupationEvent) else OccupationEvent(tuple(event))
        return self.per_event[event]

    def total(self) -> float:
        return float(sum(self.per_event.values()))

    def max_class_spread(self) -> float:
        spread = 0.0
        for members in class_members().values():
            vals = [self.per_event[m] for m in members]
            spread = max(spread, max(vals) - min(vals))
        return spread


def full_statistics(state, unitary: ModeUnitary | None = None, *, check: bool = True) -> OutputStatistics:
    unitary = unitary or hypercube_unitary()
    ext = _as_external(state)
    rho = ext.matrix
    u = unitary.matrix
    per_event = {}
    for ev in all_events():
        a = _amplitudes(u, ev)
        per_event[ev] = _clean_probability(ev.multiplicity * complex(a @ rho @ a.conj()), f"event {ev}")
    total = sum(per_event.values())
    if check and abs(total - 1) > NORMALIZATION_TOL:
        raise NumericalIntegrityError(f"probabilities sum to {total!r}")
    per_class = {}
    for cls, members in class_members().items():
        vals = [per_event[m] for m in members]
        if check and unitary.is_hypercube and max(vals) - min(vals) > CLASS_SPREAD_TOL:
            raise SymmetryViolationError(f"class {cls.value} members disagree: {vals}")
        per_class[cls] = float(np.mean(vals))
    pure = state.is_pure if isinstance(state, InternalEnsemble) else None
    return OutputStatistics(per_event, per_class, ext.statistics, unitary.is_hypercube, pure)


# --- closed forms ---------------------------------------------------------------------

def closed_form_table(ensemble: InternalEnsemble, q: Quantifiers | None = None) -> dict[EventClass, float]:
    """All eleven single-event class probabilities for the hypercube."""
    sg = ensemble.statistics.sign
    q = q or quantifiers(ensemble)

    def t(a, b):
        return trace_product(ensemble, Cycle((a, b))).real

    def tc(*c):
        return trace_product(ensemble, Cycle(c)).real

    # symmetry s -> (pair in sigma_1, pair in sigma_2, four-cycle term)
    blocks = {
        1: (t(1, 3), t(2, 4), tc(1, 2, 3, 4)),
        2: (t(1, 2), t(3, 4), tc(1, 3, 2, 4)),
        3: (t(1, 4), t(2, 3), tc(1, 2, 4, 3)),
    }
    prods = {1: t(1, 3) * t(2, 4), 2: t(1, 2) * t(3, 4), 3: t(1, 4) * t(2, 3)}
    out = {}
    for s, (ta, tb, c4) in blocks.items():
        others = sum(v for k, v in prods.items() if k != s)
        out[EventClass(f"F{s}_I")] = (1 + sg * (ta + tb) + prods[s] - others - sg * 2 * c4) / 64
        out[EventClass(f"F{s}_II")] = (3 - sg * (ta + tb) + 3 * prods[s] - 3 * others + sg * 2 * c4) / 64
    common = 3 - sg * q.I_112 - q.I_13 + 3 * q.I_22 - sg * q.I_4
    out[EventClass.A_A] = (3 - sg * q.I_112 + q.I_13 + 3 * q.I_22 - sg * q.I_4) / 32
    out[EventClass.A_B] = (1 + sg * q.I_112 + q.I_13 + q.I_22 + sg * q.I_4) / 256
    for s, (ta, tb, c4) in blocks.items():
        out[EventClass(f"A_{s}")] = (common + sg * 4 * (ta + tb) + sg * 8 * c4) / 128
    return {c: out[c] for c in EventClass}


def closed_form_class_probability(ensemble: InternalEnsemble, cls) -> float:
    return closed_form_table(ensemble)[EventClass(cls)]
