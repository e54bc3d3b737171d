"""Invert hypercube class probabilities into indistinguishability data.

Everything here consumes only the eleven class probabilities (plus the
declared particle type).  All extraction formulas are affine in those
probabilities, so each one is kept as a :class:`LinearForm`, which makes
first-order error propagation exact for sampled input.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .external import Quantifiers
from .interferometer import (
    EventClass,
    ModeUnitary,
    OutputStatistics,
    full_statistics,
    hypercube_unitary,
)
from .internal import FOURCYCLES, PAIRS, InternalEnsemble, Statistics, make_distinguishable
from .permgroup import Cycle, sigma_cycles
from .tolerances import DEFAULT, Tolerances

CLASSES = tuple(EventClass)
_POS = {c: i for i, c in enumerate(CLASSES)}
SIZES = np.array([c.size for c in CLASSES], dtype=float)
TRIPLES = tuple(itertools.combinations(range(1, 5), 3))


class InconsistentStatisticsError(ValueError):
    """Class probabilities that no physical state can produce (within tolerance)."""


# --- linear forms over class probabilities -----------------------------------

@dataclass(frozen=True, eq=False)
class LinearForm:
    coef: np.ndarray
    const: float = 0.0

    @classmethod
    def of(cls, const: float = 0.0, **terms: float) -> "LinearForm":
        c = np.zeros(len(CLASSES))
        for name, v in terms.items():
            c[_POS[EventClass(name)]] += v
        return cls(c, const)

    def __add__(self, other):
        if isinstance(other, LinearForm):
            return LinearForm(self.coef + other.coef, self.const + other.const)
        return LinearForm(self.coef, self.const + other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __rsub__(self, other):
        return (-1) * self + other

    def __mul__(self, k: float):
        return LinearForm(self.coef * k, self.const * k)

    __rmul__ = __mul__

    def __call__(self, p: np.ndarray) -> float:
        return float(self.coef @ p + self.const)

    def variance(self, cov: np.ndarray) -> float:
        return float(self.coef @ cov @ self.coef)


def _p(name: str) -> LinearForm:
    return LinearForm.of(**{name: 1.0})


def _others(s: int) -> tuple[int, int]:
    return tuple(k for k in (1, 2, 3) if k != s)


def form_PF(s: int) -> LinearForm:
    return _p(f"F{s}_I") + _p(f"F{s}_II")


def form_P(s: int) -> LinearForm:
    a, b = _others(s)
    return 1 - 8 * (form_PF(a) + form_PF(b))


def form_Q(s: int) -> LinearForm:
    a, b = _others(s)
    return 16 * _p("A_B") + 8 * _p(f"A_{s}") + 16 * _p(f"F{s}_I") + 4 * (form_PF(a) + form_PF(b)) - 1


def form_quantifiers(sign: int) -> dict[str, LinearForm]:
    pf = form_PF(1) + form_PF(2) + form_PF(3)
    return {
        "I_112": sign * 2 * (form_Q(1) + form_Q(2) + form_Q(3)),
        "I_13": 128 * _p("A_B") + 16 * _p("A_A") + 32 * pf - 8,
        "I_22": form_P(1) + form_P(2) + form_P(3),
        "I_4": sign * (
            96 * _p("A_B")
            + 16 * (_p("A_1") + _p("A_2") + _p("A_3"))
            + 32 * (_p("F1_II") + _p("F2_II") + _p("F3_II"))
            - 6
        ),
    }


def form_fourcycle(s: int, sign: int) -> LinearForm:
    """``T cos(phi)`` of the four-cycle tied to symmetry ``s``."""
    a, b = _others(s)
    body = (
        16 * _p("A_B") + 8 * _p(f"A_{s}") - 8 * (_p(f"F{s}_I") - _p(f"F{s}_II"))
        + 4 * (form_PF(a) + form_PF(b)) - 1
    )
    return sign * body


def form_marked_triple(sign: int) -> LinearForm:
    """Three-particle projector expectation once the fourth particle is marked."""
    if sign > 0:
        return (128 / 3) * _p("A_B")
    return (16 * _p("A_A") - 1) * (1 / 3)


# --- input container -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassProbabilities:
    """Single-event probability for each of the eleven classes.

    ``covariance`` (11 x 11, in :data:`CLASSES` order) is present for
    estimates from finite samples; exact simulations leave it ``None``.
    """

    values: dict
    covariance: np.ndarray | None = None

    def __post_init__(self):
        vals = {EventClass(k): float(v) for k, v in self.values.items()}
        missing = set(CLASSES) - set(vals)
        if missing:
            raise ValueError(f"missing class probabilities: {sorted(c.value for c in missing)}")
        object.__setattr__(self, "values", {c: vals[c] for c in CLASSES})

    @classmethod
    def from_statistics(cls, stats: OutputStatistics) -> "ClassProbabilities":
        return cls(dict(stats.per_class))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.values[c] for c in CLASSES])

    @property
    def sampled(self) -> bool:
        return self.covariance is not None

    def stderr(self) -> dict | None:
        if self.covariance is None:
            return None
        return {c: float(np.sqrt(max(self.covariance[i, i], 0.0))) for i, c in enumerate(CLASSES)}

    def weighted_total(self) -> float:
        return float(SIZES @ self.vector)

    def validate(self, tol: Tolerances = DEFAULT) -> None:
        v = self.vector
        slack = tol.tol_total
        if np.any(v < -slack) or np.any(v > 1 + slack):
            raise InconsistentStatisticsError("class probabilities outside [0, 1]")
        if abs(self.weighted_total() - 1) > slack:
            raise InconsistentStatisticsError(
                f"class probabilities are not normalized (total {self.weighted_total():.12g})"
            )

    def evaluate(self, form: LinearForm) -> tuple[float, float | None]:
        value = form(self.vector)
        if self.covariance is None:
            return value, None
        return value, float(np.sqrt(max(form.variance(self.covariance), 0.0)))


@dataclass(frozen=True)
class Combinations:
    P_F: tuple[float, float, float]
    P: tuple[float, float, float]
    Q: tuple[float, float, float]


def combine(probabilities: ClassProbabilities) -> Combinations:
    v = probabilities.vector
    return Combinations(
        P_F=tuple(form_PF(s)(v) for s in (1, 2, 3)),
        P=tuple(form_P(s)(v) for s in (1, 2, 3)),
        Q=tuple(form_Q(s)(v) for s in (1, 2, 3)),
    )


def extract_quantifiers(probabilities: ClassProbabilities, statistics) -> Quantifiers:
    sign = Statistics(statistics).sign
    v = probabilities.vector
    forms = form_quantifiers(sign)
    return Quantifiers(**{k: f(v) for k, f in forms.items()})


def extract_fourcycle_terms(probabilities: ClassProbabilities, statistics) -> tuple[float, float, float]:
    """``T cos(phi)`` for the cycles (1234), (1324), (1243)."""
    sign = Statistics(statistics).sign
    v = probabilities.vector
    return tuple(form_fourcycle(s, sign)(v) for s in (1, 2, 3))


# --- pairwise overlaps ----------------------------------------------------------

@dataclass(frozen=True)
class PairSolution:
    """Two pairwise overlaps of symmetry ``s`` known only as an unordered pair."""

    symmetry: int
    values: tuple[float, float]  # descending
    discriminant: float
    assignment: dict | None = None  # Cycle -> overlap once resolved
    stderr: float | None = None
    near_singular: bool = False

    @property
    def cycles(self) -> tuple[Cycle, Cycle]:
        return sigma_cycles(self.symmetry)

    @property
    def resolved(self) -> bool:
        return self.assignment is not None


def solve_pair(
    P: float,
    Q: float,
    statistics,
    tol_disc: float = DEFAULT.tol_disc,
    tol_value: float = DEFAULT.tol_value,
    symmetry: int = 1,
) -> PairSolution:
    """Both overlaps of a symmetry from their product ``P`` and signed half-sum ``Q``."""
    sign = Statistics(statistics).sign
    disc = Q * Q - P
    if disc < 0:
        if disc < -tol_disc:
            raise InconsistentStatisticsError(
                f"symmetry {symmetry}: negative discriminant {disc:.3g} (P={P:.6g}, Q={Q:.6g})"
            )
        disc = 0.0
    root = float(np.sqrt(disc))
    raw = (sign * Q + root, sign * Q - root)
    for x in raw:
        if x < -tol_value or x > 1 + tol_value:
            raise InconsistentStatisticsError(f"symmetry {symmetry}: overlap {x:.6g} outside [0, 1]")
    hi, lo = (float(min(max(x, 0.0), 1.0)) for x in raw)
    return PairSolution(symmetry, (hi, lo), disc)


# --- marked-particle runs -------------------------------------------------------------

@dataclass(frozen=True)
class MarkedRun:
    """What one run with particle ``marked`` made distinguishable reveals."""

    marked: int
    pair_overlaps: dict  # (a, b) -> T for the three pairs without ``marked``
    triple: tuple[int, int, int]
    triple_expectation: float
    stderr: dict = field(default_factory=dict)


def analyze_marked_run(
    probabilities: ClassProbabilities, marked: int, statistics, tol: Tolerances = DEFAULT
) -> MarkedRun:
    if marked not in (1, 2, 3, 4):
        raise ValueError(f"marked particle must be in 1..4, got {marked}")
    probabilities.validate(tol)
    sign = Statistics(statistics).sign
    overlaps = {}
    errors = {}
    for s in (1, 2, 3):
        c1, c2 = sigma_cycles(s)
        free = c2 if marked in c1.entries else c1
        val, err = probabilities.evaluate(sign * 2 * form_Q(s))
        slack = tol.tol_value if err is None else max(tol.tol_value, 5 * err)
        if val < -slack or val > 1 + slack:
            raise InconsistentStatisticsError(f"marked run {marked}: overlap {val:.6g} outside [0, 1]")
        overlaps[tuple(free.entries)] = min(max(val, 0.0), 1.0)
        if err is not None:
            errors[tuple(free.entries)] = err
    triple = tuple(a for a in (1, 2, 3, 4) if a != marked)
    val, err = probabilities.evaluate(form_marked_triple(sign))
    if err is not None:
        errors[triple] = err
    return MarkedRun(marked, dict(sorted(overlaps.items())), triple, val, errors)


def marked_particle_protocol(
    ensemble: InternalEnsemble, marked: int, unitary: ModeUnitary | None = None
) -> MarkedRun:
    """Simulate the run with ``marked`` made distinguishable and analyse it."""
    unitary = unitary or hypercube_unitary()
    if not unitary.is_hypercube:
        raise ValueError("the marked-particle protocol needs the hypercube unitary")
    stats = full_statistics(make_distinguishable(ensemble, marked), unitary)
    return analyze_marked_run(ClassProbabilities.from_statistics(stats), marked, ensemble.statistics)


def resolve_pair(solution: PairSolution, known: dict) -> PairSolution:
    """Order an unordered pair using directly measured overlaps.

    Directly measured values replace the square-root solutions, which lose
    accuracy when the two overlaps nearly coincide.
    """
    c1, c2 = solution.cycles
    k1, k2 = tuple(c1.entries), tuple(c2.entries)
    if k1 not in known and k2 not in known:
        return solution
    hi, lo = solution.values

    def cost(order):
        a1, a2 = order
        return sum(abs(known[k] - a) for k, a in ((k1, a1), (k2, a2)) if k in known)

    first, second = min(((hi, lo), (lo, hi)), key=cost)
    assignment = {
        c1: known.get(k1, first),
        c2: known.get(k2, second),
    }
    return PairSolution(
        solution.symmetry, solution.values, solution.discriminant, assignment,
        solution.stderr, solution.near_singular,
    )


# --- the full report -------------------------------------------------------------

@dataclass(frozen=True)
class ExtractionReport:
    statistics: Statistics
    quantifiers: Quantifiers
    combinations: Combinations
    pairs: tuple[PairSolution, PairSolution, PairSolution]
    fourcycle_terms: dict  # Cycle -> T cos(phi)
    four_particle: float
    three_particle_avg: float
    two_particle_avg: float
    four_particle_bunching: float | None = None  # bosons: read off p(A_B) alone
    marked_runs: tuple = ()
    pair_overlaps: dict | None = None  # (a, b) -> T once every pair is resolved
    triple_expectations: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)
    pure: bool | None = None
    warnings: tuple = ()
    probabilities: ClassProbabilities | None = None

    @property
    def ambiguous(self) -> bool:
        return not all(p.resolved for p in self.pairs)


def _pair_tolerances(probabilities, s, sign, tol):
    """Discriminant/value slack; widened to the sampling error for estimates."""
    if not probabilities.sampled:
        return tol.tol_disc, tol.tol_value, None
    cov = probabilities.covariance
    fp, fq = form_P(s), form_Q(s)
    v = probabilities.vector
    q = fq(v)
    # delta method on D = Q^2 - P
    grad = 2 * q * fq.coef - fp.coef
    se_disc = float(np.sqrt(max(grad @ cov @ grad, 0.0)))
    se_q = float(np.sqrt(max(fq.variance(cov), 0.0)))
    return max(tol.tol_disc, 9 * se_disc), max(tol.tol_value, 5 * (se_q + np.sqrt(se_disc))), se_disc


def extract(
    probabilities: ClassProbabilities,
    statistics,
    marked_runs=(),
    tol: Tolerances = DEFAULT,
    pure: bool | None = None,
) -> ExtractionReport:
    statistics = Statistics(statistics)
    sign = statistics.sign
    probabilities.validate(tol)
    notes = []
    stderr: dict[str, float] = {}

    def ev(name, form):
        val, err = probabilities.evaluate(form)
        if err is not None:
            stderr[name] = err
        return val

    q_forms = form_quantifiers(sign)
    quants = Quantifiers(**{k: ev(k, f) for k, f in q_forms.items()})
    combos = combine(probabilities)
    for s in (1, 2, 3):
        ev(f"P_{s}", form_P(s))
        ev(f"Q_{s}", form_Q(s))
    fourcycles = {c: ev(f"fourcycle{c}", form_fourcycle(s, sign)) for s, c in zip((1, 2, 3), FOURCYCLES)}
    four = ev("four_particle", (1 + q_forms["I_112"] + q_forms["I_13"] + q_forms["I_22"] + q_forms["I_4"]) * (1 / 24))
    three = ev("three_particle_avg", (1 + 0.5 * q_forms["I_112"] + 0.25 * q_forms["I_13"]) * (1 / 6))
    two = ev("two_particle_avg", (1 + q_forms["I_112"] * (1 / 6)) * 0.5)
    bunching = ev("four_particle_bunching", (32 / 3) * _p("A_B")) if sign > 0 else None

    pairs = []
    for s in (1, 2, 3):
        tol_disc, tol_value, se_disc = _pair_tolerances(probabilities, s, sign, tol)
        sol = solve_pair(combos.P[s - 1], combos.Q[s - 1], statistics, tol_disc, tol_value, symmetry=s)
        near = se_disc is not None and sol.discriminant <= 3 * se_disc
        if near:
            notes.append(f"symmetry {s}: discriminant within 3 standard errors of zero")
        pairs.append(PairSolution(s, sol.values, sol.discriminant, None, se_disc, near))

    runs = tuple(sorted(marked_runs, key=lambda r: r.marked))
    measured: dict[tuple, list] = {}
    triples = {}
    for run in runs:
        for k, v in run.pair_overlaps.items():
            measured.setdefault(k, []).append(v)
        triples[run.triple] = run.triple_expectation
        for k, v in run.stderr.items():
            stderr[f"marked{run.marked}:{k}"] = v
    known = {k: float(np.mean(v)) for k, v in measured.items()}
    pairs = [resolve_pair(p, known) for p in pairs]
    pair_overlaps = None
    if all(p.resolved for p in pairs):
        pair_overlaps = {}
        for p in pairs:
            for c, t in p.assignment.items():
                pair_overlaps[tuple(c.entries)] = t
        pair_overlaps = {k: pair_overlaps[k] for k in PAIRS}
    for n in notes:
        warnings.warn(n, stacklevel=2)
    return ExtractionReport(
        statistics=statistics,
        quantifiers=quants,
        combinations=combos,
        pairs=tuple(pairs),
        fourcycle_terms=fourcycles,
        four_particle=four,
        three_particle_avg=three,
        two_particle_avg=two,
        four_particle_bunching=bunching,
        marked_runs=runs,
        pair_overlaps=pair_overlaps,
        triple_expectations=dict(sorted(triples.items())),
        stderr=stderr,
        pure=pure,
        warnings=tuple(notes),
        probabilities=probabilities,
    )


def extract_from_ensemble(
    ensemble: InternalEnsemble, marks=(1, 2, 3, 4), tol: Tolerances = DEFAULT
) -> ExtractionReport:
    """Simulate the main run and the requested marked runs, then extract."""
    stats = full_statistics(ensemble)
    runs = [marked_particle_protocol(ensemble, m) for m in marks]
    return extract(ClassProbabilities.from_statistics(stats), ensemble.statistics, runs, tol, ensemble.is_pure)
