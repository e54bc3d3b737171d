"""Collective phases and the reduced external state from pure-state data.

The hypercube statistics fix every collective phase only up to one global
sign, so everything here comes in two branches that are complex
conjugates of each other.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .external import PSD_TOL, ExternalState, InvariantError, expand_kappa_elements
from .extraction import (
    ClassProbabilities,
    ExtractionReport,
    InconsistentStatisticsError,
    extract_from_ensemble,
)
from .interferometer import (
    ModeUnitary,
    all_events,
    coefficient_A,
    full_statistics,
    hypercube_unitary,
)
from .internal import FOURCYCLES, PAIRS, TRIADS, InternalEnsemble, Statistics, graph_from_pair_overlaps, wrap_phase
from .permgroup import Cycle, enumerate_s4
from .tolerances import DEFAULT, Tolerances

ORIENTED_TRIADS = tuple(c for t in TRIADS for c in (t, t.inverse()))
ORIENTED_FOURCYCLES = tuple(c for f in FOURCYCLES for c in (f, f.inverse()))
CONJUGATION_TOL = 1e-12


class PreconditionError(ValueError):
    """The input lies outside what reconstruction can handle."""


class MixedStateError(PreconditionError):
    """Phase reconstruction needs pure internal states."""


class NotPureError(PreconditionError):
    """The data violate a relation every pure ensemble satisfies."""


def _edges(cycle: Cycle):
    e = cycle.entries
    return [tuple(sorted(p)) for p in zip(e, e[1:] + e[:1])]


def _orientation(cycle: Cycle, reference: Cycle) -> int:
    if cycle == reference:
        return 1
    if cycle == reference.inverse():
        return -1
    raise ValueError(f"{cycle} is not an orientation of {reference}")


def _canonical_triad(cycle: Cycle) -> Cycle:
    return Cycle(tuple(sorted(cycle.entries)))


# --- candidates --------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseCandidate:
    cycle: Cycle
    magnitude: float  # T of the cycle, from the pure-state relation
    cosine: float | None
    Phi: float | None  # arccos(cosine) in [0, pi]
    sign: str  # "+", "-", "undetermined" or "absent"
    sigma: float = 0.0  # first-order phase error for sampled input

    @property
    def present(self) -> bool:
        return self.sign != "absent"


@dataclass(frozen=True)
class PhaseCandidateSet:
    triads: dict  # canonical triad Cycle -> PhaseCandidate
    fourcycles: dict  # FOURCYCLES entry -> PhaseCandidate

    def present(self):
        return [c for c in (*self.triads.values(), *self.fourcycles.values()) if c.present]


def _pure_magnitude(cycle: Cycle, T: dict) -> float:
    return math.sqrt(math.prod(max(T[e], 0.0) for e in _edges(cycle)))


def _clean_cosine(value: float, tol: Tolerances, slack: float, what: str) -> float:
    if abs(value) > 1 + slack:
        raise InconsistentStatisticsError(f"{what}: cosine {value:.9g} outside [-1, 1]")
    value = min(max(value, -1.0), 1.0)
    if 1 - abs(value) <= tol.cos_snap:
        value = math.copysign(1.0, value)
    return value


def _phase_sigma(cos_value: float, cos_se: float) -> float:
    if cos_se <= 0:
        return 0.0
    sin = math.sqrt(max(1 - cos_value**2, 0.0))
    # arccos turns into a square root near +-1
    return cos_se / max(sin, math.sqrt(cos_se))


def _snap_pairs(pair_overlaps: dict, tol: Tolerances) -> dict:
    return {tuple(k): (0.0 if v <= tol.eps_orth else float(v)) for k, v in pair_overlaps.items()}


def triad_candidates(
    pair_overlaps: dict,
    triple_expectations: dict,
    fourcycle_terms: dict | None = None,
    tol: Tolerances = DEFAULT,
    stderr: dict | None = None,
) -> PhaseCandidateSet:
    """Phase magnitudes from resolved pair overlaps and subset expectations.

    ``fourcycle_terms`` maps the cycles (1234), (1324), (1243) to ``T cos(phi)``.
    ``stderr`` (keys as in :attr:`ExtractionReport.stderr`) widens the
    tolerances for sampled input.
    """
    T = _snap_pairs(pair_overlaps, tol)
    stderr = stderr or {}
    triads = {}
    for t in TRIADS:
        a, b, c = t.entries
        present = all(T[e] > tol.eps_orth for e in _edges(t))
        mag = _pure_magnitude(t, T)
        denom = 2 * mag
        if not present or denom < tol.eps_orth:
            triads[t] = PhaseCandidate(t, mag, None, None, "absent")
            continue
        key = (a, b, c)
        if key not in triple_expectations:
            raise PreconditionError(f"missing three-particle expectation for {key}")
        num = 6 * triple_expectations[key] - 1 - T[a, b] - T[a, c] - T[b, c]
        num_se = math.sqrt(
            36 * _marked_se(stderr, key) ** 2 + sum(_marked_se(stderr, e) ** 2 for e in _edges(t))
        )
        cos_se = num_se / denom
        cos = _clean_cosine(num / denom, tol, tol.tol_cos + 5 * cos_se, f"triad {t}")
        triads[t] = PhaseCandidate(t, mag, cos, math.acos(cos), "undetermined", _phase_sigma(cos, cos_se))
    fours = {}
    for f in FOURCYCLES:
        mag = _pure_magnitude(f, T)
        present = all(T[e] > tol.eps_orth for e in _edges(f)) and mag >= tol.eps_orth
        if not present or fourcycle_terms is None or f not in fourcycle_terms:
            fours[f] = PhaseCandidate(f, mag, None, None, "absent")
            continue
        cos_se = stderr.get(f"fourcycle{f}", 0.0) / mag
        cos = _clean_cosine(fourcycle_terms[f] / mag, tol, tol.tol_cos + 5 * cos_se, f"four-cycle {f}")
        fours[f] = PhaseCandidate(f, mag, cos, math.acos(cos), "undetermined", _phase_sigma(cos, cos_se))
    return PhaseCandidateSet(triads, fours)


def _marked_se(stderr: dict, key) -> float:
    """Standard error of a quantity measured in one or more marked runs."""
    vals = [v for k, v in stderr.items() if k.startswith("marked") and k.endswith(f":{tuple(key)}")]
    if not vals:
        return 0.0
    # repeated measurements are averaged
    return math.sqrt(sum(v * v for v in vals)) / len(vals)


# --- consistency ---------------------------------------------------------------------

def _decompositions(f: Cycle):
    """Both ways to split a four-cycle along a chord into two triads."""
    a, b, c, d = f.entries
    return (((a, c), Cycle((a, b, c)), Cycle((a, c, d))), ((b, d), Cycle((b, c, d)), Cycle((b, d, a))))


def _oriented(triad_phases: dict, cycle: Cycle) -> float | None:
    ref = _canonical_triad(cycle)
    phi = triad_phases.get(ref)
    if phi is None:
        return None
    return _orientation(cycle, ref) * phi


def _wrapped_gap(x: float, y: float) -> float:
    return abs(wrap_phase(x - y))


@dataclass(frozen=True)
class Branch:
    phases: dict  # oriented Cycle -> phase or None when absent
    score: float  # worst consistency residual relative to its tolerance

    def negated(self) -> "Branch":
        return Branch({c: (None if p is None else -p) for c, p in self.phases.items()}, self.score)

    def distance(self, other: "Branch") -> float:
        gap = 0.0
        for c, p in self.phases.items():
            q = other.phases[c]
            if (p is None) != (q is None):
                return math.inf
            if p is not None:
                gap = max(gap, _wrapped_gap(p, q))
        return gap


def _evaluate(signs, free, candidates: PhaseCandidateSet, tol: Tolerances) -> Branch:
    triad_phases = {}
    four_free = {}
    for s, cand in zip(signs, free):
        if len(cand.cycle) == 3:
            triad_phases[cand.cycle] = s * cand.Phi
        else:
            four_free[cand.cycle] = s * cand.Phi
    score = 0.0
    four_phases = {}
    for f, cand in candidates.fourcycles.items():
        if not cand.present:
            four_phases[f] = None
            continue
        if f in four_free:
            four_phases[f] = four_free[f]
            continue
        derived = []
        sigmas = []
        for _, t1, t2 in _decompositions(f):
            p1, p2 = _oriented(triad_phases, t1), _oriented(triad_phases, t2)
            if p1 is not None and p2 is not None:
                derived.append(wrap_phase(p1 + p2))
                sigmas.append(
                    candidates.triads[_canonical_triad(t1)].sigma + candidates.triads[_canonical_triad(t2)].sigma
                )
        # chord decompositions must agree with each other (the sum rule)
        for (x, sx), (y, sy) in itertools.combinations(zip(derived, sigmas), 2):
            score = max(score, _wrapped_gap(x, y) / max(tol.tol_phase, 5 * (sx + sy)))
        # and with the measured cosine of the four-cycle
        ref = derived[0]
        cos_tol = max(tol.tol_cos, 5 * cand.sigma * math.sqrt(max(1 - cand.cosine**2, 0.0)))
        score = max(score, abs(math.cos(ref) - cand.cosine) / cos_tol)
        four_phases[f] = ref
    phases = {}
    for t in TRIADS:
        phi = triad_phases.get(t)
        phases[t] = phi
        phases[t.inverse()] = None if phi is None else -phi
    for f in FOURCYCLES:
        phi = four_phases[f]
        phases[f] = phi
        phases[f.inverse()] = None if phi is None else -phi
    return Branch(phases, score)


def _free_candidates(candidates: PhaseCandidateSet):
    free = [c for c in candidates.triads.values() if c.present]
    for f, cand in candidates.fourcycles.items():
        if not cand.present:
            continue
        derivable = any(
            candidates.triads[_canonical_triad(t1)].present and candidates.triads[_canonical_triad(t2)].present
            for _, t1, t2 in _decompositions(f)
        )
        if not derivable:
            free.append(cand)
    return free


@dataclass(frozen=True)
class FilterResult:
    primary: Branch
    secondary: Branch
    degenerate: bool
    surviving: int


def _first_present(branch: Branch, tol: Tolerances):
    for c in (*TRIADS, *FOURCYCLES):
        p = branch.phases[c]
        if p is not None and abs(p) > tol.tol_phase:
            return p
    return None


def consistency_filter(candidates: PhaseCandidateSet, topology=None, tol: Tolerances = DEFAULT) -> FilterResult:
    """The two global-sign branches of phases compatible with every relation.

    ``topology`` is accepted for reporting; the relations that apply are
    read off which candidates are present.
    """
    free = _free_candidates(candidates)
    branches = [_evaluate(signs, free, candidates, tol) for signs in itertools.product((1, -1), repeat=len(free))]
    good = [b for b in branches if b.score <= 1.0]
    if not good:
        best = min(b.score for b in branches)
        raise InconsistentStatisticsError(
            f"no sign assignment satisfies the phase relations (best residual {best:.3g} x tolerance)"
        )
    distinct: list[Branch] = []
    for b in sorted(good, key=lambda b: b.score):
        if all(b.distance(d) > tol.tol_phase for d in distinct):
            distinct.append(b)
    best = distinct[0]
    partner = best.negated()
    degenerate = sum(1 for d in distinct if d.distance(best) > tol.tol_phase and d.distance(partner) > tol.tol_phase) > 0
    if degenerate:
        warnings.warn(f"{len(distinct)} distinct phase branches survive; keeping the best-scoring pair", stacklevel=2)
    lead = _first_present(best, tol)
    if lead is not None and lead < 0:
        best, partner = partner, best
    return FilterResult(best, partner, degenerate, len(distinct))


# --- rebuilding rho_E ---------------------------------------------------------------------

def _cycle_value(cycle: Cycle, T: dict, phases: dict) -> complex:
    if len(cycle) == 2:
        return complex(T[tuple(sorted(cycle.entries))])
    mag = _pure_magnitude(cycle, T)
    phi = phases.get(cycle)
    if phi is None:
        return complex(mag)
    return mag * complex(math.cos(phi), math.sin(phi))


def reconstruct_external(T_table: dict, phases: dict, statistics, tol: Tolerances = DEFAULT) -> ExternalState:
    """``rho_E`` from overlap magnitudes and one branch of phases.

    ``T_table`` maps every pair to its overlap.  Longer cycles may be
    included too; their magnitudes are then checked against the pure-state
    relation.
    """
    statistics = Statistics(statistics)
    pairs = {}
    for k, v in T_table.items():
        cyc = k if isinstance(k, Cycle) else Cycle(tuple(k))
        if len(cyc) == 2:
            pairs[tuple(sorted(cyc.entries))] = float(v)
    missing = set(PAIRS) - set(pairs)
    if missing:
        raise PreconditionError(f"missing pair overlaps {sorted(missing)}")
    T = _snap_pairs(pairs, tol)
    for k, v in T_table.items():
        cyc = k if isinstance(k, Cycle) else Cycle(tuple(k))
        if len(cyc) > 2 and abs(abs(v) - _pure_magnitude(cyc, T)) > tol.tol_pure:
            raise NotPureError(
                f"|T{cyc}| = {abs(v):.9g} differs from the pure-state value {_pure_magnitude(cyc, T):.9g}"
            )
    elems = []
    for kappa in enumerate_s4():
        value = complex(statistics.exchange_factor(kappa.sign)) / 24
        for cyc in kappa.cycles:
            if len(cyc) > 1:
                value *= _cycle_value(cyc, T, phases)
        elems.append(value)
    state = expand_kappa_elements(elems, statistics)
    lowest = float(np.linalg.eigvalsh(state.matrix).min())
    if lowest < -max(PSD_TOL, tol.tol_pure):
        raise NotPureError(f"rebuilt state has eigenvalue {lowest:.3g}; data are not those of a pure ensemble")
    return state


@dataclass(frozen=True)
class ReconstructionResult:
    branches: tuple[dict, dict]  # primary first
    external_state: ExternalState
    conjugate_state: ExternalState
    topology: str
    pair_overlaps: dict
    candidates: PhaseCandidateSet
    residuals: dict = field(default_factory=dict)
    degenerate: bool = False
    conjugate_flag: bool = True  # valid only up to complex conjugation

    def distance_to(self, state: ExternalState) -> float:
        """Smaller Frobenius distance of the two branches to ``state``."""
        return float(
            min(
                np.linalg.norm(self.external_state.matrix - state.matrix),
                np.linalg.norm(self.conjugate_state.matrix - state.matrix),
            )
        )


def reconstruct(report: ExtractionReport, tol: Tolerances = DEFAULT, assume_pure: bool = False) -> ReconstructionResult:
    if report.pure is False:
        raise MixedStateError("phase reconstruction is limited to pure internal states; the input is mixed")
    if report.pure is None and not assume_pure:
        raise PreconditionError("purity of the input is unknown; pass assume_pure to proceed")
    if report.pair_overlaps is None:
        raise PreconditionError("pair overlaps are ambiguous; supply marked-particle runs for all four particles")
    candidates = triad_candidates(
        report.pair_overlaps, report.triple_expectations, report.fourcycle_terms, tol, report.stderr
    )
    graph = graph_from_pair_overlaps(report.pair_overlaps, tol.eps_orth)
    picked = consistency_filter(candidates, graph, tol)
    primary = reconstruct_external(report.pair_overlaps, picked.primary.phases, report.statistics, tol)
    secondary = reconstruct_external(report.pair_overlaps, picked.secondary.phases, report.statistics, tol)
    residuals = {
        "consistency": picked.primary.score,
        "branch_conjugacy": float(np.linalg.norm(primary.matrix - secondary.matrix.conj())),
    }
    if report.probabilities is not None:
        stats = full_statistics(primary, check=False)
        refit = ClassProbabilities.from_statistics(stats).vector
        residuals["statistics"] = float(np.max(np.abs(refit - report.probabilities.vector)))
    return ReconstructionResult(
        branches=(picked.primary.phases, picked.secondary.phases),
        external_state=primary,
        conjugate_state=secondary,
        topology=graph.topology,
        pair_overlaps=dict(report.pair_overlaps),
        candidates=candidates,
        residuals=residuals,
        degenerate=picked.degenerate,
    )


def reconstruct_from_ensemble(ensemble: InternalEnsemble, tol: Tolerances = DEFAULT) -> ReconstructionResult:
    """Simulate the main and all four marked runs, then reconstruct."""
    if not ensemble.is_pure:
        raise MixedStateError("phase reconstruction is limited to pure internal states; the input is mixed")
    return reconstruct(extract_from_ensemble(ensemble, tol=tol), tol)


# --- conjugation invariance -------------------------------------------------------------

def check_hypercube_coefficients(unitary: ModeUnitary | None = None, tol: float = CONJUGATION_TOL) -> None:
    """Assert that every coefficient ``A(kappa, S)`` is real and even under ``kappa -> kappa^-1``."""
    unitary = unitary or hypercube_unitary()
    if not unitary.is_hypercube:
        raise PreconditionError("coefficient symmetries hold for the hypercube only")
    for ev in all_events():
        for kappa in enumerate_s4():
            a = coefficient_A(kappa, ev, unitary)  # raises if not real
            b = coefficient_A(kappa.inverse(), ev, unitary)
            if abs(a - b) > tol:
                raise InvariantError(f"A({kappa}, {ev}) = {a} but A(inverse) = {b}")


def conjugation_invariance_check(state: ExternalState, unitary: ModeUnitary | None = None, tol: float = CONJUGATION_TOL) -> bool:
    """Whether ``state`` and its entrywise conjugate give the same 35 event probabilities."""
    unitary = unitary or hypercube_unitary()
    ours = full_statistics(state, unitary, check=False).per_event
    theirs = full_statistics(state.conjugate(), unitary, check=False).per_event
    return max(abs(ours[e] - theirs[e]) for e in ours) <= tol
