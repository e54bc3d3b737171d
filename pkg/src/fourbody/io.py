"""JSON interchange for ensembles, statistics, shot records and results.

Complex numbers are written as ``[re, im]`` pairs.  Output is
deterministic: keys keep construction order and floats use ``repr``.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .external import ExternalState
from .extraction import CLASSES, ClassProbabilities, ExtractionReport, MarkedRun, extract
from .interferometer import EventClass, OccupationEvent, OutputStatistics, all_events, classify_event
from .internal import PAIRS, InternalEnsemble, InternalState, Statistics
from .permgroup import Cycle, enumerate_s4, parse_cycles
from .reconstruction import ReconstructionResult
from .sampling import ShotRecord, estimate
from .tolerances import DEFAULT, Tolerances


class SchemaError(ValueError):
    """Input JSON does not match the expected layout."""


_SCALAR = r"(?:-?[0-9][0-9.eE+-]*|null|true|false)"
_FLAT_LIST = re.compile(r"\[\s+(" + _SCALAR + r"(?:,\s+" + _SCALAR + r")*)\s+\]")


def dumps(obj) -> str:
    text = json.dumps(obj, indent=2, ensure_ascii=True, allow_nan=False)
    # lists of plain numbers go on one line
    text = _FLAT_LIST.sub(lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]", text)
    return text + "\n"


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return data


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


# --- primitives ---------------------------------------------------------------------

def complex_to_json(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        z = complex(a)
        return [float(z.real), float(z.imag)]
    return [complex_to_json(x) for x in a]


def complex_from_json(data, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"expected nested [re, im] pairs: {exc}") from exc
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise SchemaError(f"expected a {ndim}-dimensional array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _cycle_key(c) -> str:
    return str(c if isinstance(c, Cycle) else Cycle(tuple(c)))


def _cycle_from_key(text: str) -> Cycle:
    cycles = parse_cycles(text)
    if len(cycles) != 1:
        raise SchemaError(f"expected a single cycle, got {text!r}")
    return Cycle(cycles[0])


def _statistics(data, override=None) -> Statistics:
    value = override or data.get("statistics")
    try:
        return Statistics(value)
    except ValueError as exc:
        raise SchemaError(f"statistics must be 'boson' or 'fermion', got {value!r}") from exc


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise SchemaError(f"{where}: missing field {key!r}")
    return data[key]


def _opt_float(x):
    return None if x is None else float(x)


# --- ensembles -----------------------------------------------------------------------

def ensemble_to_json(ensemble: InternalEnsemble, label: str | None = None) -> dict:
    out = {}
    if label:
        out["label"] = label
    out["dimension"] = ensemble.dimension
    out["statistics"] = ensemble.statistics.value
    states = []
    for s in ensemble.states:
        if s.is_pure:
            w, v = np.linalg.eigh(s.matrix)
            vec = v[:, -1]
            # fix the arbitrary phase so the output is reproducible
            k = int(np.argmax(np.abs(vec) > 1e-12))
            vec = vec * np.exp(-1j * np.angle(vec[k]))
            states.append({"vector": complex_to_json(vec)})
        else:
            states.append({"matrix": complex_to_json(s.matrix)})
    out["states"] = states
    return out


def ensemble_from_json(data: dict, statistics=None) -> InternalEnsemble:
    states = _require(data, "states", "ensemble")
    if not isinstance(states, list) or len(states) != 4:
        raise SchemaError("ensemble: 'states' must list exactly four internal states")
    parsed = []
    for i, s in enumerate(states, start=1):
        if not isinstance(s, dict):
            raise SchemaError(f"ensemble: state {i} must be an object")
        try:
            if "vector" in s:
                parsed.append(InternalState.from_vector(complex_from_json(s["vector"], 1)))
            elif "matrix" in s:
                parsed.append(InternalState(complex_from_json(s["matrix"], 2)))
            else:
                raise SchemaError(f"ensemble: state {i} needs 'vector' or 'matrix'")
        except SchemaError:
            raise
        except ValueError as exc:
            raise SchemaError(f"ensemble: state {i}: {exc}") from exc
    try:
        ensemble = InternalEnsemble(tuple(parsed), _statistics(data, statistics))
    except ValueError as exc:
        raise SchemaError(f"ensemble: {exc}") from exc
    if "dimension" in data and data["dimension"] != ensemble.dimension:
        raise SchemaError(f"ensemble: declared dimension {data['dimension']} but states have {ensemble.dimension}")
    return ensemble


def external_to_json(state: ExternalState) -> dict:
    return {
        "statistics": state.statistics.value,
        "basis": [list(p.images) for p in enumerate_s4()],
        "matrix": complex_to_json(state.matrix),
    }


def external_from_json(data: dict) -> ExternalState:
    m = complex_from_json(_require(data, "matrix", "external state"), 2)
    if m.shape != (24, 24):
        raise SchemaError(f"external state: matrix must be 24x24, got {m.shape}")
    return ExternalState(m, _statistics(data))


# --- output statistics ----------------------------------------------------------------

def statistics_to_json(stats: OutputStatistics, marked_runs=()) -> dict:
    out = {
        "statistics": stats.statistics.value,
        "hypercube": stats.hypercube,
        "pure": stats.pure,
        "marked": stats.marked,
        "normalization_residual": stats.total() - 1,
        "per_class": {c.value: stats.per_class[c] for c in CLASSES},
        "per_event": [
            {"S": list(ev.occupation), "class": classify_event(ev).value, "p": stats.per_event[ev]}
            for ev in all_events()
        ],
    }
    if marked_runs:
        out["marked_runs"] = [statistics_to_json(r) for r in marked_runs]
    return out


def statistics_from_json(data: dict) -> OutputStatistics:
    events = _require(data, "per_event", "statistics")
    per_event = {}
    try:
        for item in events:
            per_event[OccupationEvent(tuple(item["S"]))] = float(item["p"])
        classes = _require(data, "per_class", "statistics")
        per_class = {EventClass(k): float(v) for k, v in classes.items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"statistics: malformed entry ({exc})") from exc
    if set(per_event) != set(all_events()):
        raise SchemaError("statistics: need all 35 output events")
    if set(per_class) != set(EventClass):
        raise SchemaError("statistics: need all 11 classes")
    return OutputStatistics(
        per_event, per_class, _statistics(data), bool(data.get("hypercube", True)),
        data.get("pure"), data.get("marked"),
    )


def marked_statistics_from_json(data: dict) -> list[tuple[int, dict]]:
    runs = []
    for item in data.get("marked_runs", []):
        if item.get("marked") not in (1, 2, 3, 4):
            raise SchemaError("marked run without a valid 'marked' particle")
        runs.append((item["marked"], item))
    return runs


# --- shot records -------------------------------------------------------------------------

def shots_to_json(record: ShotRecord, statistics: Statistics, pure=None, marked=None, marked_runs=()) -> dict:
    out = {
        "shots": record.shots,
        "seed": record.seed,
        "statistics": Statistics(statistics).value,
        "pure": pure,
        "marked": marked,
        "counts": [{"S": list(ev.occupation), "n": n} for ev, n in record.counts.items()],
    }
    if marked_runs:
        out["marked_runs"] = list(marked_runs)
    return out


def shots_from_json(data: dict) -> ShotRecord:
    try:
        counts = {OccupationEvent(tuple(c["S"])): int(c["n"]) for c in _require(data, "counts", "shot record")}
        return ShotRecord(counts, int(_require(data, "shots", "shot record")), int(data.get("seed", 0)))
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"shot record: {exc}") from exc


def probabilities_from_json(data: dict) -> ClassProbabilities:
    """Class probabilities from either a statistics file or a shot record."""
    if "counts" in data:
        return estimate(shots_from_json(data))
    return ClassProbabilities.from_statistics(statistics_from_json(data))


# --- extraction reports ----------------------------------------------------------------------

def marked_run_to_json(run: MarkedRun) -> dict:
    return {
        "marked": run.marked,
        "pair_overlaps": {_cycle_key(k): v for k, v in run.pair_overlaps.items()},
        "triple": list(run.triple),
        "triple_expectation": run.triple_expectation,
        "stderr": {str(k): v for k, v in run.stderr.items()},
    }


def marked_run_from_json(data: dict) -> MarkedRun:
    try:
        overlaps = {tuple(_cycle_from_key(k).entries): float(v) for k, v in data["pair_overlaps"].items()}
        stderr = {}
        for k, v in data.get("stderr", {}).items():
            ent = tuple(int(x) for x in k.strip("()").split(","))
            stderr[ent] = float(v)
        return MarkedRun(int(data["marked"]), overlaps, tuple(data["triple"]), float(data["triple_expectation"]), stderr)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"marked run: {exc}") from exc


def report_to_json(report: ExtractionReport) -> dict:
    q = report.quantifiers
    c = report.combinations
    out = {
        "statistics": report.statistics.value,
        "pure": report.pure,
        "ambiguous": report.ambiguous,
        "quantifiers": q.as_dict(),
        "combinations": {"P_F": list(c.P_F), "P": list(c.P), "Q": list(c.Q)},
        "pairs": [
            {
                "symmetry": p.symmetry,
                "cycles": [str(x) for x in p.cycles],
                "values": list(p.values),
                "discriminant": p.discriminant,
                "status": "resolved" if p.resolved else "ambiguous",
                "assignment": None if p.assignment is None else {str(k): v for k, v in p.assignment.items()},
                "near_singular": p.near_singular,
            }
            for p in report.pairs
        ],
        "fourcycle_terms": {str(k): v for k, v in report.fourcycle_terms.items()},
        "projector_expectations": {
            "four_particle": report.four_particle,
            "three_particle_avg": report.three_particle_avg,
            "two_particle_avg": report.two_particle_avg,
            "four_particle_bunching": report.four_particle_bunching,
        },
        "pair_overlaps": None if report.pair_overlaps is None else {
            _cycle_key(k): v for k, v in report.pair_overlaps.items()
        },
        "triple_expectations": {_cycle_key(k): v for k, v in report.triple_expectations.items()},
        "marked_runs": [marked_run_to_json(r) for r in report.marked_runs],
        "stderr": dict(report.stderr),
        "warnings": list(report.warnings),
    }
    if report.probabilities is not None:
        out["class_probabilities"] = {k.value: v for k, v in report.probabilities.values.items()}
        if report.probabilities.covariance is not None:
            out["covariance"] = report.probabilities.covariance.tolist()
    return out


def report_from_json(data: dict, tol: Tolerances = DEFAULT) -> ExtractionReport:
    """Rebuild a report by re-running extraction on the stored inputs."""
    probs = _require(data, "class_probabilities", "report")
    try:
        cov = data.get("covariance")
        cp = ClassProbabilities(
            {EventClass(k): float(v) for k, v in probs.items()},
            None if cov is None else np.asarray(cov, dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"report: {exc}") from exc
    runs = [marked_run_from_json(r) for r in data.get("marked_runs", [])]
    return extract(cp, _statistics(data), runs, tol, data.get("pure"))


# --- reconstruction -----------------------------------------------------------------------------

def _phase_table(phases: dict) -> dict:
    return {str(c): _opt_float(p) for c, p in phases.items()}


def reconstruction_to_json(result: ReconstructionResult) -> dict:
    primary = result.branches[0]
    cands = {}
    for cand in (*result.candidates.triads.values(), *result.candidates.fourcycles.values()):
        phi = primary.get(cand.cycle)
        if not cand.present:
            sign = "absent"
        elif phi is None or cand.Phi == 0.0 or cand.Phi == np.pi:
            sign = "undetermined"
        else:
            sign = "+" if phi > 0 else "-"
        cands[str(cand.cycle)] = {
            "magnitude": cand.magnitude,
            "cosine": cand.cosine,
            "Phi": cand.Phi,
            "sign": sign,
        }
    return {
        "statistics": result.external_state.statistics.value,
        "topology": result.topology,
        "conjugate_flag": result.conjugate_flag,
        "degenerate": result.degenerate,
        "pair_overlaps": {_cycle_key(k): v for k, v in result.pair_overlaps.items() if tuple(k) in PAIRS},
        "candidates": cands,
        "branches": [_phase_table(b) for b in result.branches],
        "residuals": dict(result.residuals),
        "external_state": external_to_json(result.external_state),
    }
