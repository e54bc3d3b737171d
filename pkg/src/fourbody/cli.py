"""Command-line front end: simulate, sample, extract, reconstruct, verify.

Exit codes: 0 success, 2 input schema, 3 statistical inconsistency,
4 precondition violation, 5 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import io
from .external import (
    InvariantError,
    build_external_state,
    partial_trace,
    projector_expectations,
    symmetric_eigenvalue,
)
from .extraction import CLASSES, InconsistentStatisticsError, analyze_marked_run, extract
from .interferometer import (
    NumericalIntegrityError,
    SymmetryViolationError,
    class_members,
    closed_form_table,
    full_statistics,
    hypercube_unitary,
    random_unitary,
)
from .internal import InternalEnsemble, make_distinguishable
from .oracles import labelling_matrix
from .reconstruction import (
    PreconditionError,
    check_hypercube_coefficients,
    conjugation_invariance_check,
    reconstruct,
)
from .sampling import estimate, sample
from .tolerances import DEFAULT, Tolerances

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_INCONSISTENT = 3
EXIT_PRECONDITION = 4
EXIT_INVARIANT = 5


@dataclass
class RunConfig:
    command: str
    input: str
    output: str | None = None
    statistics: str | None = None
    shots: int | None = None
    seed: int = 0
    batches: int = 1
    marks: list = field(default_factory=list)
    marked_runs: list = field(default_factory=list)
    tolerances: Tolerances = DEFAULT
    format: str = "json"
    unitary: str = "hypercube"
    assume_pure: bool = False


def parse_tolerance(items) -> Tolerances:
    overrides = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise io.SchemaError(f"--tolerance expects key=value, got {item!r}")
        try:
            overrides[key.strip()] = float(value)
        except ValueError as exc:
            raise io.SchemaError(f"--tolerance {key}: not a number") from exc
    try:
        return DEFAULT.updated(overrides)
    except KeyError as exc:
        raise io.SchemaError(str(exc.args[0])) from exc


def _emit(cfg: RunConfig, payload: dict, rows: list[tuple]) -> None:
    if cfg.format == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = io.dumps(payload)
    if cfg.output:
        io.write_text(cfg.output, text)
    else:
        sys.stdout.write(text)


def _table(lines) -> None:
    for line in lines:
        print(line, file=sys.stderr)


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.10g}"


# --- commands ------------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    ensemble = io.ensemble_from_json(io.load_json(cfg.input), cfg.statistics)
    stats = full_statistics(ensemble)
    runs = []
    for m in cfg.marks:
        run = full_statistics(make_distinguishable(ensemble, m))
        runs.append(replace(run, marked=m, pure=ensemble.is_pure))
    payload = io.statistics_to_json(stats, runs)
    rows = [("class", "size", "p")] + [(c.value, c.size, repr(stats.per_class[c])) for c in CLASSES]
    _table(
        [f"{'class':<7}{'size':>5}  p"]
        + [f"{c.value:<7}{c.size:>5}  {stats.per_class[c]:.12g}" for c in CLASSES]
        + [f"normalization residual {stats.total() - 1:.3g}"]
    )
    _emit(cfg, payload, rows)
    return EXIT_OK


def _seed_for_mark(seed: int, marked: int) -> int:
    return int(np.random.SeedSequence([seed, 1000 + marked]).generate_state(1)[0])


def cmd_sample(cfg: RunConfig) -> int:
    data = io.load_json(cfg.input)
    stats = io.statistics_from_json(data)
    record = sample(stats, cfg.shots, cfg.seed, cfg.batches)
    runs = []
    for m, item in io.marked_statistics_from_json(data):
        sub = io.statistics_from_json(item)
        sub_record = sample(sub, cfg.shots, _seed_for_mark(cfg.seed, m), cfg.batches)
        runs.append(io.shots_to_json(sub_record, sub.statistics, sub.pure, m))
    payload = io.shots_to_json(record, stats.statistics, stats.pure, stats.marked, runs)
    est = estimate(record)
    se = est.stderr()
    _table([f"{'class':<7}  estimate        stderr"] + [f"{c.value:<7}  {est.values[c]:.8f}  {se[c]:.3g}" for c in CLASSES])
    rows = [("S1", "S2", "S3", "S4", "n")] + [(*ev.occupation, n) for ev, n in record.counts.items()]
    _emit(cfg, payload, rows)
    return EXIT_OK


def _marked_runs_from(data: dict, statistics, tol) -> list:
    runs = []
    for m, item in io.marked_statistics_from_json(data):
        probs = io.probabilities_from_json(item)
        runs.append(analyze_marked_run(probs, m, statistics, tol))
    return runs


def cmd_extract(cfg: RunConfig) -> int:
    data = io.load_json(cfg.input)
    statistics = io._statistics(data, cfg.statistics)
    probs = io.probabilities_from_json(data)
    tol = cfg.tolerances
    runs = _marked_runs_from(data, statistics, tol)
    for path in cfg.marked_runs:
        item = io.load_json(path)
        m = item.get("marked")
        if m not in (1, 2, 3, 4):
            raise io.SchemaError(f"{path}: marked-run file needs 'marked' in 1..4")
        runs.append(analyze_marked_run(io.probabilities_from_json(item), m, statistics, tol))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # notes are kept in the report
        report = extract(probs, statistics, runs, tol, data.get("pure"))
    payload = io.report_to_json(report)
    q = report.quantifiers
    lines = [f"I_112 {q.I_112:.10g}  I_13 {q.I_13:.10g}  I_22 {q.I_22:.10g}  I_4 {q.I_4:.10g}"]
    for p in report.pairs:
        status = "resolved" if p.resolved else "ambiguous"
        lines.append(f"symmetry {p.symmetry}: {{{_fmt(p.values[0])}, {_fmt(p.values[1])}}} {status}")
    for note in report.warnings:
        lines.append(f"note: {note}")
    _table(lines)
    rows = [("quantity", "value")] + [(k, repr(v)) for k, v in q.as_dict().items()]
    rows += [(f"fourcycle {k}", repr(v)) for k, v in report.fourcycle_terms.items()]
    if report.pair_overlaps:
        rows += [(f"T {k}", repr(v)) for k, v in report.pair_overlaps.items()]
    _emit(cfg, payload, rows)
    return EXIT_OK


def cmd_reconstruct(cfg: RunConfig) -> int:
    data = io.load_json(cfg.input)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = io.report_from_json(data, cfg.tolerances)
        result = reconstruct(report, cfg.tolerances, assume_pure=cfg.assume_pure)
    payload = io.reconstruction_to_json(result)
    lines = [f"topology {result.topology}"] + [f"{k} residual {v:.3g}" for k, v in result.residuals.items()]
    if result.degenerate:
        lines.append("note: more than two phase branches are consistent")
    _table(lines)
    rows = [("cycle", "phase_primary", "phase_secondary")] + [
        (str(c), _fmt(p), _fmt(result.branches[1][c])) for c, p in result.branches[0].items()
    ]
    _emit(cfg, payload, rows)
    return EXIT_OK


def verification_checks(ensemble: InternalEnsemble, unitary_kind: str = "hypercube", seed: int = 0) -> list[tuple[str, bool, str]]:
    """Run the invariant suite; each entry is (name, passed, detail)."""
    if unitary_kind == "hypercube":
        unitary = hypercube_unitary()
    else:
        unitary = random_unitary(np.random.default_rng(seed))
    checks = []
    ext = build_external_state(ensemble)
    try:
        ext.check()
        checks.append(("external state invariants", True, ""))
    except InvariantError as exc:
        checks.append(("external state invariants", False, str(exc)))
    stats = full_statistics(ext, unitary, check=False)
    closed = closed_form_table(ensemble)
    dev = max(abs(stats.per_event[e] - closed[c]) for c, members in class_members().items() for e in members)
    checks.append(("closed form vs full sum", dev <= 1e-10, f"max deviation {dev:.3g}"))
    spread = stats.max_class_spread()
    checks.append(("class symmetry", spread <= 1e-12, f"max spread {spread:.3g}"))
    conj = conjugation_invariance_check(ext, unitary)
    checks.append(("conjugation invariance", conj, ""))
    pe = projector_expectations(ensemble)
    d3 = abs(partial_trace(ext, 3).projector_expectation() - pe.three_particle_avg)
    d2 = abs(partial_trace(ext, 2).projector_expectation() - pe.two_particle_avg)
    checks.append(("partial-trace identities", max(d2, d3) <= 1e-10, f"deviation {max(d2, d3):.3g}"))
    try:
        lam = symmetric_eigenvalue(ext)
        checks.append(("symmetric eigenvalue", abs(lam - pe.four_particle) <= 1e-10, f"deviation {abs(lam - pe.four_particle):.3g}"))
    except InvariantError as exc:
        checks.append(("symmetric eigenvalue", False, str(exc)))
    if ensemble.is_pure or ensemble.dimension <= 3:
        rhos = [ensemble.rho(a) for a in range(1, 5)]
        ref = labelling_matrix(rhos, ensemble.statistics.sign < 0)
        d = float(np.max(np.abs(ref - ext.matrix)))
        checks.append(("full tensor-space oracle", d <= 1e-10, f"max deviation {d:.3g}"))
    if unitary.is_hypercube:
        try:
            check_hypercube_coefficients(unitary)
            checks.append(("coefficient symmetries", True, ""))
        except (InvariantError, NumericalIntegrityError) as exc:
            checks.append(("coefficient symmetries", False, str(exc)))
    return checks


def cmd_verify(cfg: RunConfig) -> int:
    ensemble = io.ensemble_from_json(io.load_json(cfg.input), cfg.statistics)
    checks = verification_checks(ensemble, cfg.unitary, cfg.seed)
    _table([f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip() for name, ok, detail in checks])
    payload = {
        "unitary": cfg.unitary,
        "passed": all(ok for _, ok, _ in checks),
        "checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in checks],
    }
    rows = [("check", "passed", "detail")] + [(n, ok, d) for n, ok, d in checks]
    _emit(cfg, payload, rows)
    return EXIT_OK if payload["passed"] else EXIT_INVARIANT


COMMANDS = {
    "simulate": cmd_simulate,
    "sample": cmd_sample,
    "extract": cmd_extract,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourbody", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, statistics=True):
        p.add_argument("input", help="input JSON file")
        p.add_argument("--output", "-o", help="write here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--tolerance", action="append", default=[], metavar="KEY=VALUE")
        if statistics:
            p.add_argument("--statistics", choices=("boson", "fermion"), help="override the declared particle type")

    p = sub.add_parser("simulate", help="exact output statistics of an ensemble")
    common(p)
    p.add_argument("--mark", action="append", type=int, default=[], metavar="ALPHA",
                   help="also simulate the run with this particle made distinguishable")

    p = sub.add_parser("sample", help="finite-shot counts drawn from a statistics file")
    common(p, statistics=False)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batches", type=int, default=1)

    p = sub.add_parser("extract", help="quantifiers and overlaps from statistics or counts")
    common(p)
    p.add_argument("--marked-run", action="append", default=[], metavar="FILE")

    p = sub.add_parser("reconstruct", help="phases and external state from an extraction report")
    common(p, statistics=False)
    p.add_argument("--assume-pure", action="store_true", help="proceed when purity is not recorded")

    p = sub.add_parser("verify", help="run the invariant suite on an ensemble")
    common(p)
    p.add_argument("--unitary", choices=("hypercube", "random"), default="hypercube")
    p.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args) -> RunConfig:
    shots = getattr(args, "shots", None)
    if shots is not None and shots < 1:
        raise io.SchemaError("--shots must be at least 1")
    marks = getattr(args, "mark", [])
    bad = [m for m in marks if m not in (1, 2, 3, 4)]
    if bad:
        raise io.SchemaError(f"--mark expects particles 1..4, got {bad}")
    return RunConfig(
        command=args.command,
        input=args.input,
        output=args.output,
        statistics=getattr(args, "statistics", None),
        shots=shots,
        seed=getattr(args, "seed", 0),
        batches=getattr(args, "batches", 1),
        marks=sorted(set(marks)),
        marked_runs=getattr(args, "marked_run", []),
        tolerances=parse_tolerance(args.tolerance),
        format=args.format,
        unitary=getattr(args, "unitary", "hypercube"),
        assume_pure=getattr(args, "assume_pure", False),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except io.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except InconsistentStatisticsError as exc:
        print(f"inconsistent statistics: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InvariantError, NumericalIntegrityError, SymmetryViolationError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
