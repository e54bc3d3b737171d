"""Acceptance criteria, one test each.

Every test prints a ``PASS``/``FAIL`` line; the lines are also repeated in
the pytest terminal summary.  Run the file directly to print them without
pytest.
"""

import time
from pathlib import Path

import numpy as np

from fourbody import io
from fourbody.external import (
    build_external_state,
    partial_trace,
    projector_expectations,
    quantifiers,
)
from fourbody.extraction import CLASSES, ClassProbabilities, extract_from_ensemble
from fourbody.interferometer import (
    EventClass,
    class_members,
    closed_form_table,
    full_statistics,
    random_unitary,
)
from fourbody.internal import (
    FOURCYCLES,
    PAIRS,
    InternalEnsemble,
    Statistics,
    basis_vector,
    pair_overlaps,
    random_ensemble,
    random_pure_ensemble_with_topology,
    trace_product,
)
from fourbody.reconstruction import MixedStateError, conjugation_invariance_check, reconstruct_from_ensemble
from fourbody.sampling import estimate, sample

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
FIXTURE_NAMES = ("distinguishable", "ideal_boson", "ideal_fermion", "random_pure")
RESULTS: list[str] = []


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    return ok


def mixed_bag(count, seed):
    """Ensembles cycling through pure/mixed, boson/fermion and d = 2..4."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        stats = (Statistics.BOSON, Statistics.FERMION)[k % 2]
        pure = (k // 2) % 2 == 0
        out.append(random_ensemble(rng, 2 + k % 3, pure, stats))
    return out


def test_criterion_1_closed_form_matches_full_sum():
    start = time.perf_counter()
    worst = 0.0
    for ens in mixed_bag(200, 1):
        stats = full_statistics(ens, check=False)
        table = closed_form_table(ens)
        for cls, members in class_members().items():
            for ev in members:
                worst = max(worst, abs(stats.per_event[ev] - table[cls]))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 10
    assert report(1, "closed form vs full sum", ok, f"max dev {worst:.2e} over 200 ensembles, {elapsed:.2f} s")


def test_criterion_2_limiting_tables():
    ortho = InternalEnsemble.from_vectors([basis_vector(4, k) for k in range(4)])
    same = [basis_vector(4, 0)] * 4
    d = full_statistics(ortho)
    expect = {
        EventClass.F1_I: 1 / 64, EventClass.F1_II: 3 / 64, EventClass.A_A: 3 / 32,
        EventClass.A_B: 1 / 256, EventClass.A_1: 3 / 128,
    }
    dev = max(abs(d.per_class[c] - v) for c, v in expect.items())
    dev = max(dev, abs(d.total() - 1))
    b = full_statistics(InternalEnsemble.from_vectors(same, Statistics.BOSON))
    forbidden = [e for c in CLASSES[:6] for e in class_members()[c]]
    f_max = max(b.per_event[e] for e in forbidden)
    b_expect = {EventClass.A_A: 1 / 4, EventClass.A_B: 3 / 32, EventClass.A_1: 1 / 16}
    b_dev = max(abs(b.per_class[c] - v) for c, v in b_expect.items())
    f = full_statistics(InternalEnsemble.from_vectors(same, Statistics.FERMION))
    f_dev = abs(f.per_class[EventClass.A_A] - 1)
    ok = len(forbidden) == 24 and dev <= 1e-15 and f_max <= 1e-12 and b_dev <= 1e-12 and f_dev <= 1e-12
    detail = f"distinguishable dev {dev:.1e}, boson forbidden max {f_max:.1e}, boson dev {b_dev:.1e}, fermion dev {f_dev:.1e}"
    assert report(2, "limiting tables", ok, detail)


def test_criterion_3_klein_four_symmetry():
    spread = max(full_statistics(ens, check=False).max_class_spread() for ens in mixed_bag(100, 3))
    rng = np.random.default_rng(33)
    control = full_statistics(random_ensemble(rng, 3, True), random_unitary(rng), check=False).max_class_spread()
    ok = spread <= 1e-12 and control >= 1e-3
    assert report(3, "Klein-four symmetry", ok, f"hypercube spread {spread:.1e}, random-unitary spread {control:.2e}")


def test_criterion_4_extraction_round_trip():
    worst = {"I_L": 0.0, "four-cycle": 0.0, "bunching": 0.0, "T": 0.0}
    for ens in mixed_bag(100, 4):
        rep = extract_from_ensemble(ens)
        q = quantifiers(ens)
        worst["I_L"] = max(worst["I_L"], np.max(np.abs(np.subtract(rep.quantifiers.as_tuple(), q.as_tuple()))))
        for c in FOURCYCLES:
            worst["four-cycle"] = max(worst["four-cycle"], abs(rep.fourcycle_terms[c] - trace_product(ens, c).real))
        if ens.statistics is Statistics.BOSON:
            ref = projector_expectations(ens).four_particle
            worst["bunching"] = max(worst["bunching"], abs(rep.four_particle_bunching - ref))
        truth = pair_overlaps(ens)
        if rep.pair_overlaps is None:
            worst["T"] = np.inf
        else:
            worst["T"] = max(worst["T"], max(abs(rep.pair_overlaps[p] - truth[p]) for p in PAIRS))
    ok = max(worst.values()) <= 1e-9
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert report(4, "extraction round trip", ok, detail)


def test_criterion_5_partial_trace_identities():
    worst = 0.0
    for ens in mixed_bag(100, 5):
        ext = build_external_state(ens)
        pe = projector_expectations(ens)
        worst = max(
            worst,
            abs(partial_trace(ext, 3).projector_expectation() - pe.three_particle_avg),
            abs(partial_trace(ext, 2).projector_expectation() - pe.two_particle_avg),
        )
    assert report(5, "partial-trace identities", worst <= 1e-10, f"max dev {worst:.1e}")


def test_criterion_6_reconstruction():
    rng = np.random.default_rng(6)
    frob = conj = 0.0
    seen = set()
    for k in range(100):
        topo = "abcde"[k % 5]
        stats = (Statistics.BOSON, Statistics.FERMION)[(k // 5) % 2]
        ens = random_pure_ensemble_with_topology(topo, rng, 4, stats)
        res = reconstruct_from_ensemble(ens)
        seen.add(res.topology)
        frob = max(frob, res.distance_to(build_external_state(ens)))
        conj = max(conj, np.max(np.abs(res.external_state.matrix - res.conjugate_state.matrix.conj())))
    try:
        reconstruct_from_ensemble(random_ensemble(rng, 3, False))
        rejected = False
    except MixedStateError:
        rejected = True
    ok = frob <= 1e-8 and conj <= 1e-10 and rejected and seen == set("abcde")
    detail = f"topologies {''.join(sorted(seen))}, Frobenius {frob:.1e}, conjugacy {conj:.1e}, mixed rejected {rejected}"
    assert report(6, "reconstruction", ok, detail)


def test_criterion_7_conjugation_invariance():
    worst = 0.0
    flagged = 0
    for ens in mixed_bag(100, 7):
        ext = build_external_state(ens)
        a = full_statistics(ext, check=False).per_event
        b = full_statistics(ext.conjugate(), check=False).per_event
        worst = max(worst, max(abs(a[e] - b[e]) for e in a))
        flagged += not conjugation_invariance_check(ext)
    ok = worst <= 1e-12 and flagged == 0
    assert report(7, "conjugation invariance", ok, f"max dev {worst:.1e}, checker failures {flagged}")


def _fixture_stats(name):
    return full_statistics(io.ensemble_from_json(io.load_json(FIXTURES / f"{name}.json")))


def test_criterion_8_monte_carlo():
    worst_z = 0.0
    for k, name in enumerate(FIXTURE_NAMES):
        stats = _fixture_stats(name)
        truth = ClassProbabilities.from_statistics(stats).vector
        est = estimate(sample(stats, 10**6, seed=800 + k))
        se = np.sqrt(np.diag(est.covariance))
        dev = np.abs(est.vector - truth)
        if np.any(dev[se == 0] > 0):
            worst_z = np.inf
        z = dev[se > 0] / se[se > 0]
        worst_z = max(worst_z, float(z.max(initial=0.0)))
    shots = (10**4, 10**5, 10**6)
    slopes = {}
    for name in FIXTURE_NAMES:
        stats = _fixture_stats(name)
        truth = ClassProbabilities.from_statistics(stats).vector
        rms = []
        for n in shots:
            errs = [np.linalg.norm(estimate(sample(stats, n, seed)).vector - truth) for seed in range(20)]
            rms.append(np.sqrt(np.mean(np.square(errs))))
        if min(rms) > 0:  # the ideal-fermion table is deterministic
            slopes[name] = float(np.polyfit(np.log(shots), np.log(rms), 1)[0])
    ok = worst_z <= 5 and len(slopes) == 3 and all(abs(s + 0.5) <= 0.1 for s in slopes.values())
    detail = f"max |z| {worst_z:.2f} at 1e6 shots; slopes " + ", ".join(f"{k} {v:.3f}" for k, v in slopes.items())
    assert report(8, "Monte Carlo consistency", ok, detail)


if __name__ == "__main__":
    import warnings

    warnings.simplefilter("ignore")
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
