import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fourbody.extraction import CLASSES, ClassProbabilities, InconsistentStatisticsError, extract
from fourbody.interferometer import (
    EventClass,
    OccupationEvent,
    OutputStatistics,
    all_events,
    class_members,
    full_statistics,
)
from fourbody.internal import InternalEnsemble, Statistics, basis_vector
from fourbody.sampling import ShotRecord, estimate, pooling_diagnostic, sample

from strategies import ensembles, seeds

ORTHOGONAL = InternalEnsemble.from_vectors([basis_vector(4, k) for k in range(4)])
IDENTICAL = InternalEnsemble.from_vectors([basis_vector(4, 0)] * 4)


def table(weight):
    per_event = {e: weight(e) for e in all_events()}
    per_class = {c: per_event[m[0]] for c, m in class_members().items()}
    return OutputStatistics(per_event, per_class, Statistics.BOSON, hypercube=False)


def point_mass(event):
    return table(lambda e: float(e == event))


def test_degenerate_distribution():
    ev = OccupationEvent((2, 0, 1, 1))
    rec = sample(point_mass(ev), 1000, seed=1)
    assert rec.counts[ev] == 1000
    assert sum(rec.counts.values()) == 1000


@settings(max_examples=15)
@given(ensembles(), seeds, st.integers(1, 4))
def test_determinism(ens, seed, batches):
    stats = full_statistics(ens)
    a = sample(stats, 5000, seed, batches)
    b = sample(stats, 5000, seed, batches)
    assert a == b
    assert sum(a.counts.values()) == 5000
    est = estimate(a)
    assert est.weighted_total() == pytest.approx(1.0, abs=1e-12)
    assert min(est.values.values()) >= 0


def test_different_seeds_differ():
    stats = full_statistics(ORTHOGONAL)
    assert sample(stats, 10000, 1).counts != sample(stats, 10000, 2).counts


def test_boson_bunching_frequency():
    rec = sample(full_statistics(IDENTICAL), 10**6, seed=7)
    est = estimate(rec)
    sigma = np.sqrt(0.25 * 0.75 / 10**6)
    assert sigma == pytest.approx(4.33e-4, rel=1e-2)
    assert abs(est.values[EventClass.A_A] - 0.25) <= 5 * sigma
    assert est.stderr()[EventClass.A_A] == pytest.approx(sigma, rel=1e-2)


def test_single_event_estimate():
    rec = ShotRecord({(1, 1, 1, 1): 100}, 100, 0)
    est = estimate(rec)
    for c in CLASSES:
        assert est.values[c] == (1.0 if c is EventClass.A_A else 0.0)


def test_pooling_invariance():
    members = class_members()[EventClass.A_B]
    spread = ShotRecord({e: 25 for e in members}, 100, 0)
    lumped = ShotRecord({members[0]: 100}, 100, 0)
    assert estimate(spread).values == estimate(lumped).values
    assert pooling_diagnostic(spread).flagged() == []
    assert EventClass.A_B in pooling_diagnostic(lumped).flagged()


def test_pooling_diagnostic_quiet_on_hypercube_data():
    rec = sample(full_statistics(ORTHOGONAL), 10**5, seed=3)
    diag = pooling_diagnostic(rec)
    assert diag.flagged(1e-6) == []
    assert set(diag.p_value) == set(CLASSES)


def test_orthogonal_quantifiers_at_ten_million_shots():
    rec = sample(full_statistics(ORTHOGONAL), 10**7, seed=2024)
    with pytest.warns(UserWarning, match="discriminant"):
        rep = extract(estimate(rec), "boson")
    for name, value in rep.quantifiers.as_dict().items():
        assert abs(value) <= 5 * rep.stderr[name], name


def test_covariance_matches_linear_propagation():
    rec = sample(full_statistics(ORTHOGONAL), 10**4, seed=5)
    est = estimate(rec)
    cov = est.covariance
    assert np.allclose(cov, cov.T)
    assert np.min(np.linalg.eigvalsh(cov)) >= -1e-18
    # the weighted total is fixed, so its variance vanishes
    sizes = np.array([len(class_members()[c]) for c in CLASSES], float)
    assert sizes @ cov @ sizes == pytest.approx(0.0, abs=1e-15)


def test_error_scaling():
    stats = full_statistics(ORTHOGONAL)
    truth = ClassProbabilities.from_statistics(stats).vector
    shots = (10**4, 10**5, 10**6)
    rms = []
    for n in shots:
        errs = [np.linalg.norm(estimate(sample(stats, n, seed)).vector - truth) for seed in range(20)]
        rms.append(np.sqrt(np.mean(np.square(errs))))
    slope = np.polyfit(np.log(shots), np.log(rms), 1)[0]
    assert abs(slope + 0.5) <= 0.1


def test_input_validation():
    bad = table(lambda e: 0.5 / 35)
    with pytest.raises(InconsistentStatisticsError):
        sample(bad, 10, 0)
    with pytest.raises(ValueError):
        sample(full_statistics(ORTHOGONAL), 0, 0)
    with pytest.raises(ValueError):
        ShotRecord({(4, 0, 0, 0): 3}, 4, 0)
    with pytest.raises(ValueError):
        ShotRecord({(4, 0, 0, 0): -1}, -1, 0)
