"""Finite-shot emulation of the detection experiment.

Counts are drawn with numpy's PCG64 generator.  Each batch gets its own
stream seeded from ``SeedSequence([seed, batch])``, so a record depends
only on ``(statistics, shots, seed, batches)`` and not on the platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .extraction import CLASSES, SIZES, ClassProbabilities, InconsistentStatisticsError
from .interferometer import OccupationEvent, OutputStatistics, all_events, class_members

NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class ShotRecord:
    counts: dict  # OccupationEvent -> int, all 35 events present
    shots: int
    seed: int

    def __post_init__(self):
        counts = {}
        for ev, n in self.counts.items():
            ev = ev if isinstance(ev, OccupationEvent) else OccupationEvent(tuple(ev))
            n = int(n)
            if n < 0:
                raise ValueError(f"negative count for {ev}")
            counts[ev] = n
        counts = {ev: counts.get(ev, 0) for ev in all_events()}
        if sum(counts.values()) != self.shots:
            raise ValueError(f"counts sum to {sum(counts.values())}, expected {self.shots}")
        object.__setattr__(self, "counts", counts)


def _generator(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, batch])))


def sample(statistics: OutputStatistics, shots: int, seed: int, batches: int = 1) -> ShotRecord:
    """Multinomial draw of ``shots`` events, split evenly over ``batches`` streams."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if batches < 1:
        raise ValueError("batches must be at least 1")
    events = all_events()
    p = np.array([statistics.per_event[e] for e in events], dtype=float)
    if abs(p.sum() - 1) > NORMALIZATION_TOL:
        raise InconsistentStatisticsError(f"statistics are not normalized (total {p.sum():.12g})")
    p = p / p.sum()
    sizes = [shots // batches + (1 if b < shots % batches else 0) for b in range(batches)]
    total = np.zeros(len(events), dtype=np.int64)
    for b, n in enumerate(sizes):
        if n:
            total += _generator(seed, b).multinomial(n, p)
    return ShotRecord(dict(zip(events, (int(x) for x in total))), shots, seed)


def estimate(record: ShotRecord) -> ClassProbabilities:
    """Pooled class frequencies divided by class size, with multinomial covariance.

    The per-class standard error is the binomial one of the pooled count,
    ``sqrt(q (1 - q) / N) / m`` for pooled frequency ``q`` and class size ``m``.
    """
    n = record.shots
    members = class_members()
    pooled = np.array([sum(record.counts[e] for e in members[c]) for c in CLASSES], dtype=float) / n
    values = pooled / SIZES
    cov = (np.diag(pooled) - np.outer(pooled, pooled)) / n / np.outer(SIZES, SIZES)
    return ClassProbabilities(dict(zip(CLASSES, values)), covariance=cov)


@dataclass(frozen=True)
class PoolingDiagnostic:
    statistic: dict  # class -> chi-square of member counts against uniform
    p_value: dict

    def flagged(self, alpha: float = 1e-3) -> list:
        return [c for c, p in self.p_value.items() if p < alpha]


def pooling_diagnostic(record: ShotRecord) -> PoolingDiagnostic:
    """Chi-square test that members of each class share one probability."""
    stat, pval = {}, {}
    for cls, members in class_members().items():
        k = np.array([record.counts[e] for e in members], dtype=float)
        if len(k) < 2 or k.sum() == 0:
            stat[cls], pval[cls] = 0.0, 1.0
            continue
        res = sps.chisquare(k)
        stat[cls], pval[cls] = float(res.statistic), float(res.pvalue)
    return PoolingDiagnostic(stat, pval)
