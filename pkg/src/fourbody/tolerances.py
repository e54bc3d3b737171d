from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    eps_orth: float = 1e-9  # overlaps at or below count as orthogonal
    tol_disc: float = 1e-8  # negative pair discriminant clamped to zero above -tol_disc
    tol_value: float = 1e-6  # slack for overlap values outside [0, 1]
    tol_total: float = 1e-8  # normalization slack of class probabilities
    tol_cos: float = 1e-6  # cosine arguments clamped into [-1, 1] within this
    tol_phase: float = 1e-6  # phase consistency relations, radians
    tol_pure: float = 1e-8  # pure-state magnitude relation
    cos_snap: float = 1e-12  # cosines this close to +-1 are taken as exactly +-1

    def updated(self, overrides: dict[str, float]) -> "Tolerances":
        known = {f.name for f in fields(self)}
        bad = set(overrides) - known
        if bad:
            raise KeyError(f"unknown tolerance(s): {', '.join(sorted(bad))}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


DEFAULT = Tolerances()
