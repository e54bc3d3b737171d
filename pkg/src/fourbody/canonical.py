"""The four reference ensembles shipped as JSON fixtures."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .internal import InternalEnsemble, Statistics, basis_vector, random_ensemble

RANDOM_SEED = 20240611


def canonical_ensembles() -> dict[str, InternalEnsemble]:
    zero = basis_vector(4, 0)
    return {
        "distinguishable": InternalEnsemble.from_vectors([basis_vector(4, k) for k in range(4)], Statistics.BOSON),
        "ideal_boson": InternalEnsemble.from_vectors([zero] * 4, Statistics.BOSON),
        "ideal_fermion": InternalEnsemble.from_vectors([zero] * 4, Statistics.FERMION),
        "random_pure": random_ensemble(np.random.default_rng(RANDOM_SEED), 4, True, Statistics.BOSON),
    }


def write_fixtures(directory) -> list[Path]:
    from . import io

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, ens in canonical_ensembles().items():
        path = directory / f"{name}.json"
        io.write_text(path, io.dumps(io.ensemble_to_json(ens, name)))
        written.append(path)
    return written


if __name__ == "__main__":
    for p in write_fixtures(sys.argv[1] if len(sys.argv) > 1 else "fixtures"):
        print(p)
