import numpy as np
from hypothesis import strategies as st

from fourbody.internal import Statistics, random_ensemble, random_pure_ensemble_with_topology

seeds = st.integers(min_value=0, max_value=2**32 - 1)
statistics = st.sampled_from(list(Statistics))


@st.composite
def ensembles(draw, pure=None, dimensions=(2, 3, 4)):
    rng = np.random.default_rng(draw(seeds))
    is_pure = draw(st.booleans()) if pure is None else pure
    return random_ensemble(rng, draw(st.sampled_from(dimensions)), is_pure, draw(statistics))


@st.composite
def topology_ensembles(draw, topologies=("a", "b", "c", "d", "e")):
    rng = np.random.default_rng(draw(seeds))
    return random_pure_ensemble_with_topology(draw(st.sampled_from(topologies)), rng, 4, draw(statistics))
