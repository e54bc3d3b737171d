"""Brute-force reference computations used to cross-check the fast paths.

Nothing here goes through cycle decompositions or trace products: states
are (anti)symmetrized on the full tensor space of N particles, each living
in ``modes x internal``, and the internal factors are traced out
explicitly.  Mixed internal states are handled by expanding every
``rho_a`` into its eigenvectors, so cost grows as ``d**N`` pure terms;
keep ``d <= 3`` for mixed input.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def _sign(perm) -> int:
    inversions = sum(1 for i, j in itertools.combinations(range(len(perm)), 2) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


def _eig_terms(rho: np.ndarray, cutoff: float = 1e-14):
    w, v = np.linalg.eigh(rho)
    return [(float(wk), v[:, k]) for k, wk in enumerate(w) if wk > cutoff]


def _symmetrized_external(vectors, fermion: bool) -> np.ndarray:
    """External density matrix (modes**N square) of one pure internal term.

    Particle ``a`` starts in mode ``a`` with internal vector ``vectors[a]``.
    """
    n = len(vectors)
    d = len(vectors[0])
    m = n  # one mode per particle
    single = []
    for a, v in enumerate(vectors):
        ket = np.zeros((m, d), dtype=complex)
        ket[a] = v
        single.append(ket.ravel())
    prod = single[0]
    for s in single[1:]:
        prod = np.multiply.outer(prod, s)
    sym = np.zeros_like(prod)
    for perm in itertools.permutations(range(n)):
        coeff = _sign(perm) if fermion else 1
        # slot a takes the content of slot perm[a]
        sym = sym + coeff * np.transpose(prod, perm)
    sym /= math.sqrt(math.factorial(n))
    # split every slot into (mode, internal) and gather modes first
    t = sym.reshape((m, d) * n)
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    mat = np.transpose(t, order).reshape(m**n, d**n)
    return mat @ mat.conj().T


def full_external_density(rhos, fermion: bool) -> np.ndarray:
    """Reduced external state on the full ``modes**N`` space."""
    terms = [_eig_terms(np.asarray(r, dtype=complex)) for r in rhos]
    out = None
    for combo in itertools.product(*terms):
        weight = math.prod(w for w, _ in combo)
        block = weight * _symmetrized_external([v for _, v in combo], fermion)
        out = block if out is None else out + block
    return out


def _flat_index(modes, m) -> int:
    idx = 0
    for x in modes:
        idx = idx * m + (x - 1)
    return idx


def labelling_matrix(rhos, fermion: bool) -> np.ndarray:
    """24 x 24 block on kets ``|pi(1), ..., pi(4)>``, lexicographic in pi."""
    n = len(rhos)
    full = full_external_density(rhos, fermion)
    perms = list(itertools.permutations(range(1, n + 1)))
    idx = [_flat_index(p, n) for p in perms]
    return full[np.ix_(idx, idx)]


def symmetric_projector(n_slots: int, m: int, fermion: bool) -> np.ndarray:
    dim = m**n_slots
    proj = np.zeros((dim, dim))
    eye = np.eye(dim).reshape((m,) * n_slots + (dim,))
    for perm in itertools.permutations(range(n_slots)):
        coeff = _sign(perm) if fermion else 1
        proj += coeff * np.transpose(eye, list(perm) + [n_slots]).reshape(dim, dim)
    return proj / math.factorial(n_slots)


def reduced_projector_expectation(rhos, fermion: bool, keep: int) -> float:
    """``Tr(P rho_E^{keep p})`` after tracing out the trailing slots of the full state."""
    n = len(rhos)
    m = n
    full = full_external_density(rhos, fermion)
    t = full.reshape((m,) * (2 * n))
    # contract the bra/ket pairs of the traced slots
    for _ in range(n - keep):
        k = t.ndim // 2
        t = np.trace(t, axis1=k - 1, axis2=t.ndim - 1)
    red = t.reshape(m**keep, m**keep)
    return float(np.trace(symmetric_projector(keep, m, fermion) @ red).real)


def subset_projector_expectation(rhos, subset, fermion: bool) -> float:
    """Projector expectation for the state built from a subset of particles only."""
    sub = [rhos[a - 1] for a in subset]
    n = len(sub)
    full = full_external_density(sub, fermion)
    return float(np.trace(symmetric_projector(n, n, fermion) @ full).real)


def brute_force_probability(rho_e: np.ndarray, unitary: np.ndarray, occupation) -> float:
    """Event probability from the full many-body unitary ``U^{x4}`` on modes**4."""
    m = 4
    big = unitary
    for _ in range(3):
        big = np.kron(big, unitary)
    perms = list(itertools.permutations(range(1, 5)))
    idx = [_flat_index(p, m) for p in perms]
    embedded = np.zeros((m**4, m**4), dtype=complex)
    embedded[np.ix_(idx, idx)] = rho_e
    out = big @ embedded @ big.conj().T
    total = 0.0
    for modes in itertools.product(range(1, m + 1), repeat=4):
        if tuple(modes.count(j) for j in range(1, m + 1)) == tuple(occupation):
            k = _flat_index(modes, m)
            total += out[k, k].real
    return total


def enumerated_quantifiers(rhos) -> tuple[float, float, float, float]:
    """Sum of trace products over every relabelling, grouped by cycle type.

    Works directly from permutation tuples: for ``kappa`` it multiplies
    ``Tr(rho_a rho_kappa(a) rho_kappa(kappa(a)) ...)`` along each orbit.
    """
    sums = {(1, 1, 2): 0j, (1, 3): 0j, (2, 2): 0j, (4,): 0j}
    for images in itertools.permutations(range(4)):
        seen = set()
        val = 1 + 0j
        lengths = []
        for start in range(4):
            if start in seen:
                continue
            orbit = [start]
            seen.add(start)
            nxt = images[start]
            while nxt != start:
                orbit.append(nxt)
                seen.add(nxt)
                nxt = images[nxt]
            lengths.append(len(orbit))
            if len(orbit) > 1:
                prod = np.eye(len(rhos[0]), dtype=complex)
                for a in orbit:
                    prod = prod @ rhos[a]
                val *= np.trace(prod)
        key = tuple(sorted(lengths))
        if key in sums:
            sums[key] += val
    return tuple(float(sums[k].real) for k in ((1, 1, 2), (1, 3), (2, 2), (4,)))
