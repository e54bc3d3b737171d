"""Exact algebra of the symmetric group on four particle labels.

Labels are 1-based everywhere in the public API.  A :class:`Permutation`
stores its one-line notation, ``images[a - 1] == p(a)``, and composition
follows ``compose(p, q)(a) == p(q(a))``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache

N = 4

#: Cycle structures of S4, each sorted ascending (length-1 cycles included).
CYCLE_STRUCTURES = ((1, 1, 1, 1), (1, 1, 2), (1, 3), (2, 2), (4,))


@dataclass(frozen=True)
class Cycle:
    """A single cycle, stored in canonical rotation (minimum entry first)."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        if not entries:
            raise ValueError("a cycle needs at least one entry")
        if len(set(entries)) != len(entries):
            raise ValueError(f"cycle entries must be distinct: {entries}")
        k = entries.index(min(entries))
        object.__setattr__(self, "entries", entries[k:] + entries[:k])

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def inverse(self) -> "Cycle":
        return Cycle(tuple(reversed(self.entries)))

    def __str__(self):
        return "(" + " ".join(str(e) for e in self.entries) + ")"


@dataclass(frozen=True)
class Permutation:
    """Element of S4 in one-line notation."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(1, N + 1)):
            raise ValueError(f"not a permutation of 1..{N}: {images}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls) -> "Permutation":
        return cls(tuple(range(1, N + 1)))

    @classmethod
    def from_cycles(cls, cycles) -> "Permutation":
        """Build from a cycle string such as ``"(1 2)(3 4)"`` or a sequence of cycles."""
        if isinstance(cycles, str):
            cycles = parse_cycles(cycles)
        images = list(range(1, N + 1))
        seen: set[int] = set()
        for cyc in cycles:
            cyc = tuple(cyc)
            if seen & set(cyc):
                raise ValueError("cycles must be disjoint")
            seen |= set(cyc)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                images[a - 1] = b
        return cls(tuple(images))

    def __call__(self, a: int) -> int:
        return self.images[a - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def inverse(self) -> "Permutation":
        inv = [0] * N
        for a, b in enumerate(self.images, start=1):
            inv[b - 1] = a
        return Permutation(tuple(inv))

    @cached_property
    def cycles(self) -> tuple[Cycle, ...]:
        """All cycles, length-1 ones included, ordered by minimal element."""
        out = []
        seen = set()
        for start in range(1, N + 1):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            nxt = self(start)
            while nxt != start:
                cyc.append(nxt)
                seen.add(nxt)
                nxt = self(nxt)
            out.append(Cycle(tuple(cyc)))
        return tuple(out)

    @property
    def structure(self) -> tuple[int, ...]:
        return tuple(sorted(len(c) for c in self.cycles))

    @property
    def sign(self) -> int:
        return -1 if (N - len(self.cycles)) % 2 else 1

    def cycle_notation(self) -> str:
        nontrivial = [str(c) for c in self.cycles if len(c) > 1]
        return "".join(nontrivial) if nontrivial else "()"

    def __str__(self):
        return self.cycle_notation()

    def __repr__(self):
        return f"Permutation({self.cycle_notation()})"


_CYCLE_RE = re.compile(r"\(([^()]*)\)")


def parse_cycles(text: str) -> list[tuple[int, ...]]:
    """Parse cycle notation like ``"(1 2)(3 4)"``; ``"()"`` is the identity."""
    text = text.strip()
    if not text or _CYCLE_RE.sub("", text).strip():
        raise ValueError(f"malformed cycle notation: {text!r}")
    cycles = []
    for body in _CYCLE_RE.findall(text):
        parts = body.replace(",", " ").split()
        if parts:
            cycles.append(tuple(int(p) for p in parts))
    return cycles


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Return ``p q``, i.e. apply ``q`` first."""
    return Permutation(tuple(p(q(a)) for a in range(1, N + 1)))


def cycle_decomposition(p: Permutation) -> tuple[tuple[Cycle, ...], tuple[int, ...], int]:
    return p.cycles, p.structure, p.sign


@lru_cache(maxsize=None)
def enumerate_s4() -> tuple[Permutation, ...]:
    """All 24 elements in lexicographic order of one-line notation."""
    return tuple(Permutation(t) for t in itertools.permutations(range(1, N + 1)))


@lru_cache(maxsize=None)
def s4_index() -> dict[Permutation, int]:
    return {p: i for i, p in enumerate(enumerate_s4())}


@lru_cache(maxsize=None)
def kappa_index_table():
    """``table[i, j]`` is the index of ``pi_i (pi_j)^-1`` in :func:`enumerate_s4`."""
    import numpy as np

    elems = enumerate_s4()
    idx = s4_index()
    table = np.empty((24, 24), dtype=np.intp)
    for i, p in enumerate(elems):
        for j, q in enumerate(elems):
            table[i, j] = idx[compose(p, q.inverse())]
    table.setflags(write=False)
    return table


def klein_four() -> tuple[Permutation, ...]:
    """Identity followed by the three double transpositions sigma^(1..3)."""
    return (
        Permutation.identity(),
        Permutation.from_cycles("(1 3)(2 4)"),
        Permutation.from_cycles("(1 2)(3 4)"),
        Permutation.from_cycles("(1 4)(2 3)"),
    )


def sigma(s: int) -> Permutation:
    """Mode permutation of hypercube symmetry ``s`` in {1, 2, 3}."""
    if s not in (1, 2, 3):
        raise ValueError(f"symmetry index must be 1, 2 or 3, got {s}")
    return klein_four()[s]


def sigma_cycles(s: int) -> tuple[Cycle, Cycle]:
    """The two transpositions of ``sigma(s)``: the one containing 1, then the other."""
    c1, c2 = (c for c in sigma(s).cycles if len(c) == 2)
    return c1, c2
