import itertools
from collections import Counter

import pytest

from fourbody.permgroup import (
    Cycle,
    Permutation,
    compose,
    cycle_decomposition,
    enumerate_s4,
    kappa_index_table,
    klein_four,
    parse_cycles,
    s4_index,
    sigma,
    sigma_cycles,
)

S4 = enumerate_s4()
E = Permutation.identity()


def cayley(p, q):
    # independent of Permutation.__mul__: tuples only
    return tuple(p.images[q.images[a] - 1] for a in range(4))


def test_identity_composition():
    for q in S4:
        assert compose(E, q) == q
        assert compose(q, E) == q


def test_transposition_is_involution():
    t = Permutation.from_cycles("(1 2)")
    assert compose(t, t) == E


def test_compose_matches_cayley_table():
    for p, q in itertools.product(S4, repeat=2):
        assert compose(p, q).images == cayley(p, q)


def test_compose_example_three_cycle():
    r = compose(Permutation.from_cycles("(1 2)"), Permutation.from_cycles("(2 3)"))
    # (1 2)(2 3): 1 -> 1 -> 2, 2 -> 3 -> 3, 3 -> 2 -> 1
    assert r.images == (2, 3, 1, 4)
    assert r.structure == (1, 3)


def test_associativity_exhaustive():
    for p, q, r in itertools.product(S4, repeat=3):
        assert compose(compose(p, q), r) == compose(p, compose(q, r))


def test_sign_is_multiplicative():
    for p, q in itertools.product(S4, repeat=2):
        assert compose(p, q).sign == p.sign * q.sign


def test_inverse_keeps_structure():
    for p in S4:
        assert p.inverse().structure == p.structure
        assert compose(p, p.inverse()) == E


def test_cycle_decomposition_examples():
    k = Permutation.from_cycles("(2)(1 4 3)")
    cycles, structure, sign = cycle_decomposition(k)
    assert structure == (1, 3)
    assert sign == 1
    assert cycle_decomposition(E)[1:] == ((1, 1, 1, 1), 1)
    assert cycle_decomposition(Permutation.from_cycles("(1 2)(3 4)"))[1:] == ((2, 2), 1)


def test_cycles_partition_and_sign_formula():
    for p in S4:
        cycles, structure, sign = cycle_decomposition(p)
        assert sorted(a for c in cycles for a in c.entries) == [1, 2, 3, 4]
        assert sign == (-1) ** (4 - len(cycles))
        assert sum(structure) == 4


def test_enumeration_order_and_counts():
    assert len(S4) == 24
    assert S4[0] == E
    assert S4[23].images == (4, 3, 2, 1)
    assert [p.images for p in S4] == sorted(p.images for p in S4)
    counts = Counter(p.structure for p in S4)
    assert counts == {(1, 1, 1, 1): 1, (1, 1, 2): 6, (1, 3): 8, (2, 2): 3, (4,): 6}
    assert all(s4_index()[p] == i for i, p in enumerate(S4))


def test_klein_four():
    group = klein_four()
    assert group[0] == E
    assert group[1] == Permutation.from_cycles("(1 3)(2 4)")
    assert group[2] == Permutation.from_cycles("(1 2)(3 4)")
    assert group[3] == Permutation.from_cycles("(1 4)(2 3)")
    assert compose(sigma(1), sigma(2)) == sigma(3)
    for a, b in itertools.product(group, repeat=2):
        assert compose(a, b) in group
    for a in group:
        assert compose(a, a) == E


def test_sigma_cycles_put_particle_one_first():
    for s in (1, 2, 3):
        c1, c2 = sigma_cycles(s)
        assert 1 in c1.entries
        assert set(c1.entries) | set(c2.entries) == {1, 2, 3, 4}


def test_cycle_canonical_form_and_rotation_equality():
    assert Cycle((3, 1, 2)) == Cycle((1, 2, 3))
    assert Cycle((3, 1, 2)).entries == (1, 2, 3)
    assert Cycle((1, 3, 2)) != Cycle((1, 2, 3))
    assert Cycle((1, 2, 3)).inverse() == Cycle((1, 3, 2))
    assert str(Cycle((2, 4, 1))) == "(1 2 4)"


def test_cycle_notation_drops_fixed_points():
    assert E.cycle_notation() == "()"
    assert Permutation.from_cycles("(2)(1 4 3)").cycle_notation() == "(1 4 3)"
    assert parse_cycles("(1 2)(3 4)") == [(1, 2), (3, 4)]


def test_kappa_table_matches_definition():
    table = kappa_index_table()
    for i, p in enumerate(S4):
        for j, q in enumerate(S4):
            assert S4[table[i, j]] == compose(p, q.inverse())


@pytest.mark.parametrize("bad", [(1, 1, 2, 3), (1, 2, 3), (0, 1, 2, 3)])
def test_rejects_non_bijections(bad):
    with pytest.raises(ValueError):
        Permutation(bad)
