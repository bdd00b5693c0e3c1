import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from nclforge.errors import IllegalMoveError, NclForgeError
from nclforge.games import solve_ncl
from nclforge.generate import random_acyclic_ncl
from nclforge.graph import Kind
from nclforge.mahjong import (
    GADGETS, Arrangement, PairMove, apply, check_configuration, gadget_behavior, is_available,
    legal_moves, lift_mahjong, reduce_ncl_to_mahjong, remaining, replay, solve_mahjong,
)
from nclforge.trace import check_lifted


def row(*sets, i=0, k=0):
    return [((i, j, k), s) for j, s in enumerate(sets)]


def arr(tiles):
    return Arrangement(tuple(s for _, s in tiles), tuple(p for p, _ in tiles))


# availability -------------------------------------------------------------------

def test_lone_tile_is_available():
    a = arr([((0, 0, 0), 1), ((2, 0, 0), 1)])
    assert is_available(a, (0, 0, 0))


def test_middle_of_row_is_blocked():
    a = arr(row(1, 2, 1) + [((2, 0, 0), 2)])
    assert is_available(a, (0, 0, 0)) and is_available(a, (0, 2, 0))
    assert not is_available(a, (0, 1, 0))
    # removing a neighbour frees it
    assert is_available(a, (0, 1, 0), removed={0})


def test_tile_underneath_is_blocked():
    a = arr([((0, 0, 0), 1), ((0, 0, 1), 1)])
    assert not is_available(a, (0, 0, 0))
    assert is_available(a, (0, 0, 1))


def test_cross_sections_do_not_interact():
    # (1, 0, 0) is not a horizontal neighbour of (0, 1, 0)
    a = arr(row(1, 2) + [((1, 0, 0), 1), ((1, 1, 0), 2)])
    assert all(is_available(a, p) for p in a.positions)


def test_unoccupied_position_raises():
    a = arr([((0, 0, 0), 1), ((2, 0, 0), 1)])
    with pytest.raises(NclForgeError):
        is_available(a, (5, 5, 5))


def test_four_available_tiles_give_six_pairs():
    a = arr([((2 * t, 0, 0), 7) for t in range(4)])
    assert len(legal_moves(a)) == 6


def test_moves_need_matching_sets():
    a = arr([((0, 0, 0), 1), ((2, 0, 0), 2), ((4, 0, 0), 1), ((6, 0, 0), 2)])
    assert legal_moves(a) == {PairMove(0, 2), PairMove(1, 3)}


# configuration checks ------------------------------------------------------------

def test_gap_in_row_rejected():
    with pytest.raises(NclForgeError):
        check_configuration([(0, 0, 0), (0, 2, 0)])


def test_floating_tile_rejected():
    with pytest.raises(NclForgeError):
        check_configuration([(0, 0, 1)])


def test_odd_tile_set_rejected():
    with pytest.raises(NclForgeError):
        arr([((0, 0, 0), 1), ((2, 0, 0), 1), ((4, 0, 0), 1)])


def test_shared_position_rejected():
    with pytest.raises(NclForgeError):
        arr([((0, 0, 0), 1), ((0, 0, 0), 1)])


def test_apply_rejects_illegal_pairs():
    a = arr([((0, 0, 0), 1), ((0, 0, 1), 1), ((2, 0, 0), 2), ((4, 0, 0), 2)])
    with pytest.raises(IllegalMoveError):
        apply(a, PairMove(0, 1))          # tile 0 is covered
    with pytest.raises(IllegalMoveError):
        apply(a, PairMove(1, 2))          # different sets
    with pytest.raises(IllegalMoveError):
        apply(a, PairMove(2, 2))
    gone = apply(a, PairMove(2, 3))
    with pytest.raises(IllegalMoveError):
        apply(a, PairMove(2, 3), gone)


def test_json_round_trip_and_malformed():
    a = arr(row(1, 2, 1) + [((2, 0, 0), 2)])
    assert Arrangement.from_dict(a.to_dict()) == a
    with pytest.raises(NclForgeError):
        Arrangement.from_dict({"tiles": [{"i": 0}]})


# solver ----------------------------------------------------------------------

def test_solver_small_cases():
    # stacked pair: remove the top with a free partner, then the bottom
    a = arr([((0, 0, 0), 1), ((0, 0, 1), 2), ((2, 0, 0), 2), ((4, 0, 0), 1)])
    rep = solve_mahjong(a)
    assert rep.verdict == "winnable"
    assert replay(a, rep.witness) == frozenset(a.tiles)
    # a same-set pair stacked on each other can never be removed
    b = arr([((0, 0, 0), 1), ((0, 0, 1), 1)])
    assert solve_mahjong(b).verdict == "not-winnable"


def test_solver_needs_the_right_choice():
    # set 1 has four tiles; pairing the two free ones first strands the others
    a = arr([((0, 0, 0), 1), ((0, 0, 1), 2), ((2, 0, 0), 2), ((2, 0, 1), 1),
             ((4, 0, 0), 1), ((6, 0, 0), 1)])
    rep = solve_mahjong(a)
    assert rep.verdict == "winnable"
    assert replay(a, rep.witness) == frozenset(a.tiles)


def _naive(a, removed=frozenset(), seen=None):
    seen = set() if seen is None else seen
    if len(removed) == len(a.sets):
        return True
    if removed in seen:
        return False
    seen.add(removed)
    return any(_naive(a, apply(a, mv, removed), seen) for mv in sorted(legal_moves(a, removed)))


def _random_arrangement(rng):
    while True:
        try:
            return _draw_arrangement(rng)
        except NclForgeError:
            pass        # a level with a gap; draw again


def _draw_arrangement(rng):
    pairs = rng.randint(1, 5)
    labels = [s for s in (rng.randrange(pairs) for _ in range(pairs)) for _ in range(2)]
    rng.shuffle(labels)
    # random columns in a couple of cross sections, filled bottom up
    cols: dict[tuple[int, int], int] = {}
    tiles = []
    for s in labels:
        i = 2 * rng.randrange(2)
        width = 1 + max([j for (ii, j) in cols if ii == i], default=-1)
        j = rng.randrange(width + 1)
        k = cols.get((i, j), 0)
        cols[(i, j)] = k + 1
        tiles.append(((i, j, k), s))
    return arr(tiles)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_solver_matches_naive_search(seed):
    a = _random_arrangement(random.Random(seed))
    rep = solve_mahjong(a)
    assert (rep.verdict == "winnable") == _naive(a)
    if rep.witness:
        assert replay(a, rep.witness) == frozenset(a.tiles)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_removals_keep_configuration_valid(seed):
    rng = random.Random(seed)
    a = _random_arrangement(rng)
    removed = frozenset()
    while True:
        moves = sorted(legal_moves(a, removed))
        if not moves:
            break
        removed = apply(a, rng.choice(moves), removed)
        check_configuration(remaining(a, removed).positions)
        assert all(v % 2 == 0 for v in remaining(a, removed).set_sizes().values())


# gadgets and reduction -------------------------------------------------------

def test_gadget_columns_use_each_internal_label_evenly():
    for kind, cols in GADGETS.items():
        internal = Counter(t for col in cols for t in col if isinstance(t, int))
        if kind is Kind.CHOICE:
            # the two 5-tiles are matched in the victory row
            internal[5] += 2
        assert all(c % 2 == 0 for c in internal.values()), kind


@pytest.mark.parametrize("kind", [Kind.AND, Kind.OR, Kind.FANOUT, Kind.CHOICE])
def test_gadget_contracts(kind):
    got = gadget_behavior(kind)
    if kind is Kind.AND:
        assert got[frozenset({0, 1})] == {frozenset({0})}
        assert all(v == {frozenset()} for k, v in got.items() if len(k) < 2)
    elif kind is Kind.OR:
        assert all(v == ({frozenset({0})} if k else {frozenset()}) for k, v in got.items())
    elif kind is Kind.FANOUT:
        assert got[frozenset({0})] == {frozenset({0, 1})} and got[frozenset()] == {frozenset()}
    else:
        assert got[frozenset({0})] == {frozenset({0}), frozenset({1})}
        assert got[frozenset()] == {frozenset()}


def test_reduction_has_even_sets_and_victory_row():
    g = random_acyclic_ncl(random.Random(5), 8)
    a, tr = reduce_ncl_to_mahjong(g)
    assert all(c % 2 == 0 for c in a.set_sizes().values())
    vic = tr.params["victory_cross_section"]
    top = [p for p in a.positions if p[0] == vic and p[2] == 1]
    assert top == [(vic, 0, 1)]
    # the protective pair closes both ends of the victory row
    vrow = sorted((p, a.sets[t]) for t, p in enumerate(a.positions) if p[0] == vic and p[2] == 0)
    assert vrow[0][1] == vrow[-1][1]


def test_cross_sections_are_separated():
    g = random_acyclic_ncl(random.Random(2), 8)
    a, _ = reduce_ncl_to_mahjong(g)
    assert all(i % 2 == 0 for i, _, _ in a.positions)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_witnesses_replay_and_lift(seed):
    g = random_acyclic_ncl(random.Random(seed), 6)
    a, tr = reduce_ncl_to_mahjong(g)
    rep = solve_mahjong(a)
    assert rep.verdict == solve_ncl(g).verdict
    if rep.verdict == "winnable":
        assert replay(a, rep.witness) == frozenset(a.tiles)
        assert check_lifted(tr, lift_mahjong(tr, rep.witness))
