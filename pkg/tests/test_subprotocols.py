from __future__ import annotations

from fractions import Fraction as F

import pytest

from conftest import block, make_agent
from efcake.agents import cut_equal, neq_witness, random_profile
from efcake.allocation import Allocation
from efcake.cake import PieceSet, measure, split_equal, uniform
from efcake.ledger import Ledger
from efcake.subprotocols import (
    ControversyWitness,
    InvalidWitness,
    adv,
    controversial_shrink,
    find_controversy,
    near_exact_cut_bound,
    near_exact_star,
    normalized,
    shrink_cut_bound,
    unfair_near_exact,
)
from efcake.verification import check_advantage, check_envy_free, check_near_exact, check_partition

I = PieceSet.interval


def test_identical_players_give_exact_quarters():
    players = [make_agent(n) for n in "ABC"]
    res = near_exact_star(players, PieceSet.full(), 4, F(0))
    assert res.achieved_deviation == 0
    assert res.bundles == split_equal(uniform(), PieceSet.full(), 4)
    assert res.cuts_used == 3


def test_star_exact_for_leader(lefty):
    players = [make_agent("A"), make_agent("B", lefty)]
    led = Ledger("1w")
    res = near_exact_star(players, PieceSet.full(), 2, F(1, 100), led)
    assert check_near_exact(players, res.bundles, 2, F(1, 100), starred="A").passed
    assert res.achieved_deviation == F(1, 100)
    assert PieceSet.union_all(res.bundles) == PieceSet.full()
    assert led.cuts == res.cuts_used <= near_exact_cut_bound(players, PieceSet.full(), 2)


def test_single_part_costs_nothing(lefty):
    res = near_exact_star([make_agent("A", lefty)], I(0, F(1, 2)), 1, F(1, 10))
    assert res.bundles == [I(0, F(1, 2))] and res.cuts_used == 0 and res.achieved_deviation == 0


def test_cut_count_within_declared_bound():
    players = random_profile(4, seed=8)
    led = Ledger("1w")
    res = near_exact_star(players, PieceSet.full(), 3, F(1, 1000), led)
    declared = int(led.events[0].details[0])
    assert led.events[0].kind == "PHASE"
    assert declared == near_exact_cut_bound(players, PieceSet.full(), 3)
    assert led.cuts == res.cuts_used <= declared


def test_unfair_examples(lefty):
    same = [make_agent("A"), make_agent("B")]
    res = unfair_near_exact(same, PieceSet.full(), F(1, 3), F(2, 3), F(0))
    assert res.achieved_deviation == 0
    assert [measure(uniform(), b) for b in res.bundles] == [F(1, 3), F(2, 3)]
    two = [make_agent("A"), make_agent("B", lefty)]
    res = unfair_near_exact(two, PieceSet.full(), F(1, 4), F(3, 4), F(1, 50))
    assert check_near_exact(two, res.bundles, epsilon=F(1, 50), ratios=[F(1, 4), F(3, 4)]).passed
    half = unfair_near_exact(two, PieceSet.full(), F(1, 2), F(1, 2), F(1, 50))
    assert half.bundles == near_exact_star(two, PieceSet.full(), 2, F(1, 50)).bundles
    with pytest.raises(ValueError):
        unfair_near_exact(two, PieceSet.full(), F(1, 2), F(1, 3), F(1, 50))


def two_block_witness():
    # A values [0,1/2) only, B values the cake uniformly; on P=[0,1/2) they see 1 and 1/2
    a = [make_agent("A", block(0, F(1, 2))), make_agent("B")]
    p = I(0, F(1, 2))
    w = ControversyWitness(p, ("A",), ("B",), F(1), F(1, 2))
    return a, w


def test_shrink_hand_example():
    a, w = two_block_witness()
    led = Ledger("1w")
    out = controversial_shrink(a, [], w, F(1, 16), led)
    vals = {x.name: measure(x.valuation, out.piece) for x in a}
    assert all(v <= F(1, 16) for v in vals.values())
    assert vals["A"] != vals["B"]
    assert out.piece.issubset(w.piece)
    assert led.cuts == out.cuts_used <= shrink_cut_bound(a, w.piece, F(1, 16))


def test_shrink_noop_when_already_small():
    a, w = two_block_witness()
    w = ControversyWitness(I(0, F(1, 64)), ("A",), ("B",), F(1, 32), F(1, 64))
    led = Ledger("1w")
    assert controversial_shrink(a, [], w, F(1, 16), led) is w
    assert led.cuts == 0


def test_shrink_b_player_forces_extra_rounds():
    a, w = two_block_witness()
    b = [make_agent("Z", block(0, F(1, 2)))]
    led = Ledger("1w")
    out = controversial_shrink(a, b, w, F(1, 64), led)
    assert measure(b[0].valuation, out.piece) <= F(1, 64)
    assert led.cuts <= shrink_cut_bound(a + b, w.piece, F(1, 64))


def test_invalid_witness_rejected():
    a, w = two_block_witness()
    bad = ControversyWitness(w.piece, ("B",), ("A",), F(1), F(1, 2))
    with pytest.raises(InvalidWitness):
        controversial_shrink(a, [], bad, F(1, 16))


def test_find_controversy_splits_at_largest_gap():
    players = [make_agent("A", block(0, F(1, 2))), make_agent("B"), make_agent("C", block(F(1, 2), 1))]
    w = find_controversy(players, [I(0, F(1, 2)), I(F(1, 2), 1)], None)
    assert w.group_hi == ("A",) and w.group_lo == ("B", "C")
    assert (w.alpha, w.beta) == (1, F(1, 2))


def adv_setup(seed: int, n: int = 4):
    players = random_profile(n, seed)
    pieces = cut_equal(players[0], PieceSet.full(), 12)
    wit = neq_witness(players[1], pieces)
    P, Q = pieces[wit[0]], pieces[wit[1]]
    return players, P, Q, PieceSet.full() - P - Q


def test_adv_postconditions():
    for seed in range(10):
        players, P, Q, R = adv_setup(seed)
        res = adv(players, (0, 1), P, Q, R, Ledger("1w"))
        assert res.path == "primary" and res.residue
        assert check_partition(P | Q | R, Allocation(res.allocation.shares, res.residue)).passed
        assert check_envy_free(players, res.allocation).passed
        assert check_advantage(players, res.allocation, ("A1", "A2"), res.residue).passed


def test_adv_two_players():
    players = [make_agent("A"), make_agent("B", block(0, F(1, 2)))]
    P, Q = I(0, F(1, 2)), I(F(1, 2), 1)
    res = adv(players, (0, 1), P, Q, PieceSet())
    assert res.report.overall
    assert measure(players[1].valuation, res.allocation.share("B")) > measure(players[1].valuation, res.allocation.share("A"))


def test_adv_fallback_when_pair_member_values_nothing():
    # A values only [0,1/2); the whole stage cake is inside [1/2,1)
    players = [make_agent("A", block(0, F(1, 2))), make_agent("B", block(F(1, 2), F(5, 8))), make_agent("C")]
    P, Q, R = I(F(1, 2), F(5, 8)), I(F(5, 8), F(3, 4)), I(F(3, 4), 1)
    res = adv(players, (0, 1), P, Q, R)
    assert res.path == "fallback" and not res.residue
    assert res.report.overall


def test_adv_preconditions():
    players, P, Q, R = adv_setup(1)
    with pytest.raises(InvalidWitness):
        adv(players, (1, 0), P, Q, R)
    with pytest.raises(ValueError):
        adv(players, (0, 1), P, Q, R | P)


def test_normalized_handles_zero_total():
    a = make_agent("A", block(0, F(1, 2)))
    assert normalized(a, I(0, F(1, 4)), I(F(1, 2), 1)) == 0
    assert normalized(a, I(0, F(1, 4)), I(0, F(1, 2))) == F(1, 2)
