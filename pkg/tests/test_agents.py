from __future__ import annotations

import random
from fractions import Fraction as F

import pytest

from conftest import make_agent
from efcake.agents import (
    EQ,
    NEQ,
    ConfigurationError,
    Policy,
    ProfileError,
    choose,
    cut,
    cut_equal,
    declare,
    eval_piece,
    format_profile,
    neq_witness,
    parse_profile,
    random_profile,
)
from efcake.cake import PieceSet, split_equal, uniform
from efcake.ledger import Ledger

I = PieceSet.interval


def test_eval_examples(lefty):
    led = Ledger("3")
    assert eval_piece(make_agent("A"), I(0, F(1, 3)), led) == F(1, 3)
    assert eval_piece(make_agent("B", lefty), I(0, F(1, 4)), led) == F(1, 2)
    assert eval_piece(make_agent("A"), PieceSet(), led) == 0
    assert led.cuts == 0 and str(led.budget) == "3"
    assert led.count("EVAL") == 3


def test_cut_charges_once_per_call():
    led = Ledger("5")
    a = make_agent("A")
    assert cut(a, PieceSet.full(), F(1, 2), led) == F(1, 2)
    assert str(led.budget) == "4"
    for t in (F(1, 4), F(1, 2), F(3, 4)):
        cut(a, PieceSet.full(), t, led)
    assert str(led.budget) == "1"
    assert led.count("CUT") == led.cuts == 4


def test_cut_equal_uses_parts_minus_one_cuts():
    led = Ledger("11")
    pieces = cut_equal(make_agent("A"), PieceSet.full(), 12, led)
    assert led.count("CUT") == 11
    assert pieces == split_equal(uniform(), PieceSet.full(), 12)


def test_declare_examples(lefty):
    twelfths = split_equal(uniform(), PieceSet.full(), 12)
    assert declare(make_agent("A"), twelfths) == EQ
    assert declare(make_agent("B", lefty), twelfths) == NEQ
    scripted = make_agent("C", policy=Policy.parse("script:NEQ"))
    assert declare(scripted, twelfths) == NEQ
    assert declare(make_agent("B", lefty), twelfths, forced=EQ) == EQ
    with pytest.raises(ValueError):
        declare(make_agent("A"), [])


def test_script_exhaustion_is_a_configuration_error():
    agent = make_agent("C", policy=Policy.parse("script:EQ,NEQ"))
    led = Ledger()
    assert [declare(agent, [PieceSet.full()], led) for _ in range(2)] == [EQ, NEQ]
    with pytest.raises(ConfigurationError):
        declare(agent, [PieceSet.full()], led)


def test_random_policy_frequency():
    agent = make_agent("R", policy=Policy.parse("random:1/2"))
    rng = random.Random(5)
    draws = [declare(agent, [PieceSet.full()], rng=rng) for _ in range(4000)]
    assert 1800 < draws.count(EQ) < 2200
    with pytest.raises(ConfigurationError):
        declare(agent, [PieceSet.full()])


def test_witness_is_least_index_pair(lefty):
    pieces = split_equal(uniform(), PieceSet.full(), 4)
    assert neq_witness(make_agent("B", lefty), pieces) == (0, 1)
    assert neq_witness(make_agent("A"), pieces) is None


def test_choose_prefers_best_then_lowest_index(lefty):
    halves = [I(0, F(1, 2)), I(F(1, 2), 1)]
    assert choose(make_agent("A"), halves) == 0
    assert choose(make_agent("B", lefty), halves) == 0
    assert choose(make_agent("B", lefty), halves[::-1]) == 1
    assert choose(make_agent("X", lefty, follows_advice=False), halves[::-1]) == 0


PROFILE = """\
# two agents
agent A1
seg 0 1/4 2
seg 1/4 1 2/3
agent A2 advice=no policy=random:1/3
seg 0 1 1
"""


def test_profile_roundtrip():
    agents = parse_profile(PROFILE)
    assert [a.name for a in agents] == ["A1", "A2"]
    assert agents[1].follows_advice is False
    assert agents[1].policy == Policy("random", F(1, 3))
    assert parse_profile(format_profile(agents)) == agents
    generated = random_profile(4, seed=3)
    assert parse_profile(format_profile(generated)) == generated


@pytest.mark.parametrize(
    "text, line",
    [
        ("agent A\nseg 0 1/2 1\nseg 1/3 1 1\n", 3),  # overlap
        ("agent A\nseg 0 1/3 1\nseg 1/2 1 1\n", 3),  # gap
        ("agent A\nseg 0 1/2 1\n", 2),  # does not reach 1
        ("seg 0 1 1\n", 1),
        ("agent A\nseg 0 1 1\nagent A\nseg 0 1 1\n", 3),
        ("agent A policy=sometimes\nseg 0 1 1\n", 1),
        ("agent A\nseg 0 1 2\n", 1),  # integrates to 2
    ],
)
def test_profile_errors_carry_line_numbers(text, line):
    with pytest.raises(ProfileError) as exc:
        parse_profile(text)
    assert exc.value.lineno == line
