from __future__ import annotations

from fractions import Fraction as Q
from itertools import islice

import pytest
from hypothesis import given, strategies as st

from lipretract.rationals import (DenominatorOrder, ExplicitOrder, HorizonExhausted, as_rational,
                                  enumeration_by_name, fmt, merge_open, open_contains)


def test_as_rational_parses_exact_text():
    assert as_rational("3/4") == Q(3, 4)
    assert as_rational(" -2 ") == Q(-2)
    assert as_rational(5) == Q(5)


@pytest.mark.parametrize("bad", ["0.5", "1e3", "", 0.5, True, None])
def test_as_rational_rejects_inexact(bad):
    with pytest.raises((TypeError, ValueError)):
        as_rational(bad)


def test_fmt_keeps_denominator():
    assert fmt(Q(1)) == "1/1"
    assert fmt(Q(-6, 4)) == "-3/2"


def test_denominator_order_prefix():
    head = list(islice(DenominatorOrder(), 11))
    assert head == [Q(0), Q(1), Q(1, 2), Q(1, 3), Q(2, 3), Q(1, 4), Q(3, 4),
                    Q(1, 5), Q(2, 5), Q(3, 5), Q(4, 5)]


def test_denominator_order_at_and_index_agree_with_iteration():
    order = DenominatorOrder()
    for n, q in enumerate(islice(DenominatorOrder(), 400), start=1):
        assert order.at(n) == q
        assert order.index(q) == n


@given(st.lists(st.tuples(st.integers(0, 40), st.integers(1, 40)), min_size=1, max_size=3),
       st.integers(2, 40))
def test_fast_first_in_matches_generic_scan(raw, den):
    ivs = []
    for a, w in raw:
        lo = Q(a, den) if a <= den else Q(1)
        ivs.append((lo, min(Q(1), lo + Q(w, 4 * den))))
    fast = DenominatorOrder().first_in(ivs, 5000)
    slow = ExplicitOrder([]).first_in(ivs, 5000)
    assert fast == slow


def test_first_in_empty_and_horizon():
    assert DenominatorOrder().first_in([], 10) is None
    with pytest.raises(HorizonExhausted):
        DenominatorOrder().first_in([(Q(1, 1000), Q(1, 999))], 50)


def test_explicit_order_puts_prefix_first_then_skips_repeats():
    order = ExplicitOrder(["1/2", "1/7"])
    assert list(islice(order, 5)) == [Q(1, 2), Q(1, 7), Q(0), Q(1), Q(1, 3)]
    with pytest.raises(ValueError):
        ExplicitOrder(["1/2", "1/2"])


def test_enumeration_by_name():
    assert isinstance(enumeration_by_name("denominator"), DenominatorOrder)
    e = enumeration_by_name("explicit:1/3,1/5")
    assert e.at(2) == Q(1, 5)
    with pytest.raises(ValueError):
        enumeration_by_name("lexicographic")


def test_merge_open_keeps_touching_intervals_apart():
    assert merge_open([(Q(0), Q(1, 2)), (Q(1, 2), Q(1))]) == [(Q(0), Q(1, 2)), (Q(1, 2), Q(1))]
    assert merge_open([(Q(0), Q(1, 2)), (Q(1, 3), Q(3, 4))]) == [(Q(0), Q(3, 4))]
    cover = merge_open([(Q(0), Q(1, 2)), (Q(1, 2), Q(1))])
    assert not open_contains(cover, Q(1, 4), Q(3, 4))
    assert open_contains(cover, Q(1, 4), Q(1, 2))
