from itertools import product

import pytest
from hypothesis import given, strategies as st

from vptstream import (DelayPair, EmptySet, PremiseViolated, delay_mismatch,
                       delta, delta_extend, lcp)

words = st.lists(st.sampled_from("xy"), max_size=8).map(tuple)


def test_lcp_examples():
    assert lcp([("a", "b", "c"), ("a", "b", "d")]) == ("a", "b")
    assert lcp([("a",)]) == ("a",)
    assert lcp([(), ("a",)]) == ()
    assert lcp([("a", "b"), ("a", "b")]) == ("a", "b")
    with pytest.raises(EmptySet):
        lcp([])


def test_delta_examples():
    assert delta(("a", "b"), ("a", "b")) == DelayPair((), ())
    assert delta(("a", "b", "c"), ("a", "b", "d")) == DelayPair(("c",), ("d",))
    assert delta((), ("x",)) == DelayPair((), ("x",))
    assert delta(("x", "y"), ("x",)) == DelayPair(("y",), ())


def test_delta_extend_example():
    d = delta(("a",), ("b",))
    assert delta_extend(d, ("c",), ("c",)) == delta(("a", "c"), ("b", "c"))


@given(words, words, words, words)
def test_delta_extend_matches_direct_delta(u1, v1, u2, v2):
    assert delta_extend(delta(u1, v1), u2, v2) == delta(u1 + u2, v1 + v2)


@given(words, words, words, st.integers(min_value=0, max_value=4))
def test_delay_mismatch_matches_direct_inequality(b, d, filler, k):
    # build A, C so that |A| - |B| == |C| - |D| == k >= 0
    a = b + filler[:k] if len(filler) >= k else b + ("x",) * k
    c = d + tuple(reversed(filler))[:k] if len(filler) >= k else d + ("y",) * k
    assert delay_mismatch(a, b, c, d) == (delta(a, b) != delta(c, d))


def test_delay_mismatch_exhaustive_small_window():
    pool = [tuple(w) for n in range(4) for w in product("xy", repeat=n)]
    checked = 0
    for a, b in product(pool, repeat=2):
        k = len(a) - len(b)
        if k < 0:
            continue
        for c, d in product(pool, repeat=2):
            if len(c) - len(d) != k:
                continue
            assert delay_mismatch(a, b, c, d) == (delta(a, b) != delta(c, d)), \
                (a, b, c, d)
            checked += 1
    assert checked > 5000


def test_delay_mismatch_premise_enforced():
    with pytest.raises(PremiseViolated):
        delay_mismatch(("x",), ("x", "y"), (), ())   # |A|-|B| < 0
    with pytest.raises(PremiseViolated):
        delay_mismatch(("x", "y"), ("x",), (), ())   # unequal length gaps
