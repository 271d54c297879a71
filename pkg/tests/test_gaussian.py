from __future__ import annotations

import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st
from sympy import primerange

from surftrace.gaussian import (
    I,
    ONE,
    ZERO,
    GaussianInt,
    QiPlace,
    ResidueField,
    format_gaussian,
    in_disc,
    norm,
    parse_gaussian,
    place_valuation,
    places_over,
    rational_divides,
    reduce_mod_place,
    scaled_disc_member,
    split_prime,
)

gints = st.builds(GaussianInt, st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))


def test_norm_examples():
    assert norm(GaussianInt(3, 4)) == 25
    assert norm(ZERO) == 0
    assert norm(GaussianInt(1, -1)) == 2


def test_disc_examples():
    assert in_disc(GaussianInt(2, 2), 3)
    assert not in_disc(GaussianInt(3, 1), 3)
    assert in_disc(ZERO, 0)
    assert scaled_disc_member(GaussianInt(5, 10), 5, 3)
    assert not scaled_disc_member(GaussianInt(1, 2), 5, 3)
    assert scaled_disc_member(ZERO, 7, 3)


def test_rational_divides_examples():
    assert rational_divides(5, GaussianInt(5, 10))
    assert not rational_divides(5, GaussianInt(1, 2))
    assert rational_divides(13, ZERO)


def test_split_prime_examples():
    v = split_prime(13)
    assert (v.kind, v.generator) == ("split", GaussianInt(3, 2))
    assert split_prime(7).kind == "inert"
    assert split_prime(2).kind == "ramified"
    assert split_prime(7).residue_cardinality == 49


def test_valuation_examples():
    g = GaussianInt(1, 2)
    v = QiPlace(5, "split", g)
    assert place_valuation(GaussianInt(5, 0), v) == 1
    assert place_valuation(GaussianInt(1, -2), v) == 0
    assert place_valuation(GaussianInt(49, 0), split_prime(7)) == 2
    assert place_valuation(ZERO, v) == math.inf


def test_reduce_examples():
    v = QiPlace(5, "split", GaussianInt(2, 1))
    assert reduce_mod_place(GaussianInt(1, 2), v) == 2
    assert reduce_mod_place(GaussianInt(13, 0), split_prime(7)) == (6, 0)
    assert reduce_mod_place(ZERO, v) == 0


@given(gints, gints)
def test_norm_multiplicative(a, b):
    assert (a * b).norm == a.norm * b.norm


@given(gints, st.integers(0, 2000))
def test_disc_symmetry(a, r):
    assert in_disc(a, r) == in_disc(a.conjugate(), r) == in_disc(I * a, r)


def test_split_classification_to_1e5():
    for p in primerange(2, 10**5):
        v = split_prime(int(p))
        expected = "ramified" if p == 2 else ("split" if p % 4 == 1 else "inert")
        assert v.kind == expected
        if v.kind == "split":
            assert v.generator.norm == p and v.generator.re > v.generator.im > 0


@given(gints.filter(bool), st.sampled_from([5, 13, 17, 29, 37, 41]))
def test_valuations_sum_to_norm_valuation(a, p):
    lam, lam_bar = places_over(p)
    n, k = a.norm, 0
    while n % p == 0:
        n //= p
        k += 1
    assert place_valuation(a, lam) + place_valuation(a, lam_bar) == k


@pytest.mark.parametrize("l", [5, 7, 11, 13, 17, 19, 23])
def test_reduction_is_ring_homomorphism(l):
    rng = random.Random(l)
    for v in places_over(l):
        F = ResidueField(v)
        for _ in range(1000):
            a = GaussianInt(rng.randint(-10**9, 10**9), rng.randint(-10**9, 10**9))
            b = GaussianInt(rng.randint(-10**9, 10**9), rng.randint(-10**9, 10**9))
            assert F.reduce(a + b) == F.add(F.reduce(a), F.reduce(b))
            assert F.reduce(a * b) == F.mul(F.reduce(a), F.reduce(b))
        assert F.reduce(v.generator if v.kind == "split" else GaussianInt(l, 0)) == F.zero


@pytest.mark.parametrize("tok,val", [("3-2i", GaussianInt(3, -2)), ("0+0i", ZERO), ("-4+1i", GaussianInt(-4, 1))])
def test_canonical_tokens(tok, val):
    assert parse_gaussian(tok) == val
    assert format_gaussian(val) == tok


@pytest.mark.parametrize("tok", ["3--2i", "3+-2i", "3 + 2i", "3+2", "+3+2i", "03+2i", "3+02i", "-0+1i", "3-0i", "i", ""])
def test_rejects_malformed_tokens(tok):
    with pytest.raises(ValueError):
        parse_gaussian(tok)


@given(gints)
def test_token_round_trip(a):
    assert parse_gaussian(format_gaussian(a)) == a


def test_exact_division():
    assert (GaussianInt(5, 0)).exact_div(GaussianInt(2, 1)) == GaussianInt(2, -1)
    with pytest.raises(ValueError):
        GaussianInt(3, 0).exact_div(GaussianInt(2, 1))
    assert ONE ** 0 == ONE
