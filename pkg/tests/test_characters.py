from __future__ import annotations

import math

import pytest

from surftrace.characters import (
    DirichletCharacter,
    dirichlet_characters,
    fundamental_discriminants,
    is_fundamental_discriminant,
    kronecker,
    legendre,
    trivial_character,
)
from surftrace.gaussian import I, ONE, GaussianInt


def test_kronecker_basics():
    assert legendre(2, 7) == 1 and legendre(3, 7) == -1 and legendre(14, 7) == 0
    assert kronecker(-4, 5) == 1 and kronecker(-4, 7) == -1
    assert kronecker(5, 2) == -1 and kronecker(-7, 2) == 1 and kronecker(-4, 2) == 0


def test_fundamental_discriminants():
    assert fundamental_discriminants(13) == [-3, -4, 5, -7, -8, 8, -11, 12, 13]
    assert not is_fundamental_discriminant(-16) and not is_fundamental_discriminant(9)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 8, 12, 15, 16, 40, 65])
def test_character_group_structure(n):
    chars = dirichlet_characters(n)
    units = [r for r in range(n) if math.gcd(r, n) == 1] if n > 1 else [0]
    # number of characters of order dividing 4 = #{x : x^4 = 1} in the unit group
    expected = sum(1 for r in units if pow(r, 4, n) == 1 % n) if n > 1 else 1
    assert len(chars) == expected
    assert len({c.values for c in chars}) == len(chars)
    assert chars[0].is_trivial
    for c in chars:
        vals = dict(c.values)
        for a in vals:
            for b in vals:
                assert vals[a * b % n] == vals[a] * vals[b]


def test_mod4_and_mod5_orders():
    c4 = dirichlet_characters(4)
    assert len(c4) == 2 and c4[1](3) == -ONE
    orders = sorted(c.order for c in dirichlet_characters(5))
    assert orders == [1, 2, 4, 4]
    assert sorted(c.order for c in dirichlet_characters(5, 2)) == [1, 2]


def test_character_text_round_trip(tmp_path):
    chi = dirichlet_characters(5)[2]
    assert DirichletCharacter.from_text(chi.to_text()).values == chi.values
    bad = "modulus = 5\n1 = 1+0i\n2 = 0+1i\n3 = 0+1i\n4 = -1+0i\n"
    with pytest.raises(ValueError):
        DirichletCharacter.from_text(bad)
    with pytest.raises(ValueError):
        DirichletCharacter.from_text("modulus = 5\n1 = 1+0i\n")


def test_character_undefined_at_modulus():
    chi = trivial_character(8)
    with pytest.raises(ValueError):
        chi(6)
    assert chi(7) == ONE
    with pytest.raises(ValueError):
        DirichletCharacter(5, ((1, GaussianInt(2, 0)),))
