import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermidq.fockrep import Convention
from fermidq.grassmann import AlgebraSignature, Parity, random_element
from fermidq.star import (
    moyal_bracket,
    star,
    star_anticommutator,
    star_commutator,
    star_integral,
    star_power,
)
from fermidq.weylmap import weyl_quantize

seeds = st.integers(0, 2**32 - 1)


def test_basic_products():
    sig = AlgebraSignature(1, (), 0.7)
    s, p = sig.psi(1), sig.pi(1)
    assert star(s, p).allclose(s * p + 0.35j)
    assert star(p, s).allclose(p * s + 0.35j)
    assert star_anticommutator(s, p).allclose(sig.scalar(0.7j))
    assert moyal_bracket(s, p).allclose(sig.one())
    assert not star(s, s)


def test_matrix_basis_kappa():
    sig = AlgebraSignature(1, (), 0.7)
    s, p = sig.psi(1), sig.pi(1)
    assert star(s, p, Convention.MATRIX_BASIS).allclose(s * p + 0.5)


@given(seeds, st.sampled_from(list(Convention)))
def test_unit_and_associativity(seed, conv):
    rng = np.random.default_rng(seed)
    sig = AlgebraSignature(2, ("a",), 1.2)
    f, g, h = (random_element(sig, rng, density=0.3) for _ in range(3))
    assert star(sig.one(), f, conv).allclose(f)
    assert star(f, sig.one(), conv).allclose(f)
    lhs = star(star(f, g, conv), h, conv)
    assert lhs.allclose(star(f, star(g, h, conv), conv), 1e-9 * max(1.0, lhs.norm_inf()))


@given(seeds, st.sampled_from(list(Convention)))
def test_homomorphism(seed, conv):
    rng = np.random.default_rng(seed)
    sig = AlgebraSignature(2, (), 0.5)
    f = random_element(sig, rng, parity=Parity.EVEN)
    g = random_element(sig, rng, parity=Parity.ODD)
    lhs = weyl_quantize(star(f, g, conv), conv)
    rhs = weyl_quantize(f, conv) @ weyl_quantize(g, conv)
    assert lhs.allclose(rhs, 1e-10)


@given(seeds)
def test_integral_form_matches(seed):
    rng = np.random.default_rng(seed)
    sig = AlgebraSignature(1, (), 0.9)
    f, g = random_element(sig, rng), random_element(sig, rng)
    assert star_integral(f, g).allclose(star(f, g), 1e-12)


def test_star_power():
    sig = AlgebraSignature(1, (), 1.0)
    H = sig.pi(1) * sig.psi(1) * 1j
    assert star_power(H, 0).allclose(sig.one())
    assert star_power(H, 3).allclose(star(H, star(H, H)), 1e-13)
    with pytest.raises(ValueError):
        star_power(H, -1)


def test_graded_commutator_odd_pair():
    sig = AlgebraSignature(1, (), 1.0)
    s, p = sig.psi(1), sig.pi(1)
    assert star_commutator(s, p).allclose(star_anticommutator(s, p))
    even = p * s
    assert star_commutator(even, s).allclose(star(even, s) - star(s, even))
