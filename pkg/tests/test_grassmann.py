import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermidq.grassmann import (
    AlgebraSignature,
    GrassmannElement,
    Parity,
    SignatureMismatch,
    berezin_integrate,
    derivative,
    embed,
    exp_nilpotent,
    gaussian_integral,
    gaussian_integral_direct,
    integrate_product,
    product,
    random_element,
    restrict,
    shift,
    substitute,
)

seeds = st.integers(0, 2**32 - 1)


def _sig(n=2, params=("a", "b")):
    return AlgebraSignature(n, params)


def test_generators_anticommute_and_square_to_zero():
    sig = _sig()
    gens = [sig.gen(k) for k in range(sig.size)]
    for x in gens:
        assert not (x * x)
        for y in gens:
            assert (x * y + y * x).norm_inf() == 0


def test_monomial_sign():
    sig = _sig()
    p, s = sig.pi(1), sig.psi(1)
    assert (p * s).coeff(["psi1", "pi1"]) == -1
    assert (s * p).coeff(["psi1", "pi1"]) == 1


def test_berezin_basics():
    sig = AlgebraSignature(1)
    psi = sig.psi(1)
    assert berezin_integrate(psi, ["psi1"]).body() == 1
    assert not berezin_integrate(sig.one(), ["psi1"])
    # the differential written next to the integrand acts first
    f = sig.pi(1) * psi
    assert berezin_integrate(f, ["psi1", "pi1"]).body() == 1
    assert berezin_integrate(f, ["pi1", "psi1"]).body() == -1


def test_duplicate_measure_rejected():
    sig = AlgebraSignature(1)
    with pytest.raises(ValueError):
        berezin_integrate(sig.psi(1), ["psi1", "psi1"])


def test_mixed_signatures_rejected():
    with pytest.raises(SignatureMismatch):
        AlgebraSignature(1).one() + AlgebraSignature(2).one()


def test_bad_signature():
    with pytest.raises(ValueError):
        AlgebraSignature(0)
    with pytest.raises(ValueError):
        AlgebraSignature(1, (), -1.0)
    with pytest.raises(ValueError):
        AlgebraSignature(1, ("psi1",))


@given(seeds)
def test_product_associative(seed):
    rng = np.random.default_rng(seed)
    sig = _sig()
    a, b, c = (random_element(sig, rng, density=0.3) for _ in range(3))
    assert ((a * b) * c).allclose(a * (b * c), 1e-10)


@given(seeds)
def test_graded_commutativity(seed):
    rng = np.random.default_rng(seed)
    sig = _sig()
    for pa in (Parity.EVEN, Parity.ODD):
        for pb in (Parity.EVEN, Parity.ODD):
            a = random_element(sig, rng, parity=pa, density=0.3)
            b = random_element(sig, rng, parity=pb, density=0.3)
            sign = -1 if pa is Parity.ODD and pb is Parity.ODD else 1
            assert (a * b).allclose(b * a * sign, 1e-10)


@given(seeds)
def test_left_derivative_leibniz(seed):
    rng = np.random.default_rng(seed)
    sig = _sig()
    a = random_element(sig, rng, parity=Parity.ODD, density=0.3)
    b = random_element(sig, rng, density=0.3)
    lhs = derivative(a * b, "pi1", "left")
    rhs = derivative(a, "pi1", "left") * b - a * derivative(b, "pi1", "left")
    assert lhs.allclose(rhs, 1e-10)


@given(seeds)
def test_left_right_derivative_relation(seed):
    rng = np.random.default_rng(seed)
    sig = _sig()
    for par, sign in ((Parity.EVEN, -1), (Parity.ODD, 1)):
        f = random_element(sig, rng, parity=par, density=0.4)
        assert derivative(f, "psi2", "right").allclose(derivative(f, "psi2", "left") * sign, 1e-12)


@given(seeds)
def test_integral_of_derivative_vanishes(seed):
    rng = np.random.default_rng(seed)
    sig = _sig()
    f = random_element(sig, rng)
    assert not berezin_integrate(derivative(f, "psi1"), ["psi1"])


@given(seeds)
def test_integrate_product_matches_naive(seed):
    rng = np.random.default_rng(seed)
    sig = _sig()
    a, b = random_element(sig, rng), random_element(sig, rng)
    gens = ["psi1", "pi1", "psi2"]
    assert integrate_product(a, b, gens).allclose(berezin_integrate(a * b, gens), 1e-10)


@given(seeds)
def test_exp_nilpotent_additive_for_even(seed):
    rng = np.random.default_rng(seed)
    sig = _sig()
    a = random_element(sig, rng, parity=Parity.EVEN, density=0.3)
    b = random_element(sig, rng, parity=Parity.EVEN, density=0.3)
    lhs = exp_nilpotent(a + b)
    rhs = exp_nilpotent(a) * exp_nilpotent(b)
    assert lhs.allclose(rhs, 1e-9 * max(1.0, lhs.norm_inf()))


@given(seeds, st.integers(1, 3))
def test_gaussian_closed_form(seed, k):
    rng = np.random.default_rng(seed)
    u = [f"u{j}" for j in range(k)]
    v = [f"v{j}" for j in range(k)]
    src = [f"s{j}" for j in range(2 * k)]
    sig = AlgebraSignature(1, tuple(u + v + src))
    M = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)) + 2 * np.eye(k)
    a = [sig.gen(src[j]) * complex(rng.normal()) for j in range(k)]
    b = [sig.gen(src[k + j]) * complex(rng.normal()) for j in range(k)]
    direct = gaussian_integral_direct(M, a, b, u, v)
    closed = gaussian_integral(M, a, b)
    assert direct.allclose(closed, 1e-10)


def test_gaussian_singular():
    sig = AlgebraSignature(1, ("a", "b"))
    with pytest.raises(np.linalg.LinAlgError):
        gaussian_integral(np.zeros((1, 1)), [sig.gen("a")], [sig.gen("b")])


def test_substitute_embed_restrict_shift():
    sig = AlgebraSignature(1)
    ext = sig.extend("x")
    f = sig.pi(1) * sig.psi(1) + 2.0
    g = embed(f, ext)
    assert restrict(g, sig) == f
    h = shift(g, "psi1", ext.gen("x"))
    assert h.allclose(embed(f, ext) + ext.pi(1) * ext.gen("x"))
    s = substitute(f, {"psi1": ext.gen("x"), "pi1": ext.pi(1)}, ext)
    assert s.allclose(ext.pi(1) * ext.gen("x") + 2.0)


def test_body_soul_parity():
    sig = AlgebraSignature(1)
    f = sig.scalar(3.0) + sig.psi(1) * sig.pi(1)
    assert f.body() == 3.0
    assert f.parity() is Parity.EVEN
    assert (f + sig.psi(1)).parity() is Parity.MIXED
    assert product(sig.psi(1), sig.pi(1)).coeff(["psi1", "pi1"]) == 1
    assert isinstance(f.soul(), GrassmannElement)
