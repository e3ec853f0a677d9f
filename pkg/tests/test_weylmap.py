import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermidq.fockrep import Convention, OperatorMatrix, build_generators, trace_grassmann
from fermidq.grassmann import AlgebraSignature, random_element
from fermidq.weylmap import (
    build_quantizer,
    expectation,
    grassmann_delta,
    phase_space_integral,
    weyl_dequantize,
    weyl_quantize,
    wigner_function,
)

from conftest import quantizer_at

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("conv", list(Convention))
@pytest.mark.parametrize("n", [1, 2, 3])
def test_generators_quantize_to_operators(conv, n):
    sig = AlgebraSignature(n, (), 0.7)
    psis, pis = build_generators(sig, conv)
    assert weyl_quantize(sig.one(), conv).allclose(OperatorMatrix.identity(sig), 1e-13)
    for j in range(n):
        assert weyl_quantize(sig.psi(j + 1), conv).allclose(psis[j], 1e-13)
        assert weyl_quantize(sig.pi(j + 1), conv).allclose(pis[j], 1e-13)


def test_symmetric_ordering():
    sig = AlgebraSignature(1, (), 1.3)
    psis, pis = build_generators(sig)
    Q = weyl_quantize(sig.psi(1) * sig.pi(1))
    half = ((psis[0] @ pis[0]) - (pis[0] @ psis[0])).scale(0.5)
    assert Q.allclose(half, 1e-13)


@given(seeds, st.sampled_from(list(Convention)), st.integers(1, 2))
def test_round_trip(seed, conv, n):
    rng = np.random.default_rng(seed)
    sig = AlgebraSignature(n, ("a",), 0.9)
    f = random_element(sig, rng, density=0.5)
    assert weyl_dequantize(weyl_quantize(f, conv), conv).allclose(f, 1e-11)


@pytest.mark.parametrize("n", [1, 2])
def test_bases_agree(n):
    sig = AlgebraSignature(n, (), 1.1)
    a = build_quantizer(sig, "psi").omega
    b = build_quantizer(sig, "pi").omega
    assert a.allclose(b, 1e-13)


@pytest.mark.parametrize("n", [1, 2])
def test_quantizer_trace_is_one(n):
    sig = AlgebraSignature(n, (), 0.4)
    t = trace_grassmann(build_quantizer(sig).omega)
    assert t.allclose(sig.one(), 1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_pair_trace_is_delta(n):
    sig = AlgebraSignature(n, (), 0.8)
    s1 = [f"s{j}" for j in range(n)]
    p1 = [f"p{j}" for j in range(n)]
    s2 = [f"t{j}" for j in range(n)]
    p2 = [f"q{j}" for j in range(n)]
    ext = sig.extend(*(s1 + p1 + s2 + p2))
    om = build_quantizer(sig).omega
    t = trace_grassmann(quantizer_at(om, ext, s1, p1) @ quantizer_at(om, ext, s2, p2))
    g = lambda names: [ext.gen(x) for x in names]
    assert t.allclose(grassmann_delta((g(s1), g(p1)), (g(s2), g(p2))), 1e-12)


@given(seeds)
def test_expectation_is_trace(seed):
    rng = np.random.default_rng(seed)
    sig = AlgebraSignature(2, (), 0.6)
    rho = OperatorMatrix.from_complex(sig, np.diag(rng.random(4)))
    O = weyl_quantize(random_element(sig, rng))
    lhs = expectation(wigner_function(rho), weyl_dequantize(O))
    assert lhs.allclose(trace_grassmann(rho @ O), 1e-10)


def test_integral_of_symbol_is_trace():
    sig = AlgebraSignature(1, (), 1.0)
    rng = np.random.default_rng(1)
    f = random_element(sig, rng)
    assert phase_space_integral(f).allclose(trace_grassmann(weyl_quantize(f)), 1e-12)
