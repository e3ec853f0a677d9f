import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermidq.fockrep import Convention
from fermidq.grassmann import GrassmannElement
from fermidq.models import (
    CouplingMode,
    ModelKind,
    ModelSpec,
    Regime,
    applicable_regimes,
    characteristic_residual,
    decay_factor,
    exact_eigenvalues,
    hamiltonian,
    heisenberg_oracle,
    heisenberg_solution,
    propagator,
    regime_approximation,
    source_phase,
    spectrum_table,
)
from fermidq.starexp import transform_signature


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(ModelKind.FERMI, 1.0, -1.0)
    with pytest.raises(ValueError):
        ModelSpec(ModelKind.DRIVEN, 1.0)
    with pytest.raises(ValueError):
        ModelSpec(ModelKind.FERMI, 1.0, convention=Convention.MATRIX_BASIS)
    assert ModelSpec(ModelKind.DRIVEN, 1.0, coupling_mode=CouplingMode.STRICT).strict


def test_fermi_spectrum():
    spec = ModelSpec(ModelKind.FERMI, 1.4, 0.5)
    ev = np.sort(np.linalg.eigvals(hamiltonian(spec).matrix.body()).real)
    assert np.allclose(ev, [-0.35, 0.35])


def test_driven_symbol():
    spec = ModelSpec(ModelKind.DRIVEN, 0.9, g=0.2 - 0.1j)
    H = hamiltonian(spec)
    sig = H.symbol.sig
    p, s = sig.pi(1), sig.psi(1)
    expect = (p * s + 0.5) * 0.9 + s * (0.2 - 0.1j) + p * (0.2 + 0.1j)
    assert H.symbol.allclose(expect, 1e-13)


@given(st.floats(-5, 5), st.floats(0, 5))
def test_exact_eigenvalues(omega, g):
    lp, lm = exact_eigenvalues(omega, g)
    scale = max(1.0, omega * omega, g * g)
    assert abs(characteristic_residual(lp, omega, g)) <= 1e-12 * scale
    assert abs(characteristic_residual(lm, omega, g)) <= 1e-12 * scale
    assert lp >= lm


def test_eigenvalues_match_matrix():
    spec = ModelSpec(ModelKind.DRIVEN, -0.6, g=0.4j)
    ev = np.sort(np.linalg.eigvalsh(hamiltonian(spec).matrix.body()))
    lp, lm = exact_eigenvalues(-0.6, 0.4)
    assert np.allclose(ev, [lm, lp])


def test_regime_orders():
    g = 1.0
    errs = [abs(regime_approximation(w, g, Regime.STRONG).lam_minus - exact_eigenvalues(w, g)[1])
            for w in (0.2, 0.1)]
    assert errs[0] / errs[1] >= 6
    w = 1.0
    errs = [abs(regime_approximation(w, gg, Regime.DISPERSIVE_POS).lam_minus - exact_eigenvalues(w, gg)[1])
            for gg in (0.1, 0.05)]
    assert errs[0] / errs[1] >= 14


def test_spectrum_table():
    tab = spectrum_table(2.0, 1.0)
    assert tab["char_residual"] < 1e-12
    names = {r["regime"] for r in tab["regimes"]}
    assert {"resonant", "strong_coupling", "dispersive_pos", "weak_coupling"} <= names
    assert Regime.DISPERSIVE_NEG in applicable_regimes(-1.0, 0.1)


def test_omega_zero_limits():
    for t in (0.3, -2j):
        assert abs(decay_factor(0.0, t) - decay_factor(1e-7, t)) < 1e-6
        assert abs(source_phase(0.5, 0.0, t) - source_phase(0.5, 1e-7, t)) < 1e-6
    assert decay_factor(0.0, 0.3) == pytest.approx(0.3j)


@pytest.mark.parametrize("omega", [0.7, -1.1, 0.0])
def test_heisenberg_strict(omega):
    spec = ModelSpec(ModelKind.DRIVEN, omega, coupling_mode=CouplingMode.STRICT)
    for t in (0.4, 1.7):
        a = heisenberg_solution(spec, t)
        b = heisenberg_oracle(spec, t)
        assert a[0].allclose(b[0], 1e-12) and a[1].allclose(b[1], 1e-12)


def test_heisenberg_needs_driven():
    with pytest.raises(ValueError):
        heisenberg_solution(ModelSpec(ModelKind.FERMI, 1.0), 0.5)


def test_fermi_propagator_matches_oracle_after_mapping():
    # the closed form equals the matrix amplitude with pi -> i hbar pi and omega -> -omega
    spec = ModelSpec(ModelKind.FERMI, 0.8, 0.6)
    flipped = ModelSpec(ModelKind.FERMI, -0.8, 0.6)
    ext, _, _ = transform_signature(spec.signature())
    p, s = ext.pi(1), ext.psi(1)
    for t in (0.5, -1.5j):
        closed = propagator(spec)([p], [s], t)
        oracle = propagator(flipped, "oracle")([p * (0.6j)], [s], t)
        assert isinstance(closed, GrassmannElement)
        assert closed.allclose(oracle, 1e-12)


def test_driven_propagator_linearized():
    spec = ModelSpec(ModelKind.DRIVEN, 0.5, coupling_mode=CouplingMode.STRICT)
    ext, _, _ = transform_signature(spec.signature())
    full = propagator(spec)([ext.pi(1)], [ext.psi(1)], 0.3)
    lin = propagator(spec, linearized=True)([ext.pi(1)], [ext.psi(1)], 0.3)
    # they differ only at degree four and above
    diff = full - lin
    assert diff and diff.degrees.min() >= 4
