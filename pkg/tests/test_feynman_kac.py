import math

import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, strategies as st

from fermidq.feynman_kac import (
    FKConfig,
    Route,
    VanishingTrace,
    classify_limit,
    exact_ground_energy,
    extract_E0,
    fk_report,
    running_E0,
    synthetic_samples,
    tau_grid,
    trace_of_evolution,
)
from fermidq.models import CouplingMode, ModelKind, ModelSpec, hamiltonian


def _abc_samples(a, b, c, w, taus):
    def log_fn(tau):
        s = max(0.0, -w * tau)
        return a * math.exp(-w * tau - s) + (b * tau + c) * math.exp(-s), s
    return synthetic_samples(None, taus, log_fn=log_fn)


def test_pure_exponential():
    est = extract_E0(synthetic_samples(lambda t: np.exp(-3 * t), tau_grid(1, 20, 16)))
    assert est.E0 == pytest.approx(3.0, abs=1e-10)
    assert est.stderr >= 0


@given(st.floats(0.1, 3), st.floats(0.3, 2), st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
def test_normalization_invariance(omega, hbar, k):
    spec = ModelSpec(ModelKind.FERMI, omega, hbar)
    s = trace_of_evolution(spec, tau_grid(0.5, 40, 12))
    e1 = extract_E0(s, hbar).E0
    e2 = extract_E0([x.scaled(k) for x in s], hbar).E0
    assert abs(e1 - e2) < 1e-9


@given(st.floats(0.1, 3), st.floats(0.3, 2))
def test_oracle_matches_ground_state_fermi(omega, hbar):
    spec = ModelSpec(ModelKind.FERMI, omega, hbar)
    est = extract_E0(trace_of_evolution(spec, tau_grid(0.5, 60 / omega, 24)), hbar)
    # the exact fit leaves only round-off in stderr
    assert abs(est.E0 - exact_ground_energy(spec)) <= 3 * est.stderr + 1e-10 * hbar * omega


@pytest.mark.parametrize("spec", [
    ModelSpec(ModelKind.FERMI, 1.2, 0.8),
    ModelSpec(ModelKind.DRIVEN, 0.6, g=0.3 + 0.2j),
])
def test_oracle_is_proportional_to_supertrace(spec):
    H = hamiltonian(spec).matrix.body()
    P = np.diag([1.0, -1.0])
    ratios = []
    for s in trace_of_evolution(spec, [0.3, 1.0, 2.5]):
        ratios.append(s.Z / np.trace(P @ sl.expm(-s.tau * H / spec.hbar)))
    assert np.allclose(ratios, ratios[0], rtol=1e-10)


def test_fermi_closed_form_constants():
    hbar, w = 0.7, 1.3
    spec = ModelSpec(ModelKind.FERMI, w, hbar)
    for s in trace_of_evolution(spec, [0.5, 1.5], Route.CLOSED_FORM, normalization=1.0):
        a, b = 2 / 5, -3j * hbar / 5
        expect = a * np.exp(s.tau * w / 2) + b * np.exp(-s.tau * w / 2)
        # the literal product measure orientation contributes an overall sign
        assert s.Z == pytest.approx(-expect, rel=1e-12)


def test_small_tau_finite():
    spec = ModelSpec(ModelKind.FERMI, 1.0)
    z = [s.Z for s in trace_of_evolution(spec, [1e-8, 1e-6])]
    assert abs(z[0] - z[1]) < 1e-5 and abs(z[0]) > 0


def test_routes_agree_fermi():
    spec = ModelSpec(ModelKind.FERMI, 1.0)
    g = tau_grid(0.5, 50, 32)
    a = trace_of_evolution(spec, g, Route.CLOSED_FORM)
    b = trace_of_evolution(spec, g, Route.TRANSFORM)
    assert all(x.Z == pytest.approx(y.Z, rel=1e-10) for x, y in zip(a, b))


def test_grid_errors():
    spec = ModelSpec(ModelKind.FERMI, 1.0)
    with pytest.raises(ValueError):
        trace_of_evolution(spec, [])
    with pytest.raises(ValueError):
        trace_of_evolution(spec, [2.0, 1.0])
    with pytest.raises(ValueError):
        tau_grid(0, 1, 3)


def test_vanishing_trace():
    s = synthetic_samples(lambda t: 0.0, [1, 2, 3, 4])
    with pytest.raises(VanishingTrace):
        extract_E0(s)


def test_threads_env(monkeypatch):
    spec = ModelSpec(ModelKind.DRIVEN, -1.0, g=0.1)
    g = tau_grid(0.5, 100, 10)
    serial = [s.Z for s in trace_of_evolution(spec, g, Route.ORACLE)]
    monkeypatch.setenv("FERMIDQ_THREADS", "4")
    assert [s.Z for s in trace_of_evolution(spec, g, Route.ORACLE)] == serial


def test_classifier_table():
    assert classify_limit(1, 2, 3, 2.0).L == 0
    assert classify_limit(1, 2, 3, 0.0).L == 0
    assert classify_limit(1, 2, 3, -2.0).L == 2
    assert classify_limit(1, 2, 3, -2.0).E0 == -2
    # degenerate coefficients
    assert classify_limit(0, 1, 1, -2.0).L == 0
    assert classify_limit(1, 0, 0, 2.0).L == -2
    assert classify_limit(1, 0, 3, 2.0).dominant == "c"
    with pytest.raises(ValueError):
        classify_limit(0, 0, 0, 1.0)
    with pytest.raises(ValueError):
        classify_limit(1, 0, -1, 0.0)


def test_classifier_agrees_with_fit():
    rng = np.random.default_rng(7)
    taus = tau_grid(1.0, 1e4, 48)
    for _ in range(50):
        a, b, c = rng.normal(size=3) + 1j * rng.normal(size=3)
        w = rng.choice([-1, 0, 1]) * rng.uniform(0.05, 3)
        est = extract_E0(_abc_samples(a, b, c, w, taus))
        assert abs(est.E0 - classify_limit(a, b, c, w).E0) <= 2e-3


@pytest.mark.parametrize("omega", [1.0, 0.0, -1.0])
def test_imaginary_part_irrelevant(omega):
    spec = ModelSpec(ModelKind.DRIVEN, omega, g=0.1)
    s = trace_of_evolution(spec, [1e4], Route.CLOSED_FORM)[-1]
    assert abs(s.arg) / s.tau <= 1e-3


def test_running_E0():
    s = synthetic_samples(lambda t: np.exp(-2 * t), [1, 2, 4])
    r = running_E0(s)
    assert r[0] is None and r[1] == pytest.approx(2) and r[2] == pytest.approx(2)


def test_report_driven():
    spec = ModelSpec(ModelKind.DRIVEN, 1.0, g=0.1)
    rep = fk_report(spec, FKConfig(tau_grid(0.5, 1e4, 48)))
    d = rep.to_dict()
    assert abs(d["estimates"]["closed-form"]["E0"]) <= 2e-3
    assert d["exact_ground_energy"] == pytest.approx(-0.00990195, abs=1e-7)
    assert d["estimates"]["oracle"]["E0"] == pytest.approx(d["exact_ground_energy"], abs=1e-6)
    assert rep.classification.L == 0
    assert d["spectrum"]["regimes"]


def test_report_strict():
    spec = ModelSpec(ModelKind.DRIVEN, -1.0, coupling_mode=CouplingMode.STRICT)
    rep = fk_report(spec, FKConfig(tau_grid(0.5, 1e3, 24)))
    assert rep.estimates["closed-form"].E0 == pytest.approx(-1.0, abs=1e-3)
    assert rep.notes
