"""Ground-state energy from the imaginary-time phase-space trace of the
star-exponential.

``Z(tau) = (1/(2 pi hbar)) ∫ Exp_*(-tau H/hbar) DpiDpsi`` is evaluated on a
grid, and ``E0`` is the least-squares slope of ``-hbar ln|Z|`` against ``tau``
over the tail of the grid.  ``Z`` is stored as ``z_scaled * exp(log_scale)``
so that ``tau`` in the thousands does not overflow.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .grassmann import AlgebraSignature, GrassmannElement, berezin_integrate
from .models import (
    Hamiltonian,
    ModelKind,
    ModelSpec,
    exact_eigenvalues,
    hamiltonian,
    propagator,
    spectrum_table,
)
from .starexp import (
    closed_form_driven,
    closed_form_fermi,
    driven_couplings,
    starexp_from_propagator,
    starexp_oracle,
)


class Route(enum.Enum):
    ORACLE = "oracle"
    CLOSED_FORM = "closed-form"
    TRANSFORM = "propagator-transform"


@dataclass(frozen=True)
class TraceSample:
    tau: float
    z_scaled: complex
    log_scale: float
    route: str

    @property
    def Z(self) -> complex:
        with np.errstate(over="ignore"):
            return complex(self.z_scaled * np.exp(self.log_scale))

    @property
    def log_abs(self) -> float:
        a = abs(self.z_scaled)
        return math.log(a) + self.log_scale if a > 0 else -math.inf

    @property
    def arg(self) -> float:
        return float(np.angle(self.z_scaled))

    def scaled(self, c: complex) -> "TraceSample":
        return TraceSample(self.tau, self.z_scaled * c, self.log_scale, self.route)

    def to_dict(self) -> dict:
        z = self.Z
        fin = np.isfinite(z)
        return {
            "tau": self.tau,
            "re_z": float(z.real) if fin else None,
            "im_z": float(z.imag) if fin else None,
            "log_abs_z": self.log_abs if np.isfinite(self.log_abs) else None,
            "arg_z": self.arg,
        }


@dataclass(frozen=True)
class EnergyEstimate:
    E0: float
    stderr: float
    window: tuple[float, float]
    points: int
    fit_residual: float
    route: str

    def to_dict(self) -> dict:
        return {"E0": self.E0, "stderr": self.stderr, "window": list(self.window),
                "points": self.points, "fit_residual": self.fit_residual, "route": self.route}


class VanishingTrace(ArithmeticError):
    """Z(tau) is zero at a sample in the fit window."""


def tau_grid(tmin: float, tmax: float, count: int, spacing: str = "geometric") -> np.ndarray:
    if count < 1 or not (0 < tmin <= tmax):
        raise ValueError("tau grid needs 0 < tau_min <= tau_max and at least one point")
    if spacing == "geometric":
        return np.geomspace(tmin, tmax, count)
    if spacing == "linear":
        return np.linspace(tmin, tmax, count)
    raise ValueError(f"unknown spacing {spacing!r}")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FERMIDQ_THREADS", "1")))
    except ValueError:
        return 1


def fk_measure(sig: AlgebraSignature) -> list[str]:
    """``DpiDpsi = dpi_n ... dpi_1 dpsi_n ... dpsi_1``."""
    pis = [sig.names[sig.pi_index(j)] for j in range(sig.n, 0, -1)]
    psis = [sig.names[sig.psi_index(j)] for j in range(sig.n, 0, -1)]
    return pis + psis


def phase_space_trace(symbol: GrassmannElement, normalization: complex) -> complex:
    """Body of ``normalization * ∫ symbol DpiDpsi``."""
    return complex(berezin_integrate(symbol, fk_measure(symbol.sig)).body() * normalization)


def _oracle_shift(H: Hamiltonian, tau: float) -> float:
    ev = np.linalg.eigvals(H.matrix.body())
    return float(np.max(-tau * ev.real / H.spec.hbar))


def _closed_form(spec: ModelSpec, sig: AlgebraSignature, t: complex, shift: float) -> GrassmannElement:
    if spec.kind is ModelKind.FERMI:
        return closed_form_fermi(spec.omega, spec.hbar, t, sig, shift)
    g = None if spec.strict else spec.g
    a, ac, ab = driven_couplings(sig, g)
    return closed_form_driven(spec.omega, spec.hbar, t, sig, a, ac, ab, shift)


def _closed_shift(spec: ModelSpec, tau: float) -> float:
    w = spec.omega
    if spec.kind is ModelKind.FERMI:
        return abs(w) * tau / 2
    return max(0.0, -w * tau)


def trace_of_evolution(spec: ModelSpec, taus: Sequence[float], route: Route | str = Route.ORACLE,
                       normalization: Optional[complex] = None,
                       H: Optional[Hamiltonian] = None) -> list[TraceSample]:
    """``Z(tau)`` on a grid along one route (``t -> -i tau``).

    The default normalization is ``1/(2 pi hbar)``.  In strict-coupling mode
    the body of the integral is kept.
    """
    route = Route(route)
    taus = [float(x) for x in taus]
    if not taus:
        raise ValueError("empty tau grid")
    if any(x <= 0 for x in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau grid must be positive and strictly increasing")
    norm = 1 / (2 * math.pi * spec.hbar) if normalization is None else normalization
    sig = spec.signature()

    if route is Route.ORACLE:
        H = H or hamiltonian(spec)

        def one(tau):
            shift = _oracle_shift(H, tau)
            sym = starexp_oracle(H.symbol, -1j * tau, H.convention, shift)
            return TraceSample(tau, phase_space_trace(sym, norm), shift, route.value)
    elif route is Route.CLOSED_FORM:
        def one(tau):
            shift = _closed_shift(spec, tau)
            sym = _closed_form(spec, sig, -1j * tau, shift)
            return TraceSample(tau, phase_space_trace(sym, norm), shift, route.value)
    else:
        K = propagator(spec, linearized=True) if spec.kind is ModelKind.DRIVEN else propagator(spec)

        def one(tau):
            shift = _closed_shift(spec, tau)
            sym = starexp_from_propagator(K, -1j * tau, sig, log_shift=shift)
            return TraceSample(tau, phase_space_trace(sym, norm), shift, route.value)

    workers = _threads()
    if workers > 1 and len(taus) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(one, taus))
    return [one(x) for x in taus]


def synthetic_samples(fn: Callable[[float], complex], taus: Sequence[float], route: str = "synthetic",
                      log_fn: Optional[Callable[[float], tuple[complex, float]]] = None) -> list[TraceSample]:
    """Samples from a plain function, or from ``log_fn(tau) -> (z_scaled, log_scale)``."""
    out = []
    for tau in taus:
        if log_fn is not None:
            z, s = log_fn(float(tau))
        else:
            z, s = complex(fn(float(tau))), 0.0
        out.append(TraceSample(float(tau), z, s, route))
    return out


def extract_E0(samples: Sequence[TraceSample], hbar: float = 1.0, tail: float = 0.5) -> EnergyEstimate:
    """Least-squares slope of ``-hbar ln|Z|`` over the upper ``tail`` fraction of the tau range."""
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    taus = np.array([s.tau for s in samples])
    lo = taus[0] + (1 - tail) * (taus[-1] - taus[0])
    idx = np.nonzero(taus >= lo)[0]
    if idx.size < 3:
        idx = np.arange(len(samples) // 2, len(samples))
    if idx.size < 2:
        idx = np.arange(len(samples))
    sel = [samples[i] for i in idx]
    logs = np.array([s.log_abs for s in sel])
    if not np.all(np.isfinite(logs)):
        bad = [s.tau for s in sel if not np.isfinite(s.log_abs)]
        raise VanishingTrace(f"Z vanishes at tau = {bad}")
    x = taus[idx]
    y = -hbar * logs
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(s2 / sxx) if sxx > 0 else 0.0
    return EnergyEstimate(slope, stderr, (float(x[0]), float(x[-1])), int(len(x)),
                          float(np.max(np.abs(resid))) if resid.size else 0.0,
                          sel[0].route)


def running_E0(samples: Sequence[TraceSample], hbar: float = 1.0) -> list[Optional[float]]:
    """Two-point slope estimates between neighbouring samples."""
    out: list[Optional[float]] = [None]
    for a, b in zip(samples, samples[1:]):
        if np.isfinite(a.log_abs) and np.isfinite(b.log_abs):
            out.append(-hbar * (b.log_abs - a.log_abs) / (b.tau - a.tau))
        else:
            out.append(None)
    return out


# ---------------------------------------------------------------------------
# limit classification


@dataclass(frozen=True)
class LimitClass:
    a: complex
    b: complex
    c: complex
    omega: float
    L: float
    dominant: str

    @property
    def E0(self) -> float:
        return -self.L

    def to_dict(self) -> dict:
        return {"a": [self.a.real, self.a.imag], "b": [self.b.real, self.b.imag],
                "c": [self.c.real, self.c.imag], "omega": self.omega, "L": self.L,
                "dominant": self.dominant}


def classify_limit(a: complex, b: complex, c: complex, omega: float) -> LimitClass:
    """``L = lim (1/tau) ln|a e^{-tau omega} + b tau + c|``."""
    a, b, c = complex(a), complex(b), complex(c)
    if a == 0 and b == 0 and c == 0:
        raise ValueError("Z is identically zero")
    if omega < 0 and a != 0:
        return LimitClass(a, b, c, omega, -omega, "a*exp(-tau*omega)")
    if b != 0:
        return LimitClass(a, b, c, omega, 0.0, "b*tau")
    if omega == 0:
        # e^{-tau omega} = 1 merges with the constant
        if a + c == 0:
            raise ValueError("Z is identically zero")
        return LimitClass(a, b, c, omega, 0.0, "a+c")
    if c != 0:
        return LimitClass(a, b, c, omega, 0.0, "c")
    # only the exponential is left
    return LimitClass(a, b, c, omega, -omega, "a*exp(-tau*omega)")


def driven_abc(spec: ModelSpec) -> tuple[complex, complex, complex]:
    """``(a, b, c)`` with ``Z = a e^{-omega tau} + b tau + c`` from the closed form.

    Fitted exactly from the closed-form integral, so they follow this
    package's integration conventions.
    """
    sig = spec.signature()
    w = spec.omega

    def z(tau):
        return phase_space_trace(_closed_form(spec, sig, -1j * tau, 0.0), 1 / (2 * math.pi * spec.hbar))

    if w == 0:
        z0, z1 = z(0.0), z(1.0)
        return 0j, z1 - z0, z0
    taus = [0.0, 1.0, 2.0]
    M = np.array([[math.exp(-w * x), x, 1.0] for x in taus], dtype=complex)
    sol = np.linalg.solve(M, np.array([z(x) for x in taus]))
    return complex(sol[0]), complex(sol[1]), complex(sol[2])


# ---------------------------------------------------------------------------
# report


@dataclass
class FKConfig:
    taus: Sequence[float]
    routes: Sequence[Route] = (Route.ORACLE, Route.CLOSED_FORM, Route.TRANSFORM)
    normalization: Optional[complex] = None
    tail: float = 0.5


@dataclass
class FKReport:
    spec: ModelSpec
    samples: dict
    estimates: dict
    exact_ground: float
    classification: Optional[LimitClass] = None
    spectrum: Optional[dict] = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "spec": self.spec.to_dict(),
            "exact_ground_energy": self.exact_ground,
            "estimates": {k: v.to_dict() for k, v in sorted(self.estimates.items())},
            "samples": {k: [s.to_dict() for s in v] for k, v in sorted(self.samples.items())},
            "notes": list(self.notes),
        }
        if self.classification is not None:
            out["limit_class"] = self.classification.to_dict()
        if self.spectrum is not None:
            out["spectrum"] = self.spectrum
        return out


def exact_ground_energy(spec: ModelSpec) -> float:
    if spec.kind is ModelKind.FERMI:
        return -abs(spec.omega) * spec.hbar / 2
    if spec.strict:
        return min(0.0, spec.omega)
    return exact_eigenvalues(spec.omega, abs(spec.g))[1]


def fk_report(spec: ModelSpec, config: FKConfig) -> FKReport:
    samples, estimates = {}, {}
    notes = []
    H = hamiltonian(spec)
    for r in config.routes:
        r = Route(r)
        s = trace_of_evolution(spec, config.taus, r, config.normalization, H=H)
        samples[r.value] = s
        try:
            estimates[r.value] = extract_E0(s, spec.hbar, config.tail)
        except VanishingTrace as exc:
            notes.append(f"{r.value}: {exc}")
    cls = None
    spectrum = None
    if spec.kind is ModelKind.DRIVEN:
        a, b, c = driven_abc(spec)
        try:
            cls = classify_limit(a, b, c, spec.omega)
        except ValueError as exc:
            notes.append(f"classifier: {exc}")
        if not spec.strict:
            spectrum = spectrum_table(spec.omega, abs(spec.g))
        else:
            notes.append("strict coupling: |alpha|^2 is nilpotent, Z body equals the g -> 0 value")
    return FKReport(spec, samples, estimates, exact_ground_energy(spec), cls, spectrum, notes)


__all__ = [
    "Route", "TraceSample", "EnergyEstimate", "VanishingTrace", "tau_grid", "fk_measure",
    "phase_space_trace", "trace_of_evolution", "synthetic_samples", "extract_E0", "running_E0",
    "LimitClass", "classify_limit", "driven_abc", "FKConfig", "FKReport", "exact_ground_energy",
    "fk_report",
]
