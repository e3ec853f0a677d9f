"""Fermi oscillator and driven Fermi oscillator.

The Fermi oscillator lives in the canonical convention with
``H = omega (i pi_hat psi_hat + hbar/2)``.  The driven oscillator
``H = omega pi_hat psi_hat + alpha psi_hat + alpha* pi_hat`` uses the
occupation-number matrices (``{psi_hat, pi_hat} = 1``).  Its coupling is
either a complex number ``g`` (numeric mode, ``|alpha|^2 -> |g|^2``) or a pair
of Grassmann parameter generators (strict mode).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fockrep import (
    Convention,
    OperatorMatrix,
    build_generators,
    coherent_ket,
    matrix_exp,
    momentum_bra,
)
from .grassmann import AlgebraSignature, GrassmannElement, exp_nilpotent
from .weylmap import weyl_dequantize

ALPHA, ALPHA_STAR = "alpha", "alpha*"


class ModelKind(enum.Enum):
    FERMI = "fermi_oscillator"
    DRIVEN = "driven"
    CUSTOM = "custom"


class CouplingMode(enum.Enum):
    NUMERIC = "numeric"
    STRICT = "strict"


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    omega: float
    hbar: float = 1.0
    g: Optional[complex] = None
    coupling_mode: CouplingMode = CouplingMode.NUMERIC
    convention: Optional[Convention] = None

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if not math.isfinite(self.omega):
            raise ValueError("omega must be finite")
        if self.kind is ModelKind.DRIVEN and self.coupling_mode is CouplingMode.NUMERIC and self.g is None:
            raise ValueError("the driven model needs a coupling g in numeric mode")
        if self.convention is None:
            conv = Convention.CANONICAL if self.kind is ModelKind.FERMI else Convention.MATRIX_BASIS
            object.__setattr__(self, "convention", conv)
        if self.kind is ModelKind.FERMI and self.convention is not Convention.CANONICAL:
            raise ValueError("the Fermi oscillator is defined in the canonical convention")
        if self.kind is ModelKind.DRIVEN and self.convention is not Convention.MATRIX_BASIS:
            raise ValueError("the driven oscillator is defined in the matrix basis")

    @property
    def strict(self) -> bool:
        return self.kind is ModelKind.DRIVEN and self.coupling_mode is CouplingMode.STRICT

    @property
    def g_abs2(self) -> float:
        return abs(self.g) ** 2 if self.g is not None else 0.0

    def signature(self) -> AlgebraSignature:
        params = (ALPHA, ALPHA_STAR) if self.strict else ()
        return AlgebraSignature(1, params, self.hbar)

    def couplings(self, sig: AlgebraSignature):
        """``(alpha, alpha*)`` as elements of ``sig`` (numbers in numeric mode)."""
        if self.kind is not ModelKind.DRIVEN:
            return sig.zero(), sig.zero()
        if self.strict:
            return sig.gen(ALPHA), sig.gen(ALPHA_STAR)
        return sig.scalar(self.g), sig.scalar(np.conj(self.g))

    def alpha_abs2(self, sig: AlgebraSignature) -> GrassmannElement:
        """``|alpha|^2``: ``alpha* alpha`` in strict mode, ``|g|^2`` otherwise."""
        a, ac = self.couplings(sig)
        return ac * a if self.strict else sig.scalar(self.g_abs2)

    def to_dict(self) -> dict:
        out = {"model": self.kind.value, "omega": self.omega, "hbar": self.hbar,
               "convention": self.convention.value}
        if self.kind is ModelKind.DRIVEN:
            out["coupling_mode"] = self.coupling_mode.value
            if self.g is not None:
                out["g"] = [float(np.real(self.g)), float(np.imag(self.g))]
        return out


@dataclass(frozen=True)
class Hamiltonian:
    spec: ModelSpec
    symbol: GrassmannElement
    matrix: OperatorMatrix

    @property
    def convention(self) -> Convention:
        return self.spec.convention


def hamiltonian(spec: ModelSpec) -> Hamiltonian:
    """Operator and Weyl symbol; the symbol is the dequantized matrix."""
    sig = spec.signature()
    (psi,), (pi,) = build_generators(sig, spec.convention)
    if spec.kind is ModelKind.FERMI:
        H = ((pi @ psi).scale(1j) + spec.hbar / 2).scale(spec.omega)
    elif spec.kind is ModelKind.DRIVEN:
        a, ac = spec.couplings(sig)
        H = (pi @ psi).scale(spec.omega) + psi.lmul(a) + pi.lmul(ac)
    else:
        raise ValueError("custom models carry their own Hamiltonian")
    return Hamiltonian(spec, weyl_dequantize(H, spec.convention), H)


def custom_hamiltonian(matrix: OperatorMatrix, convention: Convention = Convention.CANONICAL,
                       omega: float = 0.0) -> Hamiltonian:
    spec = ModelSpec(ModelKind.CUSTOM, omega, matrix.sig.hbar, convention=convention)
    return Hamiltonian(spec, weyl_dequantize(matrix, convention), matrix)


# ---------------------------------------------------------------------------
# propagators


@dataclass(frozen=True)
class Propagator:
    """``K(pi_f, psi_0, t)`` on Grassmann arguments.

    ``t`` may be complex (imaginary time); ``log_shift`` rescales the result by
    ``exp(-log_shift)`` so large imaginary times stay finite.
    """

    fn: Callable
    form: str
    phase: str

    def __call__(self, pi_f, psi0, t, log_shift: float = 0.0) -> GrassmannElement:
        return self.fn(pi_f, psi0, t, log_shift)


def _one(x):
    return x[0] if isinstance(x, (list, tuple)) else x


def source_phase(abs2, omega: float, t: complex, log_shift: float = 0.0):
    """``f = |alpha|^2/(2 omega) (-i omega t + e^{-i omega t} - 1)`` with its omega -> 0 limit.

    The result is multiplied by ``exp(-log_shift)``.
    """
    x = 1j * omega * t
    if abs(omega) < 1e-8:
        s = sum((-1) ** k * (1j * t) * x ** (k - 1) / (2 * math.factorial(k)) for k in range(2, 10))
        return abs2 * ((-1j * t + s) * np.exp(-log_shift))
    return abs2 * (((-x - 1) * np.exp(-log_shift) + np.exp(-x - log_shift)) / (2 * omega))


def decay_factor(omega: float, t: complex, log_shift: float = 0.0):
    """``(1 - e^{-i omega t}) / omega`` with its omega -> 0 limit, times ``exp(-log_shift)``."""
    x = 1j * omega * t
    if abs(omega) < 1e-8:
        s = sum((-1) ** (k + 1) * (1j * t) * x ** (k - 1) / math.factorial(k) for k in range(1, 10))
        return s * np.exp(-log_shift)
    return (np.exp(-log_shift) - np.exp(-x - log_shift)) / omega


def propagator(spec: ModelSpec, form: str = "closed", linearized: bool = False) -> Propagator:
    """Propagator of the model.

    ``form="closed"`` gives the closed expressions: for the Fermi oscillator
    ``e^{i omega t/2} exp{pi_f e^{-i omega t} psi_0}``, for the driven one
    ``exp{pi_f e^{-i omega t} psi_0 - (1 - e^{-i omega t})(alpha* pi_f + alpha psi_0)/omega - f}``
    (phase dropped).  ``linearized`` replaces the driven exponential by
    ``1 + (exponent)``.  ``form="oracle"`` evaluates
    ``<pi_f| exp(-i t H/hbar) |psi_0>`` with Fock-space matrices.
    """
    if form == "oracle":
        return _oracle_propagator(spec)
    if form != "closed":
        raise ValueError(f"unknown propagator form {form!r}")
    w = spec.omega
    if spec.kind is ModelKind.FERMI:
        def fermi(pi_f, psi0, t, log_shift=0.0):
            p, s = _one(pi_f), _one(psi0)
            a = np.exp(0.5j * w * t - log_shift)
            b = np.exp(-0.5j * w * t - log_shift)
            return p.sig.one() * a + (p * s) * b

        return Propagator(fermi, "closed", "e^{i omega t/2} kept")
    if spec.kind is ModelKind.DRIVEN:
        def driven(pi_f, psi0, t, log_shift=0.0):
            p, s = _one(pi_f), _one(psi0)
            sig = p.sig
            a, ac = spec.couplings(sig)
            E = np.exp(-1j * w * t - log_shift)
            one = np.exp(-log_shift)
            d = decay_factor(w, t, log_shift)
            expo = (p * s) * E - (ac * p + a * s) * d
            if linearized:
                return sig.one() * one + expo - source_phase(spec.alpha_abs2(sig), w, t, log_shift)
            f = source_phase(spec.alpha_abs2(sig), w, t)
            # exp{X - f}: the body of -f may be large, split it off
            fb = f.body() if isinstance(f, GrassmannElement) else complex(f)
            rest = (f - fb) if isinstance(f, GrassmannElement) else sig.zero()
            # expo already carries e^{-shift}; undo for the nilpotent part
            X = expo * np.exp(log_shift) - rest
            return exp_nilpotent(X) * np.exp(-fb - log_shift)

        return Propagator(driven, "closed-linearized" if linearized else "closed", "phase dropped")
    raise ValueError("custom models have no closed-form propagator")


def _oracle_propagator(spec: ModelSpec) -> Propagator:
    H = hamiltonian(spec)

    def oracle(pi_f, psi0, t, log_shift=0.0):
        p, s = list(pi_f) if isinstance(pi_f, (list, tuple)) else [pi_f], \
            list(psi0) if isinstance(psi0, (list, tuple)) else [psi0]
        sig = p[0].sig
        M = H.matrix.embed(sig)
        U = matrix_exp(M, -1j * t / spec.hbar, log_shift)
        out = momentum_bra(p, spec.convention) @ U @ coherent_ket(s, spec.convention)
        return out if isinstance(out, GrassmannElement) else GrassmannElement(sig, out.masks, out.mats[:, 0, 0])

    return Propagator(oracle, "oracle", "exact")


# ---------------------------------------------------------------------------
# Heisenberg picture


def heisenberg_solution(spec: ModelSpec, t: float, sig: AlgebraSignature | None = None):
    """Closed forms ``psi_hat(t), pi_hat(t)`` for the driven oscillator.

    ``psi(t) = e^{-i w t} psi(0) + alpha*/w (1 - e^{-i w t})`` and
    ``pi(t) = e^{i w t} pi(0) + alpha/w (e^{i w t} - 1)``, with the omega -> 0
    limits ``i t alpha*`` and ``i t alpha``.
    """
    if spec.kind is not ModelKind.DRIVEN:
        raise ValueError("closed Heisenberg solutions are given for the driven oscillator only")
    sig = sig or spec.signature()
    (psi,), (pi,) = build_generators(sig, spec.convention)
    a, ac = spec.couplings(sig)
    w = spec.omega
    eye = OperatorMatrix.identity(sig)
    d_minus = decay_factor(w, t)
    # (e^{i w t} - 1)/w is decay_factor(-w, t)
    d_plus = decay_factor(-w, t)
    psi_t = psi.scale(np.exp(-1j * w * t)) + eye.lmul(ac * d_minus)
    pi_t = pi.scale(np.exp(1j * w * t)) + eye.lmul(a * d_plus)
    return psi_t, pi_t


def heisenberg_oracle(spec: ModelSpec, t: float, sig: AlgebraSignature | None = None):
    """``U(t)^{-1} A U(t)`` for ``A = psi_hat, pi_hat`` with ``U(t) = exp(-i t H/hbar)``."""
    sig = sig or spec.signature()
    H = hamiltonian(spec).matrix.embed(sig)
    (psi,), (pi,) = build_generators(sig, spec.convention)
    U = matrix_exp(H, -1j * t / spec.hbar)
    Ui = matrix_exp(H, 1j * t / spec.hbar)
    return Ui @ psi @ U, Ui @ pi @ U


# ---------------------------------------------------------------------------
# spectrum


def exact_eigenvalues(omega: float, g: float) -> tuple[float, float]:
    """Roots of ``l^2 - l omega - g^2 = 0`` ordered ``(l_plus, l_minus)``."""
    if g < 0:
        raise ValueError("g must be non-negative")
    r = math.hypot(omega, 2 * g)
    if omega >= 0:
        lp = (omega + r) / 2
        lm = -g * g / lp if lp else 0.0
    else:
        lm = (omega - r) / 2
        lp = -g * g / lm if lm else 0.0
    return lp, lm


def characteristic_residual(lam: float, omega: float, g: float) -> float:
    return lam * lam - lam * omega - g * g


class Regime(enum.Enum):
    RESONANT = "resonant"
    DISPERSIVE_POS = "dispersive_pos"
    DISPERSIVE_NEG = "dispersive_neg"
    STRONG = "strong_coupling"
    WEAK = "weak_coupling"


@dataclass(frozen=True)
class RegimeApprox:
    regime: Regime
    lam_plus: float
    lam_minus: float
    order: str

    def to_dict(self) -> dict:
        return {"regime": self.regime.value, "lambda_plus": self.lam_plus,
                "lambda_minus": self.lam_minus, "order": self.order}


def regime_approximation(omega: float, g: float, regime: Regime) -> RegimeApprox:
    if regime in (Regime.RESONANT, Regime.STRONG):
        if g == 0:
            raise ZeroDivisionError("strong-coupling expansion needs g > 0")
        corr = omega * omega / (8 * g)
        return RegimeApprox(regime, g + omega / 2 + corr, -g + omega / 2 - corr, "O(omega^4/g^3)")
    if regime in (Regime.DISPERSIVE_POS, Regime.DISPERSIVE_NEG):
        if omega == 0:
            raise ZeroDivisionError("dispersive expansion needs omega != 0")
        shift = g * g / omega
        if regime is Regime.DISPERSIVE_POS:
            return RegimeApprox(regime, omega + shift, -shift, "O(g^4/omega^3)")
        return RegimeApprox(regime, -shift, omega + shift, "O(g^4/omega^3)")
    if regime is Regime.WEAK:
        return RegimeApprox(regime, omega, 0.0, "g -> 0 limit")
    raise ValueError(regime)


def applicable_regimes(omega: float, g: float) -> list[Regime]:
    out = [Regime.WEAK]
    if g > 0:
        out += [Regime.RESONANT, Regime.STRONG]
    if omega > 0:
        out.append(Regime.DISPERSIVE_POS)
    elif omega < 0:
        out.append(Regime.DISPERSIVE_NEG)
    return out


@dataclass
class SpectrumRow:
    regime: Regime
    approx: RegimeApprox
    err_plus: float
    err_minus: float

    def to_dict(self) -> dict:
        d = self.approx.to_dict()
        d.update(err_plus=self.err_plus, err_minus=self.err_minus)
        return d


def spectrum_table(omega: float, g: float) -> dict:
    lp, lm = exact_eigenvalues(omega, g)
    rows = []
    for r in applicable_regimes(omega, g):
        ap = regime_approximation(omega, g, r)
        rows.append(SpectrumRow(r, ap, abs(ap.lam_plus - lp), abs(ap.lam_minus - lm)).to_dict())
    return {"omega": omega, "g": g, "lambda_plus": lp, "lambda_minus": lm,
            "char_residual": max(abs(characteristic_residual(lp, omega, g)),
                                 abs(characteristic_residual(lm, omega, g))),
            "regimes": rows}


__all__ = [
    "ALPHA", "ALPHA_STAR", "ModelKind", "CouplingMode", "ModelSpec", "Hamiltonian", "hamiltonian",
    "custom_hamiltonian", "Propagator", "propagator", "source_phase", "decay_factor",
    "heisenberg_solution", "heisenberg_oracle", "exact_eigenvalues", "characteristic_residual",
    "Regime", "RegimeApprox", "regime_approximation", "applicable_regimes", "spectrum_table",
]
