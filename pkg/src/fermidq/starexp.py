"""Star-exponentials: matrix oracle, propagator transform, star-power series and
closed forms, with a coefficient-level comparison report.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fockrep import Convention, matrix_exp
from .grassmann import (
    AlgebraSignature,
    GrassmannElement,
    Parity,
    SignatureMismatch,
    berezin_integrate,
    exp_nilpotent,
    restrict,
)
from .models import ALPHA, ALPHA_STAR, decay_factor, source_phase
from .star import star_differential
from .weylmap import weyl_dequantize, weyl_quantize

PRIME_PSI = "~Psi'"
PRIME_PI = "~Pi'"


def _check_even(H: GrassmannElement, allow_odd: bool):
    if not allow_odd and H.parity() is not Parity.EVEN:
        raise ValueError("star-exponential expects an even Hamiltonian symbol")


def starexp_oracle(H: GrassmannElement, t: complex, convention: Convention = Convention.CANONICAL,
                   log_shift: float = 0.0, allow_odd: bool = True) -> GrassmannElement:
    """``Q_W^{-1}(exp(-i t Q_W(H)/hbar))``, scaled by ``exp(-log_shift)``.

    Numeric couplings make ``H`` mixed-parity; that is accepted unless
    ``allow_odd`` is false.
    """
    _check_even(H, allow_odd)
    Hm = weyl_quantize(H, convention)
    U = matrix_exp(Hm, -1j * t / H.sig.hbar, log_shift)
    return weyl_dequantize(U, convention)


@dataclass(frozen=True)
class SeriesResult:
    value: GrassmannElement
    tail_bound: float


def starexp_series(H: GrassmannElement, t: complex, order: int,
                   convention: Convention = Convention.CANONICAL) -> SeriesResult:
    """``sum_{k<=order} (-i t/hbar)^k H^{*k}/k!`` plus a bound on the next term."""
    if order < 0:
        raise ValueError("order must be >= 0")
    c = -1j * t / H.sig.hbar
    term = H.sig.one()
    out = term
    for k in range(1, order + 1):
        term = star_differential(term, H, convention) * (c / k)
        out = out + term
    nxt = star_differential(term, H, convention) * (c / (order + 1))
    return SeriesResult(out, nxt.norm_inf())


def normalization_constant(n: int, hbar: float) -> complex:
    """``C = i^{3-3n} 2^{n-1} hbar^{n+1} / (5 * 3^{n-1})``."""
    return (1j ** ((3 - 3 * n) % 4)) * 2 ** (n - 1) * hbar ** (n + 1) / (5 * 3 ** (n - 1))


def transform_signature(sig: AlgebraSignature) -> tuple[AlgebraSignature, list[str], list[str]]:
    n = sig.n
    ps = [f"{PRIME_PSI}{j}" for j in range(1, n + 1)]
    pp = [f"{PRIME_PI}{j}" for j in range(1, n + 1)]
    return sig.extend(*(ps + pp)), ps, pp


def starexp_from_propagator(K, t: complex, sig: AlgebraSignature, C: Optional[complex] = None,
                            log_shift: float = 0.0) -> GrassmannElement:
    """Star-exponential from a propagator ``K(pi_f, psi_0, t)``.

    ``C e^{(i/hbar) Pi.Psi} ∫ e^{-(2i/hbar) Pi'.Psi'} K(Pi + Pi', t; Psi - Psi') DPsi' DPi'``
    where ``(Psi, Pi)`` are the phase-space generators of ``sig`` and
    ``DPsi' = dPsi'_n ... dPsi'_1``.  ``C`` defaults to
    :func:`normalization_constant`.
    """
    n, hbar = sig.n, sig.hbar
    ext, ps, pp = transform_signature(sig)
    Psi = [ext.psi(j) for j in range(1, n + 1)]
    Pi = [ext.pi(j) for j in range(1, n + 1)]
    Psp = [ext.gen(x) for x in ps]
    Pip = [ext.gen(x) for x in pp]
    pi_f = [a + b for a, b in zip(Pi, Pip)]
    psi0 = [a - b for a, b in zip(Psi, Psp)]
    Kval = K(pi_f, psi0, t, log_shift)
    if not isinstance(Kval, GrassmannElement) or Kval.sig != ext:
        raise SignatureMismatch("propagator must return an element of the transform signature")
    kernel = exp_nilpotent(sum((a * b for a, b in zip(Pip, Psp)), ext.zero()) * (-2j / hbar))
    measure = list(reversed(ps)) + list(reversed(pp))
    integ = berezin_integrate(kernel * Kval, measure)
    pref = exp_nilpotent(sum((a * b for a, b in zip(Pi, Psi)), ext.zero()) * (1j / hbar))
    C = normalization_constant(n, hbar) if C is None else C
    return restrict(pref * integ, sig) * C


def _shifted(z: complex, shift: float) -> complex:
    return complex(np.exp(z - shift))


def closed_form_fermi(omega: float, hbar: float, t: complex, sig: AlgebraSignature | None = None,
                      log_shift: float = 0.0) -> GrassmannElement:
    """Fermi-oscillator star-exponential in the printed closed form.

    ``-(hbar^2/5)[e^{i Pi Psi/hbar}(e^{-i w t/2} + (2i/hbar) e^{i w t/2})
    + (2i/hbar) Pi Psi e^{-i w t/2}]`` with ``Psi = psi1``, ``Pi = pi1``.
    """
    sig = sig or AlgebraSignature(1, (), hbar)
    P, S = sig.pi(1), sig.psi(1)
    A = _shifted(-0.5j * omega * t, log_shift)
    B = _shifted(0.5j * omega * t, log_shift)
    ex = exp_nilpotent((P * S) * (1j / hbar))
    return (ex * (A + 2j / hbar * B) + (P * S) * (2j / hbar * A)) * (-hbar ** 2 / 5)


def closed_form_driven(omega: float, hbar: float, t: complex, sig: AlgebraSignature,
                       alpha: GrassmannElement, alpha_star: GrassmannElement,
                       abs2, log_shift: float = 0.0, limit: bool = True) -> GrassmannElement:
    """Driven-oscillator star-exponential in the printed closed form.

    ``-(hbar^2/5){e^{i Pi Psi/hbar}[e^{-i w t} + (2i/hbar)(1 - f)]
    + (2i/hbar)[Pi Psi e^{-i w t} + (Pi alpha* + Psi alpha)(1 - e^{-i w t})/w]}``.
    ``abs2`` is ``|alpha|^2`` (a number or ``alpha* alpha``).  With ``limit``
    the removable ``omega -> 0`` singularities are evaluated by series.
    """
    if omega == 0 and not limit:
        raise ZeroDivisionError("closed_form_driven: omega = 0 needs limit handling")
    P, S = sig.pi(1), sig.psi(1)
    one = _shifted(0, log_shift)
    E = _shifted(-1j * omega * t, log_shift)
    if limit:
        d = decay_factor(omega, t, log_shift)
        f = source_phase(abs2, omega, t, log_shift)
    else:
        d = (np.exp(-log_shift) - _shifted(-1j * omega * t, log_shift)) / omega
        f = abs2 * ((-1j * omega * t - 1) * np.exp(-log_shift) + _shifted(-1j * omega * t, log_shift)) / (2 * omega)
    if not isinstance(f, GrassmannElement):
        f = sig.scalar(f)
    ex = exp_nilpotent((P * S) * (1j / hbar))
    inner = sig.one() * E + (sig.one() * one - f) * (2j / hbar)
    lin = (P * S) * E + (P * alpha_star + S * alpha) * d
    return (ex * inner + lin * (2j / hbar)) * (-hbar ** 2 / 5)


def driven_couplings(sig: AlgebraSignature, g: Optional[complex]):
    """``(alpha, alpha*, |alpha|^2)`` for numeric ``g`` or the strict generators."""
    if g is None:
        a, ac = sig.gen(ALPHA), sig.gen(ALPHA_STAR)
        return a, ac, ac * a
    return sig.scalar(g), sig.scalar(np.conj(g)), abs(g) ** 2


# ---------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class DiscrepancyReport:
    label_a: str
    label_b: str
    residuals: dict
    max_residual: float
    tol: float
    verdict: str
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "a": self.label_a,
            "b": self.label_b,
            "verdict": self.verdict,
            "max_residual": _num(self.max_residual),
            "tol": self.tol,
            "residuals": {k: _num(v) for k, v in sorted(self.residuals.items())},
            **({"details": self.details} if self.details else {}),
        }


def _num(x: float) -> float:
    return float(f"{x:.12e}")


def compare(a: GrassmannElement, b: GrassmannElement, tol: float = 1e-9,
            label_a: str = "a", label_b: str = "b", details: dict | None = None) -> DiscrepancyReport:
    if a.sig != b.sig:
        raise SignatureMismatch(f"{a.sig} vs {b.sig}")
    ta, tb = a.terms(), b.terms()
    keys = sorted(set(ta) | set(tb))
    res = {}
    for k in keys:
        name = " ".join(k) if k else "1"
        res[name] = abs(ta.get(k, 0) - tb.get(k, 0))
    mx = max(res.values(), default=0.0)
    verdict = "CONFIRMED" if mx <= tol else "DISCREPANT"
    return DiscrepancyReport(label_a, label_b, res, mx, tol, verdict, details or {})


def fermi_symbol(omega: float, hbar: float, sig: AlgebraSignature | None = None) -> GrassmannElement:
    """``i omega pi psi``, the Weyl symbol of ``omega (i pi_hat psi_hat + hbar/2)``."""
    sig = sig or AlgebraSignature(1, (), hbar)
    return (sig.pi(1) * sig.psi(1)) * (1j * omega)


__all__ = [
    "starexp_oracle", "starexp_series", "SeriesResult", "normalization_constant",
    "starexp_from_propagator", "closed_form_fermi", "closed_form_driven", "driven_couplings",
    "DiscrepancyReport", "compare", "fermi_symbol", "transform_signature",
]

