"""Stratonovich-Weyl quantizer, Weyl quantization and its inverse.

The phase-space point ``(pi, psi)`` of the quantizer is carried by the
``psi_j``/``pi_j`` generators of the signature, so ``Omega`` is an
:class:`OperatorMatrix` whose entries are polynomials in those generators.

Phase-space integrals use the measure ``dpsi_1 dpi_1 ... dpsi_n dpi_n``
(see :func:`phase_space_measure`).  With it ``Q_W(1) = I``, ``Q_W`` sends
``psi_j, pi_j`` to ``psi_hat_j, pi_hat_j`` and the pair trace of two
quantizers is the reproducing kernel :func:`grassmann_delta`.

For the matrix-basis convention (``psi_hat = b``, ``pi_hat = b^+``) the map is
obtained from the canonical one at ``hbar = 1`` through ``pi -> -i pi``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fockrep import (
    Convention,
    OperatorMatrix,
    aux_signature,
    coherent_bra,
    coherent_ket,
    integrate_operator,
    momentum_bra,
    momentum_ket,
    trace_grassmann,
)
from .grassmann import (
    AlgebraSignature,
    GrassmannElement,
    SignatureMismatch,
    _merge_parity,
    berezin_integrate,
    exp_nilpotent,
    substitute,
)


def phase_space_measure(sig: AlgebraSignature) -> list[str]:
    """Generator names in integration order ``dpsi_1 dpi_1 ... dpsi_n dpi_n``."""
    out = []
    for j in range(1, sig.n + 1):
        out += [sig.names[sig.psi_index(j)], sig.names[sig.pi_index(j)]]
    return out


def phase_space_integral(f: GrassmannElement) -> GrassmannElement:
    return berezin_integrate(f, phase_space_measure(f.sig))


def grassmann_delta(primed: tuple, doubled: tuple) -> GrassmannElement:
    """``prod_j (pi'_j - pi''_j)(psi'_j - psi''_j)`` for lists ``(psi, pi)``."""
    (s1, p1), (s2, p2) = primed, doubled
    out = s1[0].sig.one()
    for a, b, c, d in zip(s1, p1, s2, p2):
        out = out * (b - d) * (a - c)
    return out


@dataclass(frozen=True)
class Quantizer:
    """The operator ``Omega(pi, psi)`` for one signature (no parameters)."""

    sig: AlgebraSignature
    omega: OperatorMatrix
    basis: str = "psi"


def _phase_sig(sig: AlgebraSignature) -> AlgebraSignature:
    return AlgebraSignature(sig.n, (), sig.hbar, sig.tol)


@lru_cache(maxsize=None)
def _build(n: int, hbar: float, tol: float, basis: str) -> Quantizer:
    sig = AlgebraSignature(n, (), hbar, tol)
    ext, lam = aux_signature(sig, "l", n)
    L = [ext.gen(x) for x in lam]
    P = [ext.pi(j) for j in range(1, n + 1)]
    S = [ext.psi(j) for j in range(1, n + 1)]
    if basis == "psi":
        ket = coherent_ket([S[j] - L[j] * (hbar / 2) for j in range(n)])
        bra = coherent_bra([S[j] + L[j] * (hbar / 2) for j in range(n)])
        phase = sum((P[j] * L[j] for j in range(n)), ext.zero())
        pref = 1j ** n
    elif basis == "pi":
        ket = momentum_ket([P[j] - L[j] * (hbar / 2) for j in range(n)])
        bra = momentum_bra([P[j] + L[j] * (hbar / 2) for j in range(n)])
        phase = sum((S[j] * L[j] for j in range(n)), ext.zero())
        pref = (-1j) ** n
    else:
        raise ValueError(f"unknown basis {basis!r}")
    op = (ket @ bra).lmul(exp_nilpotent(phase * -1j))
    omega = integrate_operator(op, list(reversed(lam)), graded=True).scale(pref)
    return Quantizer(sig, omega.restrict(sig), basis)


def build_quantizer(sig: AlgebraSignature, basis: str = "psi") -> Quantizer:
    """``Omega = i^n ∫ exp{-i sum pi_j lambda_j} |psi - hbar lambda/2><psi + hbar lambda/2| Dlambda``.

    ``basis="pi"`` builds the momentum-state version with prefactor ``(-i)^n``;
    both give the same operator.  Results are cached per signature.
    """
    return _build(sig.n, float(sig.hbar), float(sig.tol), basis)


@lru_cache(maxsize=None)
def _basis_images(n: int, hbar: float, tol: float):
    """``Q_W`` of every phase-space monomial, indexed by the monomial mask."""
    q = _build(n, hbar, tol, "psi")
    sig = q.sig
    meas = phase_space_measure(sig)
    d = 1 << n
    out = np.zeros((1 << (2 * n), d, d), dtype=complex)
    for m in range(1 << (2 * n)):
        mono = GrassmannElement(sig, [m], [1.0])
        img = integrate_operator(q.omega.lmul(mono), meas, graded=True)
        out[m] = img.body()
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _unit_symbols(n: int, hbar: float, tol: float):
    """``tr{E_kl Omega}`` as coefficient arrays over the phase-space monomials."""
    q = _build(n, hbar, tol, "psi")
    sig = q.sig
    d = 1 << n
    out = np.zeros((d, d, 1 << (2 * n)), dtype=complex)
    for k in range(d):
        for l in range(d):
            e = np.zeros((d, d))
            e[k, l] = 1
            t = trace_grassmann(OperatorMatrix.from_complex(sig, e) @ q.omega)
            out[k, l, t.masks] = t.coeffs
    out.setflags(write=False)
    return out


def _canonical_sig(sig: AlgebraSignature, convention: Convention) -> AlgebraSignature:
    return sig if convention is Convention.CANONICAL else sig.with_hbar(1.0)


def _scale_pi(f: GrassmannElement, factor: complex, target: AlgebraSignature) -> GrassmannElement:
    mp = {f.sig.names[f.sig.pi_index(j)]: target.pi(j) * factor for j in range(1, f.sig.n + 1)}
    for name in f.sig.names:
        if name not in mp:
            mp[name] = target.gen(name)
    return substitute(f, mp, target)


def weyl_quantize(f: GrassmannElement, convention: Convention = Convention.CANONICAL) -> OperatorMatrix:
    """``Q_W(f) = ∫ f Omega dpsi_1 dpi_1 ...``.

    Parameter generators of ``f`` stay as Grassmann coefficients of the result.
    """
    sig = f.sig
    if convention is Convention.MATRIX_BASIS:
        csig = sig.with_hbar(1.0)
        g = _scale_pi(f, -1j, csig)
        return weyl_quantize(g, Convention.CANONICAL).map_entries(
            lambda e: GrassmannElement(sig, e.masks, e.coeffs, canonical=True))
    n = sig.n
    imgs = _basis_images(n, float(sig.hbar), float(sig.tol))
    ps_bits = (1 << (2 * n)) - 1
    ms = f.masks & ps_bits
    mp = f.masks & ~ps_bits
    # m = m_s m_p in canonical order; Q(m_s m_p) = (-1)^{|s||p|} m_p Q(m_s)
    sgn = 1 - 2 * ((_popcount_arr(ms) * _popcount_arr(mp)) & 1)
    uniq, inv = np.unique(mp, return_inverse=True)
    mats = np.zeros((uniq.size,) + imgs.shape[1:], dtype=complex)
    np.add.at(mats, inv, (f.coeffs * sgn)[:, None, None] * imgs[ms])
    return OperatorMatrix(sig, uniq, mats, _par(n), _par(n))


def _popcount_arr(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)


def _par(n: int) -> np.ndarray:
    return _popcount_arr(np.arange(1 << n)) & 1


def weyl_dequantize(F: OperatorMatrix, convention: Convention = Convention.CANONICAL) -> GrassmannElement:
    """``Q_W^{-1}(F) = tr{F Omega}`` with the trace extended left-linearly."""
    sig = F.sig
    if F.shape[0] != F.shape[1] or F.shape[0] != (1 << sig.n):
        raise ValueError("weyl_dequantize expects a full Fock-space operator")
    if convention is Convention.MATRIX_BASIS:
        csig = sig.with_hbar(1.0)
        Fc = OperatorMatrix(csig, F.masks, F.mats, F.row_par, F.col_par, canonical=True)
        g = weyl_dequantize(Fc, Convention.CANONICAL)
        return _scale_pi(g, 1j, sig)
    n = sig.n
    units = _unit_symbols(n, float(sig.hbar), float(sig.tol))
    ps_bits = (1 << (2 * n)) - 1
    if F.masks.size and np.any(F.masks & ps_bits):
        raise ValueError("operator coefficients must not involve the phase-space generators")
    # symbol coefficients for each parameter monomial m_p: m_p * s(pi, psi)
    coeff = np.einsum("pkl,klm->pm", F.mats, units) if F.masks.size else np.zeros((0, ps_bits + 1))
    pm, sm = np.nonzero(np.abs(coeff) > 0)
    mp, ms = F.masks[pm], sm.astype(np.int64)
    sgn = 1 - 2 * ((_popcount_arr(ms) * _popcount_arr(mp)) & 1)
    return GrassmannElement(sig, mp | ms, coeff[pm, sm] * sgn)


def wigner_function(rho: OperatorMatrix, convention: Convention = Convention.CANONICAL) -> GrassmannElement:
    """Weyl symbol of a density operator."""
    return weyl_dequantize(rho, convention)


def expectation(rho_w: GrassmannElement, observable: GrassmannElement) -> GrassmannElement:
    """``∫ rho_W O`` over phase space."""
    if rho_w.sig != observable.sig:
        raise SignatureMismatch("symbols live in different algebras")
    return phase_space_integral(rho_w * observable)
