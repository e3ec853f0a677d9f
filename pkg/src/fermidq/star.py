"""Fermionic Moyal star product.

``f * g = f exp{(kappa/2) P} g`` with
``P = sum_j (<-d/dpi_j ->d/dpsi_j + <-d/dpsi_j ->d/dpi_j)``, right derivatives
acting on ``f`` and left derivatives on ``g``.  ``kappa`` is the
anticommutator ``{psi_hat, pi_hat}``: ``i hbar`` canonically, ``1`` in the
matrix basis.
"""
from __future__ import annotations

from functools import lru_cache

from .fockrep import Convention
from .grassmann import (
    AlgebraSignature,
    GrassmannElement,
    SignatureMismatch,
    derivative,
    exp_nilpotent,
    integrate_product,
    restrict,
    substitute,
)


def kappa_of(sig: AlgebraSignature, convention: Convention = Convention.CANONICAL) -> complex:
    return convention.kappa(sig.hbar)


def star_differential(f: GrassmannElement, g: GrassmannElement,
                      convention: Convention = Convention.CANONICAL) -> GrassmannElement:
    if f.sig != g.sig:
        raise SignatureMismatch(f"{f.sig} vs {g.sig}")
    sig = f.sig
    c = kappa_of(sig, convention) / 2
    pairs = [(f, g)]
    for j in range(1, sig.n + 1):
        for a, b in ((sig.pi_index(j), sig.psi_index(j)), (sig.psi_index(j), sig.pi_index(j))):
            new = []
            for F, G in pairs:
                dF = derivative(F, a, "right")
                if not dF:
                    continue
                dG = derivative(G, b, "left")
                if dG:
                    new.append((dF * c, dG))
            pairs.extend(new)
    out = sig.zero()
    for F, G in pairs:
        out = out + F * G
    return out


star = star_differential


@lru_cache(maxsize=None)
def _integral_setup(sig: AlgebraSignature):
    n = sig.n
    p1 = [f"~p'{j}" for j in range(1, n + 1)]
    s1 = [f"~s'{j}" for j in range(1, n + 1)]
    p2 = [f"~p''{j}" for j in range(1, n + 1)]
    s2 = [f"~s''{j}" for j in range(1, n + 1)]
    ext = sig.extend(*(s1 + p1 + s2 + p2))
    G = ext.gen
    expo = ext.zero()
    for j in range(n):
        P, S = ext.pi(j + 1), ext.psi(j + 1)
        expo = expo + G(p1[j]) * (G(s2[j]) - S) + G(p2[j]) * (S - G(s1[j])) + P * (G(s1[j]) - G(s2[j]))
    kernel = exp_nilpotent(expo * (-2j / sig.hbar)) * ((1j * sig.hbar / 2) ** (2 * n))
    measure = []
    for j in range(n):
        measure += [s1[j], p1[j]]
    for j in range(n):
        measure += [s2[j], p2[j]]
    first = {sig.names[sig.psi_index(j + 1)]: G(s1[j]) for j in range(n)}
    first.update({sig.names[sig.pi_index(j + 1)]: G(p1[j]) for j in range(n)})
    second = {sig.names[sig.psi_index(j + 1)]: G(s2[j]) for j in range(n)}
    second.update({sig.names[sig.pi_index(j + 1)]: G(p2[j]) for j in range(n)})
    for name in sig.params:
        first[name] = G(name)
        second[name] = G(name)
    return ext, kernel, measure, first, second


def star_integral(f: GrassmannElement, g: GrassmannElement) -> GrassmannElement:
    """Integral form of the star product (canonical convention).

    Integrates ``f(z') g(z'')`` against the three-quantizer trace kernel, with
    each copy of phase space measured as ``dpsi_j dpi_j``.
    """
    if f.sig != g.sig:
        raise SignatureMismatch(f"{f.sig} vs {g.sig}")
    sig = f.sig
    ext, kernel, measure, first, second = _integral_setup(sig)
    fg = substitute(f, first, ext) * substitute(g, second, ext)
    return restrict(integrate_product(fg, kernel, measure), sig)


def star_power(f: GrassmannElement, k: int, convention: Convention = Convention.CANONICAL) -> GrassmannElement:
    if k < 0:
        raise ValueError("star_power needs k >= 0")
    out = f.sig.one()
    base = f
    while k:
        if k & 1:
            out = star_differential(out, base, convention)
        k >>= 1
        if k:
            base = star_differential(base, base, convention)
    return out


def star_commutator(f: GrassmannElement, g: GrassmannElement,
                    convention: Convention = Convention.CANONICAL) -> GrassmannElement:
    """Graded commutator ``f*g - (-1)^{|f||g|} g*f`` (``f``, ``g`` homogeneous)."""
    sign = -1 if (f.parity().value == 1 and g.parity().value == 1) else 1
    return star_differential(f, g, convention) - star_differential(g, f, convention) * sign


def star_anticommutator(f: GrassmannElement, g: GrassmannElement,
                        convention: Convention = Convention.CANONICAL) -> GrassmannElement:
    return star_differential(f, g, convention) + star_differential(g, f, convention)


def moyal_bracket(f: GrassmannElement, g: GrassmannElement,
                  convention: Convention = Convention.CANONICAL) -> GrassmannElement:
    return star_commutator(f, g, convention) / kappa_of(f.sig, convention)


__all__ = [
    "kappa_of", "star", "star_differential", "star_integral", "star_power",
    "star_commutator", "star_anticommutator", "moyal_bracket",
]
