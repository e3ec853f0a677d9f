"""Grassmann-valued matrices on the fermionic Fock space.

An :class:`OperatorMatrix` is stored as ``sum_m  m * A_m``: monomials ``m`` on
the left of complex matrices ``A_m``.  Rows and columns carry a Z2 grading
(the Fock occupation parity), and a Grassmann coefficient moving past a
matrix unit ``|k><l|`` picks up ``(-1)^{|m| (p_k + p_l)}``.  With this rule
Grassmann numbers anticommute with odd operators such as ``psi_hat``, which
is what the coherent-state formulas rely on.

Kets are ``d x 1`` matrices (column parity 0) and bras ``1 x d`` matrices
(row parity 0), so one graded product covers operators, states and scalars.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .grassmann import (
    AlgebraSignature,
    GrassmannElement,
    Parity,
    SignatureMismatch,
    _merge_parity,
    _popcount,
    berezin_integrate,
    embed,
    restrict,
)


class Convention(enum.Enum):
    """How the phase-space operators are represented.

    ``CANONICAL``: ``psi_hat = sqrt(hbar) b``, ``pi_hat = i sqrt(hbar) b^+`` so
    ``{psi_hat, pi_hat} = i hbar``.
    ``MATRIX_BASIS``: ``psi_hat = b``, ``pi_hat = b^+`` (``{psi_hat, pi_hat} = 1``),
    the occupation-number matrices used for the driven oscillator.
    """

    CANONICAL = "canonical"
    MATRIX_BASIS = "matrix_basis"

    def kappa(self, hbar: float) -> complex:
        """The anticommutator ``{psi_hat_j, pi_hat_j}``."""
        return 1j * hbar if self is Convention.CANONICAL else 1.0 + 0j


def fock_parities(n: int) -> np.ndarray:
    return (_popcount(np.arange(1 << n, dtype=np.int64)) & 1).astype(np.int64)


@lru_cache(maxsize=None)
def _ladder(n: int) -> tuple[np.ndarray, ...]:
    """Annihilators ``b_1..b_n`` (Jordan-Wigner, mode j <-> bit j-1)."""
    d = 1 << n
    out = []
    for j in range(n):
        b = np.zeros((d, d))
        for k in range(d):
            if (k >> j) & 1:
                sign = -1.0 if bin(k & ((1 << j) - 1)).count("1") % 2 else 1.0
                b[k ^ (1 << j), k] = sign
        b.setflags(write=False)
        out.append(b)
    return tuple(out)


class OperatorMatrix:
    """Immutable graded matrix with Grassmann-algebra entries."""

    __slots__ = ("sig", "masks", "mats", "row_par", "col_par")

    def __init__(self, sig: AlgebraSignature, masks, mats, row_par, col_par, *, canonical: bool = False):
        masks = np.asarray(masks, dtype=np.int64).reshape(-1)
        row_par = np.asarray(row_par, dtype=np.int64)
        col_par = np.asarray(col_par, dtype=np.int64)
        mats = np.asarray(mats, dtype=complex).reshape(masks.size, row_par.size, col_par.size)
        if not canonical and masks.size:
            uniq, inv = np.unique(masks, return_inverse=True)
            acc = np.zeros((uniq.size,) + mats.shape[1:], dtype=complex)
            np.add.at(acc, inv, mats)
            keep = np.max(np.abs(acc), axis=(1, 2), initial=0.0) >= sig.tol
            masks, mats = uniq[keep], acc[keep]
            mats = np.where(np.abs(mats) >= sig.tol, mats, 0)
        for a in (masks, mats, row_par, col_par):
            a.setflags(write=False)
        object.__setattr__(self, "sig", sig)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "mats", mats)
        object.__setattr__(self, "row_par", row_par)
        object.__setattr__(self, "col_par", col_par)

    def __setattr__(self, key, value):
        raise AttributeError("OperatorMatrix is immutable")

    # --- construction -----------------------------------------------------
    @classmethod
    def from_complex(cls, sig: AlgebraSignature, matrix, row_par=None, col_par=None) -> "OperatorMatrix":
        matrix = np.asarray(matrix, dtype=complex)
        par = fock_parities(sig.n)
        row_par = par if row_par is None else row_par
        col_par = par if col_par is None else col_par
        return cls(sig, [0], matrix[None], row_par, col_par)

    @classmethod
    def identity(cls, sig: AlgebraSignature) -> "OperatorMatrix":
        return cls.from_complex(sig, np.eye(1 << sig.n))

    @classmethod
    def zeros_like(cls, other: "OperatorMatrix") -> "OperatorMatrix":
        return cls(other.sig, [], np.zeros((0,) + other.shape), other.row_par, other.col_par)

    @classmethod
    def from_entries(cls, sig: AlgebraSignature, entries: Sequence[Sequence[GrassmannElement]],
                     row_par=None, col_par=None) -> "OperatorMatrix":
        rows, cols = len(entries), len(entries[0])
        par = fock_parities(sig.n)
        row_par = par if row_par is None else row_par
        col_par = par if col_par is None else col_par
        masks, mats = [], []
        for k in range(rows):
            for l in range(cols):
                e = entries[k][l]
                if isinstance(e, GrassmannElement):
                    ms, cs = e.masks, e.coeffs
                else:
                    ms, cs = np.array([0]), np.array([complex(e)])
                for m, c in zip(ms.tolist(), cs.tolist()):
                    a = np.zeros((rows, cols), dtype=complex)
                    a[k, l] = c
                    masks.append(m)
                    mats.append(a)
        if not masks:
            return cls(sig, [], np.zeros((0, rows, cols)), row_par, col_par)
        return cls(sig, masks, np.array(mats), row_par, col_par)

    # --- views ------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.row_par.size, self.col_par.size)

    def entry(self, k: int, l: int) -> GrassmannElement:
        return GrassmannElement(self.sig, self.masks, self.mats[:, k, l])

    def entries(self) -> list[list[GrassmannElement]]:
        r, c = self.shape
        return [[self.entry(k, l) for l in range(c)] for k in range(r)]

    def body(self) -> np.ndarray:
        hit = np.nonzero(self.masks == 0)[0]
        return np.array(self.mats[hit[0]]) if hit.size else np.zeros(self.shape, dtype=complex)

    def soul(self) -> "OperatorMatrix":
        keep = self.masks != 0
        return self._like(self.masks[keep], self.mats[keep], canonical=True)

    def components(self) -> list[tuple[int, np.ndarray]]:
        return list(zip(self.masks.tolist(), self.mats))

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.mats))) if self.masks.size else 0.0

    def allclose(self, other: "OperatorMatrix", atol: float = 1e-12) -> bool:
        return (self - other).norm_inf() <= atol

    def parity(self) -> Parity:
        """Total parity (coefficient degree + row + column grading)."""
        if not self.masks.size:
            return Parity.EVEN
        found = set()
        unit_par = (self.row_par[:, None] + self.col_par[None, :]) & 1
        for m, a in zip(self.masks.tolist(), self.mats):
            nz = np.abs(a) > 0
            for p in np.unique(unit_par[nz]).tolist():
                found.add((bin(m).count("1") + p) & 1)
        if found == {0} or not found:
            return Parity.EVEN
        if found == {1}:
            return Parity.ODD
        return Parity.MIXED

    def __repr__(self) -> str:
        return f"{type(self).__name__}(shape={self.shape}, terms={self.masks.size})"

    # --- algebra ----------------------------------------------------------
    def _like(self, masks, mats, canonical=False) -> "OperatorMatrix":
        return _wrap(self.sig, masks, mats, self.row_par, self.col_par, canonical)

    def _check(self, other: "OperatorMatrix"):
        if other.sig != self.sig:
            raise SignatureMismatch(f"{self.sig} vs {other.sig}")
        if not (np.array_equal(self.row_par, other.row_par) and np.array_equal(self.col_par, other.col_par)):
            raise ValueError("grading/shape mismatch")

    def __add__(self, other):
        if isinstance(other, (int, float, complex, np.number, GrassmannElement)):
            other = OperatorMatrix.identity(self.sig).lmul(other)
        self._check(other)
        return self._like(np.concatenate([self.masks, other.masks]), np.concatenate([self.mats, other.mats]))

    __radd__ = __add__

    def __neg__(self):
        return self._like(self.masks, -self.mats, canonical=True)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "OperatorMatrix":
        return self._like(self.masks, self.mats * complex(c), canonical=True)

    def lmul(self, c: Union[GrassmannElement, complex]) -> "OperatorMatrix":
        """``c * self`` with the scalar written on the left."""
        if not isinstance(c, GrassmannElement):
            return self.scale(c)
        if c.sig != self.sig:
            raise SignatureMismatch(f"{c.sig} vs {self.sig}")
        ic, ia = np.nonzero((c.masks[:, None] & self.masks[None, :]) == 0)
        mc, ma = c.masks[ic], self.masks[ia]
        sign = 1 - 2 * _merge_parity(mc, ma, self.sig.size)
        mats = self.mats[ia] * (c.coeffs[ic] * sign)[:, None, None]
        return self._like(mc | ma, mats)

    def rmul(self, c: Union[GrassmannElement, complex]) -> "OperatorMatrix":
        """``self * c`` with the scalar written on the right (graded)."""
        if not isinstance(c, GrassmannElement):
            return self.scale(c)
        if c.sig != self.sig:
            raise SignatureMismatch(f"{c.sig} vs {self.sig}")
        ia, ic = np.nonzero((self.masks[:, None] & c.masks[None, :]) == 0)
        ma, mc = self.masks[ia], c.masks[ic]
        sign = 1 - 2 * _merge_parity(ma, mc, self.sig.size)
        twist = (1 - 2 * self.row_par)[:, None] * (1 - 2 * self.col_par)[None, :]
        odd_c = (_popcount(mc) & 1).astype(bool)
        mats = np.where(odd_c[:, None, None], self.mats[ia] * twist, self.mats[ia])
        return self._like(ma | mc, mats * (c.coeffs[ic] * sign)[:, None, None])

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        if isinstance(other, GrassmannElement):
            return self.rmul(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        if isinstance(other, GrassmannElement):
            return self.lmul(other)
        return NotImplemented

    def __matmul__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        return _matmul(self, other)

    def twisted(self, parity: int) -> "OperatorMatrix":
        """Conjugation by the grading operator when ``parity`` is odd."""
        if not parity & 1:
            return self
        sgn = (1 - 2 * self.row_par)[:, None] * (1 - 2 * self.col_par)[None, :]
        return self._like(self.masks, self.mats * sgn, canonical=True)

    def map_entries(self, fn) -> "OperatorMatrix":
        r, c = self.shape
        ents = [[fn(self.entry(k, l)) for l in range(c)] for k in range(r)]
        sig = ents[0][0].sig if isinstance(ents[0][0], GrassmannElement) else self.sig
        return _wrap_entries(sig, ents, self.row_par, self.col_par)

    def embed(self, target: AlgebraSignature) -> "OperatorMatrix":
        if target == self.sig:
            return self
        return self.map_entries(lambda e: embed(e, target))

    def restrict(self, target: AlgebraSignature) -> "OperatorMatrix":
        if target == self.sig:
            return self
        return self.map_entries(lambda e: restrict(e, target))


class StateVector(OperatorMatrix):
    """Ket (``d x 1``) or bra (``1 x d``) with Grassmann components."""

    __slots__ = ()

    @property
    def flavor(self) -> str:
        return "ket" if self.shape[1] == 1 else "bra"

    def component(self, k: int) -> GrassmannElement:
        return self.entry(k, 0) if self.flavor == "ket" else self.entry(0, k)


def _wrap(sig, masks, mats, row_par, col_par, canonical=False):
    r, c = row_par.size, col_par.size
    cls = OperatorMatrix
    if (r == 1) != (c == 1):
        cls = StateVector
    return cls(sig, masks, mats, row_par, col_par, canonical=canonical)


def _wrap_entries(sig, ents, row_par, col_par):
    out = OperatorMatrix.from_entries(sig, ents, row_par, col_par)
    return _wrap(sig, out.masks, out.mats, out.row_par, out.col_par, canonical=True)


def _matmul(a: OperatorMatrix, b: OperatorMatrix):
    if a.sig != b.sig:
        raise SignatureMismatch(f"{a.sig} vs {b.sig}")
    if not np.array_equal(a.col_par, b.row_par):
        raise ValueError(f"cannot multiply shapes {a.shape} and {b.shape}")
    sig = a.sig
    if not a.masks.size or not b.masks.size:
        out = _wrap(sig, [], np.zeros((0, a.shape[0], b.shape[1])), a.row_par, b.col_par, True)
        return _scalar_or(out)
    ia, ib = np.nonzero((a.masks[:, None] & b.masks[None, :]) == 0)
    pa, pb = a.masks[ia], b.masks[ib]
    sign = 1 - 2 * _merge_parity(pa, pb, sig.size)
    twist = (1 - 2 * a.row_par)[:, None] * (1 - 2 * a.col_par)[None, :]
    odd_b = (_popcount(pb) & 1).astype(bool)
    left = a.mats[ia]
    left = np.where(odd_b[:, None, None], left * twist, left)
    prod = np.einsum("pij,pjk->pik", left, b.mats[ib]) * sign[:, None, None]
    out = _wrap(sig, pa | pb, prod, a.row_par, b.col_par)
    return _scalar_or(out)


def _scalar_or(m: OperatorMatrix):
    if m.shape == (1, 1):
        return GrassmannElement(m.sig, m.masks, m.mats[:, 0, 0])
    return m


def as_operator(x: Union[GrassmannElement, OperatorMatrix]) -> OperatorMatrix:
    if isinstance(x, OperatorMatrix):
        return x
    return OperatorMatrix(x.sig, x.masks, x.coeffs[:, None, None], [0], [0])


# ---------------------------------------------------------------------------
# generators and states


def build_generators(sig: AlgebraSignature, convention: Convention = Convention.CANONICAL):
    """``(psi_hats, pi_hats)`` as lists of complex :class:`OperatorMatrix`."""
    bs = _ladder(sig.n)
    if convention is Convention.CANONICAL:
        r = np.sqrt(sig.hbar)
        psis = [OperatorMatrix.from_complex(sig, r * b) for b in bs]
        pis = [OperatorMatrix.from_complex(sig, 1j * r * b.T) for b in bs]
    else:
        psis = [OperatorMatrix.from_complex(sig, b) for b in bs]
        pis = [OperatorMatrix.from_complex(sig, b.T) for b in bs]
    return psis, pis


def vacuum_ket(sig: AlgebraSignature) -> StateVector:
    d = 1 << sig.n
    v = np.zeros((d, 1), dtype=complex)
    v[0, 0] = 1
    return StateVector(sig, [0], v[None], fock_parities(sig.n), [0])


def vacuum_bra(sig: AlgebraSignature) -> StateVector:
    d = 1 << sig.n
    v = np.zeros((1, d), dtype=complex)
    v[0, 0] = 1
    return StateVector(sig, [0], v[None], [0], fock_parities(sig.n))


def exp_operator(A: OperatorMatrix) -> OperatorMatrix:
    """Exponential of a nilpotent operator by its terminating series."""
    out = OperatorMatrix.identity(A.sig)
    term = out
    k = 1
    while True:
        term = (term @ A).scale(1.0 / k)
        if term.norm_inf() == 0:
            return out
        out = out + term
        k += 1
        if k > 4 * A.sig.size + 8:
            raise ArithmeticError("operator exponential series did not terminate")


def _check_odd(values: Sequence[GrassmannElement]):
    for v in values:
        if v and v.parity() is not Parity.ODD:
            raise ValueError("coherent-state labels must be Grassmann-odd")


def coherent_ket(values: Sequence[GrassmannElement], convention: Convention = Convention.CANONICAL) -> StateVector:
    """``|psi> = exp{(1/kappa) sum_j pi_hat_j psi_j} |0>``.

    For the canonical convention ``1/kappa = -i/hbar``.
    """
    _check_odd(values)
    sig = values[0].sig
    psis, pis = build_generators(sig, convention)
    kappa = convention.kappa(sig.hbar)
    A = OperatorMatrix.zeros_like(pis[0])
    for p, v in zip(pis, values):
        A = A + p.rmul(v)
    return exp_operator(A.scale(1 / kappa)) @ vacuum_ket(sig)


def coherent_bra(values: Sequence[GrassmannElement], convention: Convention = Convention.CANONICAL) -> StateVector:
    """``<psi| = <0| psi_hat_1 ... psi_hat_n exp{-(1/kappa) sum_j pi_hat_j psi_j}``."""
    _check_odd(values)
    sig = values[0].sig
    psis, pis = build_generators(sig, convention)
    kappa = convention.kappa(sig.hbar)
    bra = vacuum_bra(sig)
    for p in psis:
        bra = bra @ p
    A = OperatorMatrix.zeros_like(pis[0])
    for p, v in zip(pis, values):
        A = A + p.rmul(v)
    return bra @ exp_operator(A.scale(-1 / kappa))


def momentum_ket(values: Sequence[GrassmannElement], convention: Convention = Convention.CANONICAL) -> StateVector:
    """``|pi> = exp{(1/kappa) sum_j psi_hat_j pi_j} pi_hat_1 ... pi_hat_n |0>``."""
    _check_odd(values)
    sig = values[0].sig
    psis, pis = build_generators(sig, convention)
    kappa = convention.kappa(sig.hbar)
    A = OperatorMatrix.zeros_like(psis[0])
    for p, v in zip(psis, values):
        A = A + p.rmul(v)
    ket = vacuum_ket(sig)
    for p in reversed(pis):
        ket = p @ ket
    return exp_operator(A.scale(1 / kappa)) @ ket


def momentum_bra(values: Sequence[GrassmannElement], convention: Convention = Convention.CANONICAL) -> StateVector:
    """``<pi| = <0| exp{(1/kappa) sum_j pi_j psi_hat_j}``."""
    _check_odd(values)
    sig = values[0].sig
    psis, _ = build_generators(sig, convention)
    kappa = convention.kappa(sig.hbar)
    A = OperatorMatrix.zeros_like(psis[0])
    for p, v in zip(psis, values):
        A = A + p.lmul(v)
    return vacuum_bra(sig) @ exp_operator(A.scale(1 / kappa))


# ---------------------------------------------------------------------------
# integration and traces


def integrate_operator(M: OperatorMatrix, gens: Sequence[str], graded: bool = True) -> OperatorMatrix:
    """``∫ M dg1 ... dgk`` with the measure written to the right of ``M``.

    With ``graded`` the differentials are odd and anticommute with odd matrix
    units on their way to the coefficients.
    """
    k = len(gens)
    out = M.map_entries(lambda e: berezin_integrate(e, gens))
    if graded and k % 2:
        out = out.twisted(1)
    return out


def aux_signature(sig: AlgebraSignature, prefix: str, count: int) -> tuple[AlgebraSignature, list[str]]:
    names = [f"~{prefix}{j}" for j in range(1, count + 1)]
    return sig.extend(*names), names


def trace_coherent(M: OperatorMatrix, convention: Convention = Convention.CANONICAL,
                   basis: str = "psi") -> GrassmannElement:
    """``(i hbar)^-n ∫ <psi|M|psi> Dpsi`` evaluated literally (``Dpsi = dpsi_n ... dpsi_1``).

    ``basis="pi"`` uses momentum states instead.  Odd Grassmann coefficients
    of ``M`` are moved through the bra with the bra's own grading.
    """
    sig = M.sig
    ext, names = aux_signature(sig, "tr", sig.n)
    vals = [ext.gen(x) for x in names]
    Me = M.embed(ext)
    if basis == "psi":
        bra, ket = coherent_bra(vals, convention), coherent_ket(vals, convention)
    elif basis == "pi":
        bra, ket = momentum_bra(vals, convention), momentum_ket(vals, convention)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    amp = bra @ Me @ ket
    amp = as_scalar(amp)
    val = berezin_integrate(amp, list(reversed(names)))
    kappa = convention.kappa(sig.hbar)
    return restrict(val * (kappa ** (-sig.n)), sig)


def as_scalar(x) -> GrassmannElement:
    if isinstance(x, GrassmannElement):
        return x
    if x.shape != (1, 1):
        raise ValueError("expected a 1x1 result")
    return GrassmannElement(x.sig, x.masks, x.mats[:, 0, 0])


@lru_cache(maxsize=None)
def _trace_weights(n: int, hbar: float, convention: Convention) -> np.ndarray:
    sig = AlgebraSignature(n, (), hbar)
    d = 1 << n
    w = np.zeros((d, d), dtype=complex)
    for k in range(d):
        for l in range(d):
            e = np.zeros((d, d))
            e[k, l] = 1
            w[k, l] = trace_coherent(OperatorMatrix.from_complex(sig, e), convention).body()
    w.setflags(write=False)
    return w


def trace_weights(sig: AlgebraSignature, convention: Convention = Convention.CANONICAL) -> np.ndarray:
    """``W[k, l] = tr |k><l|`` for the coherent-state trace."""
    return _trace_weights(sig.n, sig.hbar, convention)


def trace_grassmann(M: OperatorMatrix, convention: Convention = Convention.CANONICAL) -> GrassmannElement:
    """Coherent-state trace extended left-linearly over Grassmann coefficients.

    ``tr(sum_m m A_m) = sum_m m tr(A_m)``; complex matrices get exactly
    :func:`trace_coherent`.
    """
    w = trace_weights(M.sig, convention)
    vals = np.einsum("kl,pkl->p", w, M.mats) if M.masks.size else np.zeros(0)
    return GrassmannElement(M.sig, M.masks, vals)


# ---------------------------------------------------------------------------
# exponentials


def _twist_complex(a: np.ndarray, row_par, col_par, parity: int) -> np.ndarray:
    if not parity & 1:
        return a
    return a * ((1 - 2 * row_par)[:, None] * (1 - 2 * col_par)[None, :])


def matrix_exp(M: OperatorMatrix, s: complex = 1.0, log_shift: float = 0.0) -> OperatorMatrix:
    """``exp(s M - log_shift)`` for a square Grassmann-valued operator.

    The body ``B`` is exponentiated with scaling and squaring; the soul ``N``
    enters through the Dyson series, each order evaluated exactly as a block
    of a block-bidiagonal exponential.  The series stops once no monomial
    sequence with disjoint generators remains, so it is finite.
    """
    if M.shape[0] != M.shape[1]:
        raise ValueError("matrix_exp needs a square operator")
    sig = M.sig
    d = M.shape[0]
    rp, cp = M.row_par, M.col_par
    B = M.body() * s
    soul = [(m, a * s) for m, a in M.components() if m != 0]
    eye = np.eye(d)
    out_masks = [0]
    out_mats = [scipy.linalg.expm(B - log_shift * eye)]
    if not soul:
        return _wrap(sig, out_masks, out_mats, rp, cp)

    deg = {m: bin(m).count("1") for m, _ in soul}

    def walk(seq: list[int], used: int):
        if seq:
            k = len(seq)
            q = [0] * (k + 1)
            for i in range(k - 1, -1, -1):
                q[i] = q[i + 1] + deg[soul[seq[i]][0]]
            big = np.zeros(((k + 1) * d, (k + 1) * d), dtype=complex)
            for i in range(k + 1):
                big[i * d:(i + 1) * d, i * d:(i + 1) * d] = _twist_complex(B, rp, cp, q[i]) - log_shift * eye
            for i in range(1, k + 1):
                m_i, a_i = soul[seq[i - 1]]
                big[(i - 1) * d:i * d, i * d:(i + 1) * d] = _twist_complex(a_i, rp, cp, q[i])
            block = scipy.linalg.expm(big)[0:d, k * d:(k + 1) * d]
            mask, sign = 0, 1
            for idx in seq:
                m = soul[idx][0]
                if _merge_parity(np.array([mask]), np.array([m]), sig.size)[0]:
                    sign = -sign
                mask |= m
            out_masks.append(mask)
            out_mats.append(sign * block)
        for idx, (m, _) in enumerate(soul):
            if m & used == 0:
                walk(seq + [idx], used | m)

    walk([], 0)
    return _wrap(sig, out_masks, np.array(out_mats), rp, cp)


def matrix_exp_series(M: OperatorMatrix, s: complex = 1.0, squarings: int | None = None,
                      order: int = 30) -> OperatorMatrix:
    """Independent oracle: Taylor series of ``exp(s M)`` in the graded algebra.

    Uses plain scaling and squaring on the whole Grassmann-valued matrix.
    """
    A = M.scale(s)
    nrm = max(np.abs(A.body()).sum(axis=1).max(initial=0.0), 1e-300)
    if squarings is None:
        squarings = max(0, int(np.ceil(np.log2(nrm))) + 2)
    A = A.scale(2.0 ** -squarings)
    out = OperatorMatrix.identity(M.sig)
    term = out
    for k in range(1, order + 1):
        term = (term @ A).scale(1.0 / k)
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def dagger_complex(M: OperatorMatrix) -> OperatorMatrix:
    """Hermitian adjoint of an operator with scalar (mask 0) entries only."""
    if M.soul().masks.size:
        raise ValueError("dagger_complex expects a complex matrix")
    return OperatorMatrix.from_complex(M.sig, M.body().conj().T, M.col_par, M.row_par)


def anticommutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return (a @ b) + (b @ a)


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return (a @ b) - (b @ a)


@dataclass(frozen=True)
class FockSpace:
    """Convenience bundle: signature, convention and the generator matrices."""

    sig: AlgebraSignature
    convention: Convention = Convention.CANONICAL

    @property
    def dim(self) -> int:
        return 1 << self.sig.n

    @property
    def kappa(self) -> complex:
        return self.convention.kappa(self.sig.hbar)

    def generators(self):
        return build_generators(self.sig, self.convention)

    def identity(self) -> OperatorMatrix:
        return OperatorMatrix.identity(self.sig)
