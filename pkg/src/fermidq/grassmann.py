"""Exact arithmetic in a finite complex Grassmann algebra plus Berezin calculus.

Elements are stored as parallel arrays of monomial bit-masks and complex
coefficients. Bit ``k`` of a mask is generator ``k`` of the signature's global
ordering, and a monomial is always read in increasing bit order, which makes
the canonical form unique.

Conventions used throughout the package:

* ``berezin_integrate(f, [g1, g2, ...])`` evaluates ``∫ f dg1 dg2 ...`` with
  the differentials written to the right of ``f``.  The differential next to
  ``f`` acts first, and each one strips its generator from the right end, so
  ``∫ ψ dψ = 1`` and ``∫ dψ ψ = -1``.
* The derivative ``side="left"`` anticommutes the generator to the front
  before removing it; ``side="right"`` moves it to the back.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

Scalar = Union[int, float, complex]

DEFAULT_PRUNE_TOL = 1e-14


class SignatureMismatch(ValueError):
    """Raised when elements from different algebras are combined."""


class Parity(enum.Enum):
    EVEN = 0
    ODD = 1
    MIXED = 2


@dataclass(frozen=True)
class AlgebraSignature:
    """Generator layout of a Grassmann algebra.

    The ordering is ``psi1 < ... < psin < pi1 < ... < pin < params...``.
    ``params`` are extra generators (couplings, auxiliary integration
    variables, copies of phase space) that phase-space operations never
    integrate over unless asked explicitly.
    """

    n: int
    params: tuple[str, ...] = ()
    hbar: float = 1.0
    tol: float = DEFAULT_PRUNE_TOL

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        object.__setattr__(self, "params", tuple(self.params))
        names = self.names
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate generator names in {names}")
        if len(names) > 62:
            raise ValueError("at most 62 generators are supported")

    @property
    def m(self) -> int:
        return len(self.params)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return (
            tuple(f"psi{j}" for j in range(1, self.n + 1))
            + tuple(f"pi{j}" for j in range(1, self.n + 1))
            + self.params
        )

    @cached_property
    def _index(self) -> dict[str, int]:
        return {name: k for k, name in enumerate(self.names)}

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, g: Union[str, int]) -> int:
        if isinstance(g, (int, np.integer)):
            if not 0 <= g < self.size:
                raise KeyError(f"generator index {g} out of range")
            return int(g)
        try:
            return self._index[g]
        except KeyError:
            raise KeyError(f"unknown generator {g!r}") from None

    def psi_index(self, j: int) -> int:
        """Index of ``psi_j`` (1-based ``j``)."""
        return j - 1

    def pi_index(self, j: int) -> int:
        return self.n + j - 1

    @property
    def phase_space_mask(self) -> int:
        return (1 << (2 * self.n)) - 1

    def extend(self, *names: str) -> "AlgebraSignature":
        """Signature with extra parameter generators appended at the end."""
        return AlgebraSignature(self.n, self.params + tuple(names), self.hbar, self.tol)

    def with_hbar(self, hbar: float) -> "AlgebraSignature":
        return AlgebraSignature(self.n, self.params, hbar, self.tol)

    # element constructors
    def zero(self) -> "GrassmannElement":
        return GrassmannElement(self, [], [])

    def scalar(self, c: Scalar) -> "GrassmannElement":
        return GrassmannElement(self, [0], [c])

    def one(self) -> "GrassmannElement":
        return self.scalar(1.0)

    def gen(self, g: Union[str, int]) -> "GrassmannElement":
        return GrassmannElement(self, [1 << self.index(g)], [1.0])

    def psi(self, j: int) -> "GrassmannElement":
        return self.gen(self.psi_index(j))

    def pi(self, j: int) -> "GrassmannElement":
        return self.gen(self.pi_index(j))

    def monomial(self, gens: Sequence[Union[str, int]], coeff: Scalar = 1.0) -> "GrassmannElement":
        """Ordered product ``coeff * g1 g2 ...`` brought to canonical form."""
        out = self.scalar(coeff)
        for g in gens:
            out = out * self.gen(g)
        return out


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x).astype(np.int64)


def _merge_parity(ma: np.ndarray, mb: np.ndarray, nbits: int) -> np.ndarray:
    """Parity of the permutation that sorts the concatenation ``a b``.

    Counts pairs ``(i in a, j in b)`` with ``i > j``.
    """
    ma, mb = np.broadcast_arrays(ma, mb)
    par = np.zeros(ma.shape, dtype=np.int64)
    present = int(np.bitwise_or.reduce(mb.ravel())) if mb.size else 0
    for j in range(nbits):
        if not (present >> j) & 1:
            continue
        bj = (mb >> j) & 1
        par ^= bj & (_popcount(ma >> (j + 1)) & 1)
    return par


def _combine(masks: np.ndarray, coeffs: np.ndarray, tol: float):
    if masks.size == 0:
        return np.zeros(0, np.int64), np.zeros(0, complex)
    uniq, inv = np.unique(masks, return_inverse=True)
    acc = np.zeros(uniq.size, dtype=complex)
    np.add.at(acc, inv, coeffs)
    keep = np.abs(acc) >= tol
    return uniq[keep], acc[keep]


class GrassmannElement:
    """Immutable linear combination of canonical monomials."""

    __slots__ = ("sig", "masks", "coeffs")

    def __init__(self, sig: AlgebraSignature, masks, coeffs, *, canonical: bool = False):
        masks = np.asarray(masks, dtype=np.int64).reshape(-1)
        coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
        if masks.shape != coeffs.shape:
            raise ValueError("masks and coeffs must have the same length")
        if not canonical:
            masks, coeffs = _combine(masks, coeffs, sig.tol)
        masks.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "sig", sig)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, key, value):
        raise AttributeError("GrassmannElement is immutable")

    # --- basic protocol ---------------------------------------------------
    def _coerce(self, other) -> "GrassmannElement":
        if isinstance(other, GrassmannElement):
            if other.sig != self.sig:
                raise SignatureMismatch(f"{self.sig} vs {other.sig}")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return self.sig.scalar(complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return GrassmannElement(
            self.sig,
            np.concatenate([self.masks, other.masks]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement(self.sig, self.masks, -self.coeffs, canonical=True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return _multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(1.0 / other)
        return NotImplemented

    def scale(self, c: Scalar) -> "GrassmannElement":
        return GrassmannElement(self.sig, self.masks, self.coeffs * complex(c))

    def __pow__(self, k: int) -> "GrassmannElement":
        out = self.sig.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, GrassmannElement):
            other = self._coerce(other)
            if other is NotImplemented:
                return NotImplemented
        return (
            self.sig == other.sig
            and np.array_equal(self.masks, other.masks)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None

    def __len__(self) -> int:
        return int(self.masks.size)

    def __bool__(self) -> bool:
        return self.masks.size > 0

    def __repr__(self) -> str:
        return f"GrassmannElement({self.pretty()})"

    def pretty(self, digits: int = 6) -> str:
        if not self:
            return "0"
        names = self.sig.names
        parts = []
        for m, c in zip(self.masks.tolist(), self.coeffs.tolist()):
            gens = "*".join(names[k] for k in range(self.sig.size) if (m >> k) & 1)
            cs = f"({c.real:.{digits}g}{c.imag:+.{digits}g}j)"
            parts.append(cs + ("*" + gens if gens else ""))
        return " + ".join(parts)

    def terms(self) -> dict[tuple[str, ...], complex]:
        """Canonical monomials as generator-name tuples mapped to coefficients."""
        names = self.sig.names
        return {
            tuple(names[k] for k in range(self.sig.size) if (m >> k) & 1): c
            for m, c in zip(self.masks.tolist(), self.coeffs.tolist())
        }

    def coeff(self, gens: Sequence[Union[str, int]] = ()) -> complex:
        """Coefficient of the canonical monomial made of ``gens`` (any order)."""
        mask = 0
        for g in gens:
            mask |= 1 << self.sig.index(g)
        hit = np.nonzero(self.masks == mask)[0]
        return complex(self.coeffs[hit[0]]) if hit.size else 0j

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self else 0.0

    def allclose(self, other, atol: float = 1e-12) -> bool:
        return (self - other).norm_inf() <= atol

    # --- structure ----------------------------------------------------------
    @property
    def degrees(self) -> np.ndarray:
        return _popcount(self.masks)

    def body(self) -> complex:
        return self.coeff(())

    def soul(self) -> "GrassmannElement":
        keep = self.masks != 0
        return GrassmannElement(self.sig, self.masks[keep], self.coeffs[keep], canonical=True)

    def parity(self) -> Parity:
        if not self:
            return Parity.EVEN
        p = set((self.degrees & 1).tolist())
        if p == {0}:
            return Parity.EVEN
        if p == {1}:
            return Parity.ODD
        return Parity.MIXED

    def even_part(self) -> "GrassmannElement":
        keep = (self.degrees & 1) == 0
        return GrassmannElement(self.sig, self.masks[keep], self.coeffs[keep], canonical=True)

    def odd_part(self) -> "GrassmannElement":
        keep = (self.degrees & 1) == 1
        return GrassmannElement(self.sig, self.masks[keep], self.coeffs[keep], canonical=True)

    def grade_involution(self) -> "GrassmannElement":
        """Flip the sign of every odd monomial."""
        sign = 1 - 2 * (self.degrees & 1)
        return GrassmannElement(self.sig, self.masks, self.coeffs * sign, canonical=True)

    def depends_on(self, g: Union[str, int]) -> bool:
        bit = 1 << self.sig.index(g)
        return bool(np.any(self.masks & bit))

    def support_mask(self) -> int:
        return int(np.bitwise_or.reduce(self.masks)) if self else 0

    def conjugate(self, pairing: Mapping[str, str] | None = None) -> "GrassmannElement":
        """Complex conjugation: conjugate coefficients and reverse factor order.

        ``pairing`` maps generator names to the names of their conjugates
        (for instance ``{"a": "a_bar", "a_bar": "a"}``).  Generators not in the
        pairing are treated as real.
        """
        rev_sign = np.where(((self.degrees * (self.degrees - 1)) // 2) % 2 == 1, -1.0, 1.0)
        out = GrassmannElement(self.sig, self.masks, np.conj(self.coeffs) * rev_sign, canonical=True)
        if pairing:
            out = substitute(out, {a: self.sig.gen(b) for a, b in pairing.items()})
        return out


# ---------------------------------------------------------------------------
# products


def _multiply(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    if not a or not b:
        return a.sig.zero()
    ma = a.masks[:, None]
    mb = b.masks[None, :]
    ok = (ma & mb) == 0
    ia, ib = np.nonzero(ok)
    if ia.size == 0:
        return a.sig.zero()
    pa, pb = a.masks[ia], b.masks[ib]
    par = _merge_parity(pa, pb, a.sig.size)
    coeffs = a.coeffs[ia] * b.coeffs[ib] * (1 - 2 * par)
    return GrassmannElement(a.sig, pa | pb, coeffs)


def product(*factors: GrassmannElement) -> GrassmannElement:
    out = factors[0]
    for f in factors[1:]:
        out = out * f
    return out


# ---------------------------------------------------------------------------
# calculus


def _gen_bit(sig: AlgebraSignature, g) -> int:
    return 1 << sig.index(g)


def derivative(f: GrassmannElement, g: Union[str, int], side: str = "left") -> GrassmannElement:
    """Grassmann derivative of ``f`` with respect to generator ``g``."""
    k = f.sig.index(g)
    bit = 1 << k
    hit = (f.masks & bit) != 0
    masks = f.masks[hit]
    if side == "left":
        passed = _popcount(masks & (bit - 1))
    elif side == "right":
        passed = _popcount(masks >> (k + 1))
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    sign = 1 - 2 * (passed & 1)
    return GrassmannElement(f.sig, masks & ~bit, f.coeffs[hit] * sign)


def _integrate_arrays(masks, coeffs, indices: Sequence[int]):
    """Vectorised right-stripping of ``indices`` in order; keeps only full terms."""
    need = 0
    for k in indices:
        need |= 1 << k
    hit = (masks & need) == need
    masks, coeffs = masks[hit], coeffs[hit]
    sign = np.ones(masks.shape, dtype=np.int64)
    for k in indices:
        sign *= 1 - 2 * (_popcount(masks >> (k + 1)) & 1)
        masks = masks & ~(1 << k)
    return masks, coeffs * sign


def _check_gens(sig, gens) -> list[int]:
    idx = [sig.index(g) for g in gens]
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate generator in integration measure {list(gens)}")
    return idx


def berezin_integrate(f: GrassmannElement, gens: Sequence[Union[str, int]]) -> GrassmannElement:
    """``∫ f dg1 dg2 ...`` for the measure written in ``gens`` order."""
    idx = _check_gens(f.sig, gens)
    masks, coeffs = _integrate_arrays(f.masks, f.coeffs, idx)
    return GrassmannElement(f.sig, masks, coeffs)


def integrate_product(a: GrassmannElement, b: GrassmannElement, gens: Sequence[Union[str, int]]) -> GrassmannElement:
    """``∫ a b dg1 ...`` without materialising terms that cannot survive.

    Only pairs of monomials whose union covers every integration generator
    are formed, which keeps large kernels (many auxiliary generators) cheap.
    """
    if a.sig != b.sig:
        raise SignatureMismatch(f"{a.sig} vs {b.sig}")
    idx = _check_gens(a.sig, gens)
    if not a or not b:
        return a.sig.zero()
    need = 0
    for k in idx:
        need |= 1 << k
    # group b by its integration part; a-term with part p pairs with b part need^p
    b_part = b.masks & need
    order = np.argsort(b_part, kind="stable")
    b_sorted_part = b_part[order]
    want = need ^ (a.masks & need)
    lo = np.searchsorted(b_sorted_part, want, side="left")
    hi = np.searchsorted(b_sorted_part, want, side="right")
    counts = hi - lo
    if counts.sum() == 0:
        return a.sig.zero()
    ia = np.repeat(np.arange(a.masks.size), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    ib = order[np.repeat(lo, counts) + offs]
    pa, pb = a.masks[ia], b.masks[ib]
    ok = (pa & pb) == 0
    ia, ib, pa, pb = ia[ok], ib[ok], pa[ok], pb[ok]
    par = _merge_parity(pa, pb, a.sig.size)
    coeffs = a.coeffs[ia] * b.coeffs[ib] * (1 - 2 * par)
    masks, coeffs = _integrate_arrays(pa | pb, coeffs, idx)
    return GrassmannElement(a.sig, masks, coeffs)


def substitute(f: GrassmannElement, mapping: Mapping[Union[str, int], GrassmannElement],
               target: AlgebraSignature | None = None) -> GrassmannElement:
    """Replace generators by elements, evaluating each monomial in order.

    Generators absent from ``mapping`` map to the generator of the same name
    in ``target`` (default: ``f``'s own signature).
    """
    target = target or f.sig
    images: list[GrassmannElement] = []
    keyed = {f.sig.index(k): v for k, v in mapping.items()}
    for k, name in enumerate(f.sig.names):
        if k in keyed:
            img = keyed[k]
            if img.sig != target:
                raise SignatureMismatch(f"image of {name} lives in {img.sig}")
        else:
            img = target.gen(name)
        images.append(img)
    out = target.zero()
    # group by mask so shared prefixes are not recomputed
    for m, c in zip(f.masks.tolist(), f.coeffs.tolist()):
        term = target.scalar(c)
        k = 0
        mm = m
        while mm:
            if mm & 1:
                term = term * images[k]
                if not term:
                    break
            mm >>= 1
            k += 1
        out = out + term
    return out


def embed(f: GrassmannElement, target: AlgebraSignature) -> GrassmannElement:
    """Move ``f`` into a signature that contains all of its generators.

    When the relative order of the used generators is unchanged this is a
    pure relabelling; otherwise signs are recomputed by substitution.
    """
    if f.sig == target:
        return f
    src = f.sig.names
    try:
        pos = [target.index(name) for name in src]
    except KeyError as exc:
        raise SignatureMismatch(f"cannot embed: {exc}") from None
    used = [k for k in range(len(src)) if f.support_mask() >> k & 1]
    if all(pos[a] < pos[b] for a, b in zip(used, used[1:])):
        new = np.zeros_like(f.masks)
        for k in used:
            new |= ((f.masks >> k) & 1) << pos[k]
        return GrassmannElement(target, new, f.coeffs)
    return substitute(f, {}, target)


def restrict(f: GrassmannElement, target: AlgebraSignature) -> GrassmannElement:
    """Inverse of :func:`embed`; fails if ``f`` uses generators missing in ``target``."""
    for k in range(f.sig.size):
        if (f.support_mask() >> k) & 1 and f.sig.names[k] not in target._index:
            raise SignatureMismatch(f"element depends on {f.sig.names[k]!r}, absent from target")
    lifted = GrassmannElement(f.sig, f.masks, f.coeffs, canonical=True)
    src = f.sig
    pos = {k: target.index(src.names[k]) for k in range(src.size) if src.names[k] in target._index}
    used = [k for k in range(src.size) if (f.support_mask() >> k) & 1]
    if all(pos[a] < pos[b] for a, b in zip(used, used[1:])):
        new = np.zeros_like(lifted.masks)
        for k in used:
            new |= ((lifted.masks >> k) & 1) << pos[k]
        return GrassmannElement(target, new, lifted.coeffs)
    return substitute(lifted, {src.names[k]: target.gen(src.names[k]) for k in used}, target)


def shift(f: GrassmannElement, g: Union[str, int], delta: GrassmannElement) -> GrassmannElement:
    """Translate ``g -> g + delta`` for an odd ``delta`` free of ``g``."""
    if delta.sig != f.sig:
        raise SignatureMismatch(f"{f.sig} vs {delta.sig}")
    if delta and delta.parity() is not Parity.ODD:
        raise ValueError("shift amount must be Grassmann-odd")
    if delta.depends_on(g):
        raise ValueError(f"shift amount depends on the shifted generator {g!r}")
    return substitute(f, {g: f.sig.gen(g) + delta})


def exp_nilpotent(f: GrassmannElement) -> GrassmannElement:
    """Exponential of an element: ``exp(body) * sum_k soul^k / k!`` (finite)."""
    b = f.body()
    s = f.soul()
    out = f.sig.one()
    term = f.sig.one()
    k = 1
    while True:
        term = term * s / k
        if not term:
            break
        out = out + term
        k += 1
    return out * np.exp(b) if b != 0 else out


def gaussian_integral(M, a: Sequence[GrassmannElement], b: Sequence[GrassmannElement]) -> GrassmannElement:
    """Closed form of ``∫ exp(vᵀ M u + uᵀ a + vᵀ b) du1 dv1 ... duk dvk``.

    Returns ``det(M) exp(aᵀ M⁻¹ b)``; ``a`` and ``b`` must be odd elements
    independent of the integration variables.  Writing the linear terms as
    ``aᵀu + bᵀv`` instead flips both sources and leaves the result unchanged;
    writing ``uᵀa - bᵀv`` gives the ``exp(-aᵀ M⁻¹ b)`` variant.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    k = M.shape[0]
    if M.shape != (k, k) or len(a) != k or len(b) != k:
        raise ValueError("gaussian_integral: shape mismatch")
    det = np.linalg.det(M)
    if abs(det) < 1e-300 or np.linalg.cond(M) > 1e14:
        raise np.linalg.LinAlgError("gaussian_integral: singular matrix")
    Minv = np.linalg.inv(M)
    sig = a[0].sig
    quad = sig.zero()
    for i in range(k):
        for j in range(k):
            if Minv[i, j] != 0:
                quad = quad + (a[i] * b[j]) * Minv[i, j]
    return exp_nilpotent(quad) * det


def gaussian_integral_direct(M, a, b, u: Sequence[str], v: Sequence[str]) -> GrassmannElement:
    """Brute-force Berezin evaluation of the integral in :func:`gaussian_integral`."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    sig = a[0].sig
    k = len(u)
    expo = sig.zero()
    for i in range(k):
        ui, vi = sig.gen(u[i]), sig.gen(v[i])
        expo = expo + ui * a[i] + vi * b[i]
        for j in range(k):
            if M[i, j] != 0:
                expo = expo + vi * sig.gen(u[j]) * M[i, j]
    measure = [x for pair in zip(u, v) for x in pair]
    return berezin_integrate(exp_nilpotent(expo), measure)


def random_element(sig: AlgebraSignature, rng: np.random.Generator, *,
                   gens: Iterable[Union[str, int]] | None = None,
                   parity: Parity | None = None, density: float = 0.7) -> GrassmannElement:
    """Random element over a subset of generators (testing helper)."""
    idx = [sig.index(g) for g in gens] if gens is not None else list(range(sig.size))
    masks, coeffs = [], []
    for sub in range(1 << len(idx)):
        m = 0
        for bitpos, k in enumerate(idx):
            if (sub >> bitpos) & 1:
                m |= 1 << k
        deg = bin(m).count("1")
        if parity is Parity.EVEN and deg % 2:
            continue
        if parity is Parity.ODD and deg % 2 == 0:
            continue
        if rng.random() > density:
            continue
        masks.append(m)
        coeffs.append(complex(rng.normal(), rng.normal()))
    return GrassmannElement(sig, masks, coeffs)

