"""Arithmetic in GF(2^m) for odd m.

Elements are plain Python ints (bit ``i`` is the coefficient of ``xi**i``),
so a field element fits in one machine word for every supported ``m``.
:class:`GF2m` carries the modulus and provides scalar operations plus a few
vectorised numpy helpers used by the codebook and sieve machinery.
:class:`FieldElement` is a thin value wrapper that refuses to mix fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_PRIMITIVE_POLYS",
    "FieldError",
    "FieldMismatchError",
    "GF2m",
    "FieldElement",
    "get_field",
]

# Exponents of the nonzero terms of a low-weight primitive polynomial per m.
_DEFAULT_TERMS = {
    3: (3, 1, 0),
    5: (5, 2, 0),
    7: (7, 1, 0),
    9: (9, 4, 0),
    11: (11, 2, 0),
    13: (13, 4, 3, 1, 0),
    15: (15, 1, 0),
    17: (17, 3, 0),
    19: (19, 5, 2, 1, 0),
    21: (21, 2, 0),
    23: (23, 5, 0),
    25: (25, 3, 0),
    27: (27, 5, 2, 1, 0),
    29: (29, 2, 0),
    31: (31, 3, 0),
}

DEFAULT_PRIMITIVE_POLYS: dict[int, int] = {
    m: sum(1 << e for e in terms) for m, terms in _DEFAULT_TERMS.items()
}

# log/exp tables cost 2 * 2^m words; beyond this the vector ops fall back to
# shift-and-reduce.
_TABLE_MAX_M = 20


class FieldError(ValueError):
    """Invalid field parameters or an undefined field operation."""


class FieldMismatchError(FieldError):
    """Operands belong to different fields."""


def _prime_factors(n: int) -> list[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _polymulmod(a: int, b: int, m: int, poly: int) -> int:
    top = 1 << m
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return out


def _polypowmod(a: int, e: int, m: int, poly: int) -> int:
    out = 1
    while e:
        if e & 1:
            out = _polymulmod(out, a, m, poly)
        a = _polymulmod(a, a, m, poly)
        e >>= 1
    return out


class GF2m:
    """The field GF(2^m) = F2[xi]/(g), g primitive of degree m (m odd).

    Parameters
    ----------
    m : int
        Extension degree; odd, 3 <= m <= 31.
    primitive_poly : int, optional
        Coefficient mask of g including the ``x**m`` and constant terms.
        Defaults to :data:`DEFAULT_PRIMITIVE_POLYS[m]`.
    """

    def __init__(self, m: int, primitive_poly: int | None = None):
        m = int(m)
        if m % 2 == 0 or not 3 <= m <= 31:
            raise FieldError(f"m must be odd with 3 <= m <= 31, got {m}")
        if primitive_poly is None:
            primitive_poly = DEFAULT_PRIMITIVE_POLYS[m]
        poly = int(primitive_poly)
        if poly >> m != 1 or not poly & 1:
            raise FieldError(
                f"primitive_poly {poly:#x} must have degree {m} and a constant term"
            )
        order = (1 << m) - 1
        # ord(xi) = 2^m - 1 forces g to be primitive, hence irreducible.
        if _polypowmod(2, order, m, poly) != 1 or any(
            _polypowmod(2, order // p, m, poly) == 1 for p in _prime_factors(order)
        ):
            raise FieldError(f"{poly:#x} is not a primitive polynomial of degree {m}")
        self.m = m
        self.poly = poly
        self.size = 1 << m
        self.order = order

    def __repr__(self):
        return f"GF2m(m={self.m}, primitive_poly={self.poly:#x})"

    def __eq__(self, other):
        return isinstance(other, GF2m) and (self.m, self.poly) == (other.m, other.poly)

    def __hash__(self):
        return hash((GF2m, self.m, self.poly))

    # -- scalar arithmetic -------------------------------------------------

    def _check(self, a: int) -> int:
        a = int(a)
        if not 0 <= a < self.size:
            raise FieldError(f"{a} is not an element of GF(2^{self.m})")
        return a

    def add(self, a: int, b: int) -> int:
        return self._check(a) ^ self._check(b)

    def mul(self, a: int, b: int) -> int:
        return _polymulmod(self._check(a), self._check(b), self.m, self.poly)

    def square(self, a: int) -> int:
        return self.mul(a, a)

    def pow(self, a: int, e: int) -> int:
        a = self._check(a)
        if e < 0:
            return self.pow(self.inverse(a), -e)
        return _polypowmod(a, e, self.m, self.poly)

    def frob_pow(self, a: int, t: int) -> int:
        """``a ** (2 ** t)``."""
        if t < 0:
            raise FieldError("Frobenius exponent must be nonnegative")
        a = self._check(a)
        for _ in range(t % self.m):
            a = _polymulmod(a, a, self.m, self.poly)
        return a

    def inverse(self, a: int) -> int:
        if self._check(a) == 0:
            raise FieldError("zero has no multiplicative inverse")
        return _polypowmod(a, self.order - 1, self.m, self.poly)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inverse(b))

    def trace(self, a: int) -> int:
        """Absolute trace ``a + a^2 + ... + a^(2^(m-1))``, returned as 0 or 1."""
        return (self._check(a) & self.trace_mask).bit_count() & 1

    def trace_sum(self, a: int) -> int:
        """Trace computed literally as the Frobenius orbit sum (slow path)."""
        a = self._check(a)
        s = 0
        for _ in range(self.m):
            s ^= a
            a = _polymulmod(a, a, self.m, self.poly)
        return s

    def half_trace(self, lam: int) -> int:
        """Sum of ``lam ** (2 ** l)`` over odd l in [1, m-2]."""
        lam = self._check(lam)
        z = 0
        power = self.frob_pow(lam, 1)
        for ell in range(1, self.m - 1):
            if ell % 2 == 1:
                z ^= power
            power = _polymulmod(power, power, self.m, self.poly)
        return z

    def solve_artin_schreier(self, lam: int) -> tuple[int, int] | None:
        """Roots of ``z + z^2 = lam``, or ``None`` when ``trace(lam) == 1``."""
        if self.trace(lam):
            return None
        z = self.half_trace(lam)
        return (z, z ^ 1) if z < z ^ 1 else (z ^ 1, z)

    def xi_pow(self, k: int) -> int:
        return _polypowmod(2, k % self.order, self.m, self.poly)

    def element(self, value: int | Sequence[int]) -> "FieldElement":
        if isinstance(value, (int, np.integer)):
            return FieldElement(self, self._check(value))
        return FieldElement.from_bits(self, value)

    def elements(self) -> Iterable["FieldElement"]:
        return (FieldElement(self, a) for a in range(self.size))

    # -- linear-algebra views ---------------------------------------------

    @cached_property
    def trace_mask(self) -> int:
        """Bit k set iff Tr(xi^k) = 1, so Tr(a) = parity(a & trace_mask)."""
        mask = 0
        for k in range(self.m):
            if self.trace_sum(self.xi_pow(k)) == 1:
                mask |= 1 << k
        return mask

    def trace_functional(self, c: int) -> int:
        """Mask tau with Tr(c * a) = parity(a & tau) for all a."""
        c = self._check(c)
        tau = 0
        for k in range(self.m):
            if self.trace(self.mul(c, 1 << k)):
                tau |= 1 << k
        return tau

    # -- vectorised helpers (numpy int64 arrays) ---------------------------

    @cached_property
    def _tables(self) -> tuple[np.ndarray, np.ndarray]:
        if self.m > _TABLE_MAX_M:
            raise FieldError("log/exp tables are only built for m <= 20")
        exp = np.zeros(2 * self.size, dtype=np.int64)
        v = 1
        for k in range(self.order):
            exp[k] = v
            v <<= 1
            if v & self.size:
                v ^= self.poly
        exp[self.order : 2 * self.order] = exp[: self.order]
        log = np.zeros(self.size, dtype=np.int64)
        log[exp[: self.order]] = np.arange(self.order)
        return exp, log

    def mul_array(self, a, b) -> np.ndarray:
        a, b = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        if self.m <= _TABLE_MAX_M:
            exp, log = self._tables
            out = exp[log[a] + log[b]]
            return np.where((a == 0) | (b == 0), 0, out)
        out = np.zeros(a.shape, dtype=np.int64)
        a = a.copy()
        for k in range(self.m):
            out ^= np.where((b >> k) & 1, a, 0)
            a <<= 1
            a ^= np.where(a & self.size, self.poly, 0)
        return out

    def pow_array(self, a, e: int) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if e == 0:
            return np.ones_like(a)
        if self.m <= _TABLE_MAX_M:
            exp, log = self._tables
            out = exp[(log[a] * (e % self.order)) % self.order]
            return np.where(a == 0, 0, out)
        out = np.ones_like(a)
        base = a.copy()
        while e:
            if e & 1:
                out = self.mul_array(out, base)
            base = self.mul_array(base, base)
            e >>= 1
        return out

    def inverse_array(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise FieldError("zero has no multiplicative inverse")
        return self.pow_array(a, self.order - 1)

    def trace_array(self, a) -> np.ndarray:
        return np.bitwise_count(np.asarray(a, dtype=np.int64) & self.trace_mask).astype(np.int64) & 1

    def half_trace_array(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.int64)
        z = np.zeros_like(lam)
        for ell in range(1, self.m - 1, 2):
            z ^= self.pow_array(lam, 1 << ell)
        return z

    def linear_combination(self, coeffs: Sequence[int], x) -> np.ndarray:
        """Vectorised ``sum_j x_j * coeffs[j]`` over the bits of each ``x``."""
        x = np.asarray(x, dtype=np.int64)
        out = np.zeros_like(x)
        for j, c in enumerate(coeffs):
            out ^= np.where((x >> j) & 1, int(c), 0)
        return out

    def trace_functional_array(self, c) -> np.ndarray:
        """Vectorised :meth:`trace_functional`."""
        c = np.asarray(c, dtype=np.int64)
        tau = np.zeros_like(c)
        for k in range(self.m):
            tau |= self.trace_array(self.mul_array(c, 1 << k)) << k
        return tau


@lru_cache(maxsize=64)
def get_field(m: int, primitive_poly: int | None = None) -> GF2m:
    """Cached field constructor (fields are immutable)."""
    return GF2m(m, primitive_poly)


@dataclass(frozen=True)
class FieldElement:
    """An element of a specific :class:`GF2m`."""

    field: GF2m
    value: int

    @classmethod
    def from_bits(cls, field: GF2m, bits: Sequence[int]) -> "FieldElement":
        if len(bits) != field.m:
            raise FieldError(f"expected {field.m} bits, got {len(bits)}")
        return cls(field, sum((int(b) & 1) << i for i, b in enumerate(bits)))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> i) & 1 for i in range(self.field.m))

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatchError(f"{self.field!r} vs {other.field!r}")
            return other.value
        return self.field._check(other)

    def __add__(self, other):
        return FieldElement(self.field, self.value ^ self._other(other))

    __radd__ = __add__
    __sub__ = __add__

    def __mul__(self, other):
        return FieldElement(self.field, self.field.mul(self.value, self._other(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return FieldElement(self.field, self.field.div(self.value, self._other(other)))

    def __pow__(self, e: int):
        return FieldElement(self.field, self.field.pow(self.value, e))

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def trace(self) -> int:
        return self.field.trace(self.value)

    def frob_pow(self, t: int) -> "FieldElement":
        return FieldElement(self.field, self.field.frob_pow(self.value, t))

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inverse(self.value))
