"""Binary symmetric matrices from trace forms: Kerdock and Delsarte-Goethals sets.

``P^0(a)`` represents the bilinear form ``Tr(x y a)`` and, for ``t >= 1``,
``P^t(a)`` represents ``Tr((x y^(2^t) + x^(2^t) y) a)``. A DG(m, r) matrix is
the XOR of ``P^t(a_t)`` for ``t = 0..r``.

Matrices are stored as ``m`` packed bit rows. The Z4 quadratic form of a
binary symmetric ``P`` is ``x P x^T mod 4`` with ``x`` and ``P`` lifted to
{0, 1}: diagonal terms count once, off-diagonal pairs twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .gf2m import FieldError, GF2m

__all__ = [
    "BinSymMatrix",
    "DGIndex",
    "form_matrix",
    "dg_matrix",
    "rank_gf2",
    "null_space",
    "max_order",
    "iter_dg_indices",
    "kerdock_values",
    "form_values",
    "dg_values",
    "form_values_for",
    "kerdock_diagonals",
]


@dataclass(frozen=True)
class BinSymMatrix:
    """Symmetric m x m matrix over F2; ``rows[i]`` has bit j = entry (i, j)."""

    m: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.m:
            raise ValueError(f"expected {self.m} rows, got {len(self.rows)}")
        for i in range(self.m):
            for j in range(i + 1, self.m):
                if (self.rows[i] >> j & 1) != (self.rows[j] >> i & 1):
                    raise ValueError("matrix is not symmetric")

    @classmethod
    def zeros(cls, m: int) -> "BinSymMatrix":
        return cls(m, (0,) * m)

    @classmethod
    def from_array(cls, arr) -> "BinSymMatrix":
        arr = np.asarray(arr, dtype=np.int64) & 1
        m = arr.shape[0]
        return cls(m, tuple(int(sum(int(arr[i, j]) << j for j in range(m))) for i in range(m)))

    def to_array(self) -> np.ndarray:
        return np.array(
            [[(row >> j) & 1 for j in range(self.m)] for row in self.rows], dtype=np.uint8
        )

    def __xor__(self, other: "BinSymMatrix") -> "BinSymMatrix":
        if other.m != self.m:
            raise ValueError("dimension mismatch")
        return BinSymMatrix(self.m, tuple(a ^ b for a, b in zip(self.rows, other.rows)))

    __add__ = __xor__

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return (self.rows[i] >> j) & 1

    @property
    def diagonal(self) -> int:
        return sum(((self.rows[i] >> i) & 1) << i for i in range(self.m))

    def is_zero(self) -> bool:
        return not any(self.rows)

    def bilinear(self, x: int, y: int) -> int:
        """``x P y^T`` over F2."""
        acc = 0
        for i in range(self.m):
            if x >> i & 1:
                acc ^= self.rows[i]
        return (acc & y).bit_count() & 1

    def row_times(self, x: int) -> int:
        """The row vector ``x P`` packed as an int."""
        acc = 0
        for i in range(self.m):
            if x >> i & 1:
                acc ^= self.rows[i]
        return acc

    def quadratic_form(self, x: int) -> int:
        """``x P x^T mod 4`` with entries lifted to {0, 1}."""
        total = (x & self.diagonal).bit_count()
        for i in range(self.m):
            if x >> i & 1:
                upper = (self.rows[i] >> (i + 1)) << (i + 1)
                total += 2 * (upper & x).bit_count()
        return total % 4


@dataclass(frozen=True)
class DGIndex:
    """Coefficients ``(a_0, ..., a_r)`` naming the matrix ``sum_t P^t(a_t)``."""

    coeffs: tuple[int, ...]

    @property
    def r(self) -> int:
        return len(self.coeffs) - 1


def max_order(m: int) -> int:
    return (m - 1) // 2


def _check_t(field: GF2m, t: int) -> None:
    if not 0 <= t <= max_order(field.m):
        raise FieldError(f"t must satisfy 0 <= t <= {max_order(field.m)} for m={field.m}, got {t}")


def form_matrix(field: GF2m, t: int, a: int) -> BinSymMatrix:
    """The binary symmetric matrix ``P^t(a)``."""
    _check_t(field, t)
    a = int(a)
    m = field.m
    basis = [1 << i for i in range(m)]
    if t == 0:
        def entry(i, j):
            return field.trace(field.mul(field.mul(basis[i], basis[j]), a))
    else:
        frob = [field.frob_pow(b, t) for b in basis]

        def entry(i, j):
            s = field.mul(basis[i], frob[j]) ^ field.mul(frob[i], basis[j])
            return field.trace(field.mul(s, a))

    rows = []
    for i in range(m):
        row = 0
        for j in range(m):
            row |= entry(i, j) << j
        rows.append(row)
    P = BinSymMatrix(m, tuple(rows))
    if t >= 1 and P.diagonal:
        raise AssertionError("P^t(a) must have zero diagonal for t >= 1")
    return P


def dg_matrix(field: GF2m, coeffs: Sequence[int] | DGIndex) -> BinSymMatrix:
    """``sum_{t=0}^{r} P^t(a_t)`` for ``coeffs = (a_0, ..., a_r)``."""
    if isinstance(coeffs, DGIndex):
        coeffs = coeffs.coeffs
    P = BinSymMatrix.zeros(field.m)
    for t, a in enumerate(coeffs):
        if a:
            P = P ^ form_matrix(field, t, a)
        else:
            _check_t(field, t)
    return P


def iter_dg_indices(m: int, r: int, *, zero_diagonal: bool = False) -> Iterator[tuple[int, ...]]:
    """All coefficient tuples of DG(m, r), a_0 varying fastest."""
    size = 1 << m
    lo = 1 if zero_diagonal else 0
    n = r + 1 - lo
    for idx in range(size**n):
        coeffs = [0] * lo
        for _ in range(n):
            coeffs.append(idx % size)
            idx //= size
        yield tuple(coeffs)


def _echelon(rows: Sequence[int]) -> list[int]:
    basis: list[int] = []
    for v in rows:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return basis


def rank_gf2(P: BinSymMatrix | Sequence[int]) -> int:
    """Rank over F2 by elimination on packed rows."""
    rows = P.rows if isinstance(P, BinSymMatrix) else P
    return len(_echelon(rows))


def null_space(P: BinSymMatrix) -> list[int]:
    """All x (as ints) with ``x P = 0``, sorted."""
    m = P.m
    # Track combinations: eliminate augmented rows [P_i | e_i].
    pivots: list[tuple[int, int]] = []
    kernel: list[int] = []
    for i in range(m):
        v, tag = P.rows[i], 1 << i
        for pv, pt in pivots:
            if v ^ pv < v:
                v, tag = v ^ pv, tag ^ pt
        if v:
            pivots.append((v, tag))
            pivots.sort(reverse=True)
        else:
            kernel.append(tag)
    span = [0]
    for k in kernel:
        span += [s ^ k for s in span]
    return sorted(span)


# -- vectorised Z4 value tables -------------------------------------------


@lru_cache(maxsize=8)
def _pair_sums(field: GF2m) -> np.ndarray:
    """``sigma2[x] = sum_{i<j in supp x} xi^(i+j)`` for every x."""
    sig = np.zeros(field.size, dtype=np.int64)
    for k in range(field.m):
        lo = np.arange(1 << k, dtype=np.int64)
        sig[(1 << k) + lo] = sig[lo] ^ field.mul_array(1 << k, lo)
    sig.flags.writeable = False
    return sig


@lru_cache(maxsize=8)
def kerdock_diagonals(field: GF2m) -> np.ndarray:
    """``D[a]`` = diagonal of ``P^0(a)`` packed as an int (bit i = Tr(xi^(2i) a))."""
    a = np.arange(field.size, dtype=np.int64)
    diag = np.zeros(field.size, dtype=np.int64)
    for i in range(field.m):
        tau = field.trace_functional(field.xi_pow(2 * i))
        diag |= (np.bitwise_count(a & tau).astype(np.int64) & 1) << i
    diag.flags.writeable = False
    return diag


def _trace_products(field: GF2m, c: np.ndarray) -> np.ndarray:
    """Matrix ``[a, x] -> Tr(a * c[x])`` for every field element a."""
    tau = field.trace_functional_array(c)
    a = np.arange(field.size, dtype=np.int64)
    return (np.bitwise_count(a[:, None] & tau[None, :]) & 1).astype(np.uint8)


def _rows(field: GF2m, rows) -> np.ndarray:
    if rows is None:
        return np.arange(field.size, dtype=np.int64)
    return np.asarray(rows, dtype=np.int64)


def kerdock_values(field: GF2m, rows=None) -> np.ndarray:
    """Table ``[a, x] -> x P^0(a) x^T mod 4`` (uint8) over the given rows."""
    x = _rows(field, rows)
    diag = kerdock_diagonals(field)
    lin = np.bitwise_count(diag[:, None] & x[None, :]).astype(np.int64)
    cross = _trace_products(field, _pair_sums(field)[x]).astype(np.int64)
    return ((lin + 2 * cross) % 4).astype(np.uint8)


def form_values(field: GF2m, t: int, rows=None) -> np.ndarray:
    """Table ``[a, x] -> x P^t(a) x^T mod 4`` (uint8), values in {0, 2} for t >= 1.

    For ``t >= 1`` this is ``2 Tr(a (x^(2^t+1) + sum_{i in x} xi^(i(2^t+1))))``.
    """
    _check_t(field, t)
    if t == 0:
        return kerdock_values(field, rows)
    x = _rows(field, rows)
    k = (1 << t) + 1
    c = field.pow_array(x, k) ^ field.linear_combination(
        [field.xi_pow(i * k) for i in range(field.m)], x
    )
    return (2 * _trace_products(field, c)).astype(np.uint8)


def dg_values(field: GF2m, coeffs: Sequence[int], rows=None) -> np.ndarray:
    """Vector ``x -> x P x^T mod 4`` for the single DG matrix named by coeffs."""
    x = _rows(field, rows)
    out = np.zeros(len(x), dtype=np.int64)
    for t, a in enumerate(coeffs):
        if a:
            out += form_values_for(field, t, int(a), x)
    return (out % 4).astype(np.uint8)


def form_values_for(field: GF2m, t: int, a: int, x: np.ndarray) -> np.ndarray:
    """``x P^t(a) x^T mod 4`` for one coefficient a over the rows x."""
    _check_t(field, t)
    x = np.asarray(x, dtype=np.int64)
    if t == 0:
        diag = int(kerdock_diagonals(field)[a])
        lin = np.bitwise_count(x & diag).astype(np.int64)
        tau = field.trace_functional(a)
        cross = np.bitwise_count(_pair_sums(field)[x] & tau).astype(np.int64) & 1
        return (lin + 2 * cross) % 4
    k = (1 << t) + 1
    c = field.pow_array(x, k) ^ field.linear_combination(
        [field.xi_pow(i * k) for i in range(field.m)], x
    )
    tau = field.trace_functional(a)
    return 2 * (np.bitwise_count(c & tau).astype(np.int64) & 1)
