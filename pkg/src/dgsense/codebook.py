"""Delsarte-Goethals frames and sieves as implicit complex matrices.

Rows are indexed by binary m-tuples x (as ints), columns by coefficient
tuples ``(a_0, ..., a_r)`` and, for frames, an offset ``b``. The column
index is the little-endian concatenation ``a_0 | a_1 | ... | a_r | b`` of
m-bit fields, so ``a_0`` varies fastest.

Entry ``(x, (P, b))`` is ``i^(x P x^T + 2 b x^T) / sqrt(N)`` where N is the
number of retained rows. Because only ``P^0`` has a diagonal, the Z4
exponent splits into one table per order t and the operator factorises
into a product of small ``2^m x N`` kernels, which is how
:class:`Codebook` applies it without materialising the matrix.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .dgset import form_values, form_values_for, max_order
from .gf2m import FieldError, GF2m, get_field

__all__ = [
    "CodebookSpec",
    "Codebook",
    "CodebookFormatError",
    "SizeBudgetError",
    "DENSE_BUDGET",
    "FRAME",
    "SIEVE",
    "column",
    "build_dense",
    "apply",
    "apply_adjoint",
    "exclude_power_rows",
    "power_rows",
    "with_excluded_rows",
    "serialize",
    "deserialize",
    "digest",
    "save_spec",
    "load_spec",
    "export_dense_csv",
]

FRAME = "frame"
SIEVE = "sieve"
_VARIANT_CODES = {FRAME: 0, SIEVE: 1}
_MAGIC = b"DGCS"
_VERSION = 1
_HEADER = struct.Struct("<4sHBBBIH")

DENSE_BUDGET = 2**28
_UNITS = np.array([1, 1j, -1, -1j], dtype=np.complex128)


class CodebookFormatError(ValueError):
    """Malformed or unsupported codebook-spec file."""


class SizeBudgetError(MemoryError):
    """Requested dense object exceeds the configured entry budget."""


@dataclass(frozen=True)
class CodebookSpec:
    m: int
    r: int
    variant: str = SIEVE
    excluded_rows: tuple[int, ...] = ()
    primitive_poly: int | None = None

    def __post_init__(self):
        if self.variant not in _VARIANT_CODES:
            raise ValueError(f"variant must be 'frame' or 'sieve', got {self.variant!r}")
        field_ = get_field(self.m, self.primitive_poly)  # validates m and the polynomial
        if self.primitive_poly is None:
            object.__setattr__(self, "primitive_poly", field_.poly)
        if not 0 <= self.r <= max_order(self.m):
            raise FieldError(f"r must satisfy 0 <= r <= {max_order(self.m)} for m={self.m}")
        rows = tuple(sorted(int(x) for x in self.excluded_rows))
        if len(set(rows)) != len(rows):
            raise ValueError("excluded_rows contains duplicates")
        if rows and not (0 <= rows[0] and rows[-1] < 1 << self.m):
            raise ValueError("excluded row index out of range")
        if len(rows) >= 1 << self.m:
            raise ValueError("cannot exclude every row")
        object.__setattr__(self, "excluded_rows", rows)

    @property
    def field(self) -> GF2m:
        return get_field(self.m, self.primitive_poly)

    @property
    def rows(self) -> np.ndarray:
        """Retained row labels x, ascending."""
        keep = np.ones(1 << self.m, dtype=bool)
        keep[list(self.excluded_rows)] = False
        return np.flatnonzero(keep).astype(np.int64)

    @property
    def n_rows(self) -> int:
        return (1 << self.m) - len(self.excluded_rows)

    @property
    def n_cols(self) -> int:
        extra = 1 if self.variant == FRAME else 0
        return 1 << ((self.r + 1 + extra) * self.m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.n_rows)

    @property
    def redundancy(self) -> float:
        return self.n_cols / self.n_rows

    def decode(self, col_index: int) -> tuple[tuple[int, ...], int]:
        """Column index -> ((a_0, ..., a_r), b)."""
        if not 0 <= col_index < self.n_cols:
            raise IndexError(f"column {col_index} out of range [0, {self.n_cols})")
        mask = (1 << self.m) - 1
        coeffs = tuple((col_index >> (t * self.m)) & mask for t in range(self.r + 1))
        b = col_index >> ((self.r + 1) * self.m) if self.variant == FRAME else 0
        return coeffs, b

    def encode(self, coeffs: Sequence[int], b: int = 0) -> int:
        if len(coeffs) != self.r + 1:
            raise ValueError("need r+1 coefficients")
        if b and self.variant == SIEVE:
            raise ValueError("sieve columns have b = 0")
        idx = 0
        for t, a in enumerate(coeffs):
            idx |= int(a) << (t * self.m)
        return idx | (int(b) << ((self.r + 1) * self.m))

    def label(self) -> str:
        tag = f"DG({self.m},{self.r}) {self.variant}"
        return tag + (f" N={self.n_rows}" if self.excluded_rows else "")


def power_rows(m: int) -> tuple[int, ...]:
    """The row 0 and the m unit vectors."""
    return (0,) + tuple(1 << j for j in range(m))


def with_excluded_rows(spec: CodebookSpec, rows: Sequence[int]) -> CodebookSpec:
    """Spec with ``rows`` added to its exclusions (idempotent)."""
    return replace(spec, excluded_rows=tuple(sorted(set(spec.excluded_rows) | set(map(int, rows)))))


def exclude_power_rows(spec: CodebookSpec) -> CodebookSpec:
    if spec.variant != SIEVE:
        raise ValueError("power-row exclusion applies to sieves")
    return with_excluded_rows(spec, power_rows(spec.m))


def column(spec: CodebookSpec, col_index: int) -> np.ndarray:
    """Z4 exponents (uint8) of one column over the retained rows."""
    coeffs, b = spec.decode(col_index)
    x = spec.rows
    q = np.zeros(len(x), dtype=np.int64)
    for t, a in enumerate(coeffs):
        if a:
            q += form_values_for(spec.field, t, a, x)
    q += 2 * np.bitwise_count(x & b).astype(np.int64)
    return (q % 4).astype(np.uint8)


class Codebook:
    """Implicit linear operator for a DG frame or sieve.

    The per-order kernels ``K_t[a, x] = i^(x P^t(a) x^T)`` (and the Walsh
    kernel for frames) are built lazily; ``apply`` contracts them one
    axis at a time, so memory stays at ``O(C N / 2^m)``.
    """

    def __init__(self, spec: CodebookSpec):
        self.spec = spec

    def __repr__(self):
        return f"Codebook({self.spec.label()}, shape={self.shape})"

    @property
    def shape(self) -> tuple[int, int]:
        return self.spec.shape

    @cached_property
    def exponent_tables(self) -> list[np.ndarray]:
        """Z4 tables ``[a, x]``, one per contracted axis, innermost first."""
        spec = self.spec
        x = spec.rows
        tables = [form_values(spec.field, t, x) for t in range(spec.r + 1)]
        if spec.variant == FRAME:
            b = np.arange(1 << spec.m, dtype=np.int64)
            tables.append((2 * (np.bitwise_count(b[:, None] & x[None, :]) & 1)).astype(np.uint8))
        return tables

    @cached_property
    def kernels(self) -> list[np.ndarray]:
        return [_UNITS[T] for T in self.exponent_tables]

    @cached_property
    def _adjoint_kernels(self) -> tuple[np.ndarray, list[np.ndarray]]:
        K = self.kernels
        return np.ascontiguousarray(K[0].conj().T), [Kt.conj() for Kt in K[1:]]

    def _check(self, v, n: int, name: str) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim < 1 or v.shape[-1] != n:
            raise ValueError(f"{name} expects trailing dimension {n}, got shape {v.shape}")
        return v.astype(np.complex128, copy=False)

    def apply(self, v) -> np.ndarray:
        """``Phi @ v``; leading axes of ``v`` are treated as a batch."""
        N, C = self.shape
        v = self._check(v, C, "apply")
        K = self.kernels
        S = 1 << self.spec.m
        W = v.reshape(v.shape[:-1] + (S,) * len(K)) @ K[0]
        for Kt in K[1:]:
            W = np.einsum("...ax,ax->...x", W, Kt)
        return W * self.spec.scale

    def apply_adjoint(self, u) -> np.ndarray:
        """``Phi^H @ u``; leading axes of ``u`` are treated as a batch."""
        N, C = self.shape
        u = self._check(u, N, "apply_adjoint")
        K0H, rest = self._adjoint_kernels
        W = u
        for Kt in reversed(rest):
            W = W[..., None, :] * Kt
        W = W @ K0H
        return W.reshape(u.shape[:-1] + (C,)) * self.spec.scale

    def column(self, col_index: int) -> np.ndarray:
        return _UNITS[column(self.spec, col_index)] * self.spec.scale

    def columns(self, cols) -> np.ndarray:
        """Dense ``N x len(cols)`` block of selected columns."""
        cols = np.asarray(cols, dtype=np.int64)
        S = 1 << self.spec.m
        q = np.zeros((self.shape[0], len(cols)), dtype=np.int64)
        for j, T in enumerate(self.exponent_tables):
            q += T[(cols // S**j) % S].T
        return _UNITS[q % 4] * self.spec.scale

    def to_dense(self, budget: int = DENSE_BUDGET) -> np.ndarray:
        N, C = self.shape
        if N * C > budget:
            raise SizeBudgetError(
                f"dense {N}x{C} matrix exceeds the budget of {budget} entries; use apply/apply_adjoint"
            )
        tables = self.exponent_tables
        q = tables[0].T.astype(np.int64)
        for T in tables[1:]:
            q = (T.T[:, :, None] + q[:, None, :]).reshape(N, -1)
        return _UNITS[q % 4] * self.spec.scale


def build_dense(spec: CodebookSpec, budget: int = DENSE_BUDGET) -> np.ndarray:
    return Codebook(spec).to_dense(budget)


def apply(spec: CodebookSpec, v) -> np.ndarray:
    return Codebook(spec).apply(v)


def apply_adjoint(spec: CodebookSpec, u) -> np.ndarray:
    return Codebook(spec).apply_adjoint(u)


# -- serialisation ----------------------------------------------------------


def serialize(spec: CodebookSpec) -> bytes:
    head = _HEADER.pack(
        _MAGIC,
        _VERSION,
        spec.m,
        spec.r,
        _VARIANT_CODES[spec.variant],
        spec.primitive_poly,
        len(spec.excluded_rows),
    )
    return head + struct.pack(f"<{len(spec.excluded_rows)}H", *spec.excluded_rows)


def deserialize(data: bytes) -> CodebookSpec:
    if len(data) < _HEADER.size:
        raise CodebookFormatError("truncated header")
    magic, version, m, r, variant, poly, n_ex = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise CodebookFormatError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise CodebookFormatError(f"unsupported version {version}")
    names = {v: k for k, v in _VARIANT_CODES.items()}
    if variant not in names:
        raise CodebookFormatError(f"unknown variant code {variant}")
    body = data[_HEADER.size :]
    if len(body) != 2 * n_ex:
        raise CodebookFormatError("excluded-row block has the wrong length")
    rows = struct.unpack(f"<{n_ex}H", body)
    if list(rows) != sorted(set(rows)):
        raise CodebookFormatError("excluded rows must be sorted and unique")
    try:
        return CodebookSpec(m, r, names[variant], rows, poly)
    except (ValueError, FieldError) as exc:
        raise CodebookFormatError(str(exc)) from exc


def digest(spec: CodebookSpec) -> str:
    return hashlib.sha256(serialize(spec)).hexdigest()


def save_spec(spec: CodebookSpec, path) -> Path:
    path = Path(path)
    path.write_bytes(serialize(spec))
    return path


def load_spec(path) -> CodebookSpec:
    return deserialize(Path(path).read_bytes())


def export_dense_csv(matrix: np.ndarray, path) -> Path:
    """Row-major CSV with each complex entry written as two fields ``re,im``."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    flat = np.empty((matrix.shape[0], 2 * matrix.shape[1]))
    flat[:, 0::2] = matrix.real
    flat[:, 1::2] = matrix.imag
    path = Path(path)
    np.savetxt(path, flat, delimiter=",", fmt="%.17g")
    return path
