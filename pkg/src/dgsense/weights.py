"""Weight distributions of the zero-diagonal codes DG0(m, r) and MacWilliams counting.

For a zero-diagonal form P the Z4 value ``x P x^T`` is 0 or 2, so halving it
gives a binary word of length 2^m indexed by x. Two rows x, y satisfy (C1)
exactly when every codeword agrees on them, i.e. when ``e_x + e_y`` is a
weight-2 word of the dual code. MacWilliams turns the weight distribution
into that count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np

from .dgset import form_values, max_order
from .gf2m import FieldError, get_field

__all__ = [
    "WeightDistribution",
    "CountingError",
    "ClosedForm",
    "krawtchouk",
    "dg0_codewords",
    "enumerate_dg0_weights",
    "macwilliams_count",
    "c1_count_macwilliams",
    "closed_form_c1_count",
    "c1_pairs_bruteforce",
    "ENUM_MAX_LOG",
]

ENUM_MAX_LOG = 22


class CountingError(ArithmeticError):
    """A count that must be an exact integer was not."""


@dataclass(frozen=True)
class WeightDistribution:
    length: int
    counts: dict[int, int]

    @property
    def size(self) -> int:
        return sum(self.counts.values())

    @property
    def weights(self) -> list[int]:
        return sorted(w for w, c in self.counts.items() if c)

    def as_array(self) -> np.ndarray:
        out = np.zeros(self.length + 1, dtype=object)
        for w, c in self.counts.items():
            out[w] = c
        return out

    def to_dict(self) -> dict:
        return {"length": self.length, "counts": {str(w): c for w, c in sorted(self.counts.items())}}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightDistribution":
        return cls(int(d["length"]), {int(w): int(c) for w, c in d["counts"].items()})


def krawtchouk(l: int, z: int, N: int) -> int:
    """``K_l(z) = sum_j C(z, j) C(N - z, l - j) (-1)^j`` in exact integers."""
    if not (0 <= l <= N and 0 <= z <= N):
        raise ValueError("need 0 <= l, z <= N")
    return sum((-1) ** j * comb(z, j) * comb(N - z, l - j) for j in range(l + 1))


def dg0_codewords(m: int, r: int = 1, primitive_poly: int | None = None) -> list[np.ndarray]:
    """Per-order generator tables: entry ``[a, x]`` is ``(x P^t(a) x^T mod 4) / 2``."""
    F = get_field(m, primitive_poly)
    return [(form_values(F, t) // 2).astype(np.uint8) for t in range(1, r + 1)]


def enumerate_dg0_weights(
    m: int, r: int = 1, primitive_poly: int | None = None, *, cache_dir=None
) -> WeightDistribution:
    """Exact weight counts of the 2^(rm) binary words of DG0(m, r)."""
    if not 1 <= r <= max_order(m):
        raise FieldError(f"r must satisfy 1 <= r <= {max_order(m)}")
    if r * m > ENUM_MAX_LOG:
        raise ValueError(f"enumeration of 2^{r * m} codewords exceeds the bound 2^{ENUM_MAX_LOG}")
    poly = get_field(m, primitive_poly).poly
    cache = None
    if cache_dir is not None:
        cache = Path(cache_dir) / f"dg0_weights_m{m}_r{r}_{poly:x}.json"
        if cache.exists():
            return WeightDistribution.from_dict(json.loads(cache.read_text()))

    packed = [np.packbits(T, axis=1) for T in dg0_codewords(m, r, poly)]
    hist = np.zeros((1 << m) + 1, dtype=np.int64)
    inner = packed[0]
    # XOR in all combinations of the outer orders, one inner block at a time
    for outer in np.ndindex(*(1 << m,) * (r - 1)):
        word = inner
        for t, a in enumerate(outer, start=1):
            if a:
                word = word ^ packed[t][a]
        w = np.bitwise_count(word).sum(axis=1, dtype=np.int64)
        hist += np.bincount(w, minlength=(1 << m) + 1)
    dist = WeightDistribution(1 << m, {int(w): int(c) for w, c in enumerate(hist) if c})
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        cache.write_text(json.dumps(dist.to_dict()))
    return dist


def macwilliams_count(dist: WeightDistribution, l: int) -> int:
    """Number of weight-l words in the dual code."""
    total = sum(c * krawtchouk(l, w, dist.length) for w, c in dist.counts.items())
    q, rem = divmod(total, dist.size)
    if rem:
        raise CountingError(f"MacWilliams sum {total} is not divisible by the code size {dist.size}")
    return q


def c1_count_macwilliams(dist: WeightDistribution, r: int | None = None) -> int:
    """Pairs (x, x + e) satisfying (C1): weight-2 words of the dual code."""
    if r is not None and dist.size != dist.length**r:
        raise CountingError(f"expected 2^(rm) = {dist.length**r} codewords, got {dist.size}")
    return macwilliams_count(dist, 2)


@dataclass(frozen=True)
class ClosedForm:
    c1: int
    s: int
    t: int
    t_prime: int


def closed_form_c1_count(m: int, dist: WeightDistribution | None = None, primitive_poly=None) -> ClosedForm:
    """``2^m - 1 - s`` with s the number of words of weight 2^(m-1) (r = 1)."""
    if m % 2 == 0:
        raise FieldError("m must be odd")
    if dist is None:
        dist = enumerate_dg0_weights(m, 1, primitive_poly)
    half = 1 << (m - 1)
    dev = 1 << ((m - 1) // 2)
    s = dist.counts.get(half, 0)
    num = (1 << m) - 1 - s + m * dev
    if num % 2:
        raise CountingError("parity violation in the closed form for t")
    t = num // 2
    t_prime = t - m * dev
    if min(t, s, t_prime) < 0 or 1 + t + s + t_prime != dist.size:
        raise CountingError("closed-form counts are inconsistent with the code size")
    if dist.counts.get(half - dev, 0) != t or dist.counts.get(half + dev, 0) != t_prime:
        raise CountingError("closed-form t, t' disagree with the enumerated distribution")
    return ClosedForm((1 << m) - 1 - s, s, t, t_prime)


def c1_pairs_bruteforce(m: int, r: int = 1, primitive_poly: int | None = None) -> list[tuple[int, int]]:
    """Row pairs on which every DG0(m, r) word agrees, found by grouping columns."""
    tables = dg0_codewords(m, r, primitive_poly)
    # rows x agree on the whole code iff they agree on each generator table
    sig = np.concatenate([np.packbits(T, axis=0) for T in tables], axis=0).T
    _, inv = np.unique(sig, axis=0, return_inverse=True)
    inv = inv.ravel()
    pairs = []
    for g in np.unique(inv):
        members = np.flatnonzero(inv == g).tolist()
        pairs += [(a, b) for i, a in enumerate(members) for b in members[i + 1 :]]
    return sorted(pairs)
