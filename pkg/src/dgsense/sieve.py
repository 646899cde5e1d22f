"""Non-orthogonal rows of DG sieves.

For rows x and y = x + e of a DG(m, r) sieve, the row inner product factors
over the orders t = 0..r. The factors with t >= 1 are nonzero exactly when

    (C1)  z + z^(2^t) = 1 + sum_j e_j (xi^j / e)^(2^t + 1),   z = x / e,

and the Kerdock factor is the character sum

    (C2)  sum_a i^(e P^0(a) (2x + e)^T) != 0.

The t = 1 equation is an Artin-Schreier equation solved by the half-trace,
so the whole search is one sweep over the 2^m - 1 offsets e. A brute-force
row Gram serves as the oracle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .codebook import Codebook, CodebookSpec, SIEVE, SizeBudgetError, with_excluded_rows
from .dgset import form_values, kerdock_diagonals, max_order
from .gf2m import FieldError, GF2m, get_field

__all__ = [
    "RowPair",
    "DedupeReport",
    "c1_rhs",
    "c1_lambda",
    "c1_solve",
    "c1_consistency",
    "c2_sum",
    "c2_check",
    "c1_offsets",
    "find_nonorthogonal_pairs",
    "rows_to_delete",
    "min_vertex_cover",
    "gram_rows_bruteforce",
    "pairs_from_gram",
    "pair_inner_product",
    "GRAM_MAX_LOG_COLS",
]

logger = logging.getLogger(__name__)

GRAM_MAX_LOG_COLS = 22
_UNITS = np.array([1, 1j, -1, -1j], dtype=np.complex128)


@dataclass(frozen=True)
class RowPair:
    x: int
    e: int
    inner_product: complex

    @property
    def y(self) -> int:
        return self.x ^ self.e


@dataclass
class DedupeReport:
    m: int
    r: int
    primitive_poly: int
    pairs: list[RowPair]
    rows_to_delete: list[int]
    resulting_N: int
    is_tight_after: bool
    policy: str = "involved"
    excluded_rows: tuple[int, ...] = ()
    c1_pairs: int = 0
    tight_residual: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def deletion_fraction(self) -> float:
        return len(self.rows_to_delete) / (1 << self.m)

    def reduced_spec(self) -> CodebookSpec:
        spec = CodebookSpec(self.m, self.r, SIEVE, self.excluded_rows, self.primitive_poly)
        return with_excluded_rows(spec, self.rows_to_delete)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "r": self.r,
            "primitive_poly": hex(self.primitive_poly),
            "policy": self.policy,
            "excluded_rows": list(self.excluded_rows),
            "c1_pairs": self.c1_pairs,
            "n_pairs": len(self.pairs),
            "pairs": [
                {
                    "x": p.x,
                    "y": p.y,
                    "e": p.e,
                    "inner_product": [p.inner_product.real, p.inner_product.imag],
                }
                for p in self.pairs
            ],
            "rows_to_delete": self.rows_to_delete,
            "n_deleted": len(self.rows_to_delete),
            "deletion_fraction": self.deletion_fraction,
            "resulting_N": self.resulting_N,
            "is_tight_after": self.is_tight_after,
            "tight_residual": self.tight_residual,
            **self.extra,
        }


# -- field equations ----------------------------------------------------------


def _power_sums(F: GF2m, k: int) -> list[int]:
    return [F.xi_pow(j * k) for j in range(F.m)]


def c1_rhs(F: GF2m, e, t: int):
    """``1 + sum_j e_j xi^(j k) / e^k`` with ``k = 2^t + 1`` (scalar or array e)."""
    k = (1 << t) + 1
    if np.ndim(e) == 0:
        e = int(e)
        if e == 0:
            raise FieldError("offset e must be nonzero")
        num = 0
        for j, c in enumerate(_power_sums(F, k)):
            if e >> j & 1:
                num ^= c
        return 1 ^ F.div(num, F.pow(e, k))
    e = np.asarray(e, dtype=np.int64)
    if np.any(e == 0):
        raise FieldError("offset e must be nonzero")
    num = F.linear_combination(_power_sums(F, k), e)
    return 1 ^ F.mul_array(num, F.inverse_array(F.pow_array(e, k)))


def c1_lambda(F: GF2m, e):
    """The Artin-Schreier constant of the t = 1 condition."""
    return c1_rhs(F, e, 1)


def c1_solve(F: GF2m, e: int, r: int) -> list[int]:
    """All x for which (x, x + e) satisfies (C1) for t = 1..r."""
    if r < 1:
        raise ValueError("r must be at least 1")
    roots = F.solve_artin_schreier(c1_lambda(F, e))
    if roots is None:
        return []
    z = roots[0]
    for t in range(2, r + 1):
        if z ^ F.frob_pow(z, t) != c1_rhs(F, e, t):
            return []
    return sorted(F.mul(e, zz) for zz in roots)


def c1_consistency(F: GF2m, e: int, *, printed: bool = False) -> bool:
    """Compatibility of the t = 1 and t = 2 conditions without solving.

    With ``z + z^2 = lam`` the t = 2 condition reads ``lam + lam^2 = alpha``,
    where alpha is the t = 2 right-hand side. ``printed=True`` instead tests
    ``half_trace(alpha) == lam``, which only recognises one of the two roots
    of ``w + w^2 = alpha``.
    """
    lam = c1_lambda(F, e)
    alpha = c1_rhs(F, e, 2)
    if printed:
        return F.half_trace(alpha) == lam
    return F.trace(lam) == 0 and lam ^ F.square(lam) == alpha


class _KerdockSums:
    """Exact evaluation of the C2 sums for one field."""

    def __init__(self, F: GF2m):
        self.F = F
        self.a = np.arange(F.size, dtype=np.int64)
        self.diag = kerdock_diagonals(F)

    def pair_sum(self, e: int, x: int) -> tuple[int, int]:
        F = self.F
        # e P^0(a) e^T + 2 e P^0(a) x^T = popcount(e & D(a)) + 2 Tr(a (sigma2(e) + e x))
        sig = 0
        bits = [j for j in range(F.m) if e >> j & 1]
        for p, i in enumerate(bits):
            for j in bits[p + 1 :]:
                sig ^= F.xi_pow(i + j)
        tau = F.trace_functional(sig ^ F.mul(e, x))
        q = np.bitwise_count(self.diag & e).astype(np.int64) + 2 * (
            np.bitwise_count(self.a & tau).astype(np.int64) & 1
        )
        counts = np.bincount(q % 4, minlength=4)
        return int(counts[0] - counts[2]), int(counts[1] - counts[3])


def c2_sum(F: GF2m, x: int, e: int) -> complex:
    """``sum_a i^(e P^0(a) (2x + e)^T)``, evaluated exactly."""
    if e == 0:
        raise FieldError("offset e must be nonzero")
    re, im = _KerdockSums(F).pair_sum(int(e), int(x))
    return complex(re, im)


def c2_check(F: GF2m, x: int, e: int) -> bool:
    return c2_sum(F, x, e) != 0


def c1_offsets(F: GF2m, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (C1) sweep: offsets e that pass and the root x for each."""
    e = np.arange(1, F.size, dtype=np.int64)
    lam = c1_lambda(F, e)
    ok = F.trace_array(lam) == 0
    z = F.half_trace_array(lam)
    for t in range(2, r + 1):
        ok &= (z ^ F.pow_array(z, 1 << t)) == c1_rhs(F, e, t)
    e, z = e[ok], z[ok]
    return e, F.mul_array(e, z)


# -- pair search and deletion ---------------------------------------------------


def pair_inner_product(spec: CodebookSpec, x: int, y: int) -> complex:
    """Exact ``(Phi Phi^H)[x, y]`` from the per-order character sums."""
    F = spec.field
    rows = np.array([x, y], dtype=np.int64)
    total = complex(1.0)
    for t in range(spec.r + 1):
        T = form_values(F, t, rows).astype(np.int64)
        total *= _UNITS[(T[:, 0] - T[:, 1]) % 4].sum()
    return total / spec.n_rows


def min_vertex_cover(edges: Sequence[tuple[int, int]]) -> list[int]:
    """Exact minimum vertex cover by branching, solved per connected component."""
    if not edges:
        return []
    nodes = sorted({v for e in edges for v in e})
    index = {v: i for i, v in enumerate(nodes)}
    ij = np.array([(index[a], index[b]) for a, b in edges])
    graph = coo_matrix((np.ones(len(ij)), (ij[:, 0], ij[:, 1])), shape=(len(nodes),) * 2)
    _, labels = connected_components(graph, directed=False)
    cover: list[int] = []
    for comp in np.unique(labels):
        comp_edges = [(a, b) for a, b in edges if labels[index[a]] == comp]
        cover.extend(_cover_component(comp_edges))
    return sorted(cover)


def _cover_component(edges: list[tuple[int, int]]) -> list[int]:
    adj: dict[int, set[int]] = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    best = sorted(adj)

    def solve(adj: dict[int, set[int]], chosen: list[int]):
        nonlocal best
        if len(chosen) >= len(best):
            return
        live = {v: n for v, n in adj.items() if n}
        if not live:
            best = sorted(chosen)
            return
        v = max(live, key=lambda u: len(live[u]))
        if len(live[v]) == 1:
            # a leaf edge: taking the neighbour is never worse
            v = next(iter(live[v]))
        # branch 1: take v
        solve(_remove(live, [v]), chosen + [v])
        # branch 2: take all neighbours of v
        nbrs = sorted(live[v])
        if len(nbrs) > 1:
            solve(_remove(live, nbrs), chosen + nbrs)

    solve(adj, [])
    return best


def _remove(adj: dict[int, set[int]], drop: list[int]) -> dict[int, set[int]]:
    gone = set(drop)
    return {v: n - gone for v, n in adj.items() if v not in gone}


def rows_to_delete(pairs: Sequence[RowPair], policy: str = "involved") -> list[int]:
    """Rows removed to eliminate every non-orthogonal pair.

    ``"involved"`` deletes every row that occurs in some pair. ``"cover"``
    keeps one endpoint of each pair when pairs are disjoint and otherwise
    deletes a minimum vertex cover of the pair graph.
    """
    edges = [(p.x, p.y) for p in pairs]
    if policy == "involved":
        return sorted({v for e in edges for v in e})
    if policy == "cover":
        touched = [v for e in edges for v in e]
        if len(touched) == len(set(touched)):
            return sorted(max(e) for e in edges)
        return min_vertex_cover(edges)
    raise ValueError(f"unknown deletion policy {policy!r}")


def find_nonorthogonal_pairs(
    m: int,
    r: int,
    *,
    primitive_poly: int | None = None,
    policy: str = "involved",
    excluded_rows: Sequence[int] = (),
    verify: bool | None = None,
) -> DedupeReport:
    """Non-orthogonal row pairs of a sieve, found by sweeping all offsets e.

    Pairs with an endpoint in ``excluded_rows`` are ignored. ``verify``
    computes the numerical tight-frame residual of the reduced sieve
    (default: when m <= 9).
    """
    if not 1 <= r <= max_order(m):
        raise FieldError(f"r must satisfy 1 <= r <= {max_order(m)}")
    F = get_field(m, primitive_poly)
    excluded = tuple(sorted(set(int(v) for v in excluded_rows)))
    base = CodebookSpec(m, r, SIEVE, excluded, F.poly)
    ex_set = set(excluded)

    e_arr, x_arr = c1_offsets(F, r)
    sums = _KerdockSums(F)
    pairs = []
    for e, x in zip(e_arr.tolist(), x_arr.tolist()):
        x, y = min(x, x ^ e), max(x, x ^ e)
        if x in ex_set or y in ex_set:
            continue
        if sums.pair_sum(e, x) == (0, 0):
            continue
        pairs.append(RowPair(x, e, pair_inner_product(base, x, y)))
    pairs.sort(key=lambda p: (p.x, p.y))
    logger.info("m=%d r=%d: %d C1 offsets, %d non-orthogonal pairs", m, r, len(e_arr), len(pairs))

    deleted = rows_to_delete(pairs, policy)
    gone = set(deleted)
    tight = not any(p.x not in gone and p.y not in gone for p in pairs)
    report = DedupeReport(
        m=m,
        r=r,
        primitive_poly=F.poly,
        pairs=pairs,
        rows_to_delete=deleted,
        resulting_N=base.n_rows - len(deleted),
        is_tight_after=tight,
        policy=policy,
        excluded_rows=excluded,
        c1_pairs=len(e_arr),
    )
    if verify is None:
        verify = (r + 1) * m <= 20 and m <= 9
    if verify:
        spec = report.reduced_spec()
        G = gram_rows_bruteforce(spec, method="product")
        resid = float(np.linalg.norm(G - spec.redundancy * np.eye(spec.n_rows), 2))
        report.tight_residual = resid
        report.is_tight_after = tight and resid <= 1e-8
    return report


# -- brute-force oracle -------------------------------------------------------------


def gram_rows_bruteforce(
    spec: CodebookSpec, method: str = "direct", *, chunk: int = 1 << 12
) -> np.ndarray:
    """Exact row Gram ``Phi Phi^H`` (diagonal C/N).

    ``"direct"`` sums outer products over column blocks of the dense
    matrix; ``"product"`` multiplies the per-order character sums.
    """
    if method not in ("direct", "product"):
        raise ValueError(f"unknown method {method!r}")
    cb = Codebook(spec)
    N, C = spec.shape
    if method == "product":
        G = np.ones((N, N), dtype=np.complex128)
        for K in cb.kernels:
            G *= K.T @ K.conj()
        return G / N
    # only the direct route touches every column
    log_cols = int(np.log2(C))
    if log_cols > GRAM_MAX_LOG_COLS:
        raise SizeBudgetError(f"row Gram needs 2^{log_cols} columns; the bound is 2^{GRAM_MAX_LOG_COLS}")
    G = np.zeros((N, N), dtype=np.complex128)
    for start in range(0, C, chunk):
        block = cb.columns(np.arange(start, min(C, start + chunk)))
        G += block @ block.conj().T
    return G


def pairs_from_gram(G: np.ndarray, rows: Sequence[int], tol: float = 1e-8) -> set[tuple[int, int]]:
    """Off-diagonal support of a row Gram, as labelled pairs (x < y)."""
    rows = np.asarray(rows)
    i, j = np.nonzero(np.triu(np.abs(G) > tol, k=1))
    return {(int(min(rows[a], rows[b])), int(max(rows[a], rows[b]))) for a, b in zip(i, j)}
