"""Frame geometry: coherence, spectral norm, tightness and random subdictionaries."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import hadamard

from .codebook import FRAME, Codebook, CodebookSpec
from .sieve import gram_rows_bruteforce

__all__ = [
    "welch_bound",
    "coherence_bound",
    "CoherenceResult",
    "coherence",
    "matrix_coherence",
    "PowerIterationResult",
    "power_iteration",
    "spectral_norm",
    "row_gram",
    "tight_residual",
    "FrameStats",
    "frame_stats",
    "SubdictStats",
    "subdict_stats",
    "gaussian_reference",
    "gaussian_member",
    "gaussian_subdict_stats",
]

logger = logging.getLogger(__name__)

_UNITS = np.array([1, 1j, -1, -1j], dtype=np.complex128)
EXHAUSTIVE_BUDGET = 2**36  # C * C * N multiply-adds


def welch_bound(N: int, C: int) -> float:
    return float(np.sqrt((C - N) / (N * (C - 1)))) if C > 1 else 0.0


def coherence_bound(spec: CodebookSpec) -> float:
    """``N^(r/m - 1/2)`` with N = 2^m."""
    return float(2.0 ** (spec.r - spec.m / 2))


def _as_matrix(A) -> np.ndarray | None:
    if isinstance(A, np.ndarray):
        return A
    return None


# -- coherence ---------------------------------------------------------------


@dataclass(frozen=True)
class CoherenceResult:
    value: float
    exhaustive: bool
    pairs_checked: int
    method: str

    def __float__(self):
        return self.value


def matrix_coherence(A: np.ndarray, block: int = 2048) -> float:
    """Exact worst-case coherence of a dense matrix with unit-norm columns."""
    C = A.shape[1]
    best = 0.0
    AH = A.conj().T
    for s in range(0, C, block):
        G = np.abs(AH @ A[:, s : s + block])
        idx = np.arange(s, min(C, s + block))
        G[idx, idx - s] = 0.0
        best = max(best, float(G.max()))
    return best


def _structured_frame_coherence(spec: CodebookSpec) -> float:
    # The frame's Z4 code is additive, so every inner product equals
    # <phi_{0,0}, phi_{P,b}> for some (P, b); scan P != 0 with a Walsh transform.
    cb = Codebook(spec)
    sieve = CodebookSpec(spec.m, spec.r, "sieve", spec.excluded_rows, spec.primitive_poly)
    N = spec.n_rows
    H = hadamard(1 << spec.m).astype(np.float64)[:, spec.rows]
    best = 0.0
    C = sieve.n_cols
    for s in range(1, C, 4096):
        cols = np.arange(s, min(C, s + 4096))
        block = Codebook(sieve).columns(cols)  # N x B, already scaled by 1/sqrt(N)
        vals = np.abs(H @ block) / np.sqrt(N)
        best = max(best, float(vals.max()))
    del cb
    return best


def coherence(
    A,
    mode: str = "auto",
    *,
    n_pairs: int = 10**6,
    seed: int = 0,
) -> CoherenceResult:
    """Worst-case coherence ``max_{i != j} |<phi_i, phi_j>|``.

    ``A`` is a CodebookSpec or a dense matrix. Modes: ``"exhaustive"``
    (all pairs, blocked Gram), ``"structured"`` (frames with all rows: uses
    additivity of the code), ``"sampled"`` (``n_pairs`` uniform random pairs;
    the result is a lower bound) and ``"auto"``.
    """
    if isinstance(A, CodebookSpec):
        spec = A
        N, C = spec.shape
        if mode == "auto":
            if spec.variant == FRAME and not spec.excluded_rows and C * C * N > EXHAUSTIVE_BUDGET:
                mode = "structured"
            elif C * C * N <= EXHAUSTIVE_BUDGET:
                mode = "exhaustive"
            else:
                mode = "sampled"
        if mode == "structured":
            if spec.variant != FRAME or spec.excluded_rows:
                raise ValueError("structured coherence needs a frame with all rows")
            return CoherenceResult(_structured_frame_coherence(spec), True, C * (C - 1) // 2, mode)
        if mode == "exhaustive":
            return CoherenceResult(matrix_coherence(Codebook(spec).to_dense()), True, C * (C - 1) // 2, mode)
        if mode == "sampled":
            cb = Codebook(spec)
            return _sampled(lambda idx: cb.columns(idx), C, n_pairs, seed)
        raise ValueError(f"unknown coherence mode {mode!r}")

    A = np.asarray(A)
    C = A.shape[1]
    if mode in ("auto", "exhaustive"):
        return CoherenceResult(matrix_coherence(A), True, C * (C - 1) // 2, "exhaustive")
    if mode == "sampled":
        return _sampled(lambda idx: A[:, idx], C, n_pairs, seed)
    raise ValueError(f"unknown coherence mode {mode!r}")


def _sampled(columns, C: int, n_pairs: int, seed: int, batch: int = 50_000) -> CoherenceResult:
    rng = np.random.default_rng(seed)
    best = 0.0
    done = 0
    while done < n_pairs:
        b = min(batch, n_pairs - done)
        i = rng.integers(0, C, b)
        j = (i + rng.integers(1, C, b)) % C  # j != i
        ip = np.abs(np.einsum("nb,nb->b", columns(i).conj(), columns(j)))
        best = max(best, float(ip.max()))
        done += b
    return CoherenceResult(best, False, n_pairs, "sampled")


# -- spectral norm -------------------------------------------------------------


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    iterations: int
    converged: bool
    delta: float


def power_iteration(matvec, n: int, *, tol: float = 1e-12, max_iter: int = 10_000, seed: int = 0):
    """Largest eigenvalue of a Hermitian PSD operator given by ``matvec``.

    Stops when the change in the Rayleigh quotient falls below ``tol``
    (relative to its magnitude) or after ``max_iter`` steps.
    """
    v = np.random.default_rng(seed).standard_normal(n).astype(np.complex128)
    v /= np.linalg.norm(v)
    rq = 0.0
    delta = np.inf
    for it in range(1, max_iter + 1):
        w = matvec(v)
        new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return PowerIterationResult(0.0, it, True, 0.0)
        v = w / nw
        delta = abs(new - rq)
        rq = new
        if delta <= tol * max(abs(rq), 1.0):
            return PowerIterationResult(rq, it, True, delta)
    logger.warning("power iteration did not converge: delta=%.3g after %d steps", delta, max_iter)
    return PowerIterationResult(rq, max_iter, False, delta)


def row_gram(A) -> np.ndarray:
    """``Phi Phi^H`` for a spec (exact character-sum product) or a dense matrix."""
    if isinstance(A, CodebookSpec):
        return gram_rows_bruteforce(A, method="product")
    A = np.asarray(A)
    return A @ A.conj().T


def spectral_norm(A, *, tol: float = 1e-12, max_iter: int = 10_000, full: bool = False):
    """Largest singular value via power iteration on the N x N row Gram."""
    G = row_gram(A)
    res = power_iteration(lambda v: G @ v, G.shape[0], tol=tol, max_iter=max_iter)
    out = PowerIterationResult(float(np.sqrt(res.value)), res.iterations, res.converged, res.delta)
    return out if full else out.value


def tight_residual(A) -> float:
    """``||Phi Phi^H - (C/N) I||_2``."""
    G = row_gram(A)
    N = G.shape[0]
    C = A.n_cols if isinstance(A, CodebookSpec) else np.asarray(A).shape[1]
    return float(np.linalg.norm(G - (C / N) * np.eye(N), 2))


@dataclass(frozen=True)
class FrameStats:
    label: str
    N: int
    C: int
    coherence: float
    coherence_exhaustive: bool
    spectral_norm: float
    tight_residual: float
    welch_bound: float
    coherence_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def frame_stats(spec: CodebookSpec, *, coherence_mode: str = "auto", n_pairs: int = 10**6, seed: int = 0) -> FrameStats:
    N, C = spec.shape
    coh = coherence(spec, coherence_mode, n_pairs=n_pairs, seed=seed)
    return FrameStats(
        label=spec.label(),
        N=N,
        C=C,
        coherence=coh.value,
        coherence_exhaustive=coh.exhaustive,
        spectral_norm=spectral_norm(spec),
        tight_residual=tight_residual(spec),
        welch_bound=welch_bound(N, C),
        coherence_bound=coherence_bound(spec),
    )


# -- random subdictionaries ----------------------------------------------------


@dataclass
class SubdictStats:
    k: int
    trials: int
    seed: int
    mean_hollow_gram_norm: float
    sem_hollow_gram_norm: float
    mean_nuclear_norm_over_k: float
    sem_nuclear_norm_over_k: float
    rank_deficient_fraction: float
    min_singular_value: float
    singular_value_histogram: tuple[np.ndarray, np.ndarray] | None = None

    def row(self) -> dict:
        return {
            "k": self.k,
            "mean_hollow_norm": self.mean_hollow_gram_norm,
            "mean_nuclear_over_k": self.mean_nuclear_norm_over_k,
            "rank_deficient_fraction": self.rank_deficient_fraction,
        }


def _column_source(A):
    if isinstance(A, CodebookSpec):
        cb = Codebook(A)
        try:
            return cb.to_dense(), A.n_cols
        except MemoryError:
            return cb.columns, A.n_cols
    A = np.asarray(A)
    return A, A.shape[1]


def subdict_stats(
    A,
    k: int,
    trials: int,
    seed: int,
    *,
    rank_tol: float = 1e-8,
    bins: int = 40,
    batch: int = 500,
) -> SubdictStats:
    """Statistics of ``Phi_S`` for uniformly random k-subsets S of the columns."""
    src, C = _column_source(A)
    if not 1 <= k <= C:
        raise ValueError("need 1 <= k <= C")
    rng = np.random.default_rng(seed)
    hollow, nuclear, smin = [], [], []
    sv_all = []
    for start in range(0, trials, batch):
        b = min(batch, trials - start)
        idx = np.stack([rng.choice(C, size=k, replace=False) for _ in range(b)])
        if callable(src):
            cols = src(idx.ravel()).T.reshape(b, k, -1)
        else:
            cols = np.moveaxis(src[:, idx], 0, -1)  # b x k x N
        G = cols.conj() @ np.swapaxes(cols, 1, 2)
        ev = np.linalg.eigvalsh(G)
        hollow.append(np.abs(ev - 1.0).max(axis=1))
        sv = np.sqrt(np.clip(ev, 0, None))
        nuclear.append(sv.sum(axis=1) / k)
        smin.append(sv.min(axis=1))
        sv_all.append(sv.ravel())
    hollow = np.concatenate(hollow)
    nuclear = np.concatenate(nuclear)
    smin = np.concatenate(smin)
    sv_all = np.concatenate(sv_all)
    sem = lambda a: float(a.std(ddof=1) / np.sqrt(len(a))) if len(a) > 1 else 0.0
    return SubdictStats(
        k=k,
        trials=trials,
        seed=seed,
        mean_hollow_gram_norm=float(hollow.mean()),
        sem_hollow_gram_norm=sem(hollow),
        mean_nuclear_norm_over_k=float(nuclear.mean()),
        sem_nuclear_norm_over_k=sem(nuclear),
        rank_deficient_fraction=float(np.mean(smin < rank_tol)),
        min_singular_value=float(smin.min()),
        singular_value_histogram=np.histogram(sv_all, bins=bins, range=(0.0, 2.0)),
    )


def gaussian_member(N: int, C: int, index: int, seed: int = 0, dtype=np.float64) -> np.ndarray:
    """Member ``index`` of :func:`gaussian_reference` without building the rest."""
    child = np.random.SeedSequence(seed).spawn(index + 1)[index]
    G = np.random.default_rng(child).standard_normal((N, C))
    G /= np.linalg.norm(G, axis=0)
    return G.astype(dtype)


def gaussian_reference(N: int, C: int, count: int = 10, seed: int = 0, dtype=np.float64) -> list[np.ndarray]:
    """``count`` iid standard-normal N x C matrices with unit-norm columns."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return [gaussian_member(N, C, i, seed, dtype) for i in range(count)]


def gaussian_subdict_stats(ensemble, k: int, trials: int, seed: int) -> dict:
    """Median over the ensemble of per-matrix subdictionary means."""
    per = [subdict_stats(G, k, trials, seed + 7919 * i) for i, G in enumerate(ensemble)]
    hollow = np.array([s.mean_hollow_gram_norm for s in per])
    nuc = np.array([s.mean_nuclear_norm_over_k for s in per])
    med = int(np.argsort(hollow)[len(hollow) // 2])
    return {
        "k": k,
        "median_hollow_norm": float(np.median(hollow)),
        "sem_hollow_norm": per[med].sem_hollow_gram_norm,
        "median_nuclear_over_k": float(np.median(nuc)),
        "rank_deficient_fraction": float(np.mean([s.rank_deficient_fraction for s in per])),
        "per_matrix": per,
    }
