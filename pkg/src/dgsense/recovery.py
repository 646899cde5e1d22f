"""Sparse recovery: signal and noise generation, complex LASSO by SpaRSA, 0-1 loss.

The LASSO objective is ``0.5 ||f - A x||^2 + lam ||x||_1`` over complex x
(real x when A is real). SpaRSA takes proximal-gradient steps whose length is
set by a Barzilai-Borwein rule and accepts them under a nonmonotone
sufficient-decrease test over a short window of past objectives.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .codebook import Codebook, CodebookSpec

__all__ = [
    "SolverError",
    "SparseSignal",
    "Measurement",
    "RecoveryResult",
    "as_operator",
    "generate_signal",
    "measure",
    "select_lambda",
    "support_loss",
    "soft_threshold",
    "lasso_objective",
    "kkt_residual",
    "lasso_solve",
    "lasso_solve_batch",
    "top_k",
    "lasso_cd",
    "NOISELESS_LAMBDA",
]

logger = logging.getLogger(__name__)

NOISELESS_LAMBDA = 1e-9


class SolverError(RuntimeError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


@dataclass(frozen=True)
class SparseSignal:
    C: int
    support: np.ndarray
    values: np.ndarray

    @property
    def k(self) -> int:
        return len(self.support)

    def dense(self, dtype=np.float64) -> np.ndarray:
        x = np.zeros(self.C, dtype=dtype)
        x[self.support] = self.values
        return x


@dataclass(frozen=True)
class Measurement:
    f: np.ndarray
    sigma_sq: float


@dataclass
class RecoveryResult:
    estimate: np.ndarray
    iterations: int
    objective_trace: list[float]
    wall_time: float
    converged: bool
    lam: float
    stages: int = 1
    recovered_support: np.ndarray | None = None
    zero_one_loss: float | None = None
    extra: dict = field(default_factory=dict)

    def score(self, truth: SparseSignal) -> "RecoveryResult":
        self.recovered_support = top_k(self.estimate, truth.k)
        self.zero_one_loss = support_loss(truth, self.estimate, truth.k)
        return self

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "stages": self.stages,
            "converged": self.converged,
            "lambda": self.lam,
            "wall_time_s": self.wall_time,
            "final_objective": self.objective_trace[-1] if self.objective_trace else None,
            "recovered_support": None if self.recovered_support is None else self.recovered_support.tolist(),
            "zero_one_loss": self.zero_one_loss,
            **self.extra,
        }


def as_operator(A) -> LinearOperator:
    """LinearOperator view of a dense matrix, a Codebook or a CodebookSpec."""
    if isinstance(A, CodebookSpec):
        A = Codebook(A)
    if isinstance(A, Codebook):
        return LinearOperator(A.shape, matvec=A.apply, rmatvec=A.apply_adjoint, dtype=np.complex128)
    return aslinearoperator(A)


def generate_signal(C: int, k: int, seed, amplitude: float = 1.0) -> SparseSignal:
    """k-sparse signal with uniform random support and random signs."""
    if not 1 <= k <= C:
        raise ValueError(f"need 1 <= k <= C, got k={k}, C={C}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    support = np.sort(rng.choice(C, size=k, replace=False))
    values = amplitude * rng.choice(np.array([-1.0, 1.0]), size=k)
    return SparseSignal(C, support, values)


def _noise(rng: np.random.Generator, n: int, sigma: float, complex_: bool) -> np.ndarray:
    if complex_:
        return sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    return sigma * rng.standard_normal(n)


def measure(A, alpha, sigma_m: float = 0.0, sigma_d: float = 0.0, seed=None) -> Measurement:
    """``f = A (alpha + eps) + e`` with iid data noise eps and measurement noise e.

    Noise is circular complex for complex operators and real otherwise, with
    per-entry variance sigma^2 in both cases. The effective measurement-domain
    variance is ``(C/N) sigma_d^2 + sigma_m^2``.
    """
    if sigma_m < 0 or sigma_d < 0:
        raise ValueError("noise levels must be nonnegative")
    op = as_operator(A)
    N, C = op.shape
    complex_ = np.iscomplexobj(np.empty(0, dtype=op.dtype))
    if isinstance(alpha, SparseSignal):
        alpha = alpha.dense()
    x = np.asarray(alpha, dtype=op.dtype).copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if sigma_d > 0:
        x = x + _noise(rng, C, sigma_d, complex_)
    f = op.matvec(x)
    if sigma_m > 0:
        f = f + _noise(rng, N, sigma_m, complex_)
    return Measurement(f, (C / N) * sigma_d**2 + sigma_m**2)


def select_lambda(C: int, sigma_sq: float, noiseless: bool = False) -> float:
    if noiseless:
        return NOISELESS_LAMBDA
    if sigma_sq < 0:
        raise ValueError("sigma_sq must be nonnegative")
    return 2.0 * np.sqrt(2.0 * np.log(C)) * sigma_sq


def top_k(estimate: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest magnitudes; ties go to the lowest index."""
    return np.sort(np.argsort(-np.abs(estimate), kind="stable")[:k])


def support_loss(truth, estimate: np.ndarray, k: int | None = None) -> float:
    support = truth.support if isinstance(truth, SparseSignal) else np.asarray(truth)
    k = len(support) if k is None else k
    picked = top_k(estimate, k)
    # a zero coefficient identifies nothing, even when the tie rule selects it
    picked = picked[np.abs(estimate[picked]) > 0]
    missed = np.setdiff1d(support, picked)
    return len(missed) / k


def soft_threshold(u: np.ndarray, t: float) -> np.ndarray:
    """Shrink magnitudes by t, keeping phase (sign for real input)."""
    mag = np.abs(u)
    shrunk = np.maximum(mag - t, 0.0)
    scale = np.divide(shrunk, mag, out=np.zeros_like(mag), where=mag > 0)
    return u * scale


def lasso_objective(A, f, x, lam: float) -> float:
    op = as_operator(A)
    r = f - op.matvec(x)
    return 0.5 * float(np.vdot(r, r).real) + lam * float(np.abs(x).sum())


def kkt_residual(A, f, x, lam: float) -> float:
    """Largest violation of the LASSO optimality conditions."""
    op = as_operator(A)
    g = op.rmatvec(f - op.matvec(x))
    mag = np.abs(x)
    nz = mag > 0
    out = 0.0
    if nz.any():
        out = float(np.abs(g[nz] - lam * x[nz] / mag[nz]).max())
    if (~nz).any():
        out = max(out, float(np.maximum(np.abs(g[~nz]) - lam, 0).max()))
    return out


class _RowOperator:
    """Forward and adjoint maps on row batches: ``X (B, C) -> (B, N)``."""

    def __init__(self, A):
        if isinstance(A, CodebookSpec):
            A = Codebook(A)
        self.A = A
        if isinstance(A, Codebook):
            self.shape = A.shape
            self.dtype = np.dtype(np.complex128)
            self.fwd, self.adj = A.apply, A.apply_adjoint
        elif isinstance(A, np.ndarray):
            self.shape = A.shape
            self.dtype = A.dtype
            AT, AC = A.T, A.conj()
            self.fwd = lambda X: X @ AT
            self.adj = lambda R: R @ AC
        else:
            op = aslinearoperator(A)
            self.shape = op.shape
            self.dtype = np.dtype(op.dtype)
            self.fwd = lambda X: np.asarray(op.matmat(X.T)).T
            self.adj = lambda R: np.asarray(op.rmatmat(R.T)).T


def _sqnorm(X: np.ndarray) -> np.ndarray:
    return np.einsum("bi,bi->b", X.conj(), X).real


def lasso_solve_batch(
    A,
    F,
    lam,
    *,
    tol: float = 1e-10,
    max_iters: int = 5000,
    window: int = 5,
    continuation: bool = True,
    cont_factor: float = 0.2,
    stage_tol: float = 1e-3,
    sigma: float = 1e-5,
    alpha_min: float = 1e-8,
    alpha_max: float = 1e8,
) -> list[RecoveryResult]:
    """SpaRSA for ``min 0.5 ||f - A x||^2 + lam ||x||_1``, one problem per row of F.

    Steps are ``x+ = soft(x - grad / alpha, lam / alpha)``. Alpha starts at
    the Barzilai-Borwein value ``||A d||^2 / ||d||^2`` and doubles until the
    objective drops below the maximum of the last ``window`` accepted values
    by ``sigma/2 * alpha * ||d||^2``. With continuation the weight starts at
    half of ``max |A^H f|`` and shrinks by ``cont_factor`` per stage, each
    stage stopping at relative change ``stage_tol``. A problem stops at
    relative objective change ``tol`` or after ``max_iters`` iterations.

    Problems share operator calls but follow independent iterations; the
    reported wall time is the batch time divided by the batch size.
    """
    t0 = time.perf_counter()
    op = _RowOperator(A)
    N, C = op.shape
    F = np.atleast_2d(np.asarray(F))
    B = F.shape[0]
    if F.shape[1] != N:
        raise ValueError(f"observations must have length {N}")
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), (B,)).copy()
    if np.any(lam < 0):
        raise ValueError("lambda must be nonnegative")
    dtype = np.result_type(op.dtype, F.dtype)
    F = F.astype(dtype, copy=False)

    X = np.zeros((B, C), dtype=dtype)
    R = F.copy()
    G = -op.adj(R)
    obj0 = 0.5 * _sqnorm(R)
    traces = [[float(v)] for v in obj0]
    gmax = np.abs(G).max(axis=1)
    lam_t = np.maximum(lam, 0.5 * gmax) if continuation else lam.copy()
    hist = [[float(v)] for v in obj0]
    alpha = np.ones(B)
    iters = np.zeros(B, dtype=int)
    stages = np.ones(B, dtype=int)
    converged = np.zeros(B, dtype=bool)
    active = gmax > lam  # zero is optimal otherwise
    converged[~active] = True
    stages[~active] = 0

    while active.any():
        idx = np.flatnonzero(active)
        ref = np.array([max(hist[j][-window:]) for j in idx])
        Xa, Ga = X[idx], G[idx]
        Xn = np.empty_like(Xa)
        Rn = np.empty((len(idx), N), dtype=dtype)
        On = np.empty(len(idx))
        DD = np.empty(len(idx))
        pending = np.arange(len(idx))
        while len(pending):
            j = idx[pending]
            al = alpha[j][:, None]
            xn = soft_threshold(Xa[pending] - Ga[pending] / al, (lam_t[j] / alpha[j])[:, None])
            rn = F[j] - op.fwd(xn)
            on = 0.5 * _sqnorm(rn) + lam_t[j] * np.abs(xn).sum(axis=1)
            dd = _sqnorm(xn - Xa[pending])
            ok = (on <= ref[pending] - 0.5 * sigma * alpha[j] * dd) | (alpha[j] >= alpha_max)
            acc = pending[ok]
            Xn[acc], Rn[acc], On[acc], DD[acc] = xn[ok], rn[ok], on[ok], dd[ok]
            pending = pending[~ok]
            alpha[idx[pending]] = np.minimum(2.0 * alpha[idx[pending]], alpha_max)

        bad = ~np.isfinite(On) | (On > 10.0 * np.maximum(obj0[idx], 1e-300))
        if bad.any():
            j = int(np.flatnonzero(bad)[0])
            raise SolverError(
                f"objective diverged to {On[j]:.3e} (initial {obj0[idx[j]]:.3e})", traces[idx[j]] + [On[j]]
            )
        Gn = -op.adj(Rn)
        AD = R[idx] - Rn
        bb = np.where(DD > 0, _sqnorm(AD) / np.where(DD > 0, DD, 1.0), alpha[idx])
        alpha[idx] = np.clip(bb, alpha_min, alpha_max)
        X[idx], R[idx], G[idx] = Xn, Rn, Gn
        iters[idx] += 1

        for p, j in enumerate(idx):
            prev = hist[j][-1]
            hist[j].append(float(On[p]))
            traces[j].append(float(On[p]))
            final = lam_t[j] <= lam[j]
            small = abs(prev - On[p]) <= (tol if final else stage_tol) * max(abs(prev), 1e-300)
            if small and final:
                converged[j] = True
                active[j] = False
            elif iters[j] >= max_iters:
                active[j] = False
            elif small:
                lam_t[j] = max(lam[j], lam_t[j] * cont_factor)
                stages[j] += 1
                hist[j] = [0.5 * float(_sqnorm(R[j : j + 1])[0]) + lam_t[j] * float(np.abs(X[j]).sum())]

    per = (time.perf_counter() - t0) / B
    return [
        RecoveryResult(X[j], int(iters[j]), traces[j], per, bool(converged[j]), float(lam[j]), int(stages[j]))
        for j in range(B)
    ]


def lasso_solve(A, f, lam: float, **kwargs) -> RecoveryResult:
    """Single-problem SpaRSA; see :func:`lasso_solve_batch` for the options."""
    f = np.asarray(f)
    if f.ndim != 1:
        raise ValueError("f must be a vector")
    return lasso_solve_batch(A, f[None, :], lam, **kwargs)[0]


def lasso_cd(A: np.ndarray, f, lam: float, *, tol: float = 1e-12, max_sweeps: int = 100_000) -> np.ndarray:
    """Cyclic coordinate descent on a dense matrix; slow reference solver."""
    A = np.asarray(A)
    f = np.asarray(f)
    dtype = np.result_type(A.dtype, f.dtype)
    A = A.astype(dtype)
    C = A.shape[1]
    x = np.zeros(C, dtype=dtype)
    r = f.astype(dtype).copy()
    sq = np.einsum("ij,ij->j", A.conj(), A).real
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(C):
            if sq[j] == 0:
                continue
            aj = A[:, j]
            z = np.vdot(aj, r) + sq[j] * x[j]
            new = soft_threshold(np.array([z]), lam)[0] / sq[j]
            step = new - x[j]
            if step != 0:
                r -= aj * step
                x[j] = new
                delta = max(delta, abs(step))
        if delta <= tol:
            break
    return x
