"""Experiment orchestration: sparsity and noise sweeps, CSV reports, plot scripts.

A sweep is described by an :class:`ExperimentConfig`, stored as a flat
``key = value`` text file. Matrices are named by short tokens:

``frame:7:0``            DG(7,0) frame
``sieve:7:1``            DG(7,1) sieve
``sieve:7:1:dedupe``     DG(7,1) sieve with its non-orthogonal row pairs removed
``gauss:128x16384``      ensemble of real Gaussian matrices (unit columns)

Every trial draws its signal and noise from a seed derived from the master
seed and the sweep point, never from the matrix, so all matrices see the same
signals. Gaussian rows report the median over the ensemble of per-matrix mean
losses; the trial budget of a point is split evenly across the ensemble.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .codebook import SIEVE, Codebook, CodebookSpec
from .geometry import gaussian_member
from .recovery import (
    SolverError,
    generate_signal,
    lasso_solve_batch,
    measure,
    select_lambda,
    support_loss,
)
from .sieve import find_nonorthogonal_pairs

__all__ = [
    "ConfigError",
    "MatrixSpec",
    "ExperimentConfig",
    "ResultRow",
    "CSV_HEADER",
    "trial_seed",
    "parse_range",
    "run_sparsity_sweep",
    "run_noise_sweep",
    "emit_report",
    "load_config",
    "save_config",
    "failure_fraction",
]

logger = logging.getLogger(__name__)

CSV_FIELDS = ("matrix", "k", "sigma_m", "sigma_d", "mean_loss", "mean_time_s", "trials", "seed")
CSV_HEADER = ",".join(CSV_FIELDS)
OUT_ENV = "DGSENSE_OUT"


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


# -- matrices ------------------------------------------------------------------


_TOKEN = re.compile(r"^(frame|sieve):(\d+):(\d+)(:dedupe)?$|^gauss:(\d+)x(\d+)$")


@dataclass(frozen=True)
class MatrixSpec:
    token: str

    def __post_init__(self):
        if not _TOKEN.match(self.token):
            raise ConfigError(f"bad matrix token {self.token!r}")
        if self.kind == "frame" and self.dedupe:
            raise ConfigError("dedupe applies to sieves only")
        if self.is_gaussian:
            if min(self.shape) < 1:
                raise ConfigError(f"empty Gaussian shape in {self.token!r}")
        else:
            self._base_spec()

    @property
    def _groups(self):
        return _TOKEN.match(self.token).groups()

    @property
    def kind(self) -> str:
        return self._groups[0] or "gauss"

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gauss"

    @property
    def dedupe(self) -> bool:
        return bool(self._groups[3])

    def _base_spec(self) -> CodebookSpec:
        kind, m, r = self._groups[:3]
        try:
            return CodebookSpec(int(m), int(r), kind)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def codebook_spec(self) -> CodebookSpec:
        if self.is_gaussian:
            raise ConfigError("Gaussian ensembles have no codebook spec")
        spec = self._base_spec()
        return _dedupe(spec) if self.dedupe else spec

    @property
    def shape(self) -> tuple[int, int]:
        if self.is_gaussian:
            g = self._groups
            return int(g[4]), int(g[5])
        return self.codebook_spec().shape


@lru_cache(maxsize=16)
def _dedupe(spec: CodebookSpec) -> CodebookSpec:
    report = find_nonorthogonal_pairs(spec.m, spec.r, primitive_poly=spec.primitive_poly, verify=False)
    return report.reduced_spec()


# -- configuration -------------------------------------------------------------


def parse_range(text: str) -> tuple[int, ...]:
    """``"a:b"`` (inclusive), ``"a:b:step"`` or a comma list of integers."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] <= 0):
                raise ConfigError(f"bad range {text!r}")
            out = tuple(range(parts[0], parts[1] + 1, parts[2] if len(parts) == 3 else 1))
        else:
            out = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}") from exc
    if not out:
        raise ConfigError(f"empty range {text!r}")
    return out


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    matrices: tuple[str, ...] = ("frame:7:0", "sieve:7:1:dedupe", "gauss:128x16384", "gauss:103x16384")
    k_range: tuple[int, ...] = tuple(range(1, 41))
    k_noise: int = 14
    sigma_m_range: tuple[float, ...] = (0.05, 0.1, 0.2)
    sigma_d_range: tuple[float, ...] = (0.05 / math.sqrt(128), 0.1 / math.sqrt(128), 0.2 / math.sqrt(128))
    trials: int = 200
    seed: int = 0
    gaussian_ensemble: int = 10
    out: str = "results"
    workers: int = 1
    timing: bool = True
    max_failure_fraction: float = 0.05
    solver: dict = field(default_factory=lambda: {"tol": 1e-6, "max_iters": 500})

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("matrices", "k_range", "sigma_m_range", "sigma_d_range"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be nonempty")
        for tok in self.matrices:
            MatrixSpec(tok)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.gaussian_ensemble < 1:
            raise ConfigError("gaussian_ensemble must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if min(self.k_range) < 1 or self.k_noise < 1:
            raise ConfigError("sparsity levels must be >= 1")
        if min(self.sigma_m_range) < 0 or min(self.sigma_d_range) < 0:
            raise ConfigError("noise levels must be nonnegative")
        if not 0 <= self.max_failure_fraction <= 1:
            raise ConfigError("max_failure_fraction must lie in [0, 1]")
        unknown = set(self.solver) - set(_SOLVER_KEYS)
        if unknown:
            raise ConfigError(f"unknown solver options {sorted(unknown)}")

    # text format: one "key = value" per line, '#' comments, units in the comments
    def dumps(self) -> str:
        lines = [
            "# dg-sense experiment config",
            f"matrices = {', '.join(self.matrices)}",
            f"k_range = {', '.join(map(str, self.k_range))}",
            f"k_noise = {self.k_noise}",
            "# noise standard deviations per entry (dimensionless, unit-amplitude signals)",
            f"sigma_m_range = {', '.join(map(repr, map(float, self.sigma_m_range)))}",
            f"sigma_d_range = {', '.join(map(repr, map(float, self.sigma_d_range)))}",
            f"trials = {self.trials}",
            f"seed = {self.seed}",
            f"gaussian_ensemble = {self.gaussian_ensemble}",
            f"out = {self.out}",
            f"workers = {self.workers}",
            f"timing = {'true' if self.timing else 'false'}",
            f"max_failure_fraction = {self.max_failure_fraction!r}",
        ]
        for key in sorted(self.solver):
            lines.append(f"solver.{key} = {self.solver[key]!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        raw: dict[str, str] = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in raw:
                raise ConfigError(f"line {n}: duplicate key {key!r}")
            raw[key] = value
        kw: dict = {}
        solver = {}
        for key, value in raw.items():
            if key.startswith("solver."):
                solver[key[7:]] = _solver_value(key[7:], value)
            elif key == "matrices":
                kw[key] = tuple(t.strip() for t in value.split(",") if t.strip())
            elif key == "k_range":
                kw[key] = parse_range(value)
            elif key in ("sigma_m_range", "sigma_d_range"):
                kw[key] = _floats(value)
            elif key in ("k_noise", "trials", "seed", "gaussian_ensemble", "workers"):
                try:
                    kw[key] = int(value)
                except ValueError as exc:
                    raise ConfigError(f"{key} must be an integer") from exc
            elif key == "max_failure_fraction":
                kw[key] = _floats(value)[0] if _floats(value) else -1.0
            elif key == "timing":
                if value.lower() not in ("true", "false"):
                    raise ConfigError("timing must be true or false")
                kw[key] = value.lower() == "true"
            elif key == "out":
                kw[key] = value
            else:
                raise ConfigError(f"unknown key {key!r}")
        if solver:
            kw["solver"] = solver
        return cls(**kw)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def output_dir(self) -> Path:
        return Path(os.environ.get(OUT_ENV) or self.out)


_SOLVER_KEYS = {
    "tol": float,
    "max_iters": int,
    "window": int,
    "continuation": bool,
    "cont_factor": float,
    "stage_tol": float,
    "sigma": float,
    "alpha_min": float,
    "alpha_max": float,
}


def _solver_value(key: str, value: str):
    kind = _SOLVER_KEYS.get(key)
    if kind is None:
        raise ConfigError(f"unknown solver option {key!r}")
    if kind is bool:
        if value.lower() not in ("true", "false"):
            raise ConfigError(f"solver.{key} must be true or false")
        return value.lower() == "true"
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"solver.{key}: bad value {value!r}") from exc


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.loads(Path(path).read_text())


def save_config(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(config.dumps())
    return path


# -- seeds -------------------------------------------------------------------


def trial_seed(master: int, k: int, sigma_m: float, sigma_d: float, trial: int, tag: str = "") -> int:
    """64-bit seed from a canonical description of one draw."""
    key = f"{master}|{tag}|{k}|{float(sigma_m)!r}|{float(sigma_d)!r}|{trial}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _ensemble_seed(master: int, token: str) -> int:
    return trial_seed(master, 0, 0.0, 0.0, 0, tag="ensemble:" + token)


# -- results -------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    matrix: str
    k: int
    sigma_m: float
    sigma_d: float
    mean_loss: float
    mean_time_s: float
    trials: int
    seed: int
    sem_loss: float = 0.0
    failures: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mean_loss <= 1.0:
            raise ValueError("mean_loss must lie in [0, 1]")

    def csv_values(self) -> list:
        return [getattr(self, f) for f in CSV_FIELDS]


def failure_fraction(rows) -> float:
    total = sum(r.trials for r in rows)
    return sum(r.failures for r in rows) / total if total else 0.0


@dataclass(frozen=True)
class _Point:
    k: int
    sigma_m: float
    sigma_d: float
    noiseless: bool


@lru_cache(maxsize=8)
def _operator(token: str, member: int, master: int):
    spec = MatrixSpec(token)
    if spec.is_gaussian:
        N, C = spec.shape
        return gaussian_member(N, C, member, seed=_ensemble_seed(master, token))
    return Codebook(spec.codebook_spec())


def _run_unit(args) -> tuple[list[float], list[float], int]:
    """Losses and times for one (matrix, member, point) block of trials."""
    token, member, trials, point, config = args
    A = _operator(token, member, config.seed)
    C = A.shape[1]
    probs = []
    for t in trials:
        s = trial_seed(config.seed, point.k, point.sigma_m, point.sigma_d, t)
        rng = np.random.default_rng(s)
        sig = generate_signal(C, point.k, rng)
        meas = measure(A, sig, point.sigma_m, point.sigma_d, rng)
        noiseless = point.noiseless or meas.sigma_sq == 0
        probs.append((sig, meas.f, select_lambda(C, meas.sigma_sq, noiseless)))
    # Gaussian blocks share the dense operator, so they are solved together
    batch = len(probs) if isinstance(A, np.ndarray) else 1
    losses, times, failures = [], [], 0
    for start in range(0, len(probs), batch):
        chunk = probs[start : start + batch]
        F = np.stack([p[1] for p in chunk])
        lam = np.array([p[2] for p in chunk])
        t0 = time.perf_counter()
        try:
            results = lasso_solve_batch(A, F, lam, **config.solver)
        except SolverError as exc:
            logger.warning("%s k=%d: %s", token, point.k, exc)
            failures += len(chunk)
            losses += [1.0] * len(chunk)
            times += [(time.perf_counter() - t0) / len(chunk)] * len(chunk)
            continue
        for (sig, _, _), res in zip(chunk, results):
            losses.append(support_loss(sig, res.estimate, sig.k))
            times.append(res.wall_time)
    return losses, times, failures


def _split(n: int, parts: int) -> list[range]:
    bounds = np.linspace(0, n, parts + 1).round().astype(int)
    return [range(bounds[i], bounds[i + 1]) for i in range(parts)]


def _rows_for(config: ExperimentConfig, points: list[_Point]) -> list[ResultRow]:
    units = []
    for token in config.matrices:
        members = config.gaussian_ensemble if MatrixSpec(token).is_gaussian else 1
        # member-major order keeps each Gaussian matrix in the cache across points
        for member, trials in enumerate(_split(config.trials, members)):
            for point in points:
                units.append((token, member, trials, point, config))
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            outputs = list(pool.map(_run_unit, units, chunksize=1))
    else:
        outputs = [_run_unit(u) for u in units]

    grouped: dict = {}
    for (token, member, trials, point, _), out in zip(units, outputs):
        grouped.setdefault((token, point), []).append(out)
    rows = []
    for token in config.matrices:
        for point in points:
            parts = [p for p in grouped[(token, point)] if p[0]]
            losses = np.concatenate([p[0] for p in parts])
            times = np.concatenate([p[1] for p in parts])
            mean = float(np.median([np.mean(p[0]) for p in parts])) if len(parts) > 1 else float(losses.mean())
            sem = float(losses.std(ddof=1) / math.sqrt(len(losses))) if len(losses) > 1 else 0.0
            rows.append(
                ResultRow(
                    matrix=token,
                    k=point.k,
                    sigma_m=point.sigma_m,
                    sigma_d=point.sigma_d,
                    mean_loss=mean,
                    mean_time_s=float(times.mean()) if config.timing else 0.0,
                    trials=len(losses),
                    seed=config.seed,
                    sem_loss=sem,
                    failures=sum(p[2] for p in parts),
                )
            )
    return rows


def run_sparsity_sweep(config: ExperimentConfig) -> list[ResultRow]:
    """Noiseless loss and time for every matrix and every k in ``k_range``."""
    return _rows_for(config, [_Point(k, 0.0, 0.0, True) for k in config.k_range])


def run_noise_sweep(config: ExperimentConfig, domain: str = "measurement") -> list[ResultRow]:
    """Loss at ``k_noise`` over the measurement or data noise levels."""
    if domain == "measurement":
        points = [_Point(config.k_noise, float(s), 0.0, False) for s in config.sigma_m_range]
    elif domain == "data":
        points = [_Point(config.k_noise, 0.0, float(s), False) for s in config.sigma_d_range]
    else:
        raise ConfigError("domain must be 'measurement' or 'data'")
    return _rows_for(config, points)


# -- reports -------------------------------------------------------------------


_GNUPLOT_SPARSITY = """\
set datafile separator ","
set terminal pngcairo size 900,600
set output "fig_sparsity.png"
set xlabel "sparsity k"
set ylabel "average 0-1 loss"
set key left top
plot for [M in "{matrices}"] "results.csv" using ($3 == 0 && $4 == 0 && strcol(1) eq M ? $2 : 1/0):5 with linespoints title M
"""

_GNUPLOT_TIME = """\
set datafile separator ","
set terminal pngcairo size 900,600
set output "fig_time.png"
set xlabel "sparsity k"
set ylabel "mean reconstruction time (s)"
set key left top
plot for [M in "{matrices}"] "results.csv" using ($3 == 0 && $4 == 0 && strcol(1) eq M ? $2 : 1/0):6 with linespoints title M
"""

_GNUPLOT_NOISE = """\
set datafile separator ","
set terminal pngcairo size 1400,600
set output "fig_noise.png"
set multiplot layout 1,2
set ylabel "average 0-1 loss"
set key left top
set xlabel "sigma_m"
plot for [M in "{matrices}"] "results.csv" using ($3 > 0 && strcol(1) eq M ? $3 : 1/0):5 with linespoints title M
set xlabel "sigma_d"
plot for [M in "{matrices}"] "results.csv" using ($4 > 0 && strcol(1) eq M ? $4 : 1/0):5 with linespoints title M
unset multiplot
"""


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row.csv_values()])
    return buf.getvalue()


def emit_report(rows, outdir, config: ExperimentConfig | None = None) -> dict[str, Path]:
    """Write results.csv, config.echo, summary.json and gnuplot scripts.

    All contents are rendered before anything is written, and each file is
    written to a temporary name first, so a failure leaves no partial files.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no result rows to report")
    matrices = " ".join(dict.fromkeys(r.matrix for r in rows))
    files = {
        "results.csv": _csv_text(rows),
        "config.echo": config.dumps() if config is not None else "# no config\n",
        "summary.json": json.dumps(
            [{f.name: getattr(r, f.name) for f in fields(r)} for r in rows], indent=1, sort_keys=True
        )
        + "\n",
        "fig_sparsity.gp": _GNUPLOT_SPARSITY.format(matrices=matrices),
        "fig_time.gp": _GNUPLOT_TIME.format(matrices=matrices),
        "fig_noise.gp": _GNUPLOT_NOISE.format(matrices=matrices),
    }
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tmp = {name: outdir / f".{name}.tmp" for name in files}
    try:
        for name, text in files.items():
            tmp[name].write_text(text)
    except OSError:
        for p in tmp.values():
            p.unlink(missing_ok=True)
        raise
    paths = {}
    for name in files:
        paths[name] = tmp[name].replace(outdir / name)
    return paths
