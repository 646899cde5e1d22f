"""``dg-sense`` command line: build, analyze, dedupe, weights, subdict, recover, sweep.

Results go to stdout as JSON (CSV for ``subdict``). Exit codes: 0 success,
2 configuration error, 3 solver failures beyond the configured threshold,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .codebook import (
    FRAME,
    SIEVE,
    Codebook,
    CodebookFormatError,
    CodebookSpec,
    SizeBudgetError,
    digest,
    export_dense_csv,
    load_spec,
    save_spec,
)
from .geometry import frame_stats, subdict_stats
from .gf2m import FieldError
from .harness import (
    ConfigError,
    ExperimentConfig,
    emit_report,
    failure_fraction,
    load_config,
    parse_range,
    run_noise_sweep,
    run_sparsity_sweep,
)
from .recovery import SolverError, generate_signal, lasso_solve, measure, select_lambda
from .sieve import find_nonorthogonal_pairs
from .weights import c1_count_macwilliams, closed_form_c1_count, enumerate_dg0_weights, macwilliams_count

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("dgsense")


class SolverFailure(RuntimeError):
    pass


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, default=_jsonable)
    sys.stdout.write("\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _spec_from_args(args) -> CodebookSpec:
    if getattr(args, "spec", None):
        return load_spec(args.spec)
    if args.m is None:
        raise ConfigError("give --spec FILE or --m")
    spec = CodebookSpec(args.m, args.r, args.variant)
    if getattr(args, "dedupe", False):
        if spec.variant != SIEVE or spec.r < 1:
            raise ConfigError("--dedupe needs a sieve with r >= 1")
        spec = find_nonorthogonal_pairs(spec.m, spec.r, primitive_poly=spec.primitive_poly, verify=False).reduced_spec()
    return spec


def _spec_info(spec: CodebookSpec) -> dict:
    return {
        "label": spec.label(),
        "m": spec.m,
        "r": spec.r,
        "variant": spec.variant,
        "primitive_poly": hex(spec.primitive_poly),
        "N": spec.n_rows,
        "C": spec.n_cols,
        "excluded_rows": list(spec.excluded_rows),
        "digest": digest(spec),
    }


def cmd_build(args):
    spec = _spec_from_args(args)
    info = _spec_info(spec)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"dg_m{spec.m}_r{spec.r}_{spec.variant}" + ("_dedupe" if args.dedupe else "")
        info["spec_file"] = str(save_spec(spec, out / f"{stem}.dgcs"))
        if args.dense:
            info["dense_csv"] = str(export_dense_csv(Codebook(spec).to_dense(), out / f"{stem}.csv"))
    _emit(info)


def cmd_analyze(args):
    spec = _spec_from_args(args)
    stats = frame_stats(spec, n_pairs=args.pairs, seed=args.seed)
    _emit({**_spec_info(spec), **stats.to_dict()})


def cmd_dedupe(args):
    if args.m is None:
        raise ConfigError("dedupe needs --m")
    rep = find_nonorthogonal_pairs(args.m, args.r, policy=args.policy)
    out = rep.to_dict()
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        out["spec_file"] = str(save_spec(rep.reduced_spec(), d / f"dg_m{args.m}_r{args.r}_sieve_dedupe.dgcs"))
        (d / "dedupe_report.json").write_text(json.dumps(rep.to_dict(), indent=2, default=_jsonable))
    _emit(out)


def cmd_weights(args):
    if args.m is None:
        raise ConfigError("weights needs --m")
    dist = enumerate_dg0_weights(args.m, args.r)
    out = {
        **dist.to_dict(),
        "m": args.m,
        "r": args.r,
        "c1_pairs_macwilliams": c1_count_macwilliams(dist, args.r),
        "dual_weight1": macwilliams_count(dist, 1),
    }
    if args.r == 1:
        cf = closed_form_c1_count(args.m, dist)
        out["closed_form"] = {"c1": cf.c1, "s": cf.s, "t": cf.t, "t_prime": cf.t_prime}
    _emit(out)


def cmd_subdict(args):
    spec = _spec_from_args(args)
    ks = parse_range(args.k_range)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["k", "trials", "mean_hollow_norm", "sem_hollow_norm", "mean_nuclear_over_k", "rank_deficient_fraction"])
    for k in ks:
        s = subdict_stats(spec, k, args.trials, seed=args.seed + k)
        w.writerow([k, s.trials, s.mean_hollow_gram_norm, s.sem_hollow_gram_norm, s.mean_nuclear_norm_over_k, s.rank_deficient_fraction])


def cmd_recover(args):
    spec = _spec_from_args(args)
    rng = np.random.default_rng(args.seed)
    sig = generate_signal(spec.n_cols, args.k, rng)
    cb = Codebook(spec)
    meas = measure(cb, sig, args.sigma_m, args.sigma_d, rng)
    noiseless = meas.sigma_sq == 0
    lam = select_lambda(spec.n_cols, meas.sigma_sq, noiseless)
    try:
        res = lasso_solve(cb, meas.f, lam, tol=args.tol, max_iters=args.max_iters)
    except SolverError as exc:
        raise SolverFailure(str(exc)) from exc
    res.score(sig)
    _emit({"matrix": spec.label(), "k": args.k, "seed": args.seed, "sigma_sq": meas.sigma_sq,
           "true_support": sig.support.tolist(), **res.to_dict()})


def cmd_sweep(args):
    config = load_config(args.config) if args.config else ExperimentConfig()
    over = {"trials": args.trials, "seed": args.seed, "workers": args.workers, "out": args.out}
    if args.k_range:
        over["k_range"] = parse_range(args.k_range)
    if args.sigma_m:
        over["sigma_m_range"] = tuple(float(s) for s in args.sigma_m.split(","))
    if args.sigma_d:
        over["sigma_d_range"] = tuple(float(s) for s in args.sigma_d.split(","))
    config = config.with_overrides(**over)
    rows = run_sparsity_sweep(config)
    if not args.noiseless_only:
        rows += run_noise_sweep(config, "measurement") + run_noise_sweep(config, "data")
    paths = emit_report(rows, config.output_dir(), config)
    frac = failure_fraction(rows)
    _emit({"rows": len(rows), "failure_fraction": frac, "files": {k: str(v) for k, v in paths.items()}})
    if frac > config.max_failure_fraction:
        raise SolverFailure(f"solver failure fraction {frac:.3f} exceeds {config.max_failure_fraction}")


def _float_arg(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dg-sense", description="Delsarte-Goethals sensing matrices")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def matrix_flags(sp, spec_file=True):
        sp.add_argument("--m", type=int)
        sp.add_argument("--r", type=int, default=0)
        sp.add_argument("--variant", choices=[FRAME, SIEVE], default=FRAME)
        sp.add_argument("--dedupe", action="store_true", help="remove the rows of non-orthogonal pairs (sieves)")
        if spec_file:
            sp.add_argument("--spec", help="spec file written by 'build'")

    sp = sub.add_parser("build", help="construct a codebook and write its spec")
    matrix_flags(sp, spec_file=False)
    sp.add_argument("--out", help="directory for the spec file")
    sp.add_argument("--dense", action="store_true", help="also export the dense matrix as CSV")
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("analyze", help="norm, tightness and coherence")
    matrix_flags(sp)
    sp.add_argument("--pairs", type=int, default=10**6, help="sampled pairs when exhaustive is too large")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("dedupe", help="non-orthogonal sieve rows")
    sp.add_argument("--m", type=int)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--policy", choices=["involved", "cover"], default="involved")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_dedupe)

    sp = sub.add_parser("weights", help="DG0 weight distribution and C1 counts")
    sp.add_argument("--m", type=int)
    sp.add_argument("--r", type=int, default=1)
    sp.set_defaults(func=cmd_weights)

    sp = sub.add_parser("subdict", help="random subdictionary statistics (CSV)")
    matrix_flags(sp)
    sp.add_argument("--k-range", default="1:20")
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_subdict)

    sp = sub.add_parser("recover", help="one sparse recovery trial")
    matrix_flags(sp)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--sigma-m", type=_float_arg, default=0.0)
    sp.add_argument("--sigma-d", type=_float_arg, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iters", type=int, default=5000)
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("sweep", help="sparsity and noise sweeps with CSV report")
    sp.add_argument("--config", help="experiment config file (key = value)")
    sp.add_argument("--k-range")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--sigma-m", help="comma list of measurement noise levels")
    sp.add_argument("--sigma-d", help="comma list of data noise levels")
    sp.add_argument("--out")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--noiseless-only", action="store_true")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except SolverFailure as exc:
        print(f"dg-sense: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (CodebookFormatError, OSError) as exc:
        print(f"dg-sense: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, FieldError, SizeBudgetError, ValueError) as exc:
        print(f"dg-sense: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
