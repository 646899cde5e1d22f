"""Delsarte-Goethals frames and sieves for compressed sensing."""

from .codebook import Codebook, CodebookSpec, FRAME, SIEVE, load_spec, save_spec
from .dgset import dg_matrix, form_matrix
from .estimators import ComplexLasso, DGSensingMatrix
from .geometry import coherence, frame_stats, spectral_norm, subdict_stats, tight_residual
from .gf2m import GF2m, get_field
from .harness import ExperimentConfig, emit_report, run_noise_sweep, run_sparsity_sweep
from .recovery import generate_signal, lasso_solve, measure, select_lambda, support_loss
from .sieve import find_nonorthogonal_pairs
from .weights import c1_count_macwilliams, enumerate_dg0_weights

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "CodebookSpec",
    "FRAME",
    "SIEVE",
    "load_spec",
    "save_spec",
    "dg_matrix",
    "form_matrix",
    "ComplexLasso",
    "DGSensingMatrix",
    "coherence",
    "frame_stats",
    "spectral_norm",
    "subdict_stats",
    "tight_residual",
    "GF2m",
    "get_field",
    "ExperimentConfig",
    "emit_report",
    "run_noise_sweep",
    "run_sparsity_sweep",
    "generate_signal",
    "lasso_solve",
    "measure",
    "select_lambda",
    "support_loss",
    "find_nonorthogonal_pairs",
    "c1_count_macwilliams",
    "enumerate_dg0_weights",
]
