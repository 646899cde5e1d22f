import numpy as np
import pytest

from dgsense.codebook import FRAME, SIEVE, Codebook, CodebookSpec, SizeBudgetError, build_dense, exclude_power_rows
from dgsense.geometry import (
    coherence,
    coherence_bound,
    frame_stats,
    gaussian_member,
    gaussian_reference,
    gaussian_subdict_stats,
    matrix_coherence,
    power_iteration,
    row_gram,
    spectral_norm,
    subdict_stats,
    tight_residual,
    welch_bound,
)
from dgsense.sieve import find_nonorthogonal_pairs, gram_rows_bruteforce


def test_coherence_examples():
    assert coherence(CodebookSpec(5, 0, FRAME)).value == pytest.approx(2 ** -2.5, abs=1e-12)
    assert coherence(CodebookSpec(5, 1, SIEVE)).value <= 2 ** -1.5 + 1e-12
    spec = CodebookSpec(5, 1, FRAME)
    block = Codebook(spec).columns([spec.encode([3, 9], b) for b in range(32)])
    assert matrix_coherence(block) < 1e-12


@pytest.mark.parametrize("m,r", [(3, 0), (3, 1), (5, 0), (5, 1)])
def test_structured_coherence_is_exact(m, r):
    spec = CodebookSpec(m, r, FRAME)
    a = coherence(spec, "exhaustive").value
    b = coherence(spec, "structured").value
    assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("m,r", [(3, 0), (3, 1), (5, 0), (5, 1), (5, 2)])
def test_frame_coherence_bound(m, r):
    spec = CodebookSpec(m, r, FRAME)
    mu = coherence(spec).value
    assert mu <= coherence_bound(spec) + 1e-12
    assert mu >= welch_bound(*spec.shape) - 1e-12


def test_sampled_coherence_is_lower_bound():
    spec = CodebookSpec(5, 1, SIEVE)
    exact = coherence(spec, "exhaustive").value
    est = coherence(spec, "sampled", n_pairs=20000, seed=4)
    assert not est.exhaustive and est.value <= exact + 1e-12
    with pytest.raises(ValueError):
        coherence(spec, "structured")
    with pytest.raises(ValueError):
        coherence(spec, "bogus")


def test_welch_bound_formula():
    assert welch_bound(8, 64) == pytest.approx(np.sqrt(56 / (8 * 63)))
    assert welch_bound(4, 4) == 0.0


@pytest.mark.parametrize("m", [3, 5, 7, 9])
def test_frame_norms(m):
    assert spectral_norm(CodebookSpec(m, 0, FRAME)) == pytest.approx(2 ** (m / 2), abs=1e-9)


@pytest.mark.parametrize("m,r,variant", [(3, 1, SIEVE), (5, 1, SIEVE), (5, 2, SIEVE), (5, 1, FRAME)])
def test_norm_matches_lapack(m, r, variant):
    spec = CodebookSpec(m, r, variant)
    assert spectral_norm(spec) == pytest.approx(np.linalg.norm(build_dense(spec), 2), rel=1e-10)


def test_sieve_norm_values():
    # computed sieve norms, cross-checked by dense SVD for m <= 5
    assert spectral_norm(CodebookSpec(3, 1, SIEVE)) == pytest.approx(4.752158, abs=1e-6)
    assert spectral_norm(CodebookSpec(5, 1, SIEVE)) == pytest.approx(11.1295, abs=1e-3)


@pytest.mark.parametrize("m", [5, 7, 9])
def test_sieve_to_frame_ratio(m):
    # the DG(m,1) sieve and the DG(m,0) frame have the same shape
    ratio = spectral_norm(CodebookSpec(m, 1, SIEVE)) / spectral_norm(CodebookSpec(m, 0, FRAME))
    assert 1.9 <= ratio <= 2.5


def test_norm_squared_and_tightness():
    specs = [CodebookSpec(5, 1, FRAME), CodebookSpec(5, 1, SIEVE), find_nonorthogonal_pairs(5, 1, verify=False).reduced_spec()]
    for spec in specs:
        n2 = spectral_norm(spec) ** 2
        assert n2 >= spec.redundancy * (1 - 1e-12)
        tight = tight_residual(spec) <= 1e-8
        assert tight == (abs(n2 - spec.redundancy) <= 1e-8 * spec.redundancy)


def test_large_frame_gram_skips_column_budget():
    # 2^28 columns, but the product route only touches the per-order kernels
    spec = CodebookSpec(7, 2, FRAME)
    assert tight_residual(spec) == pytest.approx(0, abs=1e-8)
    with pytest.raises(SizeBudgetError):
        gram_rows_bruteforce(spec, method="direct")


def test_tight_residuals():
    assert tight_residual(CodebookSpec(7, 1, FRAME)) <= 1e-10
    assert tight_residual(find_nonorthogonal_pairs(7, 1, verify=False).reduced_spec()) <= 1e-8
    # the r = 2 sieve becomes tight once the m + 1 power rows are gone
    assert tight_residual(CodebookSpec(7, 2, SIEVE)) > 1e-8
    assert tight_residual(exclude_power_rows(CodebookSpec(7, 2, SIEVE))) <= 1e-8


def test_row_gram_dense_and_spec_agree():
    spec = CodebookSpec(5, 1, SIEVE)
    np.testing.assert_allclose(row_gram(spec), row_gram(build_dense(spec)), atol=1e-9)


def test_power_iteration():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((30, 30))
    M = M @ M.T
    res = power_iteration(lambda v: M @ v, 30, seed=1)
    assert res.value == pytest.approx(np.linalg.eigvalsh(M)[-1], rel=1e-10)
    again = power_iteration(lambda v: M @ v, 30, seed=1)
    assert again.value == res.value and again.iterations == res.iterations


def test_spectral_norm_deterministic():
    spec = CodebookSpec(7, 1, SIEVE)
    assert spectral_norm(spec) == spectral_norm(spec)


def test_frame_stats():
    st = frame_stats(CodebookSpec(3, 0, FRAME))
    assert (st.N, st.C) == (8, 64)
    assert st.coherence_exhaustive
    assert st.coherence == pytest.approx(2 ** -1.5)
    assert st.tight_residual < 1e-10
    assert set(st.to_dict()) >= {"coherence", "spectral_norm", "welch_bound"}


def test_subdict_basics():
    spec = CodebookSpec(5, 0, FRAME)
    s1 = subdict_stats(spec, 1, 50, seed=0)
    assert s1.mean_hollow_gram_norm < 1e-12
    s = subdict_stats(spec, 6, 300, seed=0)
    assert s.rank_deficient_fraction == 0
    assert subdict_stats(spec, 6, 300, seed=0).mean_hollow_gram_norm == s.mean_hollow_gram_norm
    with pytest.raises(ValueError):
        subdict_stats(spec, 0, 10, seed=0)


def test_subdict_dense_and_spec_agree():
    spec = CodebookSpec(5, 1, SIEVE)
    a = subdict_stats(spec, 5, 200, seed=3)
    b = subdict_stats(build_dense(spec), 5, 200, seed=3)
    assert a.mean_hollow_gram_norm == pytest.approx(b.mean_hollow_gram_norm, abs=1e-12)


def test_gaussian_reference():
    ens = gaussian_reference(16, 64, count=3, seed=5)
    assert len(ens) == 3
    for G in ens:
        np.testing.assert_allclose(np.linalg.norm(G, axis=0), 1, atol=1e-12)
    again = gaussian_reference(16, 64, count=3, seed=5)
    assert all(np.array_equal(a, b) for a, b in zip(ens, again))
    np.testing.assert_array_equal(gaussian_member(16, 64, 2, seed=5), ens[2])
    with pytest.raises(ValueError):
        gaussian_reference(4, 4, count=0)


def test_gaussian_norm_heuristic():
    N, C = 128, 16384
    ens = gaussian_reference(N, C, count=3, seed=1)
    med = np.median([spectral_norm(G) ** 2 for G in ens])
    expected = (1 + np.sqrt(C / N)) ** 2
    assert abs(med - expected) <= 0.25 * expected


@pytest.mark.slow
def test_sieve_nuclear_norm_close_to_gaussian():
    spec = CodebookSpec(7, 1, SIEVE)
    ens = gaussian_reference(*spec.shape, count=3, seed=2)
    for k in (5, 10, 15, 20):
        dg = subdict_stats(spec, k, 300, seed=k).mean_nuclear_norm_over_k
        g = gaussian_subdict_stats(ens, k, 300, seed=k)["median_nuclear_over_k"]
        assert abs(dg - 1) < 0.05
        assert abs(dg - g) < 0.05
