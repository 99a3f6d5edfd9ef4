import numpy as np
import pytest

from tfcbaseline.baselines import PcaConfig, RankTooLargeError, pca_baseline, select_rank


def nuc(M):
    return np.linalg.svd(M, compute_uv=False).sum()


def test_rank_one_recovered(rng):
    X = np.outer(rng.random(30) + 1, rng.random(6) + 1)
    np.testing.assert_allclose(pca_baseline(X, PcaConfig(rank=1)), X, atol=1e-9)


def test_full_rank_reconstruction(rng):
    X = rng.standard_normal((20, 5))
    np.testing.assert_allclose(pca_baseline(X, PcaConfig(rank=5)), X, atol=1e-10)


def test_rank_too_large(rng):
    with pytest.raises(RankTooLargeError):
        pca_baseline(rng.standard_normal((10, 3)), PcaConfig(rank=4))


def test_variance_fraction_validation():
    with pytest.raises(ValueError):
        PcaConfig(variance_fraction=0.0)


def test_select_rank():
    s = np.sqrt(np.array([90.0, 9.0, 0.9, 0.1]))
    assert select_rank(s, 0.9) == 1
    assert select_rank(s, 0.99) == 2
    assert select_rank(s, 0.999) == 3
    assert select_rank(s, 1.0) == 4


def test_output_nuclear_norm_not_larger(rng):
    X = rng.standard_normal((40, 8))
    assert nuc(pca_baseline(X, PcaConfig(variance_fraction=0.8))) <= nuc(X) + 1e-9


@pytest.mark.parametrize("center", [False, True])
def test_projection_idempotent(rng, center):
    X = rng.standard_normal((40, 8)) + 3
    cfg = PcaConfig(rank=3, center=center)
    once = pca_baseline(X, cfg)
    np.testing.assert_allclose(pca_baseline(once, cfg), once, atol=1e-9)


def test_centered_rank_bound(rng):
    X = rng.standard_normal((40, 8)) + 5
    out = pca_baseline(X, PcaConfig(rank=2, center=True))
    s = np.linalg.svd(out, compute_uv=False)
    assert s[3] <= 1e-9 * s[0]
