import numpy as np
import pytest
from skimage.metrics import peak_signal_noise_ratio, structural_similarity

from freqadapt.errors import ArgumentError
from freqadapt.metrics import psnr, ssim


@pytest.fixture
def pair(corpus):
    a = corpus[4][100:228, 50:178]
    noise = np.random.default_rng(0).normal(0, 0.03, a.shape)
    return a, np.clip(a + noise, 0, 1)


def test_psnr_matches_reference(pair):
    a, b = pair
    assert psnr(a, b) == pytest.approx(peak_signal_noise_ratio(a, b, data_range=1.0), rel=1e-12)


def test_psnr_known_value():
    assert psnr(np.zeros((4, 4)), np.full((4, 4), 0.1)) == pytest.approx(20.0)
    assert psnr(np.ones((4, 4)), np.ones((4, 4))) == 100.0


def test_ssim_matches_reference(pair):
    a, b = pair
    ref = structural_similarity(a, b, gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
                                data_range=1.0)
    assert ssim(a, b) == pytest.approx(ref, abs=1e-10)
    assert ssim(a, a) == pytest.approx(1.0)


def test_metric_errors():
    with pytest.raises(ArgumentError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ArgumentError):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))
