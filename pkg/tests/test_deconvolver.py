import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from deconwave import ChannelSet, WaveletDeconvolver, simulate, test_function
from deconwave.estimators import max_level

T = 512


@pytest.fixture
def setup():
    ch = ChannelSet.laplacian([0.02, 0.05, 0.08], T // 2 - 1)
    f = test_function("Wave")
    return ch, f, f.fourier(ch.nmax)


def test_params_roundtrip(setup):
    ch, _, _ = setup
    est = WaveletDeconvolver(ch, method="TermJS", d=1, L=4)
    params = est.get_params()
    assert params["method"] == "TermJS" and params["L"] == 4 and params["channels"] is ch
    twin = clone(est)
    assert twin.get_params()["d"] == 1
    est.set_params(lam=2.0)
    assert est.lam == 2.0


def test_unfitted_predict_raises(setup):
    with pytest.raises(NotFittedError):
        WaveletDeconvolver(setup[0]).predict()


def test_validation_errors(setup):
    ch, _, f_hat = setup
    obs = simulate(f_hat, ch, 0.0)
    with pytest.raises(TypeError):
        WaveletDeconvolver(channels=[1, 2]).fit(obs)
    with pytest.raises(ValueError):
        WaveletDeconvolver(ch, grid_size=500).fit(obs)
    with pytest.raises(ValueError):
        WaveletDeconvolver(ch, method="median").fit(obs)
    with pytest.raises(TypeError):
        WaveletDeconvolver(ch, j1=2.5).fit(obs)
    with pytest.raises(TypeError):
        WaveletDeconvolver(ch).fit(np.zeros((3, 3)))
    other = ChannelSet.laplacian([0.1], T // 2 - 1)
    with pytest.raises(ValueError, match="channels"):
        WaveletDeconvolver(other).fit(obs)


def test_fit_attributes_and_point_prediction(setup):
    ch, f, f_hat = setup
    est = WaveletDeconvolver(ch, d=1, j1=3, j2=max_level(T), L=6, grid_size=T)
    est.fit(simulate(f_hat, ch, 1e-5, seed=2))
    assert est.plan_.levels == range(3, max_level(T) + 1)
    assert len(est.thresholds_) == len(est.layouts_) == len(est.coeffs_.beta)
    grid = est.predict()
    idx = np.array([0, 77, 300])
    np.testing.assert_allclose(est.predict(idx / T), grid[idx], atol=1e-10)
    mask = est.kept_mask()
    assert all(m.dtype == bool for m in mask)


def test_score_is_psnr(setup):
    ch, f, f_hat = setup
    est = WaveletDeconvolver(ch, j1=3, j2=max_level(T), L=6, grid_size=T)
    assert est.score(simulate(f_hat, ch, 0.0), f.sample(T)) > 200
    noisy = est.score(simulate(f_hat, ch, 1e-4, seed=1), f.sample(T))
    assert 20 < noisy < 200


def test_more_noise_lowers_quality(setup):
    ch, f, f_hat = setup
    est = WaveletDeconvolver(ch, j1=3, j2=max_level(T), L=6, grid_size=T)
    scores = [np.mean([est.score(simulate(f_hat, ch, e, seed=s), f.sample(T)) for s in range(3)])
              for e in (1e-5, 1e-4, 1e-3)]
    assert scores[0] > scores[1] > scores[2]
