"""The estimator wrappers behave like ordinary scikit-learn components."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from sramrng import (
    DecayParams,
    LogisticDecayRegressor,
    MinEntropyEstimator,
    PHExtractor,
    RangeError,
    TagSpec,
    extract_all,
)
from sramrng.entropy import cold_boot_samples


def test_get_set_params_and_clone():
    for est, params in [
        (PHExtractor(word_bits=64), {"word_bits": 64, "low_bits_only": False}),
        (LogisticDecayRegressor(threshold_fraction=0.9), {"threshold_fraction": 0.9}),
        (MinEntropyEstimator(), {"noisy_low": 0.1, "noisy_high": 0.9}),
    ]:
        assert est.get_params() == params
        twin = clone(est)
        assert twin.get_params() == params and twin is not est


class TestPHExtractor:
    def test_matches_extract_all(self):
        X = np.random.default_rng(0).integers(0, 2, (4, 3008))
        out = PHExtractor().fit_transform(X)
        assert out.shape == (4, 185)
        for row, ext in zip(X, out):
            assert np.array_equal(ext, extract_all(row).bits)

    def test_low_bits_only(self):
        X = np.random.default_rng(1).integers(0, 2, (2, 2048))
        full = PHExtractor().fit_transform(X)
        low = PHExtractor(low_bits_only=True).fit_transform(X)
        assert low.shape == (2, 128)
        assert np.array_equal(low[:, :32], full[:, 5:37])

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            PHExtractor().transform(np.zeros((1, 512)))

    def test_validation(self):
        with pytest.raises(RangeError):
            PHExtractor().fit(np.full((1, 512), 2))
        ext = PHExtractor().fit(np.zeros((1, 512)))
        with pytest.raises(RangeError):
            ext.transform(np.zeros((1, 1024)))


class TestLogisticDecayRegressor:
    def test_fit_predict(self):
        t = np.arange(0, 61, 5.0).reshape(-1, 1)
        y = 0.5 / (1 + np.exp(-(t.ravel() - 22.0) / 1.5))
        reg = LogisticDecayRegressor().fit(t, y)
        assert reg.midpoint_ == pytest.approx(22.0, abs=1e-3)
        assert reg.score(t, y) == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(reg.predict(t), y, atol=1e-6)
        assert reg.full_decay_time() == pytest.approx(22.0 + 1.5 * np.log(24), abs=1e-3)

    def test_two_columns_rejected(self):
        with pytest.raises(RangeError):
            LogisticDecayRegressor().fit(np.zeros((5, 2)), np.arange(5.0))


class TestMinEntropyEstimator:
    def test_density(self):
        boots = cold_boot_samples(TagSpec(), DecayParams(), seed=2, trials=500)
        est = MinEntropyEstimator().fit(boots)
        assert est.n_features_in_ == 4096
        assert est.density_ == pytest.approx(0.103, abs=0.015)
        assert est.noisy_fraction_ == pytest.approx(422 / 4096, abs=0.005)

    def test_pipeline_composition(self):
        # extractor output fed to the estimator: columns are bits of hash output
        boots = cold_boot_samples(TagSpec(), DecayParams(), seed=3, trials=300)[:, 136 * 8:]
        pipe = make_pipeline(PHExtractor(low_bits_only=True), MinEntropyEstimator())
        pipe.fit(boots)
        est = pipe[-1]
        # extracted bits are far denser in entropy than raw memory
        assert est.density_ > 0.7
