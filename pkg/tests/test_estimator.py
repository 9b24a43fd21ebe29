import numpy as np
import pytest
from sklearn.base import clone

from msalaa.data import SynthSpec, generate_synthetic
from msalaa.estimator import MSALAA


def tiny_views(seed=0, n_per=6, k=2):
    ds = generate_synthetic(SynthSpec(2, k, n_per, [6, 5], 2, 0.05), seed=seed)
    # estimator expects rows-as-samples
    return [v.T for v in ds.views], ds.labels


def tiny_estimator(**kw):
    defaults = dict(n_clusters=2, common_dim=4, epochs=8, random_state=0)
    defaults.update(kw)
    return MSALAA(**defaults)


class TestParams:
    def test_get_params_round_trip(self):
        est = tiny_estimator(beta1=0.3, omega_kind="L1")
        params = est.get_params()
        assert params["beta1"] == 0.3
        assert params["omega_kind"] == "L1"
        rebuilt = MSALAA(**params)
        assert rebuilt.get_params() == params

    def test_set_params(self):
        est = tiny_estimator()
        est.set_params(n_clusters=5, lr_decay=0.9)
        assert est.n_clusters == 5
        assert est.lr_decay == 0.9

    def test_clone(self):
        est = tiny_estimator(common_dim=7)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()


class TestFit:
    def test_fit_sets_attributes(self):
        views, _ = tiny_views()
        est = tiny_estimator().fit(views)
        n = views[0].shape[0]
        assert est.labels_.shape == (n,)
        assert set(est.labels_.tolist()) <= {0, 1}
        assert est.affinity_.shape == (n, n)
        assert len(est.representation_matrices_) == 2
        assert est.best_view_ in (0, 1)
        assert len(est.report_.history) >= 1

    def test_fit_predict(self):
        views, _ = tiny_views(seed=1)
        est = tiny_estimator()
        labels = est.fit_predict(views)
        assert np.array_equal(labels, est.labels_)

    def test_determinism(self):
        views, _ = tiny_views(seed=2)
        a = tiny_estimator().fit(views).labels_
        b = tiny_estimator().fit(views).labels_
        assert np.array_equal(a, b)

    def test_best_view_override(self):
        views, _ = tiny_views(seed=3)
        est = tiny_estimator(best_view=1).fit(views)
        assert est.best_view_ == 1

    def test_embeddings_shape(self):
        views, _ = tiny_views(seed=4)
        est = tiny_estimator(common_dim=3).fit(views)
        n = views[0].shape[0]
        for h in est.embeddings_:
            assert h.shape == (3, n)


class TestValidation:
    def test_rejects_non_list(self):
        with pytest.raises(ValueError):
            tiny_estimator().fit(np.zeros((4, 3)))

    def test_rejects_empty_list(self):
        with pytest.raises(ValueError):
            tiny_estimator().fit([])

    def test_rejects_sample_count_mismatch(self):
        with pytest.raises(ValueError, match="sample count"):
            tiny_estimator().fit([np.zeros((4, 3)), np.zeros((5, 3))])

    def test_rejects_nan(self):
        x = np.zeros((4, 3))
        x[1, 1] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            tiny_estimator().fit([x])

    def test_rejects_one_dimensional_view(self):
        with pytest.raises(ValueError, match="2-D"):
            tiny_estimator().fit([np.zeros(4)])
