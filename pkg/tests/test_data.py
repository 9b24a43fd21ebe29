import json

import numpy as np
import pytest

from msalaa.data import (
    MultiViewDataset,
    SynthSpec,
    generate_synthetic,
    load_dataset,
    save_dataset,
    standardize,
)
from msalaa.linalg import rng_from_seed


def write_fixture(tmp_path, n=3):
    rng = rng_from_seed(0)
    ds = MultiViewDataset(
        name="fixture",
        views=[rng.normal(size=(4, n)), rng.normal(size=(2, n))],
        labels=np.array([0] * (n - 1) + [1]),
        num_classes=2,
    )
    return save_dataset(tmp_path / "ds", ds), ds


class TestLoadDataset:
    def test_round_trip(self, tmp_path):
        manifest, original = write_fixture(tmp_path)
        loaded = load_dataset(manifest)
        assert loaded.num_views == 2
        assert loaded.num_samples == 3
        assert loaded.num_classes == 2
        for a, b in zip(loaded.views, original.views):
            assert np.array_equal(a, b)
        assert np.array_equal(loaded.labels, original.labels)

    def test_sample_count_mismatch_names_both_files(self, tmp_path):
        manifest, _ = write_fixture(tmp_path)
        labels = tmp_path / "ds" / "labels.txt"
        labels.write_text("0\n1\n1\n0\n")
        with pytest.raises(ValueError) as e:
            load_dataset(manifest)
        assert "labels.txt" in str(e.value) and "view_0.csv" in str(e.value)

    def test_missing_view_file(self, tmp_path):
        manifest, _ = write_fixture(tmp_path)
        (tmp_path / "ds" / "view_1.csv").unlink()
        with pytest.raises(ValueError, match="view_1.csv"):
            load_dataset(manifest)

    def test_missing_manifest_key(self, tmp_path):
        manifest, _ = write_fixture(tmp_path)
        raw = json.loads(open(manifest).read())
        del raw["num_classes"]
        open(manifest, "w").write(json.dumps(raw))
        with pytest.raises(ValueError, match="num_classes"):
            load_dataset(manifest)

    def test_feature_count_mismatch(self, tmp_path):
        manifest, _ = write_fixture(tmp_path)
        raw = json.loads(open(manifest).read())
        raw["views"][0]["features"] = 99
        open(manifest, "w").write(json.dumps(raw))
        with pytest.raises(ValueError, match="99"):
            load_dataset(manifest)

    def test_uci_digit_shaped_manifest(self, tmp_path):
        # shape of the largest bundled-format dataset: M=3, C=10, N=2000
        rng = rng_from_seed(1)
        n = 50  # desk-scale stand-in with the documented feature dims
        ds = MultiViewDataset(
            name="uci-digit-shaped",
            views=[rng.normal(size=(f, n)) for f in (216, 76, 64)],
            labels=rng.integers(0, 10, size=n),
            num_classes=10,
        )
        manifest = save_dataset(tmp_path / "uci", ds)
        loaded = load_dataset(manifest)
        assert [v.shape[0] for v in loaded.views] == [216, 76, 64]
        assert loaded.num_classes == 10


class TestStandardize:
    def test_constant_feature_maps_to_zero(self):
        X = np.array([[1.0, 1.0, 1.0], [0.0, 2.0, 4.0]])
        out, _, std = standardize(X)
        assert np.array_equal(out[0], np.zeros(3))
        assert std[0, 0] == 0.0

    def test_population_std(self):
        out, _, _ = standardize(np.array([[1.0, 3.0]]))
        assert np.array_equal(out, [[-1.0, 1.0]])

    def test_idempotent(self):
        rng = rng_from_seed(2)
        X = rng.normal(size=(5, 40))
        once, _, _ = standardize(X)
        twice, _, _ = standardize(once)
        assert np.max(np.abs(once - twice)) < 1e-12


class TestGenerateSynthetic:
    def test_noiseless_samples_lie_in_subspace(self):
        spec = SynthSpec(2, 3, 10, [12, 9], 3, noise_sigma=0.0)
        ds = generate_synthetic(spec, seed=5)
        for v in range(2):
            for c in range(3):
                cols = ds.views[v][:, ds.labels == c]
                u, s, _ = np.linalg.svd(cols, full_matrices=False)
                proj = u[:, :3] @ (u[:, :3].T @ cols)
                assert np.max(np.abs(cols - proj)) < 1e-10

    def test_single_cluster_labels(self):
        ds = generate_synthetic(SynthSpec(1, 1, 8, [5], 2), seed=0)
        assert np.all(ds.labels == 0)

    def test_cluster_rank(self):
        spec = SynthSpec(1, 4, 40, [30], 4, noise_sigma=0.01)
        ds = generate_synthetic(spec, seed=3)
        for c in range(4):
            cols = ds.views[0][:, ds.labels == c]
            s = np.linalg.svd(cols, compute_uv=False)
            assert s[4] < 10 * 0.01 * np.sqrt(40)

    def test_deterministic(self):
        spec = SynthSpec(2, 2, 6, [8, 7], 2, noise_sigma=0.1)
        a = generate_synthetic(spec, seed=9)
        b = generate_synthetic(spec, seed=9)
        for va, vb in zip(a.views, b.views):
            assert np.array_equal(va, vb)

    def test_exact_self_representation_when_noiseless(self):
        spec = SynthSpec(1, 2, 8, [10], 3, noise_sigma=0.0)
        ds = generate_synthetic(spec, seed=4)
        X = ds.views[0]
        for i in range(ds.num_samples):
            same = (ds.labels == ds.labels[i]).copy()
            same[i] = False
            basis = X[:, same]
            coef, *_ = np.linalg.lstsq(basis, X[:, i], rcond=None)
            assert np.linalg.norm(basis @ coef - X[:, i]) < 1e-8

    def test_invalid_subspace_dim(self):
        with pytest.raises(ValueError):
            SynthSpec(1, 2, 5, [4], 4)
