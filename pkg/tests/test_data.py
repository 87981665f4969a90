"""Benchmark generator geometry and the CSV round trip."""

import numpy as np
import pytest

from evidact import (
    DomainDataset,
    ParseError,
    ShiftBenchmarkConfig,
    gen_shifted_gaussians,
    load_features_csv,
    save_features_csv,
)
from evidact.data import _class_means, _shift_means


class TestConfig:
    def test_defaults_round_trip(self):
        cfg = ShiftBenchmarkConfig()
        assert ShiftBenchmarkConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            ShiftBenchmarkConfig.from_dict({"n_classe": 3})

    def test_validation(self):
        with pytest.raises(ValueError):
            ShiftBenchmarkConfig(n_classes=1)
        with pytest.raises(ValueError):
            ShiftBenchmarkConfig(shift_kind="warp")
        with pytest.raises(ValueError):
            ShiftBenchmarkConfig(noise_scale=0.0)
        with pytest.raises(ValueError):
            ShiftBenchmarkConfig(shift_magnitude=-0.5)


class TestGeometry:
    def test_means_on_circle(self):
        cfg = ShiftBenchmarkConfig(n_classes=4, class_separation=3.0)
        means = _class_means(cfg)
        radii = np.linalg.norm(means[:, :2], axis=1)
        assert np.allclose(radii, 3.0)
        assert np.allclose(means[:, 2:], 0.0)  # remaining dims are noise only

    def test_rotation_pi_swaps_antipodal_pair(self):
        # two antipodal clusters rotated half a turn land on each other
        cfg = ShiftBenchmarkConfig(n_classes=2, shift_kind="rotation", shift_magnitude=np.pi)
        means = _class_means(cfg)
        shifted = _shift_means(means, cfg)
        assert np.allclose(shifted[0], means[1], atol=1e-12)
        assert np.allclose(shifted[1], means[0], atol=1e-12)

    def test_rotation_preserves_radius(self):
        cfg = ShiftBenchmarkConfig(shift_kind="rotation", shift_magnitude=0.9)
        means = _class_means(cfg)
        shifted = _shift_means(means, cfg)
        assert np.allclose(
            np.linalg.norm(shifted[:, :2], axis=1), np.linalg.norm(means[:, :2], axis=1)
        )

    def test_translation_moves_diagonally(self):
        cfg = ShiftBenchmarkConfig(shift_kind="translation", shift_magnitude=2.0)
        means = _class_means(cfg)
        shifted = _shift_means(means, cfg)
        step = 2.0 / np.sqrt(2.0)
        assert np.allclose(shifted[:, 0] - means[:, 0], step)
        assert np.allclose(shifted[:, 1] - means[:, 1], step)
        # total displacement equals the configured magnitude
        assert np.allclose(np.linalg.norm(shifted - means, axis=1), 2.0)

    def test_both_composes(self):
        cfg = ShiftBenchmarkConfig(shift_kind="both", shift_magnitude=0.9)
        rotated = _shift_means(
            _class_means(cfg),
            ShiftBenchmarkConfig(shift_kind="rotation", shift_magnitude=0.9),
        )
        translated = _shift_means(
            rotated, ShiftBenchmarkConfig(shift_kind="translation", shift_magnitude=0.9)
        )
        assert np.allclose(_shift_means(_class_means(cfg), cfg), translated)


class TestGeneration:
    def test_deterministic(self):
        a_src, a_tgt = gen_shifted_gaussians(ShiftBenchmarkConfig(seed=5))
        b_src, b_tgt = gen_shifted_gaussians(ShiftBenchmarkConfig(seed=5))
        assert np.array_equal(a_src.features, b_src.features)
        assert np.array_equal(a_tgt.labels, b_tgt.labels)
        c_src, _ = gen_shifted_gaussians(ShiftBenchmarkConfig(seed=6))
        assert not np.array_equal(a_src.features, c_src.features)

    def test_sizes_and_balance(self):
        cfg = ShiftBenchmarkConfig(n_source=601, n_target=599)
        src, tgt = gen_shifted_gaussians(cfg)
        assert src.n_samples == 601 and tgt.n_samples == 599
        counts = np.bincount(src.labels, minlength=cfg.n_classes)
        assert counts.max() - counts.min() <= 1
        assert src.domain == "source" and tgt.domain == "target"

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            DomainDataset(np.zeros((3, 2)), np.array([0, 1, 5]), 3, "source")
        with pytest.raises(ValueError):
            DomainDataset(np.zeros((3, 2)), np.array([0, 1]), 3, "source")
        with pytest.raises(ValueError):
            DomainDataset(np.full((2, 2), np.nan), np.array([0, 1]), 2, "source")


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        src, _ = gen_shifted_gaussians(ShiftBenchmarkConfig(n_source=50, n_target=50))
        path = tmp_path / "src.csv"
        save_features_csv(path, src)
        loaded = load_features_csv(path, src.n_classes, domain="source")
        assert np.array_equal(loaded.features, src.features)  # repr round-trips floats
        assert np.array_equal(loaded.labels, src.labels)

    def test_header_mode(self, tmp_path):
        src, _ = gen_shifted_gaussians(ShiftBenchmarkConfig(n_source=10, n_target=10))
        path = tmp_path / "with_header.csv"
        save_features_csv(path, src, header=True)
        with pytest.raises(ParseError):
            load_features_csv(path, src.n_classes)
        loaded = load_features_csv(path, src.n_classes, has_header=True)
        assert loaded.n_samples == 10

    @pytest.mark.parametrize(
        "content,fragment",
        [
            ("0,1.0\n1,2.0,3.0\n", "row 2"),
            ("0,1.0\nx,2.0\n", "row 2"),
            ("0,1.0\n7,2.0\n", "row 2"),
            ("0,1.0\n1,oops\n", "row 2"),
            ("0,1.0\n1,inf\n", "row 2"),
            ("", "no data rows"),
        ],
    )
    def test_parse_errors_name_the_row(self, tmp_path, content, fragment):
        path = tmp_path / "bad.csv"
        path.write_text(content)
        with pytest.raises(ParseError, match=fragment):
            load_features_csv(path, 3)
