import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lcvsr.data import io
from lcvsr.data.color import YCbCrImage, rgb_to_ycbcr, rgb_to_y, ycbcr_to_rgb
from lcvsr.data.dataset import SequenceDataset, TrainingPairs, center_window
from lcvsr.data.degrade import bicubic_resize, decimate, degrade, gaussian_blur_3x3, gaussian_kernel_3x3
from lcvsr.data.synthetic import horizontal_pan, moving_texture_sequence, synthetic_dataset


def _gauss_oracle(sigma):
    # scalar evaluation, independent of the vectorised kernel builder
    vals = {(dy, dx): math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) for dy in (-1, 0, 1) for dx in (-1, 0, 1)}
    z = sum(vals.values())
    return {k: v / z for k, v in vals.items()}


class TestColor:
    def test_black_and_white_luma(self):
        black = rgb_to_ycbcr(np.zeros((1, 1, 3), np.uint8))
        white = rgb_to_ycbcr(np.full((1, 1, 3), 255, np.uint8))
        assert black.y[0, 0] == pytest.approx(16 / 255, abs=1e-12)
        assert white.y[0, 0] == pytest.approx(235 / 255, abs=1e-12)
        assert black.cb[0, 0] == pytest.approx(128 / 255, abs=1e-12)

    @pytest.mark.parametrize("swing", ["studio", "full"])
    def test_gray_round_trip_exhaustive(self, swing):
        g = np.arange(256, dtype=np.uint8)
        img = np.repeat(g[None, :, None], 3, axis=2)
        back = ycbcr_to_rgb(rgb_to_ycbcr(img, swing), swing)
        assert np.abs(back.astype(int) - img.astype(int)).max() <= 1

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.uint8, (4, 5, 3)))
    def test_colour_round_trip_within_one_level(self, img):
        back = ycbcr_to_rgb(rgb_to_ycbcr(img))
        assert np.abs(back.astype(int) - img.astype(int)).max() <= 1

    def test_construction_clamps(self):
        ycc = YCbCrImage(np.array([[1.5]]), np.array([[-0.2]]), np.array([[0.5]]))
        assert ycc.y[0, 0] == 1.0 and ycc.cb[0, 0] == 0.0

    def test_plane_shapes_must_agree(self):
        with pytest.raises(ValueError):
            YCbCrImage(np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)))

    def test_rgb_to_y_shortcut(self, tmp_path):
        img = np.random.default_rng(0).integers(0, 256, (3, 4, 3), dtype=np.uint8)
        np.testing.assert_array_equal(rgb_to_y(img), rgb_to_ycbcr(img).y)


class TestBlur:
    def test_kernel_values_against_scalar_oracle(self):
        k = gaussian_kernel_3x3(1.0)
        ref = _gauss_oracle(1.0)
        for (dy, dx), v in ref.items():
            assert k[dy + 1, dx + 1] == pytest.approx(v, abs=1e-12)
        assert k[1, 1] == pytest.approx(0.204180, abs=1e-5)
        assert k[0, 1] == pytest.approx(0.123841, abs=1e-5)
        assert k[0, 0] == pytest.approx(0.075114, abs=1e-5)
        assert abs(k.sum() - 1) < 1e-6

    def test_sigma_positive(self):
        with pytest.raises(ValueError):
            gaussian_kernel_3x3(0.0)

    def test_constant_unchanged(self):
        np.testing.assert_allclose(gaussian_blur_3x3(np.full((5, 6), 0.3)), 0.3, atol=1e-15)

    def test_impulse_gives_kernel(self):
        x = np.zeros((5, 5))
        x[2, 2] = 1
        np.testing.assert_allclose(gaussian_blur_3x3(x)[1:4, 1:4], gaussian_kernel_3x3(1.0), atol=1e-15)

    def test_edge_replication(self):
        # a step at the left border stays flat when the border is replicated
        x = np.zeros((4, 4))
        x[:, 0] = 1.0
        out = gaussian_blur_3x3(x)
        k = gaussian_kernel_3x3()
        assert out[1, 0] == pytest.approx(k[:, :2].sum())


class TestDecimate:
    def test_identity(self):
        x = np.arange(12.0).reshape(3, 4)
        np.testing.assert_array_equal(decimate(x, 1), x)

    def test_hand_example(self):
        np.testing.assert_array_equal(decimate(np.arange(16).reshape(4, 4), 2), [[0, 2], [8, 10]])

    def test_floor_dims(self):
        assert decimate(np.zeros((252, 444)), 4).shape == (63, 111)
        assert decimate(np.zeros((7, 9)), 2).shape == (3, 4)

    def test_degrade_is_blur_then_decimate(self):
        x = np.random.default_rng(1).random((8, 8))
        np.testing.assert_array_equal(degrade(x, 2, 1.0), decimate(gaussian_blur_3x3(x, 1.0), 2))
        np.testing.assert_array_equal(degrade(x, 2, None), decimate(x, 2))


class TestBicubic:
    @pytest.mark.parametrize("align", ["center", "corner"])
    def test_identity(self, align):
        x = np.random.default_rng(2).random((5, 7))
        np.testing.assert_allclose(bicubic_resize(x, 5, 7, align), x, atol=1e-12)

    @pytest.mark.parametrize("shape", [(3, 3), (10, 17), (1, 4)])
    def test_constant(self, shape):
        np.testing.assert_allclose(bicubic_resize(np.full((4, 5), 0.7), *shape), 0.7, atol=1e-12)

    @pytest.mark.parametrize("align", ["center", "corner"])
    def test_linear_ramp_reproduced(self, align):
        h, w = 12, 16
        x = np.tile(np.linspace(0.1, 0.9, w), (h, 1))
        up = bicubic_resize(x, 2 * h, 2 * w, align)
        if align == "center":
            pos = (np.arange(2 * w) + 0.5) / 2 - 0.5
        else:
            pos = np.arange(2 * w) / 2
        expected = 0.1 + 0.8 * pos / (w - 1)
        np.testing.assert_allclose(up[4:-4, 4:-4], np.tile(expected, (2 * h, 1))[4:-4, 4:-4], atol=1e-3)

    def test_decimate_after_upsample_close_on_smooth(self):
        yy, xx = np.mgrid[0:16, 0:16] / 16.0
        x = 0.5 + 0.3 * np.sin(2 * np.pi * xx * 0.5) * np.cos(2 * np.pi * yy * 0.3)
        back = decimate(bicubic_resize(x, 32, 32, "corner"), 2)
        assert np.abs(back - x).max() < 5e-2


class TestIO:
    def test_png_round_trip(self, tmp_path):
        img = np.random.default_rng(3).integers(0, 256, (5, 6, 3), dtype=np.uint8)
        io.write_image(tmp_path / "a.png", img)
        np.testing.assert_array_equal(io.read_rgb(tmp_path / "a.png"), img)

    @pytest.mark.parametrize("suffix,shape", [(".ppm", (4, 5, 3)), (".pgm", (4, 5))])
    def test_netpbm(self, tmp_path, suffix, shape):
        img = np.random.default_rng(4).integers(0, 256, shape, dtype=np.uint8)
        io.write_image(tmp_path / f"a{suffix}", img)
        back = io.read_rgb(tmp_path / f"a{suffix}")
        assert back.shape == (4, 5, 3)
        np.testing.assert_array_equal(back[..., 0], img if img.ndim == 2 else img[..., 0])

    def test_unreadable(self, tmp_path):
        (tmp_path / "bad.png").write_bytes(b"not a png")
        with pytest.raises(OSError, match="bad.png"):
            io.read_rgb(tmp_path / "bad.png")

    def test_mixed_dimensions(self, tmp_path):
        io.write_image(tmp_path / "frame_0000.png", np.zeros((4, 4, 3), np.uint8))
        io.write_image(tmp_path / "frame_0001.png", np.zeros((4, 5, 3), np.uint8))
        with pytest.raises(ValueError, match="mixed"):
            io.read_sequence(tmp_path)

    def test_index_relative_paths(self, tmp_path):
        dirs = [tmp_path / "seqs" / "a", tmp_path / "seqs" / "b"]
        io.write_index(tmp_path / "idx.json", dirs)
        assert json.loads((tmp_path / "idx.json").read_text()) == ["seqs/a", "seqs/b"]
        assert [p.resolve() for p in io.read_index(tmp_path / "idx.json")] == [d.resolve() for d in dirs]


class TestDataset:
    def test_center_window(self):
        assert list(center_window(list(range(9)), 3)) == [3, 4, 5]
        assert list(center_window(list(range(7)), 7)) == list(range(7))
        with pytest.raises(ValueError):
            center_window(list(range(2)), 3)

    def test_pairs_deterministic_and_shaped(self):
        ds = SequenceDataset(synthetic_dataset(3, seed=0, height=32, width=32))
        a = TrainingPairs(ds, r=2, C=7, patch=8, seed=11)
        b = TrainingPairs(ds, r=2, C=7, patch=8, seed=11)
        lr1, hr1 = a.batch(5, 3)
        lr2, hr2 = b.batch(5, 3)
        assert lr1.tobytes() == lr2.tobytes() and hr1.tobytes() == hr2.tobytes()
        assert lr1.shape == (3, 7, 8, 8) and hr1.shape == (3, 1, 16, 16)
        lr3, _ = TrainingPairs(ds, r=2, C=7, patch=8, seed=12).batch(5, 3)
        assert lr3.tobytes() != lr1.tobytes()

    def test_pair_matches_degraded_crop(self):
        seq = synthetic_dataset(1, seed=4, height=24, width=24)[0]
        pairs = TrainingPairs(SequenceDataset([seq]), r=2, C=7, patch=4, seed=0)
        lr, hr = pairs.pair(0)
        lr_full = np.stack([degrade(f, 2, 1.0) for f in seq]).astype(np.float32)
        hits = [
            (i, j)
            for i in range(lr_full.shape[1] - 3)
            for j in range(lr_full.shape[2] - 3)
            if np.array_equal(lr_full[:, i : i + 4, j : j + 4], lr)
        ]
        assert hits
        i, j = hits[0]
        np.testing.assert_array_equal(hr[0], seq.astype(np.float32)[3, 2 * i : 2 * i + 8, 2 * j : 2 * j + 8])

    def test_constant_sequence(self):
        seq = np.full((7, 16, 16), 0.42)
        lr, hr = TrainingPairs(SequenceDataset([seq]), r=2, C=7, patch=4, seed=0).pair(0)
        np.testing.assert_allclose(lr, 0.42, atol=1e-7)
        np.testing.assert_allclose(hr, 0.42, atol=1e-7)

    def test_patch_constraints(self):
        ds = SequenceDataset([np.zeros((7, 16, 16))])
        with pytest.raises(ValueError, match="divisible"):
            TrainingPairs(ds, r=3, C=7, patch=5, seed=0)
        with pytest.raises(ValueError, match="smaller"):
            TrainingPairs(ds, r=2, C=7, patch=12, seed=0)

    def test_sequences_need_equal_lengths(self):
        with pytest.raises(ValueError):
            SequenceDataset([np.zeros((7, 8, 8)), np.zeros((5, 8, 8))])

    def test_from_index(self, tmp_path):
        dirs = []
        for s in range(2):
            d = tmp_path / f"s{s}"
            io.write_sequence(d, [np.full((8, 8, 3), 10 * (s + f), np.uint8) for f in range(7)])
            dirs.append(d)
        io.write_index(tmp_path / "index.json", dirs)
        ds = SequenceDataset.from_index(tmp_path / "index.json")
        assert len(ds) == 2 and ds[1].shape == (7, 8, 8)


class TestSynthetic:
    def test_range_and_shape(self):
        seq = moving_texture_sequence(np.random.default_rng(0))
        assert seq.shape == (7, 48, 48) and seq.min() >= 0 and seq.max() <= 1

    def test_reproducible(self):
        a = synthetic_dataset(2, seed=9)
        b = synthetic_dataset(2, seed=9)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_frames_move(self):
        seq = synthetic_dataset(1, seed=1)[0]
        assert np.abs(seq[1] - seq[0]).mean() > 1e-4

    def test_pan(self):
        pan = horizontal_pan(5, 6, 12, speed=1, start=3)
        for n in range(5):
            assert int(np.argmax(pan[n, 2])) == 3 + n
