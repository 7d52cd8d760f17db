import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcvsr.data.io import write_sequence
from lcvsr.data.synthetic import horizontal_pan
from lcvsr.metrics import evaluate_dirs, gaussian_window_1d, psnr_y, ssim
from lcvsr.visualize import temporal_profile, visualize_filters


def ssim_single_window(a: float, b: float) -> float:
    """Closed form for two constant images: zero variance, only the luminance term."""
    c1, c2 = 0.01**2, 0.03**2
    return ((2 * a * b + c1) * c2) / ((a * a + b * b + c1) * c2)


def ssim_direct(x, y):
    """Per-window loop over an explicit 2-D Gaussian."""
    g = gaussian_window_1d()
    w = np.outer(g, g)
    c1, c2 = 0.01**2, 0.03**2
    vals = []
    for i in range(x.shape[0] - 10):
        for j in range(x.shape[1] - 10):
            px, py = x[i : i + 11, j : j + 11], y[i : i + 11, j : j + 11]
            mx, my = (w * px).sum(), (w * py).sum()
            vx = (w * (px - mx) ** 2).sum()
            vy = (w * (py - my) ** 2).sum()
            cxy = (w * (px - mx) * (py - my)).sum()
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


class TestPSNR:
    def test_identical_is_infinite(self):
        x = np.random.default_rng(0).random((8, 8))
        assert math.isinf(psnr_y(x, x))

    def test_closed_forms(self):
        x = np.zeros((10, 10))
        assert psnr_y(x, x + 0.1) == pytest.approx(20.0, abs=0.01)
        assert psnr_y(x, x + 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_crop(self):
        a = np.zeros((10, 10))
        b = a.copy()
        b[0, :] = 1.0
        assert math.isinf(psnr_y(a, b, crop=1))
        with pytest.raises(ValueError, match="too large"):
            psnr_y(a, b, crop=5)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            psnr_y(np.zeros((4, 4)), np.zeros((4, 5)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0.01, 0.2), st.floats(1.1, 3.0))
    def test_symmetric_and_decreasing_in_mse(self, seed, scale, factor):
        rng = np.random.default_rng(seed)
        x = rng.random((8, 8))
        noise = rng.standard_normal((8, 8))
        y1, y2 = x + scale * noise, x + scale * factor * noise
        assert psnr_y(x, y1) == psnr_y(y1, x)
        assert psnr_y(x, y1) > psnr_y(x, y2)


class TestSSIM:
    def test_self_is_one(self):
        x = np.random.default_rng(1).random((20, 24))
        assert abs(ssim(x, x) - 1.0) <= 1e-9

    @pytest.mark.parametrize("a,off", [(0.3, 0.1), (0.0, 0.1), (0.8, -0.5)])
    def test_constant_offset_matches_closed_form(self, a, off):
        x = np.full((16, 16), a)
        assert ssim(x, x + off) == pytest.approx(ssim_single_window(a, a + off), abs=1e-6)

    def test_checkerboard_complement_negative(self):
        cb = (np.indices((16, 16)).sum(0) % 2).astype(float)
        assert ssim(cb, 1 - cb) < 0
        assert ssim(cb, 1 - cb) == pytest.approx(ssim_direct(cb, 1 - cb), abs=1e-9)

    def test_matches_direct_window_loop(self):
        rng = np.random.default_rng(2)
        x = rng.random((14, 15))
        y = np.clip(x + 0.1 * rng.standard_normal(x.shape), 0, 1)
        assert ssim(x, y) == pytest.approx(ssim_direct(x, y), abs=1e-9)

    def test_too_small(self):
        with pytest.raises(ValueError, match="11x11"):
            ssim(np.zeros((10, 12)), np.zeros((10, 12)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31))
    def test_bounded(self, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.random((12, 12)), rng.random((12, 12))
        assert -1.0 <= ssim(x, y) <= 1.0


class TestReport:
    def test_identical_dirs(self, tmp_path):
        frames = [np.random.default_rng(i).integers(0, 256, (16, 16, 3), dtype=np.uint8) for i in range(3)]
        write_sequence(tmp_path / "a", frames)
        write_sequence(tmp_path / "b", frames)
        report = evaluate_dirs(tmp_path / "a", tmp_path / "b", crop=2)
        d = report.to_dict()
        assert d["mean_psnr"] == "infinite" and d["mean_ssim"] == 1.0
        assert d["config"] == {"crop": 2, "swing": "studio"}
        report.write_json(tmp_path / "m.json")
        assert json.loads((tmp_path / "m.json").read_text())["frames"][0]["psnr"] == "infinite"
        report.write_csv(tmp_path / "m.csv")
        assert (tmp_path / "m.csv").read_text().splitlines()[0] == "name,psnr_db,ssim"


class TestTemporalProfile:
    def test_identical_frames_identical_rows(self):
        f = np.random.default_rng(3).random((6, 9))
        prof = temporal_profile([f] * 4, 2)
        assert prof.shape == (4, 9) and prof.dtype == np.uint8
        assert not np.diff(prof.astype(int), axis=0).any()

    def test_single_frame(self):
        f = np.linspace(0, 1, 24).reshape(4, 6)
        np.testing.assert_array_equal(temporal_profile([f], 1)[0], np.round(f[1] * 255).astype(np.uint8))

    def test_pan_gives_diagonal(self):
        pan = horizontal_pan(6, 5, 16, speed=1, start=2)
        prof = temporal_profile(list(pan), 2)
        peaks = prof.argmax(axis=1)
        assert list(np.diff(peaks)) == [1] * 5

    def test_row_out_of_range(self):
        with pytest.raises(ValueError, match="row"):
            temporal_profile([np.zeros((3, 3))], 3)


class TestFilterVisualisation:
    def test_size_15(self):
        theta = np.random.default_rng(4).standard_normal((7, 24, 24, 4))
        assert visualize_filters(theta, 3, (1, 2, 5, 5), frame=3, fmap=1).shape == (15, 15)

    def test_constant_is_mid_gray(self):
        img = visualize_filters(np.full((1, 7, 24, 24, 4), 0.3), 3, (0, 0, 5, 5))
        assert (img == 128).all()

    def test_delta_bank_bright_centres(self):
        theta = np.zeros((7, 24, 24, 4))
        theta[3, 1::3, 1::3, 0] = 1
        img = visualize_filters(theta, 3, (2, 2, 5, 5), frame=3, fmap=0)
        expected = np.zeros((15, 15), np.uint8)
        expected[1::3, 1::3] = 255
        np.testing.assert_array_equal(img, expected)

    def test_tile_layout(self):
        theta = np.random.default_rng(5).standard_normal((2, 12, 12, 1))
        img = visualize_filters(theta, 3, (1, 1, 2, 2), frame=1).astype(float)
        ref = theta[1, 3:9, 3:9, 0]
        ref = np.round((ref - ref.min()) / (ref.max() - ref.min()) * 255)
        np.testing.assert_array_equal(img, ref)

    def test_out_of_bounds(self):
        with pytest.raises(ValueError):
            visualize_filters(np.zeros((7, 24, 24, 4)), 3, (5, 5, 5, 5))
