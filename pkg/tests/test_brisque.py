import io
import json

import numpy as np
import pytest
from PIL import Image

from bannerforge.brisque import (AggdFit, BrisqueError, brisque_features,
                                 compute_mscn, fit_aggd, fit_ggd,
                                 moment_ratio_grid, paired_products,
                                 summarize_scores, to_luminance)


def png_of(array):
    buf = io.BytesIO()
    Image.fromarray(array.astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


class TestLuminance:
    def test_white_is_255(self):
        arr = np.full((20, 20, 3), 255, dtype=np.uint8)
        gray = to_luminance(png_of(arr))
        assert np.allclose(gray, 255.0)

    def test_pure_red_uses_its_weight(self):
        arr = np.zeros((20, 20, 3), dtype=np.uint8)
        arr[:, :, 0] = 255
        gray = to_luminance(png_of(arr))
        assert np.allclose(gray, 0.299 * 255)

    def test_equal_channels_pass_through(self):
        arr = np.full((20, 20, 3), 100, dtype=np.uint8)
        gray = to_luminance(arr.astype(np.float64))
        assert np.allclose(gray, 100.0)  # weights sum to 1

    def test_two_d_array_passes_through(self):
        arr = np.arange(400, dtype=np.float64).reshape(20, 20)
        assert np.array_equal(to_luminance(arr), arr)

    def test_small_image_rejected(self):
        arr = np.zeros((8, 40, 3), dtype=np.uint8)
        with pytest.raises(BrisqueError, match="too small"):
            to_luminance(arr)

    def test_garbage_bytes_rejected(self):
        with pytest.raises(BrisqueError, match="decode"):
            to_luminance(b"definitely not a png")


class TestMscn:
    def test_constant_image_is_exactly_zero(self):
        for level in (0.0, 128.0, 255.0):
            mscn = compute_mscn(np.full((32, 32), level))
            assert np.all(mscn == 0.0)  # identically zero, not just close

    def test_single_bright_pixel_positive_at_center(self):
        gray = np.zeros((33, 33))
        gray[16, 16] = 255.0
        mscn = compute_mscn(gray)
        assert mscn[16, 16] > 0
        # Far corner is outside the 7x7 support: mean and sigma are zero there.
        assert mscn[0, 0] == 0.0

    def test_values_bounded_by_range(self):
        rng = np.random.default_rng(5)
        gray = rng.uniform(0, 255, size=(40, 40))
        mscn = compute_mscn(gray)
        # |I - mu| <= 255 and sigma + 1 >= 1, so |MSCN| can never exceed 255.
        assert np.max(np.abs(mscn)) < 255.0

    def test_shape_preserved(self):
        assert compute_mscn(np.random.default_rng(0).uniform(0, 9, (17, 23))).shape == (17, 23)

    def test_non_2d_rejected(self):
        with pytest.raises(BrisqueError):
            compute_mscn(np.zeros((4, 4, 3)))

    def test_mean_shift_invariance(self):
        # Adding a constant shifts mu identically and leaves sigma unchanged.
        rng = np.random.default_rng(11)
        gray = rng.uniform(50, 150, size=(32, 32))
        assert np.allclose(compute_mscn(gray), compute_mscn(gray + 40.0), atol=1e-10)


class TestPairedProducts:
    def test_hand_worked_2x2(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        h, v, d1, d2 = paired_products(m)
        assert np.array_equal(h, [[2.0], [12.0]])
        assert np.array_equal(v, [[3.0, 8.0]])
        assert np.array_equal(d1, [[4.0]])
        assert np.array_equal(d2, [[6.0]])

    def test_shapes_shrink_along_pair_axis(self):
        m = np.zeros((5, 7))
        h, v, d1, d2 = paired_products(m)
        assert h.shape == (5, 6)
        assert v.shape == (4, 7)
        assert d1.shape == (4, 6)
        assert d2.shape == (4, 6)

    def test_checkerboard_signs(self):
        m = np.indices((6, 6)).sum(axis=0) % 2 * 2.0 - 1.0  # alternating +-1
        h, v, d1, d2 = paired_products(m)
        assert np.all(h == -1.0)
        assert np.all(v == -1.0)
        assert np.all(d1 == 1.0)
        assert np.all(d2 == 1.0)


class TestMomentRatioGrid:
    def test_grid_span_and_step(self):
        alphas, rho = moment_ratio_grid()
        assert alphas.size == 9801
        assert alphas[0] == pytest.approx(0.2)
        assert alphas[-1] == pytest.approx(10.0)
        assert np.allclose(np.diff(alphas), 0.001)

    def test_rho_strictly_decreasing(self):
        _, rho = moment_ratio_grid()
        assert np.all(np.diff(rho) < 0)

    def test_landmark_values(self):
        alphas, rho = moment_ratio_grid()
        # Gaussian: rho(2) = pi/2; Laplace: rho(1) = 2.
        assert rho[np.argmin(np.abs(alphas - 2.0))] == pytest.approx(np.pi / 2, abs=1e-3)
        assert rho[np.argmin(np.abs(alphas - 1.0))] == pytest.approx(2.0, abs=1e-3)


class TestGgdFit:
    def test_gaussian_samples_fit_alpha_two(self):
        x = np.random.default_rng(42).normal(0, 1.3, size=1_000_00)
        fit = fit_ggd(x)
        assert fit.alpha == pytest.approx(2.0, abs=0.1)
        assert fit.sigma_sq == pytest.approx(1.3 ** 2, rel=0.05)

    def test_laplace_samples_fit_alpha_one(self):
        x = np.random.default_rng(42).laplace(0, 1.0, size=1_000_00)
        assert fit_ggd(x).alpha == pytest.approx(1.0, abs=0.05)

    def test_too_few_samples_rejected(self):
        with pytest.raises(BrisqueError, match="100"):
            fit_ggd(np.ones(99))

    def test_all_zero_rejected(self):
        with pytest.raises(BrisqueError, match="zero"):
            fit_ggd(np.zeros(500))

    def test_scale_invariant_alpha(self):
        x = np.random.default_rng(3).normal(0, 1, size=20000)
        assert fit_ggd(x).alpha == fit_ggd(x * 7.5).alpha


class TestAggdFit:
    def test_symmetric_input_balances(self):
        x = np.random.default_rng(7).normal(0, 1, size=200000)
        fit = fit_aggd(x)
        assert fit.nu == pytest.approx(2.0, abs=0.1)
        assert fit.sigma_l_sq == pytest.approx(fit.sigma_r_sq, rel=0.05)
        assert abs(fit.mean_feature) < 0.02

    def test_right_heavy_input_positive_mean_feature(self):
        rng = np.random.default_rng(9)
        x = np.concatenate([rng.normal(0, 0.5, 50000) - 0.0,
                            np.abs(rng.normal(0, 2.0, 50000))])
        x = x[x != 0]
        fit = fit_aggd(x)
        assert fit.sigma_r_sq > fit.sigma_l_sq
        assert fit.mean_feature > 0

    def test_half_variances_use_sign_split(self):
        x = np.array([-2.0] * 100 + [1.0] * 300)
        fit = fit_aggd(x)
        assert fit.sigma_l_sq == pytest.approx(4.0)
        assert fit.sigma_r_sq == pytest.approx(1.0)

    def test_single_signed_rejected(self):
        with pytest.raises(BrisqueError, match="both signs"):
            fit_aggd(np.ones(500))

    def test_too_few_samples_rejected(self):
        with pytest.raises(BrisqueError):
            fit_aggd(np.linspace(-1, 1, 50))

    def test_zeros_excluded_from_both_halves(self):
        x = np.array([-1.0] * 100 + [0.0] * 800 + [1.0] * 100)
        fit = fit_aggd(x)
        assert fit.sigma_l_sq == pytest.approx(1.0)
        assert fit.sigma_r_sq == pytest.approx(1.0)


class TestFeatures:
    def _textured(self, seed=0, size=(48, 64)):
        rng = np.random.default_rng(seed)
        base = rng.uniform(0, 255, size=size)
        return base

    def test_vector_has_36_finite_components(self):
        feats = brisque_features(self._textured())
        assert feats.shape == (36,)
        assert np.all(np.isfinite(feats))

    def test_layout_alternates_ggd_then_aggd_blocks(self):
        gray = self._textured(1)
        feats = brisque_features(gray)
        mscn = compute_mscn(gray)
        ggd = fit_ggd(mscn)
        assert feats[0] == ggd.alpha
        assert feats[1] == ggd.sigma_sq
        first_aggd = fit_aggd(paired_products(mscn)[0])
        assert feats[2] == first_aggd.nu
        assert feats[3] == first_aggd.mean_feature
        assert feats[4] == first_aggd.sigma_l_sq
        assert feats[5] == first_aggd.sigma_r_sq

    def test_mirror_swaps_diagonal_blocks_only(self):
        gray = self._textured(2)
        feats = brisque_features(gray)
        flipped = brisque_features(gray[:, ::-1])
        for scale_off in (0, 18):
            # GGD pair and H/V AGGD blocks are unchanged by a mirror.
            assert np.allclose(feats[scale_off:scale_off + 10],
                               flipped[scale_off:scale_off + 10], atol=1e-9)
            d1 = slice(scale_off + 10, scale_off + 14)
            d2 = slice(scale_off + 14, scale_off + 18)
            assert np.allclose(feats[d1], flipped[d2], atol=1e-9)
            assert np.allclose(feats[d2], flipped[d1], atol=1e-9)

    def test_small_gray_shift_barely_moves_features(self):
        gray = self._textured(3)
        shifted = np.clip(gray + 1.0, 0, 255)
        delta = np.abs(brisque_features(gray) - brisque_features(shifted))
        # Fits move by at most a few grid steps for a 1-level shift.
        assert np.max(delta) < 0.05

    def test_reference_fixtures_match_frozen_features(self, fixtures_dir,
                                                      reference_features):
        assert len(reference_features) >= 5
        worst = 0.0
        for name, expected in reference_features.items():
            data = (fixtures_dir / "brisque" / name).read_bytes()
            got = brisque_features(to_luminance(data))
            worst = max(worst, float(np.max(np.abs(got - np.asarray(expected)))))
        assert worst < 1e-6

    def test_image_too_small_rejected(self):
        with pytest.raises(BrisqueError, match="too small"):
            brisque_features(np.zeros((10, 100)))

    def test_odd_dimensions_supported(self):
        feats = brisque_features(self._textured(4, size=(33, 47)))
        assert feats.shape == (36,)


class TestSummarize:
    def test_mean_and_population_std(self):
        mean, std = summarize_scores([1.0, 2.0, 3.0, 4.0])
        assert mean == pytest.approx(2.5)
        assert std == pytest.approx(np.sqrt(1.25))

    def test_single_score(self):
        assert summarize_scores([7.0]) == (7.0, 0.0)

    def test_empty_rejected(self):
        with pytest.raises(BrisqueError):
            summarize_scores([])
