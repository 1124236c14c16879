"""Metric definitions checked against scalar-loop and skimage oracles."""

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.metrics import structural_similarity

import oracles
from votesr import (
    Image,
    MetricError,
    ResampleSpec,
    ScaleFactor,
    bicubic_resize,
    build_report,
    degrade,
    load_external_scores,
    lr_consistency,
    mse,
    psnr,
    ssim,
    to_luma,
    write_report_csv,
)
from votesr.metrics import (
    MEAN_ROW_ID,
    PSNR_CAP_DB,
    MetricReport,
    report_columns,
)


def skimage_ssim(a: Image, b: Image) -> float:
    """Independent SSIM oracle (canonical 11x11 sigma-1.5 parameterization)."""
    x = to_luma(a).data[:, :, 0] if a.channels == 3 else a.data[:, :, 0]
    y = to_luma(b).data[:, :, 0] if b.channels == 3 else b.data[:, :, 0]
    return float(
        structural_similarity(
            x, y,
            win_size=11,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            data_range=1.0,
        )
    )


class TestMse:
    def test_identical_is_zero(self, patch_img):
        assert mse(patch_img, patch_img) == 0.0

    def test_zeros_vs_ones(self):
        a = Image(np.zeros((4, 4)))
        b = Image(np.ones((4, 4)))
        assert mse(a, b) == 1.0

    def test_2x2_fixture_vs_scalar_loop(self):
        a = np.array([[0.1, 0.4], [0.9, 0.0]])
        b = np.array([[0.3, 0.4], [0.5, 0.25]])
        got = mse(Image(a), Image(b))
        want = oracles.reference_mse(a, b)
        assert abs(got - want) <= 1e-15

    def test_shape_mismatch_rejected(self):
        with pytest.raises(MetricError):
            mse(Image(np.zeros((4, 4))), Image(np.zeros((4, 5))))
        with pytest.raises(MetricError):
            mse(Image(np.zeros((4, 4, 1))), Image(np.zeros((4, 4, 3))))

    def test_translation_invariance(self):
        rng = np.random.default_rng(21)
        a = rng.random((6, 6)) * 0.5
        b = rng.random((6, 6)) * 0.5
        c = 0.25
        assert abs(mse(Image(a), Image(b)) - mse(Image(a + c), Image(b + c))) <= 1e-12


class TestPsnr:
    def test_identical_hits_cap(self, digit_img):
        assert psnr(digit_img, digit_img) == PSNR_CAP_DB

    def test_mse_001_gives_20db(self):
        a = Image(np.zeros((8, 8)))
        b = Image(np.full((8, 8), 0.1))
        assert abs(psnr(a, b) - 20.0) <= 1e-12

    def test_2x2_fixture_vs_scalar_loop(self):
        a = np.array([[0.1, 0.4], [0.9, 0.0]])
        b = np.array([[0.3, 0.4], [0.5, 0.25]])
        got = psnr(Image(a), Image(b))
        want = oracles.reference_psnr(a, b)
        assert abs(got - want) <= 1e-12

    def test_monotone_decreasing_in_mse(self):
        base = Image(np.full((8, 8), 0.5))
        values = [psnr(base, Image(np.full((8, 8), 0.5 + d))) for d in (0.05, 0.1, 0.2, 0.4)]
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_luma_variant(self):
        rng = np.random.default_rng(8)
        a = Image(rng.random((12, 12, 3)))
        b = Image(rng.random((12, 12, 3)))
        want = psnr(to_luma(a), to_luma(b))
        assert abs(psnr(a, b, on_luma=True) - want) <= 1e-12
        assert psnr(a, b, on_luma=True) != pytest.approx(psnr(a, b), abs=1e-6)


class TestSsim:
    def test_self_similarity_is_one(self, digit_img, patch_img):
        assert abs(ssim(digit_img, digit_img) - 1.0) <= 1e-9
        assert abs(ssim(patch_img, patch_img) - 1.0) <= 1e-9

    def test_constant_shift_matches_oracle(self):
        a = Image(np.full((16, 16), 0.2))
        b = Image(np.full((16, 16), 0.7))
        assert abs(ssim(a, b) - skimage_ssim(a, b)) <= 1e-4

    def test_anticorrelated_checkerboard_negative(self):
        ys, xs = np.mgrid[0:12, 0:12]
        board = np.where((xs + ys) % 2 == 0, 0.2, 0.8)
        inverted = 1.0 - board
        a, b = Image(board), Image(inverted)
        value = ssim(a, b)
        assert value < 0.0
        assert abs(value - skimage_ssim(a, b)) <= 1e-4

    def test_digit_fixture_vs_oracle(self, digit_img):
        lr = degrade(digit_img, ScaleFactor(4))
        blurry = bicubic_resize(lr, ResampleSpec(28, 28, antialias=False))
        assert abs(ssim(digit_img, blurry) - skimage_ssim(digit_img, blurry)) <= 1e-4

    def test_patch_fixture_vs_oracle(self, patch_img):
        rng = np.random.default_rng(31)
        noisy = Image(np.clip(patch_img.data + rng.normal(0, 0.05, patch_img.shape), 0, 1))
        assert abs(ssim(patch_img, noisy) - skimage_ssim(patch_img, noisy)) <= 1e-4

    def test_rgb_uses_luma(self, patch_img):
        rng = np.random.default_rng(32)
        other = Image(np.clip(patch_img.data + rng.normal(0, 0.1, patch_img.shape), 0, 1))
        assert ssim(patch_img, other) == pytest.approx(
            ssim(to_luma(patch_img), to_luma(other)), abs=1e-12
        )

    def test_undersized_rejected(self):
        a = Image(np.zeros((10, 30)))
        with pytest.raises(MetricError):
            ssim(a, a)

    def test_in_valid_range(self, patch_img):
        rng = np.random.default_rng(33)
        other = Image(rng.random(patch_img.shape))
        v = ssim(patch_img, other)
        assert -1.0 <= v <= 1.0


class TestSymmetry:
    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_all_metrics_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        a = Image(rng.random((12, 12)))
        b = Image(rng.random((12, 12)))
        assert abs(mse(a, b) - mse(b, a)) <= 1e-9
        assert abs(psnr(a, b) - psnr(b, a)) <= 1e-9
        assert abs(ssim(a, b) - ssim(b, a)) <= 1e-9


class TestLrConsistency:
    def test_bicubic_upscale_regression_floor(self, patch_img):
        # pinned ratchet, not ground truth: a plain bicubic x4 upscale of the
        # fixture's LR should degrade back very close to that LR
        lr = degrade(patch_img, ScaleFactor(4))
        sr = bicubic_resize(lr, ResampleSpec(128, 128, antialias=False))
        assert lr_consistency(sr, lr, ScaleFactor(4)) >= 35.0

    def test_self_consistency_hits_cap(self, patch_img):
        lr = degrade(patch_img, ScaleFactor(4))
        assert lr_consistency(patch_img, lr, ScaleFactor(4)) == PSNR_CAP_DB

    def test_noise_regression_ceiling(self, patch_img):
        rng = np.random.default_rng(40)
        lr = degrade(patch_img, ScaleFactor(4))
        noise = Image(rng.random((128, 128, 3)))
        assert lr_consistency(noise, lr, ScaleFactor(4)) < 15.0

    def test_dimension_mismatch_rejected(self, patch_img):
        lr = degrade(patch_img, ScaleFactor(4))
        with pytest.raises(MetricError):
            lr_consistency(patch_img, lr, ScaleFactor(2))

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_self_consistency_property(self, seed):
        rng = np.random.default_rng(seed)
        img = Image(rng.random((16, 16, 3)))
        f = ScaleFactor(4)
        assert lr_consistency(img, degrade(img, f), f) == PSNR_CAP_DB


class TestExternalScores:
    def test_lookup_from_fig1_row(self, tmp_path):
        p = tmp_path / "ext.csv"
        p.write_text("image_id,score_name,value\nimg-6,DISTS,0.193\nimg-6,PSNR,26.69\n")
        table = load_external_scores(p)
        assert table.get("img-6", "DISTS") == 0.193
        assert table.scores_for("img-6") == {"DISTS": 0.193, "PSNR": 26.69}

    def test_header_only_is_empty(self, tmp_path):
        p = tmp_path / "ext.csv"
        p.write_text("image_id,score_name,value\n")
        assert len(load_external_scores(p)) == 0

    def test_duplicate_key_names_key(self, tmp_path):
        p = tmp_path / "ext.csv"
        p.write_text(
            "image_id,score_name,value\nimg-1,LPIPS,0.2\nimg-1,LPIPS,0.3\n"
        )
        with pytest.raises(MetricError, match="img-1.*LPIPS"):
            load_external_scores(p)

    def test_malformed_row_rejected(self, tmp_path):
        p = tmp_path / "ext.csv"
        p.write_text("image_id,score_name,value\nimg-1,LPIPS\n")
        with pytest.raises(MetricError, match="3 columns"):
            load_external_scores(p)

    def test_non_finite_rejected(self, tmp_path):
        p = tmp_path / "ext.csv"
        p.write_text("image_id,score_name,value\nimg-1,LPIPS,nan\n")
        with pytest.raises(MetricError, match="non-finite"):
            load_external_scores(p)

    def test_unparseable_value_rejected(self, tmp_path):
        p = tmp_path / "ext.csv"
        p.write_text("image_id,score_name,value\nimg-1,LPIPS,abc\n")
        with pytest.raises(MetricError):
            load_external_scores(p)

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "ext.csv"
        p.write_text("id,name,val\nimg-1,LPIPS,0.5\n")
        with pytest.raises(MetricError, match="header"):
            load_external_scores(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MetricError):
            load_external_scores(tmp_path / "nope.csv")


class TestBuildReport:
    def test_sr_equals_hr(self, patch_img):
        lr = degrade(patch_img, ScaleFactor(4))
        r = build_report("p", patch_img, patch_img, lr, ScaleFactor(4))
        assert r.psnr_db == PSNR_CAP_DB
        assert abs(r.ssim - 1.0) <= 1e-9
        assert r.mse == 0.0
        assert r.lr_consistency_db == PSNR_CAP_DB
        assert r.external == {}

    def test_compositional(self, patch_img, tmp_path):
        rng = np.random.default_rng(50)
        sr = Image(np.clip(patch_img.data + rng.normal(0, 0.03, patch_img.shape), 0, 1))
        lr = degrade(patch_img, ScaleFactor(4))
        p = tmp_path / "ext.csv"
        p.write_text("image_id,score_name,value\np,DISTS,0.193\n")
        table = load_external_scores(p)
        r = build_report("p", sr, patch_img, lr, ScaleFactor(4), external=table)
        assert r.psnr_db == psnr(sr, patch_img)
        assert r.ssim == ssim(sr, patch_img)
        assert r.mse == mse(sr, patch_img)
        assert r.lr_consistency_db == lr_consistency(sr, lr, ScaleFactor(4))
        assert r.external == {"DISTS": 0.193}

    def test_absent_external_id_is_legal(self, patch_img, tmp_path):
        lr = degrade(patch_img, ScaleFactor(4))
        p = tmp_path / "ext.csv"
        p.write_text("image_id,score_name,value\nother,DISTS,0.5\n")
        table = load_external_scores(p)
        r = build_report("p", patch_img, patch_img, lr, ScaleFactor(4), external=table)
        assert r.external == {}

    def test_invariants_enforced(self):
        with pytest.raises(MetricError):
            MetricReport("x", 50.0, 1.5, 0.1, 50.0)
        with pytest.raises(MetricError):
            MetricReport("x", 50.0, 0.5, -0.1, 50.0)
        with pytest.raises(MetricError):
            MetricReport("x", 120.0, 0.5, 0.1, 50.0)


class TestReportCsv:
    def _reports(self):
        return [
            MetricReport("a", 30.0, 0.9, 0.001, 40.0, {"DISTS": 0.2, "LPIPS": 0.1}),
            MetricReport("b", 28.0, 0.8, 0.002, 38.0, {"NRQM": 5.0}),
        ]

    def test_columns_lexicographic(self):
        cols = report_columns(self._reports())
        assert cols == [
            "image_id", "psnr_db", "ssim", "mse", "lr_consistency_db",
            "DISTS", "LPIPS", "NRQM",
        ]

    def test_missing_externals_empty_cells(self, tmp_path):
        path = tmp_path / "report.csv"
        write_report_csv(self._reports(), path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == [
            "image_id", "psnr_db", "ssim", "mse", "lr_consistency_db",
            "DISTS", "LPIPS", "NRQM",
        ]
        assert rows[1][0] == "a" and rows[1][7] == ""
        assert rows[2][0] == "b" and rows[2][5] == "" and rows[2][6] == ""
        assert float(rows[2][7]) == 5.0

    def test_full_precision_round_trip(self, tmp_path):
        r = MetricReport("a", 26.690000000000001, 0.9333333333333333, 1e-3, 40.0, {})
        path = tmp_path / "report.csv"
        write_report_csv([r], path)
        rows = list(csv.reader(path.open()))
        assert float(rows[1][1]) == r.psnr_db
        assert float(rows[1][2]) == r.ssim

    def test_mean_row(self, tmp_path):
        path = tmp_path / "report.csv"
        write_report_csv(self._reports(), path, include_mean=True)
        rows = list(csv.reader(path.open()))
        mean = rows[-1]
        assert mean[0] == MEAN_ROW_ID
        assert float(mean[1]) == pytest.approx(29.0)
        assert float(mean[2]) == pytest.approx(0.85)
        # external means average only rows where the score is present
        assert float(mean[5]) == pytest.approx(0.2)
        assert float(mean[7]) == pytest.approx(5.0)
