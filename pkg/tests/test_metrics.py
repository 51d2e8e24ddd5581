"""MSE/DepthCorr metrics, subsampling protocol, Wilcoxon signed-rank test."""

import numpy as np
import pytest
from scipy import stats

import landmarklift.metrics as metrics
from landmarklift.errors import DegenerateInputError, DimensionMismatchError
from landmarklift.landmarks import LandmarkSet3D
from landmarklift.metrics import (
    EvalReport,
    depth_corr,
    format_method_table,
    landmark_mse,
    subsample_indices,
    subsample_protocol,
    wilcoxon_signed_rank,
)


def _set3d(arr):
    return LandmarkSet3D(np.asarray(arr, dtype=np.float64))


def _random_shape(n, seed):
    return _set3d(np.random.default_rng(seed).standard_normal((n, 3)))


def test_mse_zero_on_identical():
    gt = _random_shape(20, 0)
    assert landmark_mse(gt, gt, align=False) == 0.0
    assert landmark_mse(gt, gt, align=True) < 1e-24


def test_mse_alignment_removes_translation():
    gt = _random_shape(15, 1)
    shifted = _set3d(gt.points + np.array([0.3, -0.7, 2.0]))
    assert landmark_mse(shifted, gt, align=False) > 1.0
    assert landmark_mse(shifted, gt, align=True) < 1e-20


def test_mse_alignment_removes_rotation_and_scale():
    gt = _random_shape(15, 2)
    theta = 0.7
    rot = np.array(
        [
            [np.cos(theta), -np.sin(theta), 0.0],
            [np.sin(theta), np.cos(theta), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    moved = _set3d(2.5 * gt.points @ rot.T + 1.0)
    assert landmark_mse(moved, gt, align=True) < 1e-18
    assert landmark_mse(moved, gt, align=False) > 0.1


def test_mse_hand_case_two_landmarks():
    gt = _set3d([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    pred = _set3d([[0.1, 0.0, 0.0], [1.0, 0.0, 0.0]])
    assert landmark_mse(pred, gt, align=False) == pytest.approx(0.005, rel=1e-12)
    assert landmark_mse(pred, gt, align=False, squared=False) == pytest.approx(
        0.05, rel=1e-12
    )


def test_mse_count_mismatch():
    with pytest.raises(DimensionMismatchError):
        landmark_mse(_random_shape(5, 0), _random_shape(6, 0))


def test_depth_corr_perfect():
    gt = _random_shape(30, 3)
    assert depth_corr(gt, gt) == pytest.approx(100.0, abs=1e-9)


def test_depth_corr_affine_invariant():
    gt = _random_shape(30, 4)
    scaled = _set3d(gt.points * np.array([2.0, 0.5, 7.0]) + np.array([1, -2, 3.0]))
    assert depth_corr(scaled, gt) == pytest.approx(100.0, abs=1e-9)


def test_depth_corr_z_negation():
    gt = _random_shape(30, 5)
    flipped = _set3d(gt.points * np.array([1.0, 1.0, -1.0]))
    assert depth_corr(flipped, gt) == pytest.approx(100.0 / 3.0, abs=1e-9)


def test_depth_corr_errors():
    with pytest.raises(DimensionMismatchError):
        depth_corr(_set3d([[0, 0, 0], [1, 1, 1]]), _set3d([[0, 0, 0], [1, 1, 1]]))
    flat = _set3d([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    with pytest.raises(DegenerateInputError):
        depth_corr(flat, flat)
    with pytest.raises(DimensionMismatchError):
        depth_corr(_random_shape(5, 0), _random_shape(6, 0))


def _eval_fixture(n_samples=40, noise=0.1, seed=0):
    rng = np.random.default_rng(seed)
    gts, preds = [], []
    for _ in range(n_samples):
        g = rng.standard_normal((12, 3))
        gts.append(_set3d(g))
        preds.append(_set3d(g + noise * rng.standard_normal((12, 3))))
    return gts, preds


def test_protocol_full_set_single_rep_equals_direct_eval():
    from landmarklift.geometry import procrustes_align

    gts, preds = _eval_fixture()
    report = subsample_protocol(gts, preds, size=len(gts), reps=1, seed=3)
    aligned = [procrustes_align(p, g)[0] for p, g in zip(preds, gts)]
    direct_mse = float(
        np.mean([landmark_mse(p, g, align=False) for p, g in zip(aligned, gts)])
    )
    direct_dc = float(
        np.mean([depth_corr(p, g) for p, g in zip(aligned, gts)])
    )
    assert report.mse_mean == pytest.approx(direct_mse, rel=1e-15)
    assert report.depthcorr_mean == pytest.approx(direct_dc, rel=1e-15)
    assert report.mse_std == 0.0
    assert report.repetitions == 1


def test_protocol_constant_metric_zero_std():
    gts, _ = _eval_fixture(20)
    report = subsample_protocol(gts, gts, size=10, reps=5, seed=1, align=False)
    assert report.mse_std == 0.0
    assert report.depthcorr_std == 0.0
    assert report.depthcorr_mean == pytest.approx(100.0, abs=1e-9)


def test_protocol_deterministic_bits():
    gts, preds = _eval_fixture()
    r1 = subsample_protocol(gts, preds, size=25, reps=6, seed=9)
    r2 = subsample_protocol(gts, preds, size=25, reps=6, seed=9)
    assert r1 == r2
    assert r1.to_json() == r2.to_json()
    r3 = subsample_protocol(gts, preds, size=25, reps=6, seed=10)
    assert r3.rep_mse != r1.rep_mse


def test_protocol_stats_recomputable_from_stored_values():
    gts, preds = _eval_fixture()
    report = subsample_protocol(gts, preds, size=15, reps=7, seed=4)
    per = np.array(report.per_sample_mse)
    redo = [
        float(per[idx].mean())
        for idx in subsample_indices(len(gts), 15, 7, 4)
    ]
    assert tuple(redo) == report.rep_mse
    assert report.mse_mean == float(np.mean(report.rep_mse))
    assert report.mse_std == float(np.std(report.rep_mse))


def test_protocol_errors():
    gts, preds = _eval_fixture(8)
    with pytest.raises(DegenerateInputError):
        subsample_protocol(gts, preds, size=9, reps=2, seed=0)
    with pytest.raises(DimensionMismatchError):
        subsample_protocol(gts, preds[:-1], size=4, reps=2, seed=0)
    with pytest.raises(DegenerateInputError):
        subsample_protocol([], [], size=1, reps=1, seed=0)
    with pytest.raises(ValueError):
        subsample_protocol(gts, preds, size=0, reps=1, seed=0)


def test_report_json_round_trip_and_csv():
    gts, preds = _eval_fixture(12)
    report = subsample_protocol(gts, preds, size=6, reps=3, seed=2)
    assert EvalReport.from_json(report.to_json()) == report
    csv = report.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "rep,mse,depthcorr"
    assert len(lines) == 1 + 3 + 2  # header, reps, mean, std
    assert lines[-2].startswith("mean,")
    assert lines[-1].startswith("std,")


def test_method_table_layout():
    gts, preds = _eval_fixture(10)
    r = subsample_protocol(gts, preds, size=5, reps=2, seed=0)
    table = format_method_table({"ours": r, "baseline": r})
    lines = table.strip().splitlines()
    assert "avgDepthCorr" in lines[0] and "avgMSE" in lines[0]
    assert lines[2].startswith("ours")
    assert lines[3].startswith("baseline")


def test_wilcoxon_five_positive_differences():
    a = np.arange(5.0)
    w, p = wilcoxon_signed_rank(a, a - 1.0)
    assert w == 15.0
    assert p == pytest.approx(0.0625, abs=1e-15)


def test_wilcoxon_ten_one_sided():
    a = np.arange(10.0)
    _, p = wilcoxon_signed_rank(a, a - 1.0)
    assert p == pytest.approx(2.0 / 1024.0, abs=1e-15)


def test_wilcoxon_degenerate_inputs():
    a = np.arange(6.0)
    with pytest.raises(DegenerateInputError):
        wilcoxon_signed_rank(a, a)
    with pytest.raises(DegenerateInputError):
        wilcoxon_signed_rank(np.array([1.0, 2, 3, 4]), np.array([0.0, 1, 2, 3]))
    with pytest.raises(DimensionMismatchError):
        wilcoxon_signed_rank(np.arange(5.0), np.arange(6.0))


def test_wilcoxon_exact_matches_scipy():
    rng = np.random.default_rng(7)
    for _ in range(100):
        m = int(rng.integers(6, 19))
        a = rng.standard_normal(m)
        b = a - rng.standard_normal(m) * 0.8 - 0.1
        w, p = wilcoxon_signed_rank(a, b)
        ref = stats.wilcoxon(a, b, alternative="two-sided", method="exact")
        assert p == pytest.approx(ref.pvalue, abs=1e-12)
        assert 0.0 < p <= 1.0


def test_wilcoxon_approx_matches_scipy_with_ties():
    rng = np.random.default_rng(8)
    for _ in range(50):
        m = int(rng.integers(25, 60))
        a = rng.integers(0, 6, size=m).astype(float)
        b = a - rng.integers(-2, 4, size=m).astype(float)
        if np.all(a == b):
            continue
        try:
            w, p = wilcoxon_signed_rank(a, b)
        except DegenerateInputError:
            continue
        ref = stats.wilcoxon(
            a, b, alternative="two-sided", method="approx", correction=True
        )
        assert p == pytest.approx(ref.pvalue, abs=1e-12)


def test_wilcoxon_exact_and_normal_agree_at_boundary():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(200):
        a = rng.standard_normal(20)
        b = a - rng.standard_normal(20) * rng.uniform(0.2, 1.5)
        _, p_exact = wilcoxon_signed_rank(a, b)
        old = metrics.EXACT_LIMIT
        metrics.EXACT_LIMIT = 0
        try:
            _, p_norm = wilcoxon_signed_rank(a, b)
        finally:
            metrics.EXACT_LIMIT = old
        worst = max(worst, abs(p_exact - p_norm))
    assert worst < 0.01
