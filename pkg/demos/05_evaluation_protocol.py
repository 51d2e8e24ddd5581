"""
Scoring methods the honest way
==============================

Once reconstructions exist, evaluation follows a fixed protocol: repeated
seeded subsamples of the test set, Procrustes alignment before scoring,
and two complementary numbers — the mean squared landmark error and
DepthCorr, the averaged per-axis correlation with ground truth.  A paired
Wilcoxon signed-rank test (exact for small samples) decides whether two
methods genuinely differ.  This demo runs the protocol on the mean-shape
predictor against a deliberately noisier copy of itself.
"""

import numpy as np

from landmarklift.landmarks import LandmarkSet3D
from landmarklift.metrics import (
    format_method_table,
    landmark_mse,
    subsample_protocol,
    wilcoxon_signed_rank,
)
from landmarklift.pipeline import mean_shape_baseline
from landmarklift.synthdata import build_default_model, sample_faces

model3d = build_default_model(n=72, k=20, seed=0)
train = sample_faces(model3d, 300, seed=0)
test = sample_faces(model3d, 80, seed=0, start_id=7_000)

# Two "methods": the mean training shape, and the same shape with noise.
rng = np.random.default_rng(1)
base = mean_shape_baseline(train)
noisy = LandmarkSet3D(base.points + 0.05 * rng.normal(size=base.points.shape))

reports = {
    "mean-shape": subsample_protocol(test, [base] * len(test), size=50, reps=10, seed=0),
    "noisy-copy": subsample_protocol(test, [noisy] * len(test), size=50, reps=10, seed=0),
}

# The table mirrors how results are reported: mean ± std over repetitions.
print(format_method_table(reports), end="")

# Per-sample errors feed a paired significance test.  The exact
# distribution is used up to 20 pairs; the tie-corrected normal
# approximation beyond that.
errs_a = np.array([landmark_mse(base, s.gt_3d) for s in test[:15]])
errs_b = np.array([landmark_mse(noisy, s.gt_3d) for s in test[:15]])
w, p = wilcoxon_signed_rank(errs_a, errs_b)
print(f"\npaired Wilcoxon on 15 faces: W = {w:.0f}, two-sided p = {p:.5f}")
print("small p: the noise genuinely hurts; the protocol can tell.")

# Reports round-trip through JSON for archival.
blob = reports["mean-shape"].to_json()
print(f"\nreport serializes to {len(blob)} bytes of JSON "
      f"(means, stds, per-repetition values, seed)")
