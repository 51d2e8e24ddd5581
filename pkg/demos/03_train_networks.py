"""
Training the two small networks
===============================

Two tiny dense networks do all the learning.  The view normalizer is an
encoder-decoder that maps landmarks seen from any pose and projection onto
the canonical view; the dissimilarity network regresses the true 3D
distance of a landmark pair from symmetric 2D pair features.  Both train
with plain Adam on seeded streams, so loss curves are reproducible to the
bit.  This demo trains both at toy scale and prints their learning curves.
"""

import numpy as np

from landmarklift.dissim import DissimTrainConfig, train_dissimilarity
from landmarklift.synthdata import build_default_model, sample_faces
from landmarklift.viewnorm import (
    ViewnormTrainConfig,
    default_viewnorm_model,
    evaluate_view_rmse,
    train_viewnorm,
)

model3d = build_default_model(n=72, k=20, seed=0)
train = sample_faces(model3d, 200, seed=0)
held_out = sample_faces(model3d, 40, seed=0, start_id=10_000)

# --- view normalizer -----------------------------------------------------
# 144 -> 64 -> 32 -> 64 -> 144; the 32-wide bottleneck forces a compact
# pose-invariant code.  Row 0 of the log is the untrained model.
net = default_viewnorm_model(72, seed=0)
print(f"view normalizer: {net.parameter_count()} parameters")
net, log = train_viewnorm(
    train, ViewnormTrainConfig(epochs=60, learning_rate=1e-3, seed=0), model=net
)
for e, tr, va in log.rows[:: max(1, len(log.rows) // 6)]:
    print(f"  epoch {e:3d}: train {tr:9.4f}  val {va:9.4f}")
rmse = evaluate_view_rmse(net, held_out)
print(f"held-out per-landmark RMSE after 60 epochs: {rmse:.4f}")

# --- dissimilarity network ----------------------------------------------
# 6 pair features -> five hidden layers of 20 -> Softplus distance.  Each
# mini-batch holds every pair of one face ("same-face" scheme).
dm, dlog = train_dissimilarity(
    train, "same-face", DissimTrainConfig(epochs=8, learning_rate=1e-3, seed=0)
)
print(f"\ndistance network: {dm.parameter_count()} parameters")
for e, tr, va in dlog.rows[:: max(1, len(dlog.rows) // 6)]:
    print(f"  epoch {e:3d}: train {tr:9.5f}  val {va:9.5f}")

# The training log serializes to CSV for plotting or archival.
csv = dlog.to_csv().splitlines()
print(f"\nlog as CSV: {csv[0]!r} … ({len(csv) - 1} rows)")

# A quick sanity check that the distance network learned real structure:
# predicted vs true distances on a held-out face.
from landmarklift.dissim import build_dissimilarity_matrix
from landmarklift.mds import pairwise_distances

s = held_out[0]
pred = build_dissimilarity_matrix(dm, s.profile_2d).values
true = pairwise_distances(s.gt_3d.points)
iu = np.triu_indices(72, k=1)
err = np.abs(pred[iu] - true[iu]) / np.maximum(true[iu], 1e-9)
print(f"median relative distance error on a held-out face: "
      f"{100 * np.median(err):.1f}%")
