"""End-to-end reconstruction plumbing: results, failure labeling, baseline."""

import time

import numpy as np
import pytest

from landmarklift.dissim import default_dissim_model
from landmarklift.errors import DegenerateInputError
from landmarklift.landmarks import LandmarkSet2D, normalize_points
from landmarklift.pipeline import (
    ReconstructionResult,
    mean_shape_baseline,
    reconstruct,
    reconstruct_dataset,
)
from landmarklift.synthdata import build_default_model, sample_faces
from landmarklift.viewnorm import default_viewnorm_model


@pytest.fixture(scope="module")
def small_world():
    model3d = build_default_model(12, 4, seed=3)
    samples = sample_faces(model3d, 6, seed=3)
    dissim = default_dissim_model(seed=0)
    viewnorm = default_viewnorm_model(12, seed=0, hidden=(16, 8, 16))
    return samples, dissim, viewnorm


def test_reconstruct_result_fields(small_world):
    samples, dissim, viewnorm = small_world
    res = reconstruct(samples[0].input_2d, dissim, viewnorm, face_id=41)
    assert res.face_id == 41
    assert res.points_3d.points.shape == (12, 3)
    assert len(res.matrix_hash) == 64
    assert int(res.matrix_hash, 16) >= 0
    assert res.stress >= 0.0
    assert res.viewnorm_us >= 0
    assert res.dissim_us >= 0
    assert res.mds_us >= 0


def test_result_rejects_negative_timing(small_world):
    samples, dissim, viewnorm = small_world
    res = reconstruct(samples[0].input_2d, dissim, viewnorm)
    with pytest.raises(ValueError, match="nonnegative"):
        ReconstructionResult(
            face_id=res.face_id,
            points_3d=res.points_3d,
            matrix_hash=res.matrix_hash,
            stress=res.stress,
            viewnorm_us=-1,
            dissim_us=res.dissim_us,
            mds_us=res.mds_us,
            converged=res.converged,
        )


def test_reconstruct_dataset_counts_and_ids(small_world):
    samples, dissim, viewnorm = small_world
    results = reconstruct_dataset(samples, dissim, viewnorm, mds_max_iter=20)
    assert len(results) == len(samples)
    assert [r.face_id for r in results] == [s.face_id for s in samples]


def test_skip_viewnorm_uses_normalized_input(small_world):
    samples, dissim, _ = small_world
    sample = samples[0]
    res = reconstruct(sample.input_2d, dissim, None, mds_max_iter=20)
    direct = LandmarkSet2D(
        normalize_points(sample.input_2d.points), sample.input_2d.topology_id
    )
    from landmarklift.dissim import build_dissimilarity_matrix
    from landmarklift.pipeline import _matrix_hash

    assert res.matrix_hash == _matrix_hash(
        build_dissimilarity_matrix(dissim, direct).values
    )


def test_with_and_without_viewnorm_differ(small_world):
    samples, dissim, viewnorm = small_world
    a = reconstruct(samples[0].input_2d, dissim, viewnorm, mds_max_iter=20)
    b = reconstruct(samples[0].input_2d, dissim, None, mds_max_iter=20)
    assert a.matrix_hash != b.matrix_hash


def test_reconstruct_deterministic(small_world):
    samples, dissim, viewnorm = small_world
    a = reconstruct(samples[2].input_2d, dissim, viewnorm, mds_max_iter=30)
    b = reconstruct(samples[2].input_2d, dissim, viewnorm, mds_max_iter=30)
    assert a.matrix_hash == b.matrix_hash
    assert a.points_3d.points.tobytes() == b.points_3d.points.tobytes()
    assert a.stress == b.stress


def test_classical_mode(small_world):
    samples, dissim, viewnorm = small_world
    res = reconstruct(
        samples[0].input_2d, dissim, viewnorm, mds_mode="classical"
    )
    assert res.points_3d.points.shape == (12, 3)
    assert res.converged


def test_failure_carries_face_id(small_world):
    samples, dissim, viewnorm = small_world
    with pytest.raises(ValueError, match=rf"face {samples[1].face_id}:"):
        reconstruct_dataset(
            samples[:2][::-1], dissim, viewnorm, mds_mode="bogus"
        )


def test_mean_shape_baseline_is_normalized_mean(small_world):
    samples, _, _ = small_world
    base = mean_shape_baseline(samples)
    expected = normalize_points(
        np.mean([s.gt_3d.points for s in samples], axis=0)
    )
    np.testing.assert_allclose(base.points, expected, atol=1e-15)
    np.testing.assert_allclose(base.points.mean(axis=0), 0.0, atol=1e-12)
    rms = np.sqrt((base.points**2).sum(axis=1).mean())
    assert rms == pytest.approx(1.0, rel=1e-12)


def test_mean_shape_baseline_empty_errors():
    with pytest.raises(DegenerateInputError):
        mean_shape_baseline([])


def test_mds_stage_time_grows_superlinearly():
    dissim = default_dissim_model(seed=0)

    def median_mds_seconds(n: int) -> float:
        model3d = build_default_model(n, 4, seed=5)
        sample = sample_faces(model3d, 1, seed=5)[0]
        times = []
        for _ in range(5):
            t0 = time.perf_counter()
            reconstruct(
                sample.input_2d, dissim, None, mds_mode="classical"
            )
            times.append(time.perf_counter() - t0)
        return sorted(times)[2]

    small = median_mds_seconds(24)
    large = median_mds_seconds(96)
    assert large > 2.0 * small
