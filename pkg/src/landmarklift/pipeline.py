"""End-to-end reconstruction: 2D landmarks -> profile view -> pairwise
distances -> 3D embedding, with per-stage timing and the constant
mean-shape baseline used for comparison."""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

import numpy as np

from .dissim import build_dissimilarity_matrix
from .errors import DegenerateInputError
from .landmarks import LandmarkSet2D, LandmarkSet3D, normalize_points
from .mds import classical_mds, smacof_embed
from .nn import MlpModel
from .viewnorm import normalize_view


@dataclass(frozen=True)
class ReconstructionResult:
    """One face's recovered 3D landmarks plus provenance and cost."""

    face_id: int
    points_3d: LandmarkSet3D
    matrix_hash: str
    stress: float
    viewnorm_us: int
    dissim_us: int
    mds_us: int
    converged: bool

    def __post_init__(self):
        if min(self.viewnorm_us, self.dissim_us, self.mds_us) < 0:
            raise ValueError("stage timings must be nonnegative")


def _matrix_hash(values: np.ndarray) -> str:
    return hashlib.sha256(
        np.ascontiguousarray(values, dtype="<f8").tobytes()
    ).hexdigest()


def reconstruct(
    landmarks: LandmarkSet2D,
    dissim_model: MlpModel,
    viewnorm_model: MlpModel | None = None,
    face_id: int = 0,
    mds_mode: str = "nonmetric",
    mds_max_iter: int = 300,
    mds_tol: float = 1e-9,
) -> ReconstructionResult:
    """Recover a 3D configuration from one 2D landmark set.

    With a view model the input is first mapped to the profile view;
    without one (the occlusion-ablation path) the normalized input feeds
    the distance network directly.
    """
    t0 = time.monotonic_ns()
    if viewnorm_model is not None:
        working = normalize_view(viewnorm_model, landmarks)
    else:
        working = LandmarkSet2D(
            normalize_points(landmarks.points), landmarks.topology_id
        )
    t1 = time.monotonic_ns()
    matrix = build_dissimilarity_matrix(dissim_model, working)
    t2 = time.monotonic_ns()
    if mds_mode == "classical":
        embedding = classical_mds(matrix, 3)
    else:
        embedding = smacof_embed(
            matrix, 3, mode=mds_mode, max_iter=mds_max_iter, rel_tol=mds_tol
        )
    t3 = time.monotonic_ns()
    return ReconstructionResult(
        face_id=face_id,
        points_3d=LandmarkSet3D(embedding.coords, landmarks.topology_id),
        matrix_hash=_matrix_hash(matrix.values),
        stress=embedding.stress,
        viewnorm_us=(t1 - t0) // 1000,
        dissim_us=(t2 - t1) // 1000,
        mds_us=(t3 - t2) // 1000,
        converged=embedding.converged,
    )


def reconstruct_dataset(
    samples,
    dissim_model: MlpModel,
    viewnorm_model: MlpModel | None = None,
    mds_mode: str = "nonmetric",
    mds_max_iter: int = 300,
    mds_tol: float = 1e-9,
) -> list[ReconstructionResult]:
    """Reconstruct every sample; failures carry the face id."""
    results = []
    for s in samples:
        try:
            results.append(
                reconstruct(
                    s.input_2d,
                    dissim_model,
                    viewnorm_model,
                    face_id=s.face_id,
                    mds_mode=mds_mode,
                    mds_max_iter=mds_max_iter,
                    mds_tol=mds_tol,
                )
            )
        except Exception as exc:
            exc.args = (f"face {s.face_id}: {exc}",) + exc.args[1:]
            raise
    return results


def mean_shape_baseline(train_samples) -> LandmarkSet3D:
    """The constant predictor: the normalized mean training shape.

    Emitting this one configuration for every input is the trivial solution
    a learned method has to beat.
    """
    samples = list(train_samples)
    if not samples:
        raise DegenerateInputError("baseline needs a nonempty training set")
    mean = np.mean([s.gt_3d.points for s in samples], axis=0)
    return LandmarkSet3D(
        normalize_points(mean), samples[0].gt_3d.topology_id
    )
