"""Pairwise 3D-distance regression from 2D landmark pairs.

The network sees only order-invariant features of a landmark pair, so its
output is symmetric in the two points by construction — bit-exactly, because
|a−b|, a·b and exp(−|a−b|) are each bitwise commutative in IEEE arithmetic.
A Softplus head keeps predictions nonnegative, as a dissimilarity must be.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    DimensionMismatchError,
    NonFiniteError,
)
from .landmarks import LandmarkSet2D
from .mds import DissimilarityMatrix
from .nn import (
    MlpModel,
    TrainingLog,
    adam_step,
    backward,
    build_mlp,
    forward,
    forward_with_cache,
    init_adam,
)


def make_pair_features(a, b) -> np.ndarray:
    """Symmetric features of a landmark pair.

    For d-dimensional points the vector has length 3d:
    per-axis absolute differences, per-axis coordinate products, and
    exponentials of the negated absolute differences.  Accepts single points
    or matching batches of row vectors.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.shape[-1] < 1:
        raise DimensionMismatchError(
            f"point shapes must match, got {a.shape} and {b.shape}"
        )
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NonFiniteError("pair features need finite coordinates")
    gap = np.abs(a - b)
    return np.concatenate([gap, a * b, np.exp(-gap)], axis=-1)


def default_dissim_model(seed: int = 0, width: int = 20) -> MlpModel:
    """Distance regressor: 6 → five hidden ReLU layers → Softplus scalar.

    An additive shortcut feeds the first hidden layer's output into the
    third hidden layer.  At the default width the model has 1,841 parameters.
    """
    dims = [6] + [width] * 5 + [1]
    acts = ["relu"] * 5 + ["softplus"]
    return build_mlp(dims, acts, skips=[(0, 2)], seed=seed, kind="dissim")


def predict_distance(model: MlpModel, a, b) -> float:
    """Estimated 3D distance between the 3D points behind two 2D landmarks."""
    if model.output_dim != 1:
        raise DimensionMismatchError(
            f"distance model must have one output, got {model.output_dim}"
        )
    out = forward(model, make_pair_features(a, b))
    return float(out[0])


def build_dissimilarity_matrix(
    model: MlpModel, landmarks: LandmarkSet2D
) -> DissimilarityMatrix:
    """Predicted distance for every landmark pair, mirrored into a matrix.

    Each unordered pair is evaluated once and written to both triangles, so
    the result equals its transpose bit-exactly; the diagonal is zero by
    construction rather than predicted.
    """
    pts = landmarks.points
    n = pts.shape[0]
    if n < 4:
        raise DimensionMismatchError(f"need at least 4 landmarks, got {n}")
    if model.output_dim != 1:
        raise DimensionMismatchError(
            f"distance model must have one output, got {model.output_dim}"
        )
    iu, ju = np.triu_indices(n, k=1)
    vals = forward(model, make_pair_features(pts[iu], pts[ju]))[:, 0]
    m = np.zeros((n, n))
    m[iu, ju] = vals
    m[ju, iu] = vals
    return DissimilarityMatrix(m)


class BatchScheme(Enum):
    """How training mini-batches are assembled."""

    SAME_FACE = "same-face"
    SHUFFLED_ACROSS_FACES = "shuffled"


def _as_scheme(scheme) -> BatchScheme:
    if isinstance(scheme, BatchScheme):
        return scheme
    try:
        return BatchScheme(scheme)
    except ValueError:
        names = ", ".join(s.value for s in BatchScheme)
        raise ValueError(f"unknown batch scheme {scheme!r}; expected {names}") from None


@dataclass(frozen=True)
class DissimTrainConfig:
    epochs: int = 20
    learning_rate: float = 1e-3
    seed: int = 0
    val_fraction: float = 0.1
    hidden_width: int = 20

    def __post_init__(self):
        if self.epochs < 0 or self.learning_rate <= 0:
            raise ValueError("epochs must be >= 0 and learning_rate > 0")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")


def _pair_arrays(samples):
    """Stacked profile points and per-face GT pair distances."""
    n = len(samples[0].profile_2d)
    iu, ju = np.triu_indices(n, k=1)
    pts = np.array([s.profile_2d.points for s in samples])
    gt = np.array([s.gt_3d.points for s in samples])
    targets = np.sqrt(((gt[:, iu, :] - gt[:, ju, :]) ** 2).sum(axis=-1))
    return pts, targets, iu, ju


def evaluate_pairs(model: MlpModel, samples) -> float:
    """Mean squared error of predicted vs GT pair distances over all pairs."""
    if not samples:
        raise DegenerateInputError("cannot evaluate on an empty dataset")
    pts, targets, iu, ju = _pair_arrays(samples)
    total = 0.0
    for f in range(pts.shape[0]):
        pred = forward(model, make_pair_features(pts[f, iu], pts[f, ju]))[:, 0]
        total += float(((pred - targets[f]) ** 2).sum())
    return total / targets.size


def train_dissimilarity(
    dataset,
    scheme: BatchScheme | str = BatchScheme.SAME_FACE,
    config: DissimTrainConfig | None = None,
    model: MlpModel | None = None,
) -> tuple[MlpModel, TrainingLog]:
    """Fit the distance regressor on profile-view landmarks vs GT 3D distances.

    The last ``val_fraction`` of the faces is held out.  One epoch performs
    one gradient step per training face: under SAME_FACE each batch holds all
    C(n,2) pairs of a single face, under SHUFFLED_ACROSS_FACES each batch
    holds the same number of pairs drawn uniformly from all training faces.
    Log row 0 is the untrained model's full evaluation; later rows report the
    running mean of batch losses and a full validation pass.
    """
    scheme = _as_scheme(scheme)
    config = config or DissimTrainConfig()
    samples = list(dataset)
    if not samples:
        raise DegenerateInputError("training dataset is empty")
    pts, targets, iu, ju = _pair_arrays(samples)
    n_faces, n_pairs = targets.shape

    n_val = int(round(config.val_fraction * n_faces))
    n_train = n_faces - n_val
    if n_train < 1:
        raise DegenerateInputError("validation split leaves no training faces")
    train_idx = np.arange(n_train)
    val_samples = samples[n_train:]

    if model is None:
        model = default_dissim_model(config.seed, config.hidden_width)
    if model.input_dim != 6 or model.output_dim != 1:
        raise DimensionMismatchError(
            "distance model must map 6 features to 1 output, got "
            f"{model.input_dim} -> {model.output_dim}"
        )
    adam = init_adam(model, lr=config.learning_rate)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0xD1, 1)))

    def full_eval(indices):
        total = 0.0
        for f in indices:
            pred = forward(model, make_pair_features(pts[f, iu], pts[f, ju]))[:, 0]
            total += float(((pred - targets[f]) ** 2).sum())
        return total / (len(indices) * n_pairs)

    def val_eval():
        return evaluate_pairs(model, val_samples) if val_samples else full_eval(train_idx)

    rows = [(0, full_eval(train_idx), val_eval())]
    for epoch in range(1, config.epochs + 1):
        epoch_sum = 0.0
        if scheme is BatchScheme.SAME_FACE:
            batches = (
                (pts[f, iu], pts[f, ju], targets[f])
                for f in rng.permutation(train_idx)
            )
        else:
            def shuffled():
                for _ in range(n_train):
                    bf = rng.integers(0, n_train, size=n_pairs)
                    bp = rng.integers(0, n_pairs, size=n_pairs)
                    yield pts[bf, iu[bp]], pts[bf, ju[bp]], targets[bf, bp]
            batches = shuffled()
        for pa, pb, t in batches:
            out, cache = forward_with_cache(model, make_pair_features(pa, pb))
            diff = out[:, 0] - t
            loss = float((diff * diff).mean())
            if not np.isfinite(loss):
                raise ConvergenceError(
                    f"training loss became non-finite at epoch {epoch}"
                )
            grads = backward(model, cache, (2.0 / t.size) * diff[:, None])
            adam_step(adam, model, grads)
            epoch_sum += loss
        rows.append((epoch, epoch_sum / n_train, val_eval()))
    return model, TrainingLog(tuple(rows))
