"""View normalization: map landmarks seen from any pose to the profile view.

An encoder-decoder over flattened 2D landmark vectors.  Self-occlusion under
yaw/perspective scrambles depth-dependent positions; regressing every view
onto the canonical profile projection gives the downstream distance model a
single consistent input distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    DimensionMismatchError,
    TopologyError,
)
from .landmarks import LandmarkSet2D, normalize_points
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


def default_viewnorm_model(
    n: int = 72, seed: int = 0, hidden: tuple[int, ...] = (64, 32, 64)
) -> MlpModel:
    """Encoder-decoder over flattened landmarks: 2n -> hidden -> 2n.

    The default 144 -> 64 -> 32 -> 64 -> 144 layout has 22,832 parameters.
    The narrowest hidden width must stay below 2n so the map cannot be a
    trivial passthrough.
    """
    if min(hidden) >= 2 * n:
        raise DimensionMismatchError(
            f"bottleneck {min(hidden)} must be narrower than 2n = {2 * n}"
        )
    dims = [2 * n, *hidden, 2 * n]
    acts = ["relu"] * len(hidden) + ["identity"]
    return build_mlp(dims, acts, seed=seed, kind="viewnorm")


def _check_viewnorm(model: MlpModel) -> None:
    if model.input_dim != model.output_dim:
        raise DimensionMismatchError(
            f"view model must map 2n -> 2n, got "
            f"{model.input_dim} -> {model.output_dim}"
        )
    if model.input_dim % 2:
        raise DimensionMismatchError(
            f"view model width {model.input_dim} is not 2 x landmark count"
        )


def normalize_view(model: MlpModel, landmarks: LandmarkSet2D) -> LandmarkSet2D:
    """Predict the profile-view positions of the given landmarks.

    The input is centered and scaled to unit RMS before entering the network;
    ordering and topology of the output match the input.
    """
    _check_viewnorm(model)
    n = len(landmarks)
    if model.input_dim != 2 * n:
        raise TopologyError(
            f"model expects {model.input_dim // 2} landmarks, got {n}"
        )
    flat = normalize_points(landmarks.points).reshape(-1)
    out = forward(model, flat)
    return LandmarkSet2D(out.reshape(n, 2), landmarks.topology_id)


@dataclass(frozen=True)
class ViewnormTrainConfig:
    epochs: int = 30
    learning_rate: float = 1e-3
    seed: int = 0
    val_fraction: float = 0.1
    batch_size: int = 32

    def __post_init__(self):
        if self.epochs < 0 or self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError(
                "epochs must be >= 0, learning_rate > 0, batch_size >= 1"
            )
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")


def train_viewnorm(
    dataset,
    config: ViewnormTrainConfig | None = None,
    model: MlpModel | None = None,
) -> tuple[MlpModel, TrainingLog]:
    """Fit the view normalizer on (posed input, profile target) landmark pairs.

    The loss is the per-sample sum of squared 2D coordinate errors against
    the profile view, averaged over the batch.  The last ``val_fraction`` of
    the faces is held out.  Log row 0 evaluates the untrained model; later
    rows report the running mean of batch losses and a full validation pass.
    """
    config = config or ViewnormTrainConfig()
    samples = list(dataset)
    if not samples:
        raise DegenerateInputError("training dataset is empty")
    n = len(samples[0].profile_2d)
    inputs = np.array(
        [normalize_points(s.input_2d.points).reshape(-1) for s in samples]
    )
    targets = np.array([s.profile_2d.points.reshape(-1) for s in samples])

    n_val = int(round(config.val_fraction * len(samples)))
    n_train = len(samples) - n_val
    if n_train < 1:
        raise DegenerateInputError("validation split leaves no training faces")

    if model is None:
        model = default_viewnorm_model(n, seed=config.seed)
    _check_viewnorm(model)
    if model.input_dim != 2 * n:
        raise TopologyError(
            f"model expects {model.input_dim // 2} landmarks, dataset has {n}"
        )
    adam = init_adam(model, lr=config.learning_rate)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0x71, 1)))

    def mean_loss(lo, hi):
        total = 0.0
        for start in range(lo, hi, 256):
            chunk = slice(start, min(start + 256, hi))
            diff = forward(model, inputs[chunk]) - targets[chunk]
            total += float((diff * diff).sum())
        return total / (hi - lo)

    def val_loss():
        return mean_loss(n_train, len(samples)) if n_val else mean_loss(0, n_train)

    rows = [(0, mean_loss(0, n_train), val_loss())]
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_train)
        epoch_sum = 0.0
        for start in range(0, n_train, config.batch_size):
            idx = order[start : start + config.batch_size]
            out, cache = forward_with_cache(model, inputs[idx])
            diff = out - targets[idx]
            loss = float((diff * diff).sum()) / idx.size
            if not np.isfinite(loss):
                raise ConvergenceError(
                    f"training loss became non-finite at epoch {epoch}"
                )
            grads = backward(model, cache, (2.0 / idx.size) * diff)
            adam_step(adam, model, grads)
            epoch_sum += loss * idx.size
        rows.append((epoch, epoch_sum / n_train, val_loss()))
    return model, TrainingLog(tuple(rows))


def evaluate_view_rmse(model: MlpModel, samples) -> float:
    """Per-landmark RMSE of predicted vs true profile positions."""
    if not samples:
        raise DegenerateInputError("cannot evaluate on an empty dataset")
    total, count = 0.0, 0
    for s in samples:
        pred = normalize_view(model, s.input_2d)
        total += float(((pred.points - s.profile_2d.points) ** 2).sum())
        count += len(s.profile_2d)
    return float(np.sqrt(total / count))
