"""Minimal dense network substrate: forward, exact backprop, Adam.

Supports the two small regression networks used by the pipeline.  Models are
plain dataclasses over float64 numpy arrays; forward accepts a single vector
or a batch (rows are samples).  Skip connections are additive shortcuts: the
post-activation output of an earlier layer is added to the input of a later
layer before its affine map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NonFiniteError

ACTIVATIONS = ("relu", "tanh", "softplus", "identity")


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z):
    return (z > 0.0).astype(np.float64)


def _tanh(z):
    return np.tanh(z)


def _tanh_grad(z):
    t = np.tanh(z)
    return 1.0 - t * t


def _softplus(z):
    # max(z,0) + log1p(exp(-|z|)) is stable for large |z|
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _identity(z):
    return z


def _ones(z):
    return np.ones_like(z)


_ACT = {
    "relu": (_relu, _relu_grad),
    "tanh": (_tanh, _tanh_grad),
    "softplus": (_softplus, _sigmoid),
    "identity": (_identity, _ones),
}


@dataclass
class DenseLayer:
    """One affine map plus elementwise activation.

    weights has shape (out_dim, in_dim); bias has shape (out_dim,).
    """

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise DimensionMismatchError(
                f"layer weights must be 2-D, got shape {self.weights.shape}"
            )
        if self.bias.shape != (self.weights.shape[0],):
            raise DimensionMismatchError(
                f"bias shape {self.bias.shape} does not match "
                f"{self.weights.shape[0]} output units"
            )
        if self.activation not in _ACT:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise NonFiniteError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class MlpModel:
    """Feed-forward network with optional additive skip connections.

    ``skip_connections`` holds (source, target) layer indices: the output of
    ``layers[source]`` is added to the input of ``layers[target]``.
    """

    layers: list[DenseLayer]
    skip_connections: list[tuple[int, int]] = field(default_factory=list)
    kind: str = "mlp"

    def __post_init__(self):
        if not self.layers:
            raise DimensionMismatchError("model needs at least one layer")
        for i in range(1, len(self.layers)):
            if self.layers[i].in_dim != self.layers[i - 1].out_dim:
                raise DimensionMismatchError(
                    f"layer {i} expects {self.layers[i].in_dim} inputs but layer "
                    f"{i - 1} produces {self.layers[i - 1].out_dim}"
                )
        self.skip_connections = [(int(s), int(t)) for s, t in self.skip_connections]
        for s, t in self.skip_connections:
            if not 0 <= s < t < len(self.layers):
                raise DimensionMismatchError(f"skip ({s}, {t}) must satisfy 0 <= s < t")
            if self.layers[s].out_dim != self.layers[t].in_dim:
                raise DimensionMismatchError(
                    f"skip ({s}, {t}): source width {self.layers[s].out_dim} != "
                    f"target input width {self.layers[t].in_dim}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameter_count(self) -> int:
        return sum(l.weights.size + l.bias.size for l in self.layers)

    def describe(self) -> dict:
        """Architecture descriptor used by the weight-file header."""
        dims = [self.input_dim] + [l.out_dim for l in self.layers]
        return {
            "kind": self.kind,
            "dims": dims,
            "activations": [l.activation for l in self.layers],
            "skips": [list(st) for st in self.skip_connections],
        }


def build_mlp(
    dims: list[int],
    activations: list[str],
    skips: list[tuple[int, int]] | None = None,
    seed: int = 0,
    kind: str = "mlp",
) -> MlpModel:
    """Construct a seeded MLP: He-uniform init for ReLU layers, Glorot otherwise.

    ``dims`` lists layer widths including input and output, so
    ``len(activations) == len(dims) - 1``.
    """
    if len(activations) != len(dims) - 1:
        raise DimensionMismatchError(
            f"{len(dims)} widths need {len(dims) - 1} activations, "
            f"got {len(activations)}"
        )
    rng = np.random.default_rng(seed)
    layers = []
    for i, act in enumerate(activations):
        fan_in, fan_out = dims[i], dims[i + 1]
        if act == "relu":
            limit = np.sqrt(6.0 / fan_in)
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(DenseLayer(w, np.zeros(fan_out), act))
    return MlpModel(layers, list(skips or []), kind=kind)


def zero_weights(model: MlpModel) -> MlpModel:
    """Return a copy of the model with all weights and biases set to zero."""
    layers = [
        DenseLayer(np.zeros_like(l.weights), np.zeros_like(l.bias), l.activation)
        for l in model.layers
    ]
    return MlpModel(layers, list(model.skip_connections), kind=model.kind)


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass, consumed by ``backward``."""

    acts: list[np.ndarray]  # acts[0] = input, acts[i+1] = output of layer i
    xs: list[np.ndarray]  # post-skip input fed into each layer's affine map
    zs: list[np.ndarray]  # pre-activation values per layer
    squeeze: bool  # input arrived as a single vector


def _as_batch(x: np.ndarray, expect: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != expect:
        raise DimensionMismatchError(
            f"{what}: expected input width {expect}, got shape {x.shape}"
        )
    return x, squeeze


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a vector or a batch of row vectors."""
    y, _ = _forward_impl(model, x, keep_cache=False)
    return y


def forward_with_cache(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Forward pass that also returns the cache needed for ``backward``."""
    return _forward_impl(model, x, keep_cache=True)


def _forward_impl(model, x, keep_cache):
    xb, squeeze = _as_batch(x, model.input_dim, "forward")
    incoming: dict[int, list[int]] = {}
    for s, t in model.skip_connections:
        incoming.setdefault(t, []).append(s)
    acts = [xb]
    xs, zs = [], []
    for i, layer in enumerate(model.layers):
        xi = acts[i]
        for s in incoming.get(i, ()):
            xi = xi + acts[s + 1]
        z = xi @ layer.weights.T + layer.bias
        a = _ACT[layer.activation][0](z)
        if keep_cache:
            xs.append(xi)
            zs.append(z)
        acts.append(a)
    out = acts[-1][0] if squeeze else acts[-1]
    if not keep_cache:
        return out, None
    return out, ForwardCache(acts=acts, xs=xs, zs=zs, squeeze=squeeze)


def backward(
    model: MlpModel, cache: ForwardCache | None, loss_grad: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Exact gradients of the loss w.r.t. every weight and bias.

    ``loss_grad`` is d(loss)/d(output) with the same shape as the forward
    output.  Gradients are summed over the batch.  Returns one
    ``(d_weights, d_bias)`` pair per layer, in layer order.
    """
    if cache is None:
        raise DimensionMismatchError(
            "backward needs the cache from forward_with_cache for this input"
        )
    g = np.asarray(loss_grad, dtype=np.float64)
    if cache.squeeze:
        g = g[None, :]
    if g.shape != cache.acts[-1].shape:
        raise DimensionMismatchError(
            f"loss_grad shape {g.shape} does not match output "
            f"shape {cache.acts[-1].shape}"
        )
    n_layers = len(model.layers)
    d_acts = [None] * (n_layers + 1)
    d_acts[n_layers] = g
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        layer = model.layers[i]
        dz = d_acts[i + 1] * _ACT[layer.activation][1](cache.zs[i])
        grads[i] = (dz.T @ cache.xs[i], dz.sum(axis=0))
        dx = dz @ layer.weights
        if d_acts[i] is None:
            d_acts[i] = dx
        else:
            d_acts[i] = d_acts[i] + dx
        for s, t in model.skip_connections:
            if t == i:
                if d_acts[s + 1] is None:
                    d_acts[s + 1] = dx
                else:
                    d_acts[s + 1] = d_acts[s + 1] + dx
    return grads


@dataclass
class AdamState:
    """Adam accumulators; shapes mirror the model parameters."""

    step: int
    first_moment: list[tuple[np.ndarray, np.ndarray]]
    second_moment: list[tuple[np.ndarray, np.ndarray]]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(model: MlpModel, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    zeros = lambda l: (np.zeros_like(l.weights), np.zeros_like(l.bias))
    return AdamState(
        step=0,
        first_moment=[zeros(l) for l in model.layers],
        second_moment=[zeros(l) for l in model.layers],
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(
    state: AdamState,
    model: MlpModel,
    grads: list[tuple[np.ndarray, np.ndarray]],
) -> MlpModel:
    """One Adam update with bias correction; mutates model and state in place."""
    if len(grads) != len(model.layers):
        raise DimensionMismatchError(
            f"got {len(grads)} gradient pairs for {len(model.layers)} layers"
        )
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for i, layer in enumerate(model.layers):
        for j, (param, grad) in enumerate(
            ((layer.weights, grads[i][0]), (layer.bias, grads[i][1]))
        ):
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != param.shape:
                raise DimensionMismatchError(
                    f"gradient shape {grad.shape} != parameter shape {param.shape} "
                    f"at layer {i} {'weights' if j == 0 else 'bias'}"
                )
            if not np.all(np.isfinite(grad)):
                raise NonFiniteError(
                    f"non-finite gradient at layer {i} "
                    f"{'weights' if j == 0 else 'bias'}"
                )
            m = state.first_moment[i][j]
            v = state.second_moment[i][j]
            m *= b1
            m += (1.0 - b1) * grad
            v *= b2
            v += (1.0 - b2) * grad * grad
            param -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return model


@dataclass(frozen=True)
class TrainingLog:
    """Per-epoch loss curve; row 0 is the untrained model's evaluation."""

    rows: tuple[tuple[int, float, float], ...]  # (epoch, train_loss, val_loss)

    @property
    def final_train_loss(self) -> float:
        return self.rows[-1][1]

    @property
    def final_val_loss(self) -> float:
        return self.rows[-1][2]

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_loss"]
        lines += [f"{e},{tr:.17g},{va:.17g}" for e, tr, va in self.rows]
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def sse_loss(output: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Sum of squared errors and its gradient w.r.t. the output."""
    output = np.asarray(output, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    diff = output - target
    return float(np.sum(diff * diff)), 2.0 * diff


def gradient_check(model: MlpModel, x, target, loss=sse_loss, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per parameter is
    ``|analytic - numeric| / max(|analytic|, |numeric|, floor)`` where
    ``floor`` is 1e-4 times the largest analytic gradient magnitude (with an
    absolute minimum of 1e-12).  The floor matters because central
    differences carry roundoff of order ``eps * |loss| / step``: coordinates
    far below the gradient's own scale cannot be certified in purely
    relative terms in double precision, so they are held to a tolerance
    proportional to that scale instead.
    """
    out, cache = forward_with_cache(model, x)
    _, lgrad = loss(out, target)
    grads = backward(model, cache, lgrad)

    scale = max(
        (float(np.max(np.abs(g))) for pair in grads for g in pair),
        default=0.0,
    )
    floor = max(1e-4 * scale, 1e-12)
    worst = 0.0
    for i, layer in enumerate(model.layers):
        for param, analytic in ((layer.weights, grads[i][0]), (layer.bias, grads[i][1])):
            flat = param.reshape(-1)
            aflat = analytic.reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + step
                plus, _ = loss(forward(model, x), target)
                flat[k] = orig - step
                minus, _ = loss(forward(model, x), target)
                flat[k] = orig
                numeric = (plus - minus) / (2.0 * step)
                denom = max(abs(aflat[k]), abs(numeric), floor)
                worst = max(worst, abs(aflat[k] - numeric) / denom)
    return worst
