"""Learned relevance scorer over (context, response) vector pairs.

The feature vector for a pair is ``[v_q ; v_q^T M v_r ; v_r]`` with a
trainable square matrix M; a small MLP with relu hidden layers and a
sigmoid output maps it to a score in (0, 1).  Training minimises
weighted binary cross-entropy with Adam, with inverted dropout on the
hidden activations.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .corpus import FormatError
from .rng import derive_rng

FORMAT_VERSION = 1
_CLAMP = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    batch_size: int = 64
    dropout: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    hidden_sizes: tuple[int, ...] = (256, 512, 128)
    seed: int = 0
    checkpoint_best: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden_sizes must be positive")
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))


@dataclass(frozen=True)
class TrainingExample:
    sample_id: str
    context_vector: np.ndarray
    response_vector: np.ndarray
    label: float
    weight: float = 1.0

    def __post_init__(self):
        cv = np.asarray(self.context_vector, dtype=np.float64)
        rv = np.asarray(self.response_vector, dtype=np.float64)
        if cv.ndim != 1 or rv.ndim != 1 or cv.shape != rv.shape:
            raise ValueError(
                f"example {self.sample_id!r}: vector shapes"
                f" {cv.shape} vs {rv.shape}"
            )
        if not (np.all(np.isfinite(cv)) and np.all(np.isfinite(rv))):
            raise ValueError(f"example {self.sample_id!r}: non-finite vector")
        if not 0.0 <= self.label <= 1.0:
            raise ValueError(
                f"example {self.sample_id!r}: label {self.label} outside [0, 1]"
            )
        if self.weight <= 0.0:
            raise ValueError(
                f"example {self.sample_id!r}: weight {self.weight} must be > 0"
            )
        object.__setattr__(self, "context_vector", cv)
        object.__setattr__(self, "response_vector", rv)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def build_features(v_q: np.ndarray, v_r: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Feature vector [v_q ; v_q^T M v_r ; v_r] for one pair."""
    v_q = np.asarray(v_q, dtype=np.float64)
    v_r = np.asarray(v_r, dtype=np.float64)
    if v_q.shape != v_r.shape or v_q.ndim != 1:
        raise ValueError(f"shape mismatch: {v_q.shape} vs {v_r.shape}")
    if M.shape != (v_q.shape[0], v_q.shape[0]):
        raise ValueError(f"M has shape {M.shape}, expected square of dim {v_q.shape[0]}")
    bilinear = float(v_q @ M @ v_r)
    return np.concatenate([v_q, [bilinear], v_r])


def _batch_features(vq: np.ndarray, vr: np.ndarray, M: np.ndarray) -> np.ndarray:
    bilinear = np.einsum("bi,ij,bj->b", vq, M, vr)
    return np.concatenate([vq, bilinear[:, None], vr], axis=1)


def bce_loss(predictions, labels, weights=None) -> float:
    """Weighted mean binary cross-entropy over probabilities.

    Predictions are clamped away from 0 and 1 before the logs.
    """
    p = np.clip(np.asarray(predictions, dtype=np.float64), _CLAMP, 1.0 - _CLAMP)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape or p.ndim != 1 or p.shape[0] == 0:
        raise ValueError(f"need matching non-empty 1-D arrays, got {p.shape} and {y.shape}")
    if np.any((y < 0.0) | (y > 1.0)):
        raise ValueError("labels must lie in [0, 1]")
    if weights is None:
        w = np.ones_like(p)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != p.shape:
            raise ValueError("weights must match predictions in shape")
        if np.any(w <= 0.0):
            raise ValueError("weights must be > 0")
    losses = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(np.sum(w * losses) / np.sum(w))


class ScorerModel:
    """Bilinear feature plus MLP scorer with JSON round-tripping."""

    def __init__(self, dim: int, M: np.ndarray, weights, biases, config: dict):
        self.dim = int(dim)
        self.M = np.ascontiguousarray(M, dtype=np.float64)
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in biases]
        self.config = dict(config)
        self._validate()

    def _validate(self):
        if self.M.shape != (self.dim, self.dim):
            raise ValueError(f"M has shape {self.M.shape}, expected ({self.dim}, {self.dim})")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be non-empty and aligned")
        in_features = 2 * self.dim + 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or w.shape[0] != in_features:
                raise ValueError(
                    f"layer {i}: weight shape {w.shape} incompatible with"
                    f" input size {in_features}"
                )
            if b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: bias shape {b.shape} vs {w.shape}")
            in_features = w.shape[1]
        if in_features != 1:
            raise ValueError("final layer must produce a single logit")

    @property
    def dropout(self) -> float:
        return float(self.config.get("dropout", 0.0))

    @classmethod
    def init(
        cls,
        dim: int,
        hidden_sizes,
        rng: np.random.Generator,
        dropout: float = 0.5,
    ) -> "ScorerModel":
        """Fresh model: Xavier-uniform layers, near-identity M.

        M starts at the identity so the bilinear feature begins as the
        plain dot product between the two vectors; training reshapes it
        from there.
        """
        if dim < 1:
            raise ValueError("dim must be >= 1")
        sizes = [2 * dim + 1, *hidden_sizes, 1]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        M = np.eye(dim) + 0.001 * rng.standard_normal((dim, dim))
        config = {"hidden_sizes": list(hidden_sizes), "dropout": float(dropout)}
        return cls(dim, M, weights, biases, config)

    def _forward(self, features: np.ndarray, masks=None):
        """Forward pass returning logits and per-layer caches."""
        x = features
        pre, post = [], []
        n_hidden = len(self.weights) - 1
        for i in range(n_hidden):
            z = x @ self.weights[i] + self.biases[i]
            a = np.maximum(z, 0.0)
            if masks is not None:
                a = a * masks[i]
            pre.append(z)
            post.append(x)
            x = a
        z_out = x @ self.weights[-1] + self.biases[-1]
        post.append(x)
        return z_out[:, 0], pre, post

    def score_batch(self, vq: np.ndarray, vr: np.ndarray) -> np.ndarray:
        """Scores in (0, 1) for stacked context/response vectors."""
        vq = np.atleast_2d(np.asarray(vq, dtype=np.float64))
        vr = np.atleast_2d(np.asarray(vr, dtype=np.float64))
        if vq.shape != vr.shape or vq.shape[1] != self.dim:
            raise ValueError(
                f"expected two (n, {self.dim}) arrays, got {vq.shape} and {vr.shape}"
            )
        logits, _, _ = self._forward(_batch_features(vq, vr, self.M))
        return np.clip(_sigmoid(logits), _CLAMP, 1.0 - _CLAMP)

    def score(self, v_q: np.ndarray, v_r: np.ndarray) -> float:
        """Relevance of one response to one context, in (0, 1)."""
        return float(self.score_batch(v_q[None, :], v_r[None, :])[0])

    def copy(self) -> "ScorerModel":
        return ScorerModel(
            self.dim,
            self.M.copy(),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            copy.deepcopy(self.config),
        )

    def save(self, path: str) -> None:
        payload = {
            "format_version": FORMAT_VERSION,
            "dim": self.dim,
            "M": self.M.tolist(),
            "layers": [
                {"w": w.tolist(), "b": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
            "config": self.config,
        }
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle)
            handle.write("\n")

    @classmethod
    def load(cls, path: str) -> "ScorerModel":
        with open(path, encoding="utf-8") as handle:
            try:
                payload = json.load(handle)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad model JSON: {exc.msg}") from exc
        if not isinstance(payload, dict):
            raise FormatError("model file is not a JSON object")
        version = payload.get("format_version")
        if version != FORMAT_VERSION:
            raise FormatError(
                f"unsupported model format_version {version!r}"
            )
        for key in ("dim", "M", "layers"):
            if key not in payload:
                raise FormatError(f"model file missing {key!r}")
        try:
            return cls(
                payload["dim"],
                np.asarray(payload["M"], dtype=np.float64),
                [np.asarray(l["w"], dtype=np.float64) for l in payload["layers"]],
                [np.asarray(l["b"], dtype=np.float64) for l in payload["layers"]],
                payload.get("config", {}),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"malformed model file: {exc}") from exc


def loss_and_gradients(model, vq, vr, labels, weights=None, masks=None):
    """Weighted BCE (computed from logits) and exact parameter gradients.

    ``masks`` fixes the dropout pattern: a list of per-hidden-layer
    arrays, or None for a dropout-free pass.  Returns ``(loss, grads)``
    with grads keyed "M", "W" (list), "b" (list).
    """
    vq = np.asarray(vq, dtype=np.float64)
    vr = np.asarray(vr, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = vq.shape[0]
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=np.float64)
    features = _batch_features(vq, vr, model.M)
    logits, pre, post = model._forward(features, masks)
    total_w = w.sum()
    per_example = _softplus(logits) - logits * y
    loss = float(np.sum(w * per_example) / total_w)

    dz = ((_sigmoid(logits) - y) * w / total_w)[:, None]
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    grads_w[-1] = post[-1].T @ dz
    grads_b[-1] = dz.sum(axis=0)
    dx = dz @ model.weights[-1].T
    for i in range(len(model.weights) - 2, -1, -1):
        if masks is not None:
            dx = dx * masks[i]
        da = dx * (pre[i] > 0.0)
        grads_w[i] = post[i].T @ da
        grads_b[i] = da.sum(axis=0)
        dx = da @ model.weights[i].T
    dfeat_bilinear = dx[:, model.dim]
    grad_M = vq.T @ (dfeat_bilinear[:, None] * vr)
    return loss, {"M": grad_M, "W": grads_w, "b": grads_b}


def _draw_masks(rng, n: int, hidden_sizes, rate: float):
    if rate <= 0.0:
        return None
    return [
        (rng.random((n, h)) >= rate) / (1.0 - rate) for h in hidden_sizes
    ]


class _AdamState:
    def __init__(self, model: ScorerModel):
        self.slots: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for name, arr in self._params(model):
            self.slots[name] = (np.zeros(arr.size), np.zeros(arr.size))

    @staticmethod
    def _params(model: ScorerModel):
        yield "M", model.M
        for i, w in enumerate(model.weights):
            yield f"W{i}", w
        for i, b in enumerate(model.biases):
            yield f"b{i}", b

    def apply(self, model: ScorerModel, grads, step: int, config: TrainConfig):
        named_grads = {"M": grads["M"]}
        for i, g in enumerate(grads["W"]):
            named_grads[f"W{i}"] = g
        for i, g in enumerate(grads["b"]):
            named_grads[f"b{i}"] = g
        for name, arr in self._params(model):
            m, v = self.slots[name]
            kernels.adam_update(
                arr.reshape(-1),
                np.ascontiguousarray(named_grads[name].reshape(-1)),
                m,
                v,
                step,
                config.learning_rate,
                config.beta1,
                config.beta2,
                config.eps,
            )


def _stack_examples(examples):
    if not examples:
        raise ValueError("no training examples")
    dim = examples[0].context_vector.shape[0]
    for ex in examples:
        if ex.context_vector.shape[0] != dim:
            raise ValueError(
                f"example {ex.sample_id!r} has dim"
                f" {ex.context_vector.shape[0]}, expected {dim}"
            )
    vq = np.stack([ex.context_vector for ex in examples])
    vr = np.stack([ex.response_vector for ex in examples])
    y = np.array([ex.label for ex in examples], dtype=np.float64)
    w = np.array([ex.weight for ex in examples], dtype=np.float64)
    return vq, vr, y, w


def train(examples, config: TrainConfig, model: ScorerModel | None = None, validation=None):
    """Mini-batch Adam training; returns (model, per-epoch mean losses).

    A passed-in model is copied and fine-tuned (warm start).  With
    ``config.checkpoint_best`` and a validation example list, the
    weights from the epoch with the lowest validation loss are returned
    instead of the final ones.
    """
    vq, vr, y, w = _stack_examples(examples)
    hard = np.all((y == 0.0) | (y == 1.0))
    if hard and (np.all(y == 0.0) or np.all(y == 1.0)):
        raise ValueError("training needs both classes when labels are hard 0/1")
    if model is None:
        model = ScorerModel.init(
            vq.shape[1],
            config.hidden_sizes,
            derive_rng(config.seed, "init"),
            dropout=config.dropout,
        )
    else:
        if model.dim != vq.shape[1]:
            raise ValueError(
                f"model dim {model.dim} does not match example dim {vq.shape[1]}"
            )
        model = model.copy()
    if validation is not None:
        val_vq, val_vr, val_y, val_w = _stack_examples(validation)
    hidden_sizes = [wmat.shape[1] for wmat in model.weights[:-1]]
    rng = derive_rng(config.seed, "train")
    adam = _AdamState(model)
    step = 0
    losses: list[float] = []
    best = None
    n = vq.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        weight_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            masks = _draw_masks(rng, len(batch), hidden_sizes, config.dropout)
            loss, grads = loss_and_gradients(
                model, vq[batch], vr[batch], y[batch], w[batch], masks
            )
            if not np.isfinite(loss):
                raise RuntimeError(
                    "training diverged (non-finite loss); lower the"
                    " learning rate or check the input vectors"
                )
            step += 1
            adam.apply(model, grads, step, config)
            batch_w = w[batch].sum()
            loss_sum += loss * batch_w
            weight_sum += batch_w
        losses.append(loss_sum / weight_sum)
        if config.checkpoint_best and validation is not None:
            preds = model.score_batch(val_vq, val_vr)
            val_loss = bce_loss(preds, val_y, val_w)
            if best is None or val_loss < best[0]:
                best = (val_loss, model.copy())
    if config.checkpoint_best and best is not None:
        model = best[1]
    return model, losses
