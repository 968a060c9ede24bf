"""Small convolutional digit classifier: the system under analysis.

Architecture: conv 1->16 (3x3) + leaky-relu + 2x2 maxpool, conv 16->32 +
leaky-relu + pool, dense 1568->64 (penultimate features), dense 64->10
logits. Forward is deterministic given parameters; training is deterministic
given the seed.
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..autodiff import AdamState, Tape, Tensor, adam_step, ops
from ..autodiff.checkpoint import load_arrays, save_arrays
from ..exceptions import DivergedTraining, EmptyDataset
from ..validation import N_CLASSES, as_rng, check_image_batch, check_labels

LEAK = 0.1
PENULTIMATE_DIM = 64


def init_classifier_params(seed=0, dtype=np.float32):
    rng = as_rng(seed)

    def he(shape, fan_in):
        return Tensor(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape),
                      requires_grad=True, dtype=dtype)

    def zeros(shape):
        return Tensor(np.zeros(shape), requires_grad=True, dtype=dtype)

    return {
        "conv1_w": he((16, 1, 3, 3), 9),
        "conv1_b": zeros((16,)),
        "conv2_w": he((32, 16, 3, 3), 16 * 9),
        "conv2_b": zeros((32,)),
        "fc1_w": he((32 * 7 * 7, PENULTIMATE_DIM), 32 * 7 * 7),
        "fc1_b": zeros((PENULTIMATE_DIM,)),
        "fc2_w": he((PENULTIMATE_DIM, N_CLASSES), PENULTIMATE_DIM),
        "fc2_b": zeros((N_CLASSES,)),
    }


def classifier_features(params, x):
    """Penultimate 64-dim activations for an image tensor (b, 1, 28, 28)."""
    h = ops.conv2d(x, params["conv1_w"])
    h = ops.add(h, ops.reshape(params["conv1_b"], (1, 16, 1, 1)))
    h = ops.maxpool2x2(ops.leaky_relu(h, LEAK))
    h = ops.conv2d(h, params["conv2_w"])
    h = ops.add(h, ops.reshape(params["conv2_b"], (1, 32, 1, 1)))
    h = ops.maxpool2x2(ops.leaky_relu(h, LEAK))
    h = ops.reshape(h, (h.shape[0], 32 * 7 * 7))
    return ops.leaky_relu(ops.affine(h, params["fc1_w"], params["fc1_b"]), LEAK)


def classifier_logits(params, x):
    return ops.affine(classifier_features(params, x), params["fc2_w"], params["fc2_b"])


def classifier_probs(params, x):
    return ops.softmax(classifier_logits(params, x), axis=-1)


class ConvNetClassifier(BaseEstimator, ClassifierMixin):
    """Digit classifier with an sklearn fit/predict surface.

    Parameters
    ----------
    epochs, lr, batch_size : training schedule (Adam).
    seed : controls initialization and batch shuffling; identical seeds give
        bitwise-identical parameters.
    precision : "single" or "double" tape mode used for training.
    """

    def __init__(self, epochs=4, lr=1e-3, batch_size=64, seed=0, precision="single"):
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.precision = precision

    # ------------------------------------------------------------ training

    def fit(self, X, y, trained_on="unspecified"):
        X = check_image_batch(X)
        if X.shape[0] == 0:
            raise EmptyDataset("cannot fit on an empty dataset")
        y = check_labels(y, X.shape[0])
        rng = as_rng(self.seed)
        dtype = np.float32 if self.precision == "single" else np.float64
        params = init_classifier_params(self.seed, dtype=dtype)
        state = AdamState()
        n = X.shape[0]
        history = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                xb = Tensor(X[idx][:, None], dtype=dtype)
                with Tape(precision=self.precision) as tape:
                    logits = classifier_logits(params, xb)
                    loss = ops.cross_entropy(logits, y[idx])
                    grads = tape.backward(loss)
                value = loss.item()
                if not np.isfinite(value):
                    raise DivergedTraining(f"loss became {value}")
                epoch_loss += value * len(idx)
                adam_step(params,
                          {k: tape.gradient(grads, p) for k, p in params.items()},
                          state, lr=self.lr)
            history.append(epoch_loss / n)
        self.params_ = params
        self.classes_ = np.arange(N_CLASSES)
        self.history_ = history
        self.meta_ = {"trained_on": trained_on, "seed": self.seed,
                      "epochs": self.epochs}
        return self

    # ----------------------------------------------------------- inference

    def _require_fitted(self):
        if not hasattr(self, "params_"):
            raise RuntimeError("classifier is not fitted")

    def _batched(self, X, fn, batch=512):
        X = check_image_batch(X)
        outs = []
        for start in range(0, X.shape[0], batch):
            xb = Tensor(X[start:start + batch][:, None], dtype=np.float32)
            outs.append(fn(xb).data)
        return np.concatenate(outs, axis=0)

    def predict_proba(self, X):
        self._require_fitted()
        return self._batched(X, lambda xb: classifier_probs(self.params_, xb))

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)

    def features(self, X):
        """Penultimate-layer activations, the feature space for the
        Frechet generation-quality metric."""
        self._require_fitted()
        return self._batched(X, lambda xb: classifier_features(self.params_, xb))

    def evaluate(self, X, y):
        """Overall and per-class accuracy on a labeled set."""
        X = check_image_batch(X)
        if X.shape[0] == 0:
            raise EmptyDataset("cannot evaluate on an empty dataset")
        y = check_labels(y, X.shape[0])
        pred = self.predict(X)
        correct = pred == y
        per_class = np.full(N_CLASSES, np.nan)
        for k in range(N_CLASSES):
            mask = y == k
            if mask.any():
                per_class[k] = correct[mask].mean()
        return {"accuracy": float(correct.mean()), "per_class_accuracy": per_class}

    # --------------------------------------------------------- persistence

    def save(self, blob_path, sidecar_path=None, final_accuracy=None):
        self._require_fitted()
        save_arrays(blob_path, {k: p.data for k, p in self.params_.items()},
                    precision=self.precision)
        if sidecar_path:
            sidecar = {
                "schema_version": 1,
                "architecture": "conv16-conv32-fc64-fc10",
                "trained_on": self.meta_["trained_on"],
                "seed": self.meta_["seed"],
                "epochs": self.meta_["epochs"],
                "final_accuracy": final_accuracy,
            }
            with open(sidecar_path, "w", encoding="utf-8") as fh:
                json.dump(sidecar, fh, indent=2, sort_keys=True)
                fh.write("\n")

    @classmethod
    def load(cls, blob_path, sidecar_path=None):
        arrays, precision = load_arrays(blob_path)
        clf = cls(precision=precision)
        clf.params_ = {k: Tensor(v, requires_grad=True) for k, v in arrays.items()}
        clf.classes_ = np.arange(N_CLASSES)
        meta = {"trained_on": "unknown", "seed": None, "epochs": None}
        if sidecar_path:
            with open(sidecar_path, encoding="utf-8") as fh:
                side = json.load(fh)
            meta = {k: side.get(k) for k in ("trained_on", "seed", "epochs")}
        clf.meta_ = meta
        clf.history_ = []
        return clf
