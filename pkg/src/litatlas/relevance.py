"""Binary relevance classification of abstracts via logistic regression.

Full-batch gradient descent on L2-regularized cross-entropy keeps training
deterministic and gives a testable monotone-loss property; the bias term is
not regularized.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AtlasError, DimensionMismatchError, TrainingError
from .textproc import SparseVector

_PROB_EPS = 1e-15


@dataclass
class TrainConfig:
    learning_rate: float = 0.5
    l2_lambda: float = 1e-4
    max_iters: int = 1000
    tol: float = 1e-8
    seed: int = 0


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    l2_lambda: float
    training_meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class EvalMetrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / (self.tp + self.fp + self.tn + self.fn)

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0


def _to_dense(examples: list[tuple[SparseVector, int]]) -> tuple[np.ndarray, np.ndarray]:
    dim = examples[0][0].dim
    X = np.zeros((len(examples), dim))
    y = np.zeros(len(examples))
    for i, (vec, label) in enumerate(examples):
        if vec.dim != dim:
            raise DimensionMismatchError("training vectors have mixed dimensions")
        for d, w in vec.entries:
            X[i, d] = w
        y[i] = label
    return X, y


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_gradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2_lambda: float
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy plus (lambda/2)|w|^2, with its analytic gradient.

    Overflow is not trapped here; divergence surfaces as a non-finite loss
    that the training loop reports with its iteration index.
    """
    n = X.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        p = _sigmoid(X @ w + b)
        p = np.clip(p, _PROB_EPS, 1.0 - _PROB_EPS)
        loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
        loss += 0.5 * l2_lambda * float(w @ w)
        resid = p - y
        grad_w = X.T @ resid / n + l2_lambda * w
        grad_b = float(np.sum(resid)) / n
    return float(loss), grad_w, grad_b


def train_logreg(
    examples: list[tuple[SparseVector, int]], config: TrainConfig | None = None
) -> LogRegModel:
    """Fit by full-batch gradient descent from zero weights.

    Stops at ``max_iters`` or when the per-step loss decrease falls below
    ``tol``. Requires at least one example of each class.
    """
    config = config or TrainConfig()
    if not examples:
        raise TrainingError("no training examples")
    labels = {label for _, label in examples}
    if labels != {0, 1}:
        raise TrainingError(f"need both classes in training data, got labels {sorted(labels)}")
    X, y = _to_dense(examples)
    w = np.zeros(X.shape[1])
    b = 0.0
    prev_loss = math.inf
    iterations = 0
    for it in range(config.max_iters):
        loss, grad_w, grad_b = loss_and_gradient(w, b, X, y, config.l2_lambda)
        if not math.isfinite(loss):
            raise TrainingError(f"training diverged at iteration {it}: non-finite loss")
        if prev_loss - loss < config.tol and it > 0:
            break
        w -= config.learning_rate * grad_w
        b -= config.learning_rate * grad_b
        prev_loss = loss
        iterations = it + 1
    final_loss = loss_and_gradient(w, b, X, y, config.l2_lambda)[0]
    if not math.isfinite(final_loss):
        raise TrainingError(f"training diverged at iteration {iterations}: non-finite loss")
    return LogRegModel(
        weights=w,
        bias=b,
        l2_lambda=config.l2_lambda,
        training_meta={"iterations": iterations, "final_loss": final_loss, "seed": config.seed},
    )


def predict(model: LogRegModel, x: SparseVector) -> float:
    """P(label=1 | x) = sigmoid(w.x + b), clamped strictly inside (0,1)."""
    if x.dim != model.dim:
        raise DimensionMismatchError(f"vector dim {x.dim} != model dim {model.dim}")
    z = model.bias + sum(model.weights[d] * w for d, w in x.entries)
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        ez = math.exp(z)
        p = ez / (1.0 + ez)
    return min(max(p, _PROB_EPS), 1.0 - _PROB_EPS)


def classify(model: LogRegModel, x: SparseVector, threshold: float = 0.5) -> int:
    return 1 if predict(model, x) >= threshold else 0


def evaluate(model: LogRegModel, test: list[tuple[SparseVector, int]]) -> EvalMetrics:
    """Confusion counts at the 0.5 threshold."""
    if not test:
        raise AtlasError("empty test set")
    tp = fp = tn = fn = 0
    for vec, label in test:
        pred = classify(model, vec)
        if pred == 1 and label == 1:
            tp += 1
        elif pred == 1 and label == 0:
            fp += 1
        elif pred == 0 and label == 0:
            tn += 1
        else:
            fn += 1
    return EvalMetrics(tp=tp, fp=fp, tn=tn, fn=fn)


def split(
    dataset: list[tuple[SparseVector, int]], ratio: float, seed: int
) -> tuple[list[tuple[SparseVector, int]], list[tuple[SparseVector, int]]]:
    """Deterministic stratified train/test split; ``ratio`` is the train share."""
    if not dataset:
        raise AtlasError("cannot split an empty dataset")
    if not 0.0 < ratio < 1.0:
        raise AtlasError(f"split ratio must be in (0,1), got {ratio}")
    rng = random.Random(seed)
    by_label: dict[int, list[int]] = {}
    for i, (_, label) in enumerate(dataset):
        by_label.setdefault(label, []).append(i)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(by_label):
        idx = by_label[label][:]
        rng.shuffle(idx)
        n_train = int(math.floor(ratio * len(idx) + 0.5))
        train_idx.extend(idx[:n_train])
        test_idx.extend(idx[n_train:])
    train_idx.sort()
    test_idx.sort()
    return [dataset[i] for i in train_idx], [dataset[i] for i in test_idx]


def lipschitz_bound(X: np.ndarray, l2_lambda: float) -> float:
    """Smoothness constant of the loss: |X|_2^2 / (4n) + lambda."""
    n = X.shape[0]
    spectral = float(np.linalg.norm(X, 2))
    return spectral * spectral / (4.0 * n) + l2_lambda


def load_labeled_corpus(path: str | Path):
    """Load a labeled-set file: corpus JSONL with a ``label`` 0/1 per line.

    Returns (Corpus, labels) with labels aligned to document order.
    """
    from .corpus import load_corpus

    path = Path(path)
    labels: list[int] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj.get("label") not in (0, 1):
                raise AtlasError(f"line {line_no}: document {obj.get('doc_id')!r} lacks a 0/1 label")
            labels.append(int(obj["label"]))
    return load_corpus(path), labels


def save_model(model: LogRegModel, path: str | Path) -> None:
    obj = {
        "dim": model.dim,
        "bias": model.bias,
        "weights": [float(w) for w in model.weights],
        "l2_lambda": model.l2_lambda,
        "meta": model.training_meta,
    }
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, separators=(",", ":")), encoding="utf-8")


def load_model(path: str | Path) -> LogRegModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    weights = np.asarray(obj["weights"], dtype=float)
    if weights.shape[0] != obj["dim"]:
        raise AtlasError(f"model file {path}: weight count does not match dim")
    return LogRegModel(
        weights=weights,
        bias=float(obj["bias"]),
        l2_lambda=float(obj["l2_lambda"]),
        training_meta=obj.get("meta", {}),
    )
