"""Scoring oracles: locally trained reference models, threshold calibration
at a fixed false-positive rate, and a client for external score oracles.

A detector maps a page to a phishing-confidence score in [0, 1] and carries
a decision threshold; pages scoring >= threshold are flagged. Local models
consume the 22-feature vector; the remote client posts raw HTML and reads
back JSON, so externally hosted models (whatever their architecture) plug
in behind the same interface.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import requests

from . import kernels
from .dom import HtmlPage, serialize
from .features import FEATURE_NAMES, extract_all, feature_order_hash

MODEL_FORMAT_VERSION = 1


class OracleError(RuntimeError):
    """Remote oracle transport failure or contract violation."""


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------

@dataclass
class LogisticConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        z = x @ self.weights + self.bias
        return 1.0 / (1.0 + np.exp(-z))

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": float(self.bias)}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d["bias"]))


def log_loss(weights, bias, x, y, l2=0.0) -> float:
    """Mean binary cross-entropy plus the L2 penalty on the weights."""
    z = x @ weights + bias
    # log(1 + e^z) - y*z, computed stably for large |z|
    loss = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(loss + 0.5 * l2 * np.dot(weights, weights))


def log_loss_gradient(weights, bias, x, y, l2=0.0):
    """Analytic gradient of log_loss w.r.t. (weights, bias)."""
    p = 1.0 / (1.0 + np.exp(-(x @ weights + bias)))
    err = p - y
    grad_w = x.T @ err / len(y) + l2 * weights
    grad_b = float(np.mean(err))
    return grad_w, grad_b


def train_lr(x: np.ndarray, y: np.ndarray, config: LogisticConfig | None = None) -> LogisticModel:
    """Full-batch gradient descent on L2-penalized log-loss."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain both classes")
    config = config or LogisticConfig()
    weights = np.zeros(x.shape[1], dtype=np.float64)
    bias = 0.0
    for _ in range(config.epochs):
        grad_w, grad_b = log_loss_gradient(weights, bias, x, y, config.l2)
        weights -= config.learning_rate * grad_w
        bias -= config.learning_rate * grad_b
    return LogisticModel(weights, bias)


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------

@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    max_features: str | int = "sqrt"
    seed: int = 0


@dataclass
class Tree:
    """Flat arrays; node 0 is the root, feature -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int32),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int32),
            np.asarray(d["right"], dtype=np.int32),
            np.asarray(d["value"], dtype=np.float64),
        )


@dataclass
class ForestModel:
    trees: list[Tree]
    oob_score: float | None = None
    _flat: tuple | None = field(default=None, repr=False, compare=False)

    def _flatten(self):
        if self._flat is None:
            feature, threshold, left, right, value, roots = [], [], [], [], [], []
            offset = 0
            for tree in self.trees:
                roots.append(offset)
                feature.append(tree.feature)
                threshold.append(tree.threshold)
                left.append(tree.left + offset)
                right.append(tree.right + offset)
                value.append(tree.value)
                offset += len(tree.feature)
            self._flat = (
                np.concatenate(feature).astype(np.int32),
                np.concatenate(threshold),
                np.concatenate(left).astype(np.int32),
                np.concatenate(right).astype(np.int32),
                np.concatenate(value),
                np.asarray(roots, dtype=np.int32),
            )
        return self._flat

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        feature, threshold, left, right, value, roots = self._flatten()
        return kernels.forest_predict(feature, threshold, left, right, value, roots, x)

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "oob_score": self.oob_score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls([Tree.from_dict(t) for t in d["trees"]], d.get("oob_score"))


class _TreeBuilder:
    def __init__(self, x, y, rng, max_depth, n_sub):
        self.x = x
        self.y = y
        self.rng = rng
        self.max_depth = max_depth
        self.n_sub = n_sub
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def _add_node(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def grow(self, indices, depth=0) -> int:
        node = self._add_node()
        y_node = self.y[indices]
        prob = float(y_node.mean())
        self.value[node] = prob
        if prob in (0.0, 1.0) or len(indices) < 2 or \
                (self.max_depth is not None and depth >= self.max_depth):
            return node
        cols = np.sort(self.rng.choice(self.x.shape[1], size=self.n_sub, replace=False))
        sub = np.ascontiguousarray(self.x[np.ix_(indices, cols)])
        col, thr, cost = kernels.best_split(sub, np.ascontiguousarray(y_node, dtype=np.int64))
        if col < 0 or not math.isfinite(cost):
            return node
        feat = int(cols[col])
        mask = self.x[indices, feat] <= thr
        self.feature[node] = feat
        self.threshold[node] = float(thr)
        self.left[node] = self.grow(indices[mask], depth + 1)
        self.right[node] = self.grow(indices[~mask], depth + 1)
        return node

    def build(self) -> Tree:
        return Tree(
            np.asarray(self.feature, dtype=np.int32),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int32),
            np.asarray(self.right, dtype=np.int32),
            np.asarray(self.value, dtype=np.float64),
        )


def train_rf(x: np.ndarray, y: np.ndarray, config: ForestConfig | None = None) -> ForestModel:
    """Bagged Gini trees with per-split feature subsampling; deterministic
    for a fixed seed, with the out-of-bag accuracy recorded on the model."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain both classes")
    config = config or ForestConfig()
    n, d = x.shape
    if config.max_features == "sqrt":
        n_sub = max(1, int(math.sqrt(d)))
    elif config.max_features == "all":
        n_sub = d
    else:
        n_sub = max(1, min(d, int(config.max_features)))

    seeds = np.random.SeedSequence(config.seed).spawn(config.n_trees)
    trees = []
    oob_sum = np.zeros(n)
    oob_cnt = np.zeros(n, dtype=np.int64)
    for seq in seeds:
        rng = np.random.default_rng(seq)
        sample = rng.integers(0, n, size=n)
        builder = _TreeBuilder(x, y, rng, config.max_depth, n_sub)
        builder.grow(sample)
        tree = builder.build()
        trees.append(tree)
        oob = np.setdiff1d(np.arange(n), sample, assume_unique=False)
        if len(oob):
            single = ForestModel([tree])
            oob_sum[oob] += single.predict_proba(x[oob])
            oob_cnt[oob] += 1

    covered = oob_cnt > 0
    oob_score = None
    if covered.any():
        oob_pred = (oob_sum[covered] / oob_cnt[covered]) >= 0.5
        oob_score = float(np.mean(oob_pred == (y[covered] == 1)))
    return ForestModel(trees, oob_score)


# ---------------------------------------------------------------------------
# threshold calibration
# ---------------------------------------------------------------------------

def calibrate_threshold(benign_scores, target_fpr: float = 0.01) -> float:
    """Smallest threshold whose benign false-positive fraction is <= target.

    A page is flagged when its score is >= the threshold, so the result is
    one float step above the (m+1)-th largest benign score, where m is the
    number of allowed false positives.
    """
    scores = np.asarray(benign_scores, dtype=np.float64)
    if not 0.0 < target_fpr <= 1.0:
        raise ValueError("target_fpr must be in (0, 1]")
    needed = math.ceil(1.0 / target_fpr)
    if len(scores) < needed:
        raise ValueError(
            f"need at least {needed} benign scores to resolve an FPR of "
            f"{target_fpr}, got {len(scores)}"
        )
    m = int(target_fpr * len(scores))
    if m >= len(scores):
        return 0.0
    cut = np.sort(scores)[::-1][m]  # (m+1)-th largest
    return float(np.nextafter(cut, np.inf))


def empirical_fpr(benign_scores, threshold: float) -> float:
    scores = np.asarray(benign_scores, dtype=np.float64)
    return float(np.mean(scores >= threshold))


# ---------------------------------------------------------------------------
# detector interface
# ---------------------------------------------------------------------------

class Detector:
    """Scoring oracle: page -> confidence in [0, 1], plus a decision
    threshold. score() calls are counted for query accounting."""

    threshold: float = 0.5

    def __init__(self):
        self.query_count = 0

    def score(self, page: HtmlPage) -> float:
        self.query_count += 1
        value = float(self._score(page))
        if not 0.0 <= value <= 1.0:
            raise OracleError(f"score out of range: {value}")
        return value

    def _score(self, page: HtmlPage) -> float:
        raise NotImplementedError

    def decide(self, score: float) -> bool:
        return score >= self.threshold


class ModelDetector(Detector):
    """Local model behind the oracle interface; extracts features itself."""

    def __init__(self, model, threshold: float = 0.5, provider=None, name: str = ""):
        super().__init__()
        self.model = model
        self.threshold = threshold
        self.provider = provider
        self.name = name or type(model).__name__

    def _score(self, page: HtmlPage) -> float:
        vec = np.asarray(extract_all(page, self.provider).as_list(), dtype=np.float64)
        return float(self.model.predict_proba(vec.reshape(1, -1))[0])

    def score_matrix(self, x: np.ndarray) -> np.ndarray:
        """Bulk scoring of pre-extracted features (not oracle-counted)."""
        return self.model.predict_proba(np.asarray(x, dtype=np.float64))


class RemoteDetector(Detector):
    """Client for an external score oracle speaking the wire format:
    POST body = raw page HTML, response = JSON {"score": float}."""

    def __init__(self, endpoint: str, threshold: float = 0.5, timeout: float = 10.0):
        super().__init__()
        self.endpoint = endpoint
        self.threshold = threshold
        self.timeout = timeout

    def _score(self, page: HtmlPage) -> float:
        try:
            resp = requests.post(
                self.endpoint,
                data=serialize(page).encode("utf-8"),
                headers={
                    "Content-Type": "text/html; charset=utf-8",
                    "X-Page-Url": page.page_url,
                },
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise OracleError(f"oracle request failed: {exc}") from exc
        if not isinstance(payload, dict) or "score" not in payload:
            raise OracleError(f"malformed oracle response: {payload!r}")
        try:
            return float(payload["score"])
        except (TypeError, ValueError) as exc:
            raise OracleError(f"malformed oracle score: {payload['score']!r}") from exc


# ---------------------------------------------------------------------------
# model persistence
# ---------------------------------------------------------------------------

_MODEL_KINDS = {"logistic": LogisticModel, "forest": ForestModel}


def model_kind(model) -> str:
    for kind, cls in _MODEL_KINDS.items():
        if isinstance(model, cls):
            return kind
    raise TypeError(f"unknown model type {type(model)!r}")


def save_model(model, path, threshold: float | None = None):
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model_kind(model),
        "feature_names": list(FEATURE_NAMES),
        "feature_order_hash": feature_order_hash,
        "threshold": threshold,
        "model": model.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path):
    """Returns (model, threshold_or_None)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format: {doc.get('format_version')!r}")
    if doc.get("feature_order_hash") != feature_order_hash:
        raise ValueError("model was trained against a different feature ordering")
    cls = _MODEL_KINDS.get(doc.get("kind"))
    if cls is None:
        raise ValueError(f"unknown model kind {doc.get('kind')!r}")
    return cls.from_dict(doc["model"]), doc.get("threshold")
