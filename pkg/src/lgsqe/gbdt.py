"""Gradient-boosted regression trees with a logistic objective, from scratch.

Boosting follows the second-order scheme: per round, gradients g = p - y and
hessians h = p(1 - p) are computed from the current margin, a binary tree is
grown by exact greedy split search, and leaf weights are -G/(H + lambda).
Split gain is

    0.5 * [G_L^2/(H_L + lambda) + G_R^2/(H_R + lambda) - (G_L+G_R)^2/(H_L+H_R + lambda)]

with candidate thresholds at midpoints between consecutive distinct sorted
feature values. Gain ties break toward the lowest feature index, then the
lowest threshold, so fits are fully deterministic. Everything runs on plain
numpy ops (sorts, gathers, cumsums) whose results do not depend on BLAS
thread counts, which keeps refits byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

_PROB_EPS = 1e-15


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, _PROB_EPS, 1.0 - _PROB_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass(frozen=True)
class GbdtParams:
    n_rounds: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    min_samples_leaf: int = 5
    subsample: float = 1.0
    seed: int = 0

    def validate(self):
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be >= 0")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "n_rounds": self.n_rounds,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "reg_lambda": self.reg_lambda,
            "min_samples_leaf": self.min_samples_leaf,
            "subsample": self.subsample,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GbdtParams":
        return cls(**doc)


@dataclass(eq=False)
class Tree:
    """Flat array representation: node i is a leaf iff feature[i] < 0."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict_margin(self, x: np.ndarray) -> np.ndarray:
        idx = np.zeros(x.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[idx]
            active = feat >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            goes_left = x[rows, feat[rows]] < self.threshold[idx[rows]]
            idx[rows] = np.where(goes_left, self.left[idx[rows]], self.right[idx[rows]])
        return self.value[idx]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(v) for v in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        return cls(
            feature=np.asarray(doc["feature"], dtype=np.int64),
            threshold=np.asarray(doc["threshold"], dtype=np.float64),
            left=np.asarray(doc["left"], dtype=np.int64),
            right=np.asarray(doc["right"], dtype=np.int64),
            value=np.asarray(doc["value"], dtype=np.float64),
        )


class _TreeBuilder:
    def __init__(self, x, g, h, params: GbdtParams):
        self.x = x
        self.g = g
        self.h = h
        self.params = params
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def build(self, order: np.ndarray, depth: int) -> int:
        """Grow a node from the per-feature sorted index matrix (rows x feats)."""
        node = self._new_node()
        rows = order[:, 0]
        n_node = rows.size
        lam = self.params.reg_lambda
        g_sum = float(self.g[rows].sum())
        h_sum = float(self.h[rows].sum())

        split = None
        if depth < self.params.max_depth and n_node >= 2 * self.params.min_samples_leaf:
            split = self._best_split(order)
        if split is None:
            denom = h_sum + lam
            self.value[node] = -g_sum / denom if denom > 0 else 0.0
            return node

        feat, pos, thr = split
        is_left = np.zeros(self.x.shape[0], dtype=bool)
        is_left[order[: pos + 1, feat]] = True
        mask = is_left[order]  # (n_node, n_feats), same count per column
        n_left = pos + 1
        left_order = order.T[mask.T].reshape(order.shape[1], n_left).T
        right_order = order.T[~mask.T].reshape(order.shape[1], n_node - n_left).T

        self.feature[node] = feat
        self.threshold[node] = thr
        self.left[node] = self.build(left_order, depth + 1)
        self.right[node] = self.build(right_order, depth + 1)
        return node

    def _best_split(self, order: np.ndarray) -> tuple[int, int, float] | None:
        n_node, n_feats = order.shape
        lam = self.params.reg_lambda
        min_leaf = self.params.min_samples_leaf

        vals = self.x[order, np.arange(n_feats)[None, :]]
        g_cum = np.cumsum(self.g[order], axis=0)
        h_cum = np.cumsum(self.h[order], axis=0)
        g_tot = g_cum[-1]
        h_tot = h_cum[-1]

        gl = g_cum[:-1]
        hl = h_cum[:-1]
        gr = g_tot - gl
        hr = h_tot - hl
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = 0.5 * (gl**2 / (hl + lam) + gr**2 / (hr + lam) - g_tot**2 / (h_tot + lam))
        gain = np.where(np.isfinite(gain), gain, -np.inf)

        counts = np.arange(1, n_node)[:, None]
        valid = (vals[:-1] != vals[1:]) & (counts >= min_leaf) & (n_node - counts >= min_leaf)
        gain = np.where(valid, gain, -np.inf)
        if not np.isfinite(gain).any():
            return None

        # Feature-major flattening makes argmax tie-break (feature, threshold).
        flat = np.argmax(gain.T)
        feat, pos = divmod(int(flat), n_node - 1)
        if gain[pos, feat] <= 0.0:
            return None
        thr = (vals[pos, feat] + vals[pos + 1, feat]) / 2.0
        return feat, pos, float(thr)


@dataclass(eq=False)
class BoostedEnsemble:
    """Fitted boosting model mapping feature rows to soft scores in (0, 1)."""

    trees: list[Tree]
    learning_rate: float
    base_score: float
    n_features: int
    params: GbdtParams
    train_loss: list[float] = field(default_factory=list)

    def predict_margin(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise GeometryError(
                f"expected {self.n_features} feature columns, got shape {features.shape}"
            )
        margin = np.full(features.shape[0], self.base_score)
        for tree in self.trees:
            margin += self.learning_rate * tree.predict_margin(features)
        return margin

    def predict_score(self, features: np.ndarray) -> np.ndarray:
        """Soft score d: probability of the positive (generated) class."""
        return np.clip(_sigmoid(self.predict_margin(features)), _PROB_EPS, 1.0 - _PROB_EPS)

    def to_dict(self) -> dict:
        return {
            "base_score": float(self.base_score),
            "learning_rate": float(self.learning_rate),
            "n_features": self.n_features,
            "params": self.params.to_dict(),
            "train_loss": [float(v) for v in self.train_loss],
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BoostedEnsemble":
        return cls(
            trees=[Tree.from_dict(t) for t in doc["trees"]],
            learning_rate=doc["learning_rate"],
            base_score=doc["base_score"],
            n_features=doc["n_features"],
            params=GbdtParams.from_dict(doc["params"]),
            train_loss=list(doc["train_loss"]),
        )


def fit_ensemble(features: np.ndarray, labels: np.ndarray, params: GbdtParams | None = None) -> BoostedEnsemble:
    """Train on binary labels; 1 is the positive (generated) class."""
    params = params or GbdtParams()
    params.validate()
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.size:
        raise ValueError("features must be (samples, dims) with one label per row")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if not np.isfinite(x).all():
        raise ValueError("features contain non-finite values")
    n1 = y.sum()
    if n1 == 0 or n1 == y.size:
        raise ValueError("both classes must be present")

    base = float(np.log(n1 / (y.size - n1)))
    margin = np.full(y.size, base)
    root_order = np.argsort(x, axis=0, kind="stable").astype(np.int32)
    rng = np.random.default_rng(params.seed)

    trees: list[Tree] = []
    losses: list[float] = []
    for _ in range(params.n_rounds):
        p = _sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        if params.subsample < 1.0:
            picked = np.zeros(y.size, dtype=bool)
            picked[rng.choice(y.size, size=max(2, int(params.subsample * y.size)), replace=False)] = True
            keep = picked[root_order]
            n_keep = int(picked.sum())
            order = root_order.T[keep.T].reshape(x.shape[1], n_keep).T
        else:
            order = root_order
        builder = _TreeBuilder(x, g, h, params)
        builder.build(order, depth=0)
        tree = Tree(
            feature=np.asarray(builder.feature, dtype=np.int64),
            threshold=np.asarray(builder.threshold, dtype=np.float64),
            left=np.asarray(builder.left, dtype=np.int64),
            right=np.asarray(builder.right, dtype=np.int64),
            value=np.asarray(builder.value, dtype=np.float64),
        )
        trees.append(tree)
        margin = margin + params.learning_rate * tree.predict_margin(x)
        losses.append(_log_loss(y, _sigmoid(margin)))

    return BoostedEnsemble(
        trees=trees,
        learning_rate=params.learning_rate,
        base_score=base,
        n_features=x.shape[1],
        params=params,
        train_loss=losses,
    )
