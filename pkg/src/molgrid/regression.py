"""Prediction functions: Lasso linear regression and ReLU multilayer perceptrons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .descriptors import Scaling

__all__ = [
    "TrainConfig",
    "LinearModel",
    "MlpModel",
    "CVReport",
    "RegressionError",
    "r_squared",
    "train_lasso",
    "train_mlp",
    "forward",
    "loss_and_grad",
    "cross_validate",
    "write_model",
    "read_model",
]


class RegressionError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    r_stop: float = 0.95
    it_stop: int = 200
    learning_rate: float = 0.05
    batch_size: int = 16
    seed: int = 0
    lasso_lambda: float = 0.0
    lasso_max_iter: int = 100_000

    def __post_init__(self):
        if not 0.0 <= self.r_stop <= 1.0:
            raise ValueError("r_stop must lie in [0, 1]")
        if self.it_stop < 1:
            raise ValueError("it_stop must be >= 1")
        if self.lasso_lambda < 0:
            raise ValueError("lasso_lambda must be >= 0")

    @property
    def epoch_cap(self) -> int:
        return math.ceil(1.5 * self.it_stop)


def _identity_scaling(k: int) -> Scaling:
    return Scaling(np.zeros(k), np.ones(k))


@dataclass(frozen=True)
class LinearModel:
    """``y = w . x + bias`` on (normalized) selected descriptors."""

    weights: np.ndarray
    bias: float
    selected: tuple[str, ...] = ()
    x_scaling: Scaling | None = None
    y_scaling: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.selected and len(self.selected) != len(self.weights):
            raise RegressionError("weights and selected descriptors differ in length")

    @property
    def n_inputs(self) -> int:
        return len(self.weights)

    def forward(self, X) -> np.ndarray | float:
        X = np.asarray(X, dtype=float)
        return X @ self.weights + self.bias

    def predict(self, X_raw) -> np.ndarray | float:
        """Prediction in property units from raw descriptor values."""
        sx = self.x_scaling or _identity_scaling(self.n_inputs)
        lo, hi = self.y_scaling
        return lo + (hi - lo) * self.forward(sx.transform(X_raw))

    @property
    def nonzero(self) -> tuple[str, ...]:
        return tuple(d for d, w in zip(self.selected, self.weights) if w != 0.0)


@dataclass(frozen=True)
class MlpModel:
    """ReLU network; ``layers[k] = (W, b)`` with ``W`` of shape (out, in)."""

    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    selected: tuple[str, ...] = ()
    x_scaling: Scaling | None = None
    y_scaling: tuple[float, float] = (0.0, 1.0)
    epochs: int = 0

    def __post_init__(self):
        if not self.layers:
            raise RegressionError("network without layers")
        for (W1, b1), (W2, _) in zip(self.layers, self.layers[1:]):
            if W2.shape[1] != W1.shape[0]:
                raise RegressionError("non-conforming layer dimensions")
        for W, b in self.layers:
            if b.shape != (W.shape[0],):
                raise RegressionError("bias shape does not match weight rows")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise RegressionError("non-finite network parameters")
        if self.layers[-1][0].shape[0] != 1:
            raise RegressionError("output layer must have a single unit")
        if self.selected and len(self.selected) != self.n_inputs:
            raise RegressionError("selected descriptors do not match the input width")

    @property
    def architecture(self) -> tuple[int, ...]:
        return (self.layers[0][0].shape[1], *(W.shape[0] for W, _ in self.layers))

    @property
    def n_inputs(self) -> int:
        return self.layers[0][0].shape[1]

    def forward(self, X) -> np.ndarray | float:
        return forward(self, X)

    def predict(self, X_raw) -> np.ndarray | float:
        sx = self.x_scaling or _identity_scaling(self.n_inputs)
        lo, hi = self.y_scaling
        return lo + (hi - lo) * forward(self, sx.transform(X_raw))


def r_squared(model, X, y) -> float:
    """Coefficient of determination of ``model`` (or a prediction array) on (X, y)."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise RegressionError("empty dataset")
    pred = np.asarray(model if X is None else model.forward(X), dtype=float)
    denom = float(np.sum((y - y.mean()) ** 2))
    if denom == 0.0:
        raise RegressionError("R^2 is undefined on a constant-target dataset")
    return 1.0 - float(np.sum((y - pred) ** 2)) / denom


# ---------------------------------------------------------------------------
# Lasso


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def train_lasso(X, y, cfg: TrainConfig, selected: Sequence[str] = ()) -> LinearModel:
    """Cyclic coordinate descent on (1/2n)||y - Xw - b||^2 + lambda ||w||_1."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise RegressionError("non-finite training data")
    n, k = X.shape
    lam = cfg.lasso_lambda
    xm = X.mean(axis=0)
    ym = y.mean()
    Xc = X - xm
    yc = y - ym
    col_sq = (Xc**2).sum(axis=0) / n
    w = np.zeros(k)
    resid = yc.copy()
    for _ in range(cfg.lasso_max_iter):
        max_step = 0.0
        for j in range(k):
            if col_sq[j] == 0.0:
                continue
            wj = w[j]
            rho_j = Xc[:, j] @ resid / n + col_sq[j] * wj
            new = _soft(rho_j, lam) / col_sq[j]
            if new != wj:
                resid -= Xc[:, j] * (new - wj)
                w[j] = new
                max_step = max(max_step, abs(new - wj))
        if max_step < 1e-7:
            break
    bias = float(ym - xm @ w)
    return LinearModel(w, bias, tuple(selected))


def lasso_objective(model: LinearModel, X, y, lam: float) -> float:
    X = np.asarray(X, dtype=float)
    r = np.asarray(y, dtype=float) - model.forward(X)
    return float(r @ r / (2 * len(r)) + lam * np.abs(model.weights).sum())


# ---------------------------------------------------------------------------
# MLP


def forward(model: MlpModel, X) -> np.ndarray | float:
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if X.shape[-1] != model.n_inputs:
        raise RegressionError(f"input width {X.shape[-1]} != network input width {model.n_inputs}")
    h = X[None, :] if single else X
    for W, b in model.layers[:-1]:
        h = np.maximum(h @ W.T + b, 0.0)
    W, b = model.layers[-1]
    out = (h @ W.T + b)[:, 0]
    return float(out[0]) if single else out


def loss_and_grad(model: MlpModel, X, y) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean squared error / 2 and its gradient w.r.t. every layer."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    acts = [X]
    pre = []
    h = X
    for W, b in model.layers[:-1]:
        z = h @ W.T + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    W, b = model.layers[-1]
    out = (h @ W.T + b)[:, 0]
    n = len(y)
    diff = out - y
    loss = float(diff @ diff) / (2 * n)
    delta = (diff / n)[:, None]
    grads: list[tuple[np.ndarray, np.ndarray]] = []
    for k in range(len(model.layers) - 1, -1, -1):
        Wk, _ = model.layers[k]
        grads.append((delta.T @ acts[k], delta.sum(axis=0)))
        if k > 0:
            delta = (delta @ Wk) * (pre[k - 1] > 0)
    grads.reverse()
    return loss, grads


def _init_layers(arch: Sequence[int], rng: np.random.Generator):
    layers = []
    for fan_in, fan_out in zip(arch[:-1], arch[1:]):
        bound = math.sqrt(6.0 / fan_in)
        W = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append((W, np.zeros(fan_out)))
    return layers


def train_mlp(
    X, y, arch: Sequence[int], cfg: TrainConfig, selected: Sequence[str] = ()
) -> MlpModel:
    """Mini-batch gradient descent with R^2-based early stopping.

    After every epoch the training R^2 is evaluated; training stops once it
    exceeds ``cfg.r_stop`` and in any case after ``ceil(1.5 * it_stop)``
    epochs.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    arch = tuple(int(a) for a in arch)
    if len(arch) < 2 or arch[-1] != 1:
        raise RegressionError("architecture must end in a single output unit")
    if arch[0] != X.shape[1]:
        raise RegressionError(f"architecture input width {arch[0]} != feature width {X.shape[1]}")
    rng = np.random.default_rng(cfg.seed)
    layers = _init_layers(arch, rng)
    n = len(y)
    bs = max(1, min(cfg.batch_size, n))
    lr = cfg.learning_rate
    epochs = 0
    model = MlpModel(tuple(layers), tuple(selected))
    while epochs < cfg.epoch_cap:
        order = rng.permutation(n)
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            _, grads = loss_and_grad(model, X[idx], y[idx])
            layers = [(W - lr * gW, b - lr * gb) for (W, b), (gW, gb) in zip(model.layers, grads)]
            model = MlpModel(tuple(layers), tuple(selected))
        epochs += 1
        try:
            score = r_squared(model, X, y)
        except RegressionError:
            score = -math.inf
        if score > cfg.r_stop:
            break
    return replace(model, epochs=epochs)


# ---------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class CVReport:
    scores: tuple[float, ...]
    folds: int
    repeats: int
    train_scores: tuple[float, ...] = field(default=())

    @property
    def median(self) -> float:
        return float(np.median(self.scores))

    def to_text(self) -> str:
        lines = [
            f"folds {self.folds}",
            f"repeats {self.repeats}",
            f"trials {len(self.scores)}",
            f"median_test_r2 {self.median!r}",
            "repeat,fold,train_r2,test_r2",
        ]
        for t, s in enumerate(self.scores):
            tr = self.train_scores[t] if self.train_scores else float("nan")
            lines.append(f"{t // self.folds},{t % self.folds},{tr!r},{s!r}")
        return "\n".join(lines) + "\n"


def _fit(kind: str, X, y, arch, cfg: TrainConfig):
    if kind == "lasso":
        return train_lasso(X, y, cfg)
    if kind == "mlp":
        return train_mlp(X, y, arch, cfg)
    raise RegressionError(f"unknown model kind {kind!r}")


def cross_validate(
    X,
    y,
    arch: Sequence[int] | None,
    cfg: TrainConfig,
    folds: int = 5,
    repeats: int = 10,
    seed: int = 0,
    kind: str = "mlp",
) -> CVReport:
    """Repeated k-fold CV; every trial trains with its own seeded RNG."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < folds:
        raise RegressionError(f"dataset of size {n} is smaller than the fold count {folds}")
    scores, train_scores = [], []
    for rep in range(repeats):
        perm = np.random.default_rng([seed, rep]).permutation(n)
        parts = np.array_split(perm, folds)
        for k, test in enumerate(parts):
            train = np.setdiff1d(perm, test, assume_unique=True)
            trial_cfg = replace(cfg, seed=int(np.random.default_rng([seed, rep, k]).integers(2**31)))
            model = _fit(kind, X[train], y[train], arch, trial_cfg)
            train_scores.append(_safe_r2(model, X[train], y[train]))
            scores.append(_safe_r2(model, X[test], y[test]))
    return CVReport(tuple(scores), folds, repeats, tuple(train_scores))


def _safe_r2(model, X, y) -> float:
    # a held-out fold of one sample (or constant targets) has no defined R^2
    try:
        return r_squared(model, X, y)
    except RegressionError:
        return float("nan")


# ---------------------------------------------------------------------------
# model files


def _vec(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def write_model(model: LinearModel | MlpModel) -> str:
    lines = []
    if isinstance(model, LinearModel):
        lines.append("kind = linear")
        lines.append(f"architecture = {model.n_inputs} 1")
        layers = [(model.weights[None, :], np.array([model.bias]))]
    else:
        lines.append("kind = mlp")
        lines.append("architecture = " + " ".join(str(a) for a in model.architecture))
        lines.append(f"epochs = {model.epochs}")
        layers = list(model.layers)
    lines.append("selected = " + " ".join(model.selected))
    if model.x_scaling is not None:
        lines.append("x_min = " + _vec(model.x_scaling.lo))
        lines.append("x_max = " + _vec(model.x_scaling.hi))
    lines.append("y_range = " + _vec(model.y_scaling))
    for k, (W, b) in enumerate(layers, 1):
        lines.append(f"W{k} = " + _vec(W))
        lines.append(f"b{k} = " + _vec(b))
    return "\n".join(lines) + "\n"


def read_model(text: str) -> LinearModel | MlpModel:
    kv: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise RegressionError(f"malformed model line {raw!r}")
        kv[key.strip()] = value.strip()
    try:
        arch = [int(a) for a in kv["architecture"].split()]
        kind = kv["kind"]
    except KeyError as exc:
        raise RegressionError(f"model file lacks {exc.args[0]}") from None
    selected = tuple(kv.get("selected", "").split())
    scaling = None
    if "x_min" in kv:
        scaling = Scaling(
            np.array([float(v) for v in kv["x_min"].split()]),
            np.array([float(v) for v in kv["x_max"].split()]),
        )
    y_rng = tuple(float(v) for v in kv.get("y_range", "0 1").split())
    layers = []
    for k in range(1, len(arch)):
        W = np.array([float(v) for v in kv[f"W{k}"].split()]).reshape(arch[k], arch[k - 1])
        b = np.array([float(v) for v in kv[f"b{k}"].split()])
        layers.append((W, b))
    if kind == "linear":
        W, b = layers[0]
        return LinearModel(W[0], float(b[0]), selected, scaling, y_rng)  # type: ignore[arg-type]
    if kind == "mlp":
        return MlpModel(tuple(layers), selected, scaling, y_rng, int(kv.get("epochs", 0)))  # type: ignore[arg-type]
    raise RegressionError(f"unknown model kind {kind!r}")
