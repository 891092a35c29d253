"""Mini-batch training and evaluation for every model kind.

The objective is the mean negative log likelihood of the labels, with
predicted probabilities clipped away from 0 and 1 before the logarithm.
Models that emit per-sample weights can add an elastic-net penalty on
them: per sample, alpha times the L1 norm plus (1 - alpha) times the L2
norm, averaged over the batch. The L2 term is the norm itself by default;
``squared_l2`` switches it to the squared norm.
"""

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, DataError, TrainingAbort
from .fileio import atomic_write

PROB_CLIP = 1e-12

OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True)
class TrainConfig:
    """Everything the fit loop needs, with the defaults used throughout."""

    epochs: int = 300
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    reg_lambda: float = 0.0
    alpha: float = 1.0
    squared_l2: bool = False
    shuffle: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be positive, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be positive, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer: {self.optimizer!r}")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ConfigError("momentum decay rates must lie in [0, 1)")
        if self.reg_lambda < 0:
            raise ConfigError(f"penalty weight must be non-negative, got {self.reg_lambda}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"elastic-net mix must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class Metrics:
    """Held-out quality numbers; rank quality is None on one-class data."""

    accuracy: float
    auc: float | None
    mean_nll: float


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    accuracy: float
    auc: float | None
    val_accuracy: float | None
    val_auc: float | None
    seconds: float


@dataclass
class TrainReport:
    """Per-epoch history, closing metrics on both splits, and a snapshot
    of the parameters training ended with."""

    records: list[EpochRecord] = field(default_factory=list)
    final_train: Metrics | None = None
    final_val: Metrics | None = None
    final_parameters: dict[str, np.ndarray] = field(default_factory=dict)

    def write_jsonl(self, path: str) -> None:
        def emit(handle):
            for record in self.records:
                json.dump(asdict(record), handle, sort_keys=True)
                handle.write("\n")

        atomic_write(path, emit)


def nll_loss(y_hat: Tensor, targets, clip: float = PROB_CLIP) -> Tensor:
    """Mean negative log likelihood of binary targets under y_hat."""
    t = targets if isinstance(targets, Tensor) else Tensor(np.asarray(targets, dtype=np.float64))
    if t.data.shape != y_hat.data.shape:
        raise DataError(
            f"targets {t.data.shape} do not match predictions {y_hat.data.shape}"
        )
    if not np.isin(t.data, (0.0, 1.0)).all():
        raise DataError("targets must be 0 or 1")
    p = ad.clamp(y_hat, clip, 1.0 - clip)
    ll = ad.hadamard(t, p.log()) + ad.hadamard(1.0 - t, (1.0 - p).log())
    return -ll.mean()


def xi_regularizer(xi: Tensor, alpha: float, squared_l2: bool = False) -> Tensor:
    """Elastic-net penalty on per-sample weights, averaged over the batch."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"elastic-net mix must lie in [0, 1], got {alpha}")
    if xi.data.ndim != 2:
        raise ConfigError(f"per-sample weights must be a matrix, got {xi.data.shape}")
    terms = []
    if alpha > 0.0:
        terms.append(alpha * ad.sum_rows(xi.abs()))
    if alpha < 1.0:
        sq = ad.sum_rows(ad.hadamard(xi, xi))
        terms.append((1.0 - alpha) * (sq if squared_l2 else sq.sqrt()))
    penalty = terms[0] if len(terms) == 1 else terms[0] + terms[1]
    return penalty.mean()


def batch_loss(model, x: np.ndarray, t: np.ndarray, config: TrainConfig):
    """Objective for one batch: NLL plus the weight penalty when active."""
    out = model.forward(x)
    loss = nll_loss(out.y_hat, t)
    if config.reg_lambda > 0.0:
        if out.xi is None:
            raise ConfigError(
                f"{model.kind} has no per-sample weights to regularize"
            )
        loss = loss + config.reg_lambda * xi_regularizer(
            out.xi, config.alpha, config.squared_l2
        )
    return loss, out


class Sgd:
    """Plain gradient descent with a fixed step size."""

    def __init__(self, params, learning_rate: float):
        self.params = list(params)
        self.learning_rate = learning_rate

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        for p in self.params:
            if p.grad is not None:
                p.data -= self.learning_rate * p.grad


class Adam:
    """Adaptive moments with bias correction."""

    def __init__(self, params, learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1 ** self.t)
            v_hat = self.v[i] / (1 - self.beta2 ** self.t)
            p.data -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(model, config: TrainConfig):
    params = [p for _, p in model.named_parameters()]
    if config.optimizer == "sgd":
        return Sgd(params, config.learning_rate)
    return Adam(params, config.learning_rate, config.beta1, config.beta2, config.eps)


def _as_xy(data):
    if hasattr(data, "X"):
        if data.t is None:
            raise DataError("dataset has no labels to train or score against")
        return data.X, data.t
    x, t = data
    return np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64)


def fit(model, train, config: TrainConfig | None = None, val=None) -> TrainReport:
    """Mini-batch training; returns the per-epoch history.

    ``train`` and ``val`` are datasets or (X, t) pairs. Batches are drawn
    in a freshly seeded order each epoch. A non-finite objective stops
    training immediately with diagnostics rather than letting the
    parameters degrade silently.
    """
    config = config or TrainConfig()
    x, t = _as_xy(train)
    if x.shape[0] == 0:
        raise DataError("cannot fit on an empty dataset")
    val_xy = _as_xy(val) if val is not None else None

    optimizer = make_optimizer(model, config)
    rng = np.random.default_rng(config.seed)
    n = x.shape[0]
    report = TrainReport()

    for epoch in range(config.epochs):
        started = time.perf_counter()
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        epoch_loss = 0.0
        for batch, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            optimizer.zero_grad()
            try:
                loss, _ = batch_loss(model, x[idx], t[idx], config)
            except AssertionError as exc:
                raise TrainingAbort(
                    f"non-finite values in epoch {epoch}, batch {batch}: {exc}",
                    epoch=epoch, batch=batch,
                    learning_rate=config.learning_rate,
                ) from exc
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingAbort(
                    f"objective became {value} in epoch {epoch}, batch {batch}",
                    epoch=epoch, batch=batch,
                    learning_rate=config.learning_rate,
                )
            epoch_loss += value * idx.size
            ad.backward(loss)
            optimizer.step()

        train_metrics = evaluate(model, (x, t))
        val_metrics = evaluate(model, val_xy) if val_xy is not None else None
        report.records.append(EpochRecord(
            epoch=epoch,
            loss=epoch_loss / n,
            accuracy=train_metrics.accuracy,
            auc=train_metrics.auc,
            val_accuracy=val_metrics.accuracy if val_metrics else None,
            val_auc=val_metrics.auc if val_metrics else None,
            seconds=time.perf_counter() - started,
        ))

    model.trained = True
    report.final_train = evaluate(model, (x, t))
    report.final_val = evaluate(model, val_xy) if val_xy is not None else None
    report.final_parameters = {
        name: p.data.copy() for name, p in model.named_parameters()
    }
    return report


def accuracy_score(y_hat: np.ndarray, t: np.ndarray) -> float:
    """Fraction of correct calls at the 0.5 threshold."""
    return float(((np.asarray(y_hat) >= 0.5) == (np.asarray(t) == 1.0)).mean())


def auc_score(y_hat: np.ndarray, t: np.ndarray) -> float | None:
    """Area under the ROC curve, ties handled by midranks.

    None when only one class is present, where the area is undefined.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    t = np.asarray(t)
    pos = t == 1.0
    n_pos = int(pos.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    _, inverse, counts = np.unique(y_hat, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    midranks = ends[inverse] - (counts[inverse] - 1) / 2.0
    u = midranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate(model, data) -> Metrics:
    """Accuracy, ranking quality, and mean NLL on a labeled set."""
    x, t = _as_xy(data)
    y_hat = model.predict_proba(x)
    nll = nll_loss(Tensor(y_hat), t)
    return Metrics(
        accuracy=accuracy_score(y_hat, t),
        auc=auc_score(y_hat, t),
        mean_nll=nll.item(),
    )
