"""Reference classifiers the point-wise linear models are compared against.

Both return the same ``PwlOutput`` record as the main models so training,
evaluation, and serialization treat all model kinds alike; fields that do
not apply are None.
"""

import numpy as np

from . import autodiff as ad
from . import extractor as ex
from .autodiff import Tensor
from .errors import ConfigError, ShapeError
from .pwl import PwlOutput


class LogisticModel:
    """Ordinary logistic regression: sigmoid(w . x + b), one global line."""

    kind = "logistic"

    def __init__(self, n_features: int, seed: int = 0):
        if n_features < 1:
            raise ConfigError(f"n_features must be positive, got {n_features}")
        self.n_features = n_features
        self.seed = seed
        self.trained = False
        rng = np.random.default_rng(seed)
        self.w = Tensor(rng.normal(0.0, np.sqrt(1.0 / n_features), n_features),
                        requires_grad=True)
        self.b = Tensor(0.0, requires_grad=True)

    def named_parameters(self):
        return [("head.weight", self.w), ("head.bias", self.b)]

    def forward(self, x) -> PwlOutput:
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.data.ndim != 2 or x.data.shape[1] != self.n_features:
            raise ShapeError(
                f"input {x.data.shape} does not match {self.n_features} features"
            )
        n = x.data.shape[0]
        logit = ad.sum_rows(ad.hadamard(ad.broadcast_rows(self.w, n), x)) + self.b
        return PwlOutput(
            logit=logit, y_hat=ad.sigmoid(logit), xi=None, xi_offset=None, rho=None
        )

    def predict_proba(self, x) -> np.ndarray:
        return self.forward(x).y_hat.data

    def architecture(self) -> dict:
        return {"n_features": self.n_features}


class DeepClassifier:
    """Fully connected net with a scalar readout: sigmoid(w . phi(x) + b).

    Same extractor as the point-wise linear models, but the readout mixes
    the representation straight into a score, so nothing about it reads
    as per-sample weights on the raw features. A zero-depth stack makes
    phi the identity and the whole thing collapses to logistic regression.
    """

    kind = "deep"

    def __init__(
        self,
        n_features: int,
        hidden: tuple[int, ...] = (64, 64),
        activation: str = "selu",
        seed: int = 0,
    ):
        if n_features < 1:
            raise ConfigError(f"n_features must be positive, got {n_features}")
        self.n_features = n_features
        self.seed = seed
        self.trained = False

        dims = (n_features, *hidden)
        specs = [
            ex.LayerSpec(d_in, d_out, activation)
            for d_in, d_out in zip(dims, dims[1:])
        ]
        rng = np.random.default_rng(seed)
        if specs:
            self.extractor = ex.init_params(specs, rng=rng)
        else:
            self.extractor = ex.ExtractorParams(specs=())
        width = hidden[-1] if hidden else n_features
        self.w = Tensor(rng.normal(0.0, np.sqrt(1.0 / width), width),
                        requires_grad=True)
        self.b = Tensor(0.0, requires_grad=True)

    def named_parameters(self):
        out = self.extractor.named_parameters()
        out.append(("head.weight", self.w))
        out.append(("head.bias", self.b))
        return out

    def forward(self, x) -> PwlOutput:
        x = x if isinstance(x, Tensor) else Tensor(x)
        phi = ex.forward_phi(self.extractor, x)
        n = phi.data.shape[0]
        logit = ad.sum_rows(ad.hadamard(ad.broadcast_rows(self.w, n), phi)) + self.b
        return PwlOutput(
            logit=logit, y_hat=ad.sigmoid(logit), xi=None, xi_offset=None, rho=None
        )

    def predict_proba(self, x) -> np.ndarray:
        return self.forward(x).y_hat.data

    def architecture(self) -> dict:
        return {
            "n_features": self.n_features,
            "hidden": [s.output_dim for s in self.extractor.specs],
            "activation": self.extractor.specs[0].activation
            if self.extractor.specs else "selu",
        }
