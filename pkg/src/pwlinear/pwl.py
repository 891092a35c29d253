"""Point-wise linear heads and the full classifier built on them.

Every head produces, for each input x, a weight vector xi(x) and a
prediction sigmoid(xi(x) . x + b). The straightforward head uses the
generated weights directly. Reallocation heads instead keep one global
weight vector w and let the network move each feature before w multiplies
it, which is what keeps the per-sample weights from memorizing the
training set:

    scale          rho = u * x
    shift          rho = u + x
    scale-of-shift rho = u * (x + v)
    shift-of-scale rho = u * x + v

with (u, v) generated per sample and the prediction sigmoid(w . rho + b).
Each of those is still linear in x once u and v are fixed, so it also
reads as xi(x) . x plus a per-sample offset; ``PwlOutput`` carries both
forms.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import extractor as ex
from .autodiff import Tensor
from .errors import ConfigError, ShapeError

VARIANTS = (
    "straightforward",
    "realloc-I",
    "realloc-II",
    "realloc-III",
    "realloc-IV",
)

REALLOC_VARIANTS = VARIANTS[1:]


@dataclass(frozen=True)
class HeadConfig:
    """Which head to build and how its output is post-processed.

    ``clamp_bounds`` saturates the reallocated features to [min, max]
    before the global weights see them; it only makes sense for
    reallocation heads. ``output_bias`` adds a trainable scalar to the
    decision function.
    """

    variant: str
    clamp_bounds: tuple[float, float] | None = None
    output_bias: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown head variant: {self.variant!r}")
        if self.clamp_bounds is not None:
            if self.variant == "straightforward":
                raise ConfigError("clamping applies to reallocated features only")
            lo, hi = self.clamp_bounds
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ConfigError("clamp bounds must be finite")
            if lo > hi:
                raise ConfigError(f"clamp bounds out of order: {lo} > {hi}")


@dataclass
class PwlOutput:
    """One forward pass, kept as graph tensors so a loss can backprop.

    ``xi`` and ``xi_offset`` express the decision function in linear
    form: the logit is the row sum of xi * x + xi_offset, plus the output
    bias. ``xi_offset`` has the same shape as x (None when there is no
    offset). ``rho`` holds the reallocated features, after clamping, for
    reallocation heads and is None for the straightforward head.
    """

    logit: Tensor
    y_hat: Tensor
    xi: Tensor
    xi_offset: Tensor | None
    rho: Tensor | None


def forward_straightforward(eta: Tensor, x: Tensor, bias: Tensor | None) -> PwlOutput:
    """Prediction with the generated weights applied as-is: sigmoid(eta . x)."""
    if eta.data.shape != x.data.shape:
        raise ShapeError(
            f"weight material {eta.data.shape} does not match inputs {x.data.shape}"
        )
    logit = ad.sum_rows(ad.hadamard(eta, x))
    if bias is not None:
        logit = logit + bias
    return PwlOutput(
        logit=logit,
        y_hat=ad.sigmoid(logit),
        xi=eta,
        xi_offset=None,
        rho=None,
    )


def forward_realloc(
    variant: str,
    w: Tensor,
    eta: Tensor,
    x: Tensor,
    clamp_bounds: tuple[float, float] | None,
    bias: Tensor | None,
) -> PwlOutput:
    """Prediction through reallocated features: sigmoid(w . clamp(rho)).

    ``eta`` is the weight material from the extractor: (N, D) for the
    single-vector variants, (N, 2D) for the two-vector ones, where the
    scaling vector occupies the first D columns and the shifting vector
    the rest.
    """
    if variant not in REALLOC_VARIANTS:
        raise ConfigError(f"not a reallocation variant: {variant!r}")
    n, d = x.data.shape
    expected = ex.weight_rows(d, variant)
    if eta.data.shape != (n, expected):
        raise ShapeError(
            f"weight material {eta.data.shape} does not match "
            f"(batch {n}, {expected} rows) for {variant}"
        )
    if w.data.shape != (d,):
        raise ShapeError(f"global weights {w.data.shape} do not match {d} features")

    if variant in ex.DOUBLE_WIDTH_VARIANTS:
        u = ad.slice_cols(eta, 0, d)
        v = ad.slice_cols(eta, d, 2 * d)
    else:
        u, v = eta, None

    if variant == "realloc-I":
        rho = ad.hadamard(u, x)
    elif variant == "realloc-II":
        rho = u + x
    elif variant == "realloc-III":
        rho = ad.hadamard(u, x + v)
    else:  # realloc-IV
        rho = ad.hadamard(u, x) + v

    if clamp_bounds is not None:
        rho = ad.clamp(rho, *clamp_bounds)

    w_rows = ad.broadcast_rows(w, n)
    logit = ad.sum_rows(ad.hadamard(w_rows, rho))
    if bias is not None:
        logit = logit + bias

    # The same decision function written as xi . x + offset. Valid while
    # nothing saturates; clamping bends the line outside the bounds.
    if variant == "realloc-I":
        xi, offset = ad.hadamard(w_rows, u), None
    elif variant == "realloc-II":
        xi, offset = w_rows, ad.hadamard(w_rows, u)
    elif variant == "realloc-III":
        xi = ad.hadamard(w_rows, u)
        offset = ad.hadamard(xi, v)
    else:
        xi = ad.hadamard(w_rows, u)
        offset = ad.hadamard(w_rows, v)

    return PwlOutput(
        logit=logit,
        y_hat=ad.sigmoid(logit),
        xi=xi,
        xi_offset=offset,
        rho=rho,
    )


def extract_contributions(output: PwlOutput, x: np.ndarray,
                          w: np.ndarray | None) -> np.ndarray:
    """Per-feature additive shares of each sample's logit.

    For reallocation heads the share of feature mu is w_mu * rho_mu
    (clamping included); for the straightforward head it is xi_mu * x_mu.
    Rows sum to the logit minus the output bias, exactly, because these
    are the very products the forward pass added up.
    """
    if output.rho is not None:
        if w is None:
            raise ConfigError("reallocation output needs the global weights")
        return w * output.rho.data
    return output.xi.data * np.asarray(x)


def xi_angle_map(xi: np.ndarray) -> np.ndarray:
    """Direction of each sample's weight vector, for two-feature models.

    Returns atan2(xi_2, xi_1) in radians, (-pi, pi].
    """
    xi = np.asarray(xi)
    if xi.ndim != 2 or xi.shape[1] != 2:
        raise ShapeError(f"angle map needs (N, 2) weights, got {xi.shape}")
    return np.arctan2(xi[:, 1], xi[:, 0])


class PwlModel:
    """Feature extractor, weight transform, and one head, end to end."""

    def __init__(
        self,
        n_features: int,
        head: HeadConfig,
        hidden: tuple[int, ...] = (64, 64),
        activation: str = "tanh",
        seed: int = 0,
    ):
        if n_features < 1:
            raise ConfigError(f"n_features must be positive, got {n_features}")
        self.n_features = n_features
        self.head = head
        self.kind = "pwl-" + head.variant
        self.seed = seed
        self.trained = False

        dims = (n_features, *hidden)
        specs = [
            ex.LayerSpec(d_in, d_out, activation)
            for d_in, d_out in zip(dims, dims[1:])
        ]
        rng = np.random.default_rng(seed)
        self.extractor = ex.init_params(
            specs, ex.weight_rows(n_features, head.variant), rng=rng
        )
        if head.variant == "straightforward":
            self.w = None
        else:
            self.w = Tensor(rng.normal(0.0, np.sqrt(1.0 / n_features), n_features),
                            requires_grad=True)
        self.b = Tensor(0.0, requires_grad=True) if head.output_bias else None

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = self.extractor.named_parameters()
        if self.w is not None:
            out.append(("head.weight", self.w))
        if self.b is not None:
            out.append(("head.bias", self.b))
        return out

    def forward(self, x) -> PwlOutput:
        x = x if isinstance(x, Tensor) else Tensor(x)
        phi = ex.forward_phi(self.extractor, x)
        eta = ex.forward_eta(self.extractor, phi)
        if self.head.variant == "straightforward":
            return forward_straightforward(eta, x, self.b)
        return forward_realloc(
            self.head.variant, self.w, eta, x, self.head.clamp_bounds, self.b
        )

    def predict_proba(self, x) -> np.ndarray:
        return self.forward(x).y_hat.data

    def architecture(self) -> dict:
        """Shape description, sufficient to rebuild the model untrained."""
        return {
            "n_features": self.n_features,
            "hidden": [s.output_dim for s in self.extractor.specs],
            "activation": self.extractor.specs[0].activation
            if self.extractor.specs else "tanh",
            "variant": self.head.variant,
            "clamp_bounds": list(self.head.clamp_bounds)
            if self.head.clamp_bounds else None,
            "output_bias": self.head.output_bias,
        }
