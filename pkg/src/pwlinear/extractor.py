"""Multi-layer feature extractor and the linear map to per-sample weights.

The extractor phi is a plain fully connected stack. On top of it an
optional bias-free linear transform turns phi(x) into the weight material
eta(x) that the heads consume. Reallocation variants that need two weight
vectors per sample (scaling plus shifting) double the transform's output
rows; the head slices them apart.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, ShapeError

# Initial weight variance is gain / fan_in; rectifiers get the factor 2.
ACTIVATION_GAIN = {"relu": 2.0, "selu": 2.0, "tanh": 1.0, "sigmoid": 1.0}

# Heads whose per-sample weight material is two stacked vectors.
DOUBLE_WIDTH_VARIANTS = ("realloc-III", "realloc-IV")


@dataclass(frozen=True)
class LayerSpec:
    """Shape and nonlinearity of one fully connected layer."""

    input_dim: int
    output_dim: int
    activation: str = "tanh"
    has_bias: bool = True

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ConfigError(
                f"layer dims must be positive, got {self.input_dim}x{self.output_dim}"
            )
        if self.activation not in ad.ACTIVATION_KINDS:
            raise ConfigError(f"unknown activation kind: {self.activation!r}")


@dataclass
class ExtractorParams:
    """Trainable state: hidden layers plus the optional weight transform.

    ``layers`` holds one (weight, bias) pair per LayerSpec; weight is
    (output_dim, input_dim), bias is (output_dim,) or None. ``transform``
    maps extractor output to weight material and never has a bias.
    """

    specs: tuple[LayerSpec, ...]
    layers: list[tuple[Tensor, Tensor | None]] = field(default_factory=list)
    transform: Tensor | None = None

    @property
    def input_dim(self) -> int:
        return self.specs[0].input_dim if self.specs else -1

    @property
    def output_dim(self) -> int:
        return self.specs[-1].output_dim if self.specs else -1

    def named_parameters(self, prefix: str = "extractor") -> list[tuple[str, Tensor]]:
        out = []
        for i, (w, b) in enumerate(self.layers):
            out.append((f"{prefix}.layer{i}.weight", w))
            if b is not None:
                out.append((f"{prefix}.layer{i}.bias", b))
        if self.transform is not None:
            out.append((f"{prefix}.transform", self.transform))
        return out


def init_params(
    specs,
    n_weight_rows: int | None = None,
    *,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> ExtractorParams:
    """Draw fresh parameters for the given layer chain.

    Weights come from a zero-mean normal with variance gain/fan_in, the
    gain chosen by each layer's activation. Biases start at zero.
    ``n_weight_rows``, when given, adds the bias-free transform with that
    many output rows, initialized at variance 1/fan_in.
    """
    specs = tuple(specs)
    if not specs:
        raise ConfigError("layer chain is empty")
    for prev, cur in zip(specs, specs[1:]):
        if prev.output_dim != cur.input_dim:
            raise ConfigError(
                f"layer chain mismatch: {prev.output_dim} feeds {cur.input_dim}"
            )
    if rng is None:
        rng = np.random.default_rng(seed)

    layers = []
    for spec in specs:
        std = np.sqrt(ACTIVATION_GAIN[spec.activation] / spec.input_dim)
        w = Tensor(rng.normal(0.0, std, (spec.output_dim, spec.input_dim)),
                   requires_grad=True)
        b = Tensor(np.zeros(spec.output_dim), requires_grad=True) if spec.has_bias else None
        layers.append((w, b))

    transform = None
    if n_weight_rows is not None:
        fan_in = specs[-1].output_dim
        std = np.sqrt(1.0 / fan_in)
        transform = Tensor(rng.normal(0.0, std, (n_weight_rows, fan_in)),
                           requires_grad=True)
    return ExtractorParams(specs=specs, layers=layers, transform=transform)


def weight_rows(n_features: int, variant: str) -> int:
    """Rows of weight material a head variant needs per sample."""
    return 2 * n_features if variant in DOUBLE_WIDTH_VARIANTS else n_features


def forward_phi(params: ExtractorParams, x: Tensor) -> Tensor:
    """Extractor output phi(x) for a batch, shape (N, output_dim).

    An empty layer chain is the identity, so a head can run directly on
    raw features.
    """
    if x.data.ndim != 2:
        raise ShapeError(f"extractor input must be a batch matrix, got {x.data.shape}")
    if params.specs and x.data.shape[1] != params.input_dim:
        raise ShapeError(
            f"input has {x.data.shape[1]} features, layer0 expects {params.input_dim}"
        )
    h = x
    n = x.data.shape[0]
    for i, ((w, b), spec) in enumerate(zip(params.layers, params.specs)):
        if h.data.shape[1] != spec.input_dim:
            raise ShapeError(
                f"layer{i} expects {spec.input_dim} inputs, got {h.data.shape[1]}"
            )
        z = ad.matmul(h, w.transpose())
        if b is not None:
            z = z + ad.broadcast_rows(b, n)
        h = ad.activation(z, spec.activation)
    return h


def forward_eta(params: ExtractorParams, phi: Tensor) -> Tensor:
    """Weight material from extracted features: phi @ transform.T, (N, rows)."""
    if params.transform is None:
        raise ConfigError("extractor has no weight transform")
    if phi.data.ndim != 2 or phi.data.shape[1] != params.transform.data.shape[1]:
        raise ShapeError(
            f"features {phi.data.shape} do not match transform "
            f"{params.transform.data.shape}"
        )
    return ad.matmul(phi, params.transform.transpose())
