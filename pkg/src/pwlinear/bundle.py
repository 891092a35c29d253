"""Saving and loading trained models as a single JSON document.

Parameters travel as base64-encoded little-endian 64-bit floats, so a
bundle written on one machine reproduces predictions bit for bit on any
other. Keys are sorted and floats use their shortest round-trip form, so
saving the same model twice yields byte-identical files. The format is
versioned and an unknown version is rejected before anything is rebuilt.
"""

import base64
import json
from dataclasses import asdict

import numpy as np

from .baselines import DeepClassifier, LogisticModel
from .datasets import Standardization
from .errors import ConfigError
from .fileio import atomic_write
from .pwl import HeadConfig, PwlModel

BUNDLE_FORMAT_VERSION = 1
PARAM_DTYPE = "<f8"


def _encode_param(tensor) -> dict:
    arr = np.asarray(tensor.data, dtype=PARAM_DTYPE)  # 0-d bias stays 0-d
    return {
        "shape": list(arr.shape),
        "dtype": PARAM_DTYPE,
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def _decode_param(spec: dict, name: str) -> np.ndarray:
    if spec.get("dtype") != PARAM_DTYPE:
        raise ConfigError(f"parameter {name!r} has unsupported dtype {spec.get('dtype')!r}")
    raw = base64.b64decode(spec["data"])
    try:
        arr = np.frombuffer(raw, dtype=PARAM_DTYPE).reshape(spec["shape"])
    except ValueError as exc:
        raise ConfigError(f"parameter {name!r} does not fit its shape: {exc}") from exc
    return arr.astype(np.float64)  # copy into a native, writable array


def _rebuild(kind: str, architecture: dict, seed: int):
    if kind == "logistic":
        return LogisticModel(architecture["n_features"], seed=seed)
    if kind == "deep":
        return DeepClassifier(
            architecture["n_features"],
            hidden=tuple(architecture["hidden"]),
            activation=architecture["activation"],
            seed=seed,
        )
    if kind.startswith("pwl-"):
        clamp = architecture.get("clamp_bounds")
        head = HeadConfig(
            variant=architecture["variant"],
            clamp_bounds=None if clamp is None else tuple(clamp),
            output_bias=architecture.get("output_bias", True),
        )
        return PwlModel(
            architecture["n_features"],
            head,
            hidden=tuple(architecture["hidden"]),
            activation=architecture["activation"],
            seed=seed,
        )
    raise ConfigError(f"unknown model kind: {kind!r}")


class ModelBundle:
    """A trained model plus everything needed to use it on raw data:
    feature names, the standardization it was trained under, and the
    training provenance. Presents the same predict/forward surface as
    the bare models, applying standardization on the way in.
    """

    def __init__(self, model, feature_names, standardization=None,
                 train_config=None, metrics=None, seed=0):
        if len(feature_names) != model.n_features:
            raise ConfigError(
                f"{len(feature_names)} feature names for a "
                f"{model.n_features}-feature model"
            )
        self.model = model
        self.feature_names = tuple(feature_names)
        self.standardization = standardization
        self.train_config = train_config
        self.metrics = metrics
        self.seed = seed

    @property
    def kind(self) -> str:
        return self.model.kind

    @property
    def trained(self) -> bool:
        return self.model.trained

    @property
    def n_features(self) -> int:
        return self.model.n_features

    @property
    def w(self):
        return self.model.w

    @property
    def b(self):
        return self.model.b

    def transform_features(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.model.n_features:
            raise ConfigError(
                f"input {x.shape} does not match {self.model.n_features} features"
            )
        if self.standardization is None:
            return x
        s = self.standardization
        return (x - s.mean) / s.std

    def forward(self, x):
        return self.model.forward(self.transform_features(x))

    def predict_proba(self, x) -> np.ndarray:
        return self.forward(x).y_hat.data

    def save(self, path: str) -> None:
        std = None
        if self.standardization is not None:
            std = {
                "mean": list(self.standardization.mean),
                "std": list(self.standardization.std),
                "constant": [bool(c) for c in self.standardization.constant],
            }
        config = self.train_config
        if config is not None and not isinstance(config, dict):
            config = asdict(config)
        payload = {
            "format_version": BUNDLE_FORMAT_VERSION,
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "architecture": self.model.architecture(),
            "parameters": {
                name: _encode_param(t) for name, t in self.model.named_parameters()
            },
            "standardization": std,
            "train_config": config,
            "metrics": self.metrics,
            "seed": self.seed,
        }

        def emit(handle):
            json.dump(payload, handle, sort_keys=True, indent=2)
            handle.write("\n")

        atomic_write(path, emit)


def load_bundle(path: str) -> ModelBundle:
    """Rebuild a saved model; predictions match the original exactly."""
    with open(path) as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not a model bundle: {exc}") from exc
    version = payload.get("format_version")
    if version != BUNDLE_FORMAT_VERSION:
        raise ConfigError(
            f"{path}: bundle format {version!r} is not supported "
            f"(this build reads {BUNDLE_FORMAT_VERSION})"
        )

    seed = payload.get("seed", 0)
    model = _rebuild(payload["kind"], payload["architecture"], seed)
    params = dict(model.named_parameters())
    stored = payload["parameters"]
    if set(params) != set(stored):
        missing = sorted(set(params) ^ set(stored))
        raise ConfigError(f"{path}: parameters do not match architecture: {missing}")
    for name, tensor in params.items():
        arr = _decode_param(stored[name], name)
        if arr.shape != tensor.data.shape:
            raise ConfigError(
                f"{path}: parameter {name!r} has shape {arr.shape}, "
                f"expected {tensor.data.shape}"
            )
        tensor.data = arr
    model.trained = True

    std = payload.get("standardization")
    standardization = None
    if std is not None:
        standardization = Standardization(
            mean=np.array(std["mean"], dtype=np.float64),
            std=np.array(std["std"], dtype=np.float64),
            constant=np.array(std["constant"], dtype=bool),
        )
    return ModelBundle(
        model,
        payload["feature_names"],
        standardization=standardization,
        train_config=payload.get("train_config"),
        metrics=payload.get("metrics"),
        seed=seed,
    )
