"""Command-line front end: seeded dataset generation, config-driven
training, and file exports for predictions, explanations, and grids.

Every command validates the whole input before any compute or output,
and all writers go through the atomic temp-then-rename path, so a failed
run leaves no partial artifacts. Exit codes: 0 ok, 2 invalid input,
3 numeric abort during training, 4 filesystem trouble.
"""

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import datasets as ds
from . import explain as xp
from . import training as tr
from .baselines import DeepClassifier, LogisticModel
from .bundle import ModelBundle, load_bundle
from .errors import ConfigError, DataError, SchemaError, TrainingAbort
from .fileio import atomic_write
from .pwl import HeadConfig, PwlModel, VARIANTS

GENERATOR_DEFAULTS = {
    "circles": {"n": 1000, "noise": 0.05, "factor": 0.5},
    "moons": {"n": 1000, "noise": 0.1},
}
MODEL_KINDS = ("logistic", "deep") + tuple("pwl-" + v for v in VARIANTS)

_TOP_KEYS = {"seed", "out_dir", "data", "model", "train"}
_DATA_KEYS = {"generator", "n", "noise", "factor", "path", "test_path",
              "label_column", "test_fraction", "standardize"}
_MODEL_KEYS = {"kind", "hidden", "activation", "clamp", "output_bias"}
_TRAIN_KEYS = {f.name for f in dataclasses.fields(tr.TrainConfig)}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


def _section(config: dict, name: str) -> dict:
    value = config.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{name!r} must be a mapping, got {type(value).__name__}")
    return dict(value)


class RunConfig:
    """One experiment, fully checked before anything runs: where the data
    comes from, which model, how to train it, and where outputs go."""

    def __init__(self, raw: dict, seed=None, out_dir=None):
        if not isinstance(raw, dict):
            raise ConfigError("run config must be a JSON object")
        _reject_unknown(raw, _TOP_KEYS, "config")

        self.seed = raw.get("seed", 0) if seed is None else seed
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        self.out_dir = out_dir if out_dir is not None else raw.get("out_dir", ".")

        self.data = _section(raw, "data")
        _reject_unknown(self.data, _DATA_KEYS, "data")
        if "path" in self.data and "generator" in self.data:
            raise ConfigError("data: give either a generator or a path, not both")
        if "path" not in self.data:
            generator = self.data.get("generator", "circles")
            if generator not in GENERATOR_DEFAULTS:
                raise ConfigError(f"data: unknown generator {generator!r}")
            if generator == "moons" and "factor" in self.data:
                raise ConfigError("data: factor only applies to circles")
            self.data["generator"] = generator

        model = _section(raw, "model")
        _reject_unknown(model, _MODEL_KEYS, "model")
        kind = model.get("kind", "pwl-realloc-I")
        if kind not in MODEL_KINDS:
            raise ConfigError(f"model: unknown kind {kind!r} (one of {MODEL_KINDS})")
        if kind in ("logistic", "deep"):
            for key in ("clamp", "output_bias"):
                if key in model:
                    raise ConfigError(f"model: {key} only applies to pwl heads")
        model["kind"] = kind
        self.model = model

        train = _section(raw, "train")
        _reject_unknown(train, _TRAIN_KEYS, "train")
        train.setdefault("seed", self.seed)
        self.train = tr.TrainConfig(**train)

    @classmethod
    def load(cls, path: str, seed=None, out_dir=None) -> "RunConfig":
        with open(path) as handle:
            try:
                raw = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
        return cls(raw, seed=seed, out_dir=out_dir)


def _generate(spec: dict, seed: int) -> ds.Dataset:
    generator = spec.get("generator", "circles")
    args = {**GENERATOR_DEFAULTS[generator], **{
        k: spec[k] for k in ("n", "noise", "factor") if k in spec
    }}
    if generator == "circles":
        return ds.make_circles(n=args["n"], factor=args["factor"],
                               noise_sd=args["noise"], seed=seed)
    return ds.make_moons(n=args["n"], noise_sd=args["noise"], seed=seed)


def _resolve_raw_split(config: RunConfig):
    """Raw train/test partitions, before any standardization."""
    spec = config.data
    if "path" in spec:
        label = spec.get("label_column", "label")
        train = ds.load_csv(spec["path"], label_column=label)
        if spec.get("test_path"):
            return train, ds.load_csv(spec["test_path"], label_column=label)
        if "test_fraction" in spec:
            return ds.split(train, spec["test_fraction"], seed=config.seed)
        return train, None
    full = _generate(spec, config.seed)
    fraction = spec.get("test_fraction", 0.3)
    return ds.split(full, fraction, seed=config.seed)


def build_model(spec: dict, n_features: int, seed: int):
    kind = spec["kind"]
    if kind == "logistic":
        return LogisticModel(n_features, seed=seed)
    hidden = tuple(spec.get("hidden", (64, 64)))
    if kind == "deep":
        return DeepClassifier(n_features, hidden=hidden,
                              activation=spec.get("activation", "selu"),
                              seed=seed)
    clamp = spec.get("clamp")
    head = HeadConfig(
        variant=kind[len("pwl-"):],
        clamp_bounds=None if clamp is None else tuple(clamp),
        output_bias=spec.get("output_bias", True),
    )
    return PwlModel(n_features, head, hidden=hidden,
                    activation=spec.get("activation", "tanh"), seed=seed)


def _load_for_bundle(path: str, bundle: ModelBundle) -> ds.Dataset:
    """Read a CSV and check its feature columns against the bundle."""
    with open(path) as handle:
        header = next(csv.reader(handle), None)
    if header is None:
        raise SchemaError(f"{path}: empty file")
    label = "label" if "label" in header else None
    data = ds.load_csv(path, label_column=label)
    if data.feature_names != bundle.feature_names:
        raise SchemaError(
            f"{path}: feature columns {list(data.feature_names)} do not "
            f"match the model's {list(bundle.feature_names)}"
        )
    return data


def _metrics_dict(metrics) -> dict | None:
    return None if metrics is None else dataclasses.asdict(metrics)


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    defaults = GENERATOR_DEFAULTS[args.generator]
    if args.generator != "circles" and args.factor is not None:
        raise ConfigError("factor only applies to circles")
    kwargs = {
        "n": args.n if args.n is not None else defaults["n"],
        "noise_sd": args.noise if args.noise is not None else defaults["noise"],
        "seed": args.seed,
    }
    if args.generator == "circles":
        kwargs["factor"] = args.factor if args.factor is not None else defaults["factor"]
        data = ds.make_circles(**kwargs)
    else:
        data = ds.make_moons(**kwargs)
    ds.save_csv(data, args.out)
    print(json.dumps({"path": args.out, "n": len(data),
                      "features": list(data.feature_names)}, sort_keys=True))
    return 0


def cmd_train(args) -> int:
    config = RunConfig.load(args.config, seed=args.seed, out_dir=args.out)
    raw_train, raw_test = _resolve_raw_split(config)

    os.makedirs(config.out_dir, exist_ok=True)
    ds.save_csv(raw_train, os.path.join(config.out_dir, "train.csv"))
    if raw_test is not None:
        ds.save_csv(raw_test, os.path.join(config.out_dir, "test.csv"))

    if config.data.get("standardize", True):
        train = ds.standardize(raw_train)
        test = (None if raw_test is None
                else ds.apply_standardization(raw_test, train.standardization))
    else:
        train, test = raw_train, raw_test

    model = build_model(config.model, train.X.shape[1], config.seed)
    report = tr.fit(model, train, config.train, val=test)
    report.write_jsonl(os.path.join(config.out_dir, "report.jsonl"))

    metrics = {"train": _metrics_dict(report.final_train),
               "test": _metrics_dict(report.final_val)}
    bundle = ModelBundle(
        model,
        train.feature_names,
        standardization=train.standardization,
        train_config=config.train,
        metrics=metrics,
        seed=config.seed,
    )
    bundle.save(os.path.join(config.out_dir, "model.json"))
    print(json.dumps({"out_dir": config.out_dir, "kind": model.kind,
                      "metrics": metrics}, sort_keys=True))
    return 0


def cmd_predict(args) -> int:
    bundle = load_bundle(args.bundle)
    data = _load_for_bundle(args.input, bundle)
    y_hat = bundle.predict_proba(data.X)

    def emit(handle):
        labeled = data.t is not None
        handle.write("sample_id,y_hat" + (",label" if labeled else "") + "\n")
        for i, y in enumerate(y_hat):
            row = f"{i},{y!r}"
            if labeled:
                row += f",{data.t[i]!r}"
            handle.write(row + "\n")

    atomic_write(args.out, emit)
    summary = {"n": int(len(y_hat)), "accuracy": None}
    if data.t is not None:
        summary["accuracy"] = tr.accuracy_score(y_hat, data.t)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_explain(args) -> int:
    bundle = load_bundle(args.bundle)
    data = _load_for_bundle(args.input, bundle)
    records = xp.explain_batch(bundle, data)
    xp.write_explanations_csv(records, bundle.feature_names, args.out)
    print(json.dumps({"path": args.out, "n": len(records)}, sort_keys=True))
    return 0


def _grid_command(args, builder, value_name: str) -> int:
    bundle = load_bundle(args.bundle)
    xmin, xmax, ymin, ymax = args.range
    grid = builder(bundle, xmin, xmax, ymin, ymax, args.resolution)
    xp.write_grid_csv(grid, args.out + ".csv")
    xp.write_grid_json(grid, args.out + ".json")
    print(json.dumps({"path": args.out, "cells": int(grid.values.size),
                      "value": value_name}, sort_keys=True))
    return 0


def cmd_boundary(args) -> int:
    return _grid_command(args, xp.boundary_grid, "probability")


def cmd_angle_map(args) -> int:
    return _grid_command(args, xp.angle_grid, "angle")


def cmd_rho_scatter(args) -> int:
    bundle = load_bundle(args.bundle)
    data = _load_for_bundle(args.input, bundle)
    rho, labels = xp.rho_scatter(bundle, data)
    xp.write_scatter_csv(rho, labels, args.out)
    print(json.dumps({"path": args.out, "n": int(rho.shape[0])}, sort_keys=True))
    return 0


def cmd_evaluate(args) -> int:
    bundle = load_bundle(args.bundle)
    data = _load_for_bundle(args.input, bundle)
    if data.t is None:
        raise DataError(f"{args.input}: evaluation needs a label column")
    metrics = tr.evaluate(bundle, data)
    print(json.dumps(_metrics_dict(metrics), sort_keys=True))
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwlinear",
        description="Train and inspect point-wise linear classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    p.add_argument("generator", choices=sorted(GENERATOR_DEFAULTS))
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--factor", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(run=cmd_generate)

    p = sub.add_parser("train", help="run one experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the config's seed")
    p.add_argument("--out", default=None, help="override the output directory")
    p.set_defaults(run=cmd_train)

    def bundle_io(p, needs_input=True):
        p.add_argument("--bundle", required=True, help="trained model file")
        if needs_input:
            p.add_argument("--input", required=True, help="CSV of samples")
        p.add_argument("--out", required=True)

    p = sub.add_parser("predict", help="probabilities for a CSV of samples")
    bundle_io(p)
    p.set_defaults(run=cmd_predict)

    p = sub.add_parser("explain", help="per-sample weights and contributions")
    bundle_io(p)
    p.set_defaults(run=cmd_explain)

    for name, runner in (("boundary", cmd_boundary), ("angle-map", cmd_angle_map)):
        p = sub.add_parser(name, help=f"{name} grid over a 2-D range")
        bundle_io(p, needs_input=False)
        p.add_argument("--range", type=float, nargs=4, required=True,
                       metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
        p.add_argument("--resolution", type=int, default=100)
        p.set_defaults(run=runner)

    p = sub.add_parser("rho-scatter", help="reallocated features per sample")
    bundle_io(p)
    p.set_defaults(run=cmd_rho_scatter)

    p = sub.add_parser("evaluate", help="metrics of a bundle on labeled data")
    bundle_io(p)
    p.set_defaults(run=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except TrainingAbort as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
