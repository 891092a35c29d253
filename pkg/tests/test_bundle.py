"""Serialization: exact round trips for every model kind, byte-stable
files, version gating, and corruption handling."""

import json

import numpy as np
import pytest

from pwlinear import bundle as bd
from pwlinear import training as tr
from pwlinear.baselines import DeepClassifier, LogisticModel
from pwlinear.datasets import make_circles, standardize
from pwlinear.errors import ConfigError
from pwlinear.pwl import HeadConfig, PwlModel


RNG = np.random.default_rng(17)


def all_model_kinds():
    yield LogisticModel(2, seed=1)
    yield DeepClassifier(2, hidden=(6,), seed=2)
    yield PwlModel(2, HeadConfig("straightforward"), hidden=(6,), seed=3)
    for variant in ("realloc-I", "realloc-II", "realloc-III", "realloc-IV"):
        yield PwlModel(2, HeadConfig(variant), hidden=(6,), seed=4)
    yield PwlModel(
        2, HeadConfig("realloc-I", clamp_bounds=(0.0, 1.0), output_bias=False),
        hidden=(6, 5), activation="relu", seed=5,
    )


def quick_fit(model, epochs=3):
    d = make_circles(n=60, noise_sd=0.05, seed=0)
    tr.fit(model, d, tr.TrainConfig(epochs=epochs, seed=0))
    return model


@pytest.mark.parametrize(
    "model", list(all_model_kinds()),
    ids=lambda m: m.architecture().get("variant", m.kind),
)
def test_round_trip_preserves_predictions(model, tmp_path):
    quick_fit(model)
    x = RNG.normal(size=(50, 2))
    before = model.predict_proba(x)
    path = tmp_path / "model.json"
    bd.ModelBundle(model, ("x1", "x2")).save(str(path))
    loaded = bd.load_bundle(str(path))
    after = loaded.predict_proba(x)
    np.testing.assert_allclose(after, before, rtol=1e-15, atol=0)
    assert loaded.kind == model.kind
    assert loaded.trained


def test_round_trip_is_exact_on_parameters(tmp_path):
    model = quick_fit(PwlModel(2, HeadConfig("realloc-III"), hidden=(5,), seed=9))
    path = tmp_path / "model.json"
    bd.ModelBundle(model, ("x1", "x2")).save(str(path))
    loaded = bd.load_bundle(str(path))
    for (name, a), (_, b) in zip(
        model.named_parameters(), loaded.model.named_parameters()
    ):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)


def test_save_is_byte_stable(tmp_path):
    model = quick_fit(LogisticModel(2, seed=0))
    b = bd.ModelBundle(model, ("x1", "x2"), metrics={"accuracy": 0.5})
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    b.save(str(first))
    b.save(str(second))
    assert first.read_bytes() == second.read_bytes()


def test_bundle_applies_standardization(tmp_path):
    d = standardize(make_circles(n=80, noise_sd=0.05, seed=1))
    model = LogisticModel(2, seed=0)
    tr.fit(model, d, tr.TrainConfig(epochs=3))
    b = bd.ModelBundle(model, d.feature_names, standardization=d.standardization)
    path = tmp_path / "model.json"
    b.save(str(path))
    loaded = bd.load_bundle(str(path))
    raw = RNG.normal(size=(10, 2)) * 3 + 1
    std = (raw - d.standardization.mean) / d.standardization.std
    np.testing.assert_allclose(
        loaded.predict_proba(raw), model.predict_proba(std), rtol=1e-15
    )
    np.testing.assert_array_equal(loaded.transform_features(raw), std)


def test_bundle_records_provenance(tmp_path):
    model = quick_fit(LogisticModel(2, seed=3))
    config = tr.TrainConfig(epochs=3, seed=12)
    b = bd.ModelBundle(
        model, ("x1", "x2"), train_config=config,
        metrics={"accuracy": 0.9, "auc": None}, seed=12,
    )
    path = tmp_path / "model.json"
    b.save(str(path))
    loaded = bd.load_bundle(str(path))
    assert loaded.train_config["epochs"] == 3
    assert loaded.metrics == {"accuracy": 0.9, "auc": None}
    assert loaded.seed == 12


def test_unknown_version_is_rejected_before_rebuild(tmp_path):
    model = quick_fit(LogisticModel(2))
    path = tmp_path / "model.json"
    bd.ModelBundle(model, ("x1", "x2")).save(str(path))
    payload = json.loads(path.read_text())
    payload["format_version"] = 99
    payload["kind"] = "garbage-kind"  # must never be reached
    path.write_text(json.dumps(payload))
    with pytest.raises(ConfigError, match="format"):
        bd.load_bundle(str(path))


def test_corrupt_payloads_are_rejected(tmp_path):
    model = quick_fit(LogisticModel(2))
    path = tmp_path / "model.json"
    bd.ModelBundle(model, ("x1", "x2")).save(str(path))

    payload = json.loads(path.read_text())
    del payload["parameters"]["head.bias"]
    broken = tmp_path / "missing-param.json"
    broken.write_text(json.dumps(payload))
    with pytest.raises(ConfigError, match="head.bias"):
        bd.load_bundle(str(broken))

    payload = json.loads(path.read_text())
    payload["parameters"]["head.weight"]["shape"] = [7]
    broken = tmp_path / "bad-shape.json"
    broken.write_text(json.dumps(payload))
    with pytest.raises(ConfigError):
        bd.load_bundle(str(broken))

    payload = json.loads(path.read_text())
    payload["parameters"]["head.weight"]["dtype"] = ">f4"
    broken = tmp_path / "bad-dtype.json"
    broken.write_text(json.dumps(payload))
    with pytest.raises(ConfigError, match="dtype"):
        bd.load_bundle(str(broken))

    notjson = tmp_path / "notjson.json"
    notjson.write_text("{nope")
    with pytest.raises(ConfigError, match="not a model bundle"):
        bd.load_bundle(str(notjson))

    payload = json.loads(path.read_text())
    payload["kind"] = "forest"
    broken = tmp_path / "bad-kind.json"
    broken.write_text(json.dumps(payload))
    with pytest.raises(ConfigError, match="kind"):
        bd.load_bundle(str(broken))


def test_bundle_validates_feature_names():
    model = LogisticModel(2)
    with pytest.raises(ConfigError):
        bd.ModelBundle(model, ("only-one",))


def test_loaded_bundle_supports_explanations(tmp_path):
    from pwlinear import explain as xp

    d = standardize(make_circles(n=60, noise_sd=0.05, seed=2))
    model = PwlModel(2, HeadConfig("realloc-I"), hidden=(5,), seed=1)
    tr.fit(model, d, tr.TrainConfig(epochs=3))
    b = bd.ModelBundle(model, d.feature_names, standardization=d.standardization)
    path = tmp_path / "model.json"
    b.save(str(path))
    loaded = bd.load_bundle(str(path))

    raw = RNG.normal(size=(4, 2))
    records = xp.explain_batch(loaded, raw)
    out = loaded.forward(raw)
    for r in records:
        np.testing.assert_allclose(
            r.contributions.sum() + r.bias, out.logit.data[r.sample_id], rtol=1e-12
        )
