"""Session-wide fixtures: the rings benchmark and models trained on it.

Training even a small model costs a second or two, so anything that
several test modules want to poke at is fitted once here. Fixtures that
time their own training return the wall-clock seconds alongside the
model; budget assertions live with the tests that care.
"""

import time

import pytest

from pwlinear import datasets as ds
from pwlinear import training as tr
from pwlinear.baselines import LogisticModel
from pwlinear.pwl import HeadConfig, PwlModel


@pytest.fixture(scope="session")
def circles_split():
    """Concentric rings, N=1000, factor 0.5, noise 0.05, 70/30 split.
    Train statistics are applied to the held-out part."""
    data = ds.make_circles(n=1000, factor=0.5, noise_sd=0.05, seed=11)
    train, test = ds.split(data, test_fraction=0.3, seed=11)
    train = ds.standardize(train)
    test = ds.apply_standardization(test, train.standardization)
    return train, test


@pytest.fixture(scope="session")
def trained_realloc(circles_split):
    """Clamp-free realloc-I fitted to the rings: (model, report, seconds)."""
    train, test = circles_split
    model = PwlModel(2, HeadConfig("realloc-I"), hidden=(64, 64), seed=3)
    config = tr.TrainConfig(epochs=60, seed=3)
    start = time.perf_counter()
    report = tr.fit(model, train, config, val=test)
    return model, report, time.perf_counter() - start


@pytest.fixture(scope="session")
def trained_logistic(circles_split):
    """Logistic baseline on the same split: (model, report, seconds)."""
    train, test = circles_split
    model = LogisticModel(2, seed=3)
    config = tr.TrainConfig(epochs=60, seed=3)
    start = time.perf_counter()
    report = tr.fit(model, train, config, val=test)
    return model, report, time.perf_counter() - start
