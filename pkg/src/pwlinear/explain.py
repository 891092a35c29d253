"""Per-sample explanations and the exports used to inspect a trained model.

Everything here reads a fitted model; nothing trains. The grid helpers
assume two features, which is where decision surfaces and weight-angle
maps can be drawn at all.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .fileio import atomic_write
from .pwl import extract_contributions, xi_angle_map

GRID_DIGITS = "%.9g"


@dataclass(frozen=True)
class ExplanationRecord:
    """Why one sample got its score: the weights the model generated for
    it, each feature's additive share of the logit, and the shared bias.
    ``rho`` carries the reallocated features when the head has them.
    """

    sample_id: int
    y_hat: float
    label: float | None
    xi: np.ndarray
    contributions: np.ndarray
    bias: float
    rho: np.ndarray | None


@dataclass(frozen=True)
class BoundaryGrid:
    """Scalar field sampled on a regular grid, ``values[iy][ix]`` with both
    axes inclusive of their endpoints."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    resolution: int
    value_name: str
    values: np.ndarray

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(self.xmin, self.xmax, self.resolution),
            np.linspace(self.ymin, self.ymax, self.resolution),
        )


def _check_ready(model) -> None:
    if not getattr(model, "trained", False):
        raise ConfigError(f"{model.kind} model has not been trained")


def _as_features(data):
    if hasattr(data, "X"):
        return data.X, data.t
    return np.asarray(data, dtype=np.float64), None


def explain_batch(model, data) -> list[ExplanationRecord]:
    """One record per sample, from a single forward pass.

    Weights and contributions are expressed in the coordinates the model
    computes in; a predictor that standardizes its inputs exposes that
    through ``transform_features``.
    """
    _check_ready(model)
    x, t = _as_features(data)
    x_model = (
        model.transform_features(x)
        if hasattr(model, "transform_features") else x
    )
    out = model.forward(x)
    if out.xi is None:
        raise ConfigError(f"{model.kind} does not generate per-sample weights")
    w = None if model.w is None else model.w.data
    c = extract_contributions(out, x_model, w)
    bias = float(model.b.data) if model.b is not None else 0.0
    xi = out.xi.data
    rho = None if out.rho is None else out.rho.data
    y = out.y_hat.data
    return [
        ExplanationRecord(
            sample_id=i,
            y_hat=float(y[i]),
            label=None if t is None else float(t[i]),
            xi=xi[i],
            contributions=c[i],
            bias=bias,
            rho=None if rho is None else rho[i],
        )
        for i in range(x.shape[0])
    ]


def global_importance(records, feature_names
                      ) -> list[tuple[str, float, float, float]]:
    """Features ranked by mean absolute share of the logit, largest first;
    ties keep the original feature order.

    Each entry is (name, mean of |contribution|, mean contribution,
    population standard deviation of the contribution). The signed mean
    tells direction, the spread tells how stable the role is.
    """
    records = list(records)
    if not records:
        raise ConfigError("no explanation records to aggregate")
    names = tuple(feature_names)
    c = np.array([r.contributions for r in records])
    if c.shape[1] != len(names):
        raise ShapeError(
            f"contributions {c.shape} do not match {len(names)} features"
        )
    scores = np.abs(c).mean(axis=0)
    signed = c.mean(axis=0)
    spread = c.std(axis=0)
    order = np.argsort(-scores, kind="stable")
    return [
        (names[i], float(scores[i]), float(signed[i]), float(spread[i]))
        for i in order
    ]


def _grid_points(xmin, xmax, ymin, ymax, resolution):
    if not (xmin < xmax and ymin < ymax):
        raise ConfigError(
            f"grid bounds out of order: x [{xmin}, {xmax}], y [{ymin}, {ymax}]"
        )
    if resolution < 2:
        raise ConfigError(f"grid resolution must be at least 2, got {resolution}")
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    points = np.column_stack([
        np.tile(xs, resolution),
        np.repeat(ys, resolution),
    ])
    return xs, ys, points


def _check_planar(model) -> None:
    if getattr(model, "n_features", None) != 2:
        raise ShapeError("grids are defined for two-feature models only")


def boundary_grid(model, xmin: float, xmax: float, ymin: float, ymax: float,
                  resolution: int = 100) -> BoundaryGrid:
    """Predicted probability over an inclusive rectangular grid."""
    _check_ready(model)
    _check_planar(model)
    _, _, points = _grid_points(xmin, xmax, ymin, ymax, resolution)
    values = model.predict_proba(points).reshape(resolution, resolution)
    return BoundaryGrid(
        xmin=float(xmin), xmax=float(xmax), ymin=float(ymin), ymax=float(ymax),
        resolution=resolution, value_name="p", values=values,
    )


def angle_grid(model, xmin: float, xmax: float, ymin: float, ymax: float,
               resolution: int = 100) -> BoundaryGrid:
    """Direction of the generated weight vector over the same grid, in
    radians. Shows where the model swings its local line around."""
    _check_ready(model)
    _check_planar(model)
    _, _, points = _grid_points(xmin, xmax, ymin, ymax, resolution)
    out = model.forward(points)
    if out.xi is None:
        raise ConfigError(f"{model.kind} does not generate per-sample weights")
    angles = xi_angle_map(out.xi.data).reshape(resolution, resolution)
    return BoundaryGrid(
        xmin=float(xmin), xmax=float(xmax), ymin=float(ymin), ymax=float(ymax),
        resolution=resolution, value_name="angle", values=angles,
    )


def rho_scatter(model, data) -> tuple[np.ndarray, np.ndarray | None]:
    """Reallocated coordinates of every sample, with labels when known.

    In a well-trained reallocation model these collapse toward a linearly
    separable arrangement, which is the whole trick.
    """
    _check_ready(model)
    x, t = _as_features(data)
    out = model.forward(x)
    if out.rho is None:
        raise ConfigError(f"{model.kind} does not reallocate features")
    return out.rho.data, t


# --------------------------------------------------------------- writers


def write_explanations_csv(records, feature_names, path: str) -> None:
    """Spreadsheet view: one row per sample, weights then contributions."""
    names = tuple(feature_names)

    def emit(handle):
        head = ["sample_id", "y_hat", "label"]
        head += [f"xi_{n}" for n in names]
        head += [f"c_{n}" for n in names]
        head.append("bias")
        handle.write(",".join(head) + "\n")
        for r in records:
            row = [str(r.sample_id), repr(r.y_hat),
                   "" if r.label is None else str(int(r.label))]
            row += [repr(float(v)) for v in r.xi]
            row += [repr(float(v)) for v in r.contributions]
            row.append(repr(r.bias))
            handle.write(",".join(row) + "\n")

    atomic_write(path, emit)


def write_grid_csv(grid: BoundaryGrid, path: str) -> None:
    """Long form, one grid cell per line, y varying slowest."""
    xs, ys = grid.axes()

    def emit(handle):
        handle.write(f"x,y,{grid.value_name}\n")
        for iy in range(grid.resolution):
            for ix in range(grid.resolution):
                handle.write(
                    f"{GRID_DIGITS % xs[ix]},{GRID_DIGITS % ys[iy]},"
                    f"{GRID_DIGITS % grid.values[iy, ix]}\n"
                )

    atomic_write(path, emit)


def write_grid_json(grid: BoundaryGrid, path: str) -> None:
    """Matrix form with the axis metadata needed to redraw it."""
    payload = {
        "xmin": grid.xmin, "xmax": grid.xmax,
        "ymin": grid.ymin, "ymax": grid.ymax,
        "resolution": grid.resolution,
        "value": grid.value_name,
        "values": [
            [float(GRID_DIGITS % v) for v in row] for row in grid.values
        ],
    }

    def emit(handle):
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")

    atomic_write(path, emit)


def write_scatter_csv(rho: np.ndarray, labels: np.ndarray | None,
                      path: str) -> None:
    """Reallocated coordinates, one sample per line."""
    rho = np.asarray(rho)

    def emit(handle):
        head = [f"rho_{i + 1}" for i in range(rho.shape[1])]
        if labels is not None:
            head.append("label")
        handle.write(",".join(head) + "\n")
        for i in range(rho.shape[0]):
            row = [repr(float(v)) for v in rho[i]]
            if labels is not None:
                row.append(str(int(labels[i])))
            handle.write(",".join(row) + "\n")

    atomic_write(path, emit)


def write_importance_csv(ranking, path: str) -> None:
    """Global feature ranking by mean absolute contribution."""

    def emit(handle):
        handle.write(
            "feature,mean_abs_contribution,mean_contribution,sd_contribution\n"
        )
        for name, score, signed, spread in ranking:
            handle.write(
                f"{name},{repr(score)},{repr(signed)},{repr(spread)}\n"
            )

    atomic_write(path, emit)
