"""Parameter sweeps over a base configuration, written as long-format CSV."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .config import SystemConfig, config_from_dict, config_to_dict, read_yaml, set_path
from .errors import ConfigError
from .pipeline import evaluate, known_metric

CSV_HEADER = ("experiment", "param1", "value1", "param2", "value2", "metric", "value", "reason")


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter.  ``paths`` are set together to each value."""

    paths: tuple[str, ...]
    values: tuple[Any, ...]

    @property
    def label(self) -> str:
        return "+".join(self.paths)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    base: dict  # normalized config mapping
    sweep: tuple[SweepAxis, ...]
    outputs: tuple[str, ...]

    def points(self):
        """Sweep points in output order; the first axis varies slowest."""
        return itertools.product(*(axis.values for axis in self.sweep))

    def config_at(self, point) -> SystemConfig:
        data = self.base
        for axis, value in zip(self.sweep, point):
            for path in axis.paths:
                data = set_path(data, path, value)
        return config_from_dict(data)


def _axis_values(raw: Any, where: str) -> tuple:
    if isinstance(raw, dict):
        if set(raw) != {"start", "stop", "num"}:
            raise ConfigError(f"{where}: a range needs exactly start, stop and num")
        num = raw["num"]
        if not isinstance(num, int) or num < 1:
            raise ConfigError(f"{where}: num must be a positive integer")
        return tuple(round(float(v), 12) for v in np.linspace(raw["start"], raw["stop"], num))
    if not isinstance(raw, list):
        raise ConfigError(f"{where} must be a list or a {{start, stop, num}} range")
    if not raw:
        raise ConfigError(f"{where} is empty")
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise ConfigError(f"{where} holds a non-scalar value {v!r}")
    return tuple(raw)


def experiment_from_dict(data: Any, base_dir: Path | None = None) -> ExperimentSpec:
    if not isinstance(data, dict):
        raise ConfigError("experiment file must be a mapping")
    unknown = sorted(set(data) - {"name", "base", "overrides", "sweep", "outputs"})
    if unknown:
        raise ConfigError(f"experiment has unknown keys {', '.join(unknown)}")
    for key in ("name", "base", "sweep", "outputs"):
        if key not in data:
            raise ConfigError(f"experiment is missing '{key}'")
    name = data["name"]
    if not isinstance(name, str) or not name:
        raise ConfigError("experiment name must be a nonempty string")

    base_raw = data["base"]
    if isinstance(base_raw, str):
        path = Path(base_raw)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        base_raw = read_yaml(path)
    # normalize so every optional field exists and can be swept
    base = config_to_dict(config_from_dict(base_raw))
    overrides = data.get("overrides") or {}
    if not isinstance(overrides, dict):
        raise ConfigError("overrides must map dotted paths to values")
    for path, value in overrides.items():
        base = set_path(base, path, value)
    config_from_dict(base)

    sweep_raw = data["sweep"]
    if not isinstance(sweep_raw, list) or not 1 <= len(sweep_raw) <= 2:
        raise ConfigError("sweep must list one or two parameters")
    axes = []
    for k, item in enumerate(sweep_raw, start=1):
        where = f"sweep[{k}]"
        if not isinstance(item, dict) or set(item) != {"path", "values"}:
            raise ConfigError(f"{where} needs exactly 'path' and 'values'")
        paths = item["path"]
        paths = (paths,) if isinstance(paths, str) else tuple(paths) if isinstance(paths, list) else None
        if not paths or not all(isinstance(p, str) for p in paths):
            raise ConfigError(f"{where}.path must be a dotted path or a list of them")
        values = _axis_values(item["values"], f"{where}.values")
        for p in paths:
            set_path(base, p, values[0])  # path must exist
        axes.append(SweepAxis(paths, values))

    outputs = data["outputs"]
    if not isinstance(outputs, list) or not outputs:
        raise ConfigError("outputs must be a nonempty list of metric names")
    n_users = len(base["scenario"]["users"])
    bad = [m for m in outputs if not (isinstance(m, str) and known_metric(m, n_users))]
    if bad:
        raise ConfigError(f"unknown metrics: {', '.join(map(str, bad))}")

    spec = ExperimentSpec(name=name, base=base, sweep=tuple(axes), outputs=tuple(outputs))
    # every sweep value must produce a well-formed configuration
    for point in spec.points():
        spec.config_at(point)
    return spec


def load_experiment(path) -> ExperimentSpec:
    path = Path(path)
    return experiment_from_dict(read_yaml(path), base_dir=path.parent)


@dataclass(frozen=True)
class SweepRow:
    experiment: str
    param1: str
    value1: Any
    param2: str
    value2: Any
    metric: str
    value: float
    reason: str


def run_sweep(spec: ExperimentSpec) -> list[SweepRow]:
    rows = []
    labels = [axis.label for axis in spec.sweep] + [""]
    for point in spec.points():
        results = evaluate(spec.config_at(point), spec.outputs)
        padded = tuple(point) + ("",)
        for metric in spec.outputs:
            value, reason = results[metric]
            rows.append(SweepRow(spec.name, labels[0], padded[0], labels[1], padded[1], metric, value, reason))
    return rows


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return "NaN" if math.isnan(value) else repr(value)
    return str(value)


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [r.experiment, r.param1, _fmt(r.value1), r.param2, _fmt(r.value2), r.metric, _fmt(r.value), r.reason]
        )
    return buf.getvalue()


def series(rows: list[SweepRow], metric: str, value2=None) -> tuple[list, list[float]]:
    """x values and metric values along the first axis, optionally at one
    fixed second-axis value."""
    xs, ys = [], []
    for r in rows:
        if r.metric == metric and (value2 is None or r.value2 == value2):
            xs.append(r.value1)
            ys.append(r.value)
    return xs, ys
