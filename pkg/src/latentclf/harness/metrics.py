"""Result rows and their CSV persistence.

One row per (model, training size, seed, method, rule) leg.  Floats are
written with full repr precision so that parsing an emitted file
reproduces the rows field-for-field.
"""

from __future__ import annotations

import csv
import os
from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class MetricsRow:
    dataset: str
    family: str
    structure: str
    n_per_class: int | None  # None means the full training pool
    seed: int
    method: str
    rule: str
    epoch_best: int
    dev_acc: float
    test_acc: float
    train_nll: float
    wall_seconds: float
    param_count: int
    note: str = ""

    def __post_init__(self):
        if not self.note:
            if not (0.0 <= self.dev_acc <= 1.0 and 0.0 <= self.test_acc <= 1.0):
                raise ValueError(f"accuracies must lie in [0, 1]: {self.dev_acc}, {self.test_acc}")
            if self.param_count <= 0:
                raise ValueError(f"param_count must be positive, got {self.param_count}")


FIELD_NAMES = [f.name for f in fields(MetricsRow)]
_INT_FIELDS = {"seed", "epoch_best", "param_count"}
_FLOAT_FIELDS = {"dev_acc", "test_acc", "train_nll", "wall_seconds"}


def _encode(value) -> str:
    if value is None:
        return "all"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIELD_NAMES)
        for row in rows:
            d = asdict(row)
            writer.writerow([_encode(d[name]) for name in FIELD_NAMES])


def append_metrics(path, row: MetricsRow) -> None:
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(FIELD_NAMES)
        d = asdict(row)
        writer.writerow([_encode(d[name]) for name in FIELD_NAMES])


def read_metrics(path) -> list[MetricsRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != FIELD_NAMES:
            raise ValueError(f"{path}: unexpected metrics header {header}")
        for record in reader:
            kwargs = {}
            for name, raw in zip(FIELD_NAMES, record):
                if name == "n_per_class":
                    kwargs[name] = None if raw == "all" else int(raw)
                elif name in _INT_FIELDS:
                    kwargs[name] = int(raw)
                elif name in _FLOAT_FIELDS:
                    kwargs[name] = float(raw)
                else:
                    kwargs[name] = raw
            rows.append(MetricsRow(**kwargs))
    return rows
