"""Reading and writing the on-disk formats used by the command-line tool.

Predictions CSV
    Header row required.  Columns ``true_label`` and either ``predicted_label``
    (hard decisions) or ``score`` (continuous output, higher means class 0).
    Labels are 0 or 1.

Curve CSV
    Header ``fpr,tpr`` followed by the ROC vertices in order.

Utility config (JSON)::

    {
      "utility": [[15, -335], [-35, 165]],
      "mixture": [{"weight": 0.5, "utility": [[...]]}, ...],
      "balance": 0.5,
      "seed": "0x2a",
      "experiment": {"pairs": 1000000, "sigmas": [0, 0.1], "prior": "uniform",
                     "workers": 1, "chunk_size": 65536}
    }

Every key is optional, but ``utility`` and ``mixture`` are mutually exclusive.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import UtilityMatrix, UtilityMixture, expected_utility_matrix
from .errors import ConfigError, ContractViolation, InputError
from .roc import RocCurve
from .sampling import parse_seed

__all__ = [
    "Predictions",
    "UtilityConfig",
    "read_predictions",
    "write_predictions",
    "read_curve_csv",
    "write_curve_csv",
    "load_utility_config",
    "parse_utility_config",
]

_EXPERIMENT_KEYS = {"pairs", "sigmas", "prior", "prior_sigma", "workers", "chunk_size", "metrics"}
_CONFIG_KEYS = {"utility", "mixture", "balance", "seed", "experiment"}


@dataclass(frozen=True)
class Predictions:
    """Parsed predictions file; ``kind`` is ``"labels"`` or ``"scores"``."""

    kind: str
    true_labels: np.ndarray
    values: np.ndarray
    source: str = ""


def _open_rows(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc.strerror})") from None
    rows = [(n, r) for n, r in enumerate(csv.reader(text.splitlines()), start=1)
            if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: file is empty")
    return path, rows


def _label(path, lineno, text) -> int:
    t = text.strip()
    if t not in ("0", "1"):
        raise InputError(f"{path}:{lineno}: label must be 0 or 1, got {text!r}")
    return int(t)


def _real(path, lineno, text) -> float:
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"{path}:{lineno}: expected a number, got {text!r}") from None
    if not np.isfinite(v):
        raise InputError(f"{path}:{lineno}: value must be finite, got {text!r}")
    return v


def read_predictions(path) -> Predictions:
    path, rows = _open_rows(path)
    lineno, header = rows[0]
    cols = [h.strip().lower() for h in header]
    if "true_label" not in cols:
        raise InputError(f"{path}:{lineno}: header must name a 'true_label' column")
    if "predicted_label" in cols:
        kind, other = "labels", cols.index("predicted_label")
    elif "score" in cols:
        kind, other = "scores", cols.index("score")
    else:
        raise InputError(f"{path}:{lineno}: header needs 'predicted_label' or 'score'")
    ti = cols.index("true_label")
    truth, values = [], []
    for lineno, row in rows[1:]:
        if len(row) != len(cols):
            raise InputError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(row)}")
        truth.append(_label(path, lineno, row[ti]))
        if kind == "labels":
            values.append(_label(path, lineno, row[other]))
        else:
            values.append(_real(path, lineno, row[other]))
    if not truth:
        raise InputError(f"{path}: no data rows after the header")
    dtype = int if kind == "labels" else float
    return Predictions(kind, np.array(truth, dtype=int), np.array(values, dtype=dtype), str(path))


def write_predictions(path, true_labels, predicted) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true_label", "predicted_label"])
        w.writerows(zip((int(v) for v in true_labels), (int(v) for v in predicted)))


def read_curve_csv(path) -> RocCurve:
    """Read an ROC curve; accepts filesystem paths and package resources."""
    if hasattr(path, "read_text") and not isinstance(path, (str, os.PathLike)):
        text, name = path.read_text(), str(path)
        rows = [(n, r) for n, r in enumerate(csv.reader(text.splitlines()), start=1) if r]
    else:
        name, rows = _open_rows(path)
    lineno, header = rows[0]
    if [h.strip().lower() for h in header] != ["fpr", "tpr"]:
        raise InputError(f"{name}:{lineno}: curve header must be 'fpr,tpr'")
    pts = []
    for lineno, row in rows[1:]:
        if len(row) != 2:
            raise InputError(f"{name}:{lineno}: expected 2 fields, got {len(row)}")
        pts.append((_real(name, lineno, row[0]), _real(name, lineno, row[1])))
    if len(pts) < 2:
        raise InputError(f"{name}: a curve needs at least two points")
    try:
        return RocCurve.from_points(pts)
    except ContractViolation as exc:
        raise InputError(f"{name}: {exc}") from None


def write_curve_csv(curve: RocCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        w.writerows((repr(f), repr(t)) for f, t in curve.points())


@dataclass(frozen=True)
class UtilityConfig:
    utility: UtilityMatrix | None = None
    mixture: UtilityMixture | None = None
    balance: float | None = None
    seed: int | None = None
    experiment: dict = field(default_factory=dict)

    def effective_utility(self) -> UtilityMatrix | None:
        """The single matrix to evaluate with (mixtures are averaged)."""
        if self.mixture is not None:
            return expected_utility_matrix(self.mixture)
        return self.utility


def _matrix(value, where: str) -> UtilityMatrix:
    try:
        U = UtilityMatrix(np.asarray(value, dtype=float))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if U.n_classes != 2:
        raise ConfigError(f"{where}: only 2x2 utility matrices are supported")
    if not U.is_feasible:
        raise ConfigError(f"{where}: infeasible matrix (need U00 >= U10 and U11 >= U01)")
    return U


def parse_utility_config(doc: dict, source: str = "<config>") -> UtilityConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
    if "utility" in doc and "mixture" in doc:
        raise ConfigError(f"{source}: give either 'utility' or 'mixture', not both")
    utility = _matrix(doc["utility"], f"{source}: utility") if "utility" in doc else None
    mixture = None
    if "mixture" in doc:
        comps = doc["mixture"]
        if not isinstance(comps, list) or not comps:
            raise ConfigError(f"{source}: mixture must be a non-empty list")
        parts = []
        for k, c in enumerate(comps):
            if not isinstance(c, dict) or set(c) != {"weight", "utility"}:
                raise ConfigError(f"{source}: mixture[{k}] needs exactly 'weight' and 'utility'")
            parts.append((c["weight"], _matrix(c["utility"], f"{source}: mixture[{k}]")))
        try:
            mixture = UtilityMixture(tuple(parts))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}: {exc}") from None
    balance = doc.get("balance")
    if balance is not None:
        if isinstance(balance, bool) or not isinstance(balance, (int, float)) or not 0 < balance < 1:
            raise ConfigError(f"{source}: balance must be a number in (0, 1)")
        balance = float(balance)
    seed = None
    if "seed" in doc:
        try:
            seed = parse_seed(doc["seed"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}: {exc}") from None
    experiment = doc.get("experiment", {})
    if not isinstance(experiment, dict) or set(experiment) - _EXPERIMENT_KEYS:
        raise ConfigError(f"{source}: experiment must be an object with keys "
                          f"from {sorted(_EXPERIMENT_KEYS)}")
    return UtilityConfig(utility, mixture, balance, seed, dict(experiment))


def load_utility_config(path) -> UtilityConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    return parse_utility_config(doc, str(path))
