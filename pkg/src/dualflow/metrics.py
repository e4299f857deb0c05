"""Evaluation metrics: MSE, R-squared, mean baseline, variance of squared
differences, and per-road-subset report tables.

All normalizations are population style (1/|E|).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .network import Edge, RoadNetwork
from .scenarios import PolicyScenario
from .oracle import POLICY_CLASSES


class DegenerateVarianceError(ValueError):
    """Total sum of squares is zero; R-squared is undefined."""


def _check(y, y_hat):
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    if y.size < 1:
        raise ValueError("empty input")
    return y, y_hat


def mse(y, y_hat) -> float:
    y, y_hat = _check(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def baseline_mse(y) -> float:
    """MSE of the mean predictor; identical to SS_tot."""
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean((y - y.mean()) ** 2))


def r_squared(y, y_hat) -> float:
    y, y_hat = _check(y, y_hat)
    if y.size < 2:
        raise ValueError("need at least 2 values for R^2")
    ss_tot = baseline_mse(y)
    if ss_tot <= 0:
        raise DegenerateVarianceError("zero variance in observed values")
    return 1.0 - mse(y, y_hat) / ss_tot


def variance_squared_diff(y) -> float:
    """Variance of the per-edge squared deviations from the mean change."""
    y = np.asarray(y, dtype=np.float64)
    d = (y - y.mean()) ** 2
    return float(np.mean((d - d.mean()) ** 2))


# --- per-road-subset breakdowns -------------------------------------------

@dataclass(frozen=True)
class EdgeSubsetFilter:
    name: str
    predicate: Callable[[Edge, PolicyScenario], bool]

    def select(self, net: RoadNetwork, scenario: PolicyScenario) -> np.ndarray:
        return np.array([self.predicate(e, scenario) for e in net.edges
                         if not e.is_loop], dtype=bool)


def _reduced(e: Edge, s: PolicyScenario) -> bool:
    return e.district in s.districts and e.highway_class in POLICY_CLASSES


def standard_subset_filters() -> list[EdgeSubsetFilter]:
    """The standard report rows: all roads, per class, higher-order vs other,
    and reduced vs not-reduced splits."""
    pst = set(POLICY_CLASSES)
    return [
        EdgeSubsetFilter("All roads", lambda e, s: True),
        EdgeSubsetFilter("Roads of type primary",
                         lambda e, s: e.highway_class == "primary"),
        EdgeSubsetFilter("Roads of type secondary",
                         lambda e, s: e.highway_class == "secondary"),
        EdgeSubsetFilter("Roads of type tertiary",
                         lambda e, s: e.highway_class == "tertiary"),
        EdgeSubsetFilter("Roads of type primary, secondary or tertiary",
                         lambda e, s: e.highway_class in pst),
        EdgeSubsetFilter("Roads of types other than primary, secondary, tertiary",
                         lambda e, s: e.highway_class not in pst),
        EdgeSubsetFilter("Roads with capacity reduction", _reduced),
        EdgeSubsetFilter("Roads without capacity reduction",
                         lambda e, s: not _reduced(e, s)),
        EdgeSubsetFilter("Roads of types primary, secondary, tertiary, "
                         "and capacity reduction",
                         lambda e, s: e.highway_class in pst and _reduced(e, s)),
        EdgeSubsetFilter("Roads of types primary, secondary, tertiary, "
                         "and no capacity reduction",
                         lambda e, s: e.highway_class in pst and not _reduced(e, s)),
    ]


@dataclass
class EvalRow:
    subset: str
    length_km: float
    variance: float
    baseline: float
    model: float
    r2: float
    n_scenarios: int
    flagged: bool = False


@dataclass
class EvalReport:
    rows: list[EvalRow]

    COLUMNS = ("subset", "length_km", "variance", "mse_baseline",
               "mse_model", "r2")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS + ("n_scenarios", "flagged"))
            for r in self.rows:
                writer.writerow([r.subset, repr(r.length_km), repr(r.variance),
                                 repr(r.baseline), repr(r.model), repr(r.r2),
                                 r.n_scenarios, r.flagged])

    def to_text(self) -> str:
        header = ["Road subset", "Length (km)", "Variance", "MSE: Baseline",
                  "MSE: Model", "R^2"]
        table = [header]
        for r in self.rows:
            name = r.subset + (" [flagged]" if r.flagged else "")
            table.append([name, f"{r.length_km:.1f}", f"{r.variance:.4g}",
                          f"{r.baseline:.4g}", f"{r.model:.4g}", f"{r.r2:.3f}"])
        widths = [max(len(row[i]) for row in table) for i in range(len(header))]
        lines = []
        for i, row in enumerate(table):
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
            if i == 0:
                lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
        return "\n".join(lines)


def evaluate_subsets(net: RoadNetwork,
                     scenarios: list[PolicyScenario],
                     y_true: dict[str, np.ndarray],
                     y_pred: dict[str, np.ndarray],
                     filters: list[EdgeSubsetFilter] | None = None) -> EvalReport:
    """Per-filter rows of per-scenario metrics averaged over scenarios.

    ``y_true`` / ``y_pred`` map scenario id to per-edge change vectors in
    dual-node order (non-loop edges, declaration order). Scenarios where a
    filter selects no edges, or where the selected targets have zero
    variance, are skipped for that row and the row is flagged.
    """
    missing = [s.id for s in scenarios if s.id not in y_pred]
    if missing:
        raise ValueError(f"predictions missing for scenarios: {missing}")
    filters = filters if filters is not None else standard_subset_filters()
    lengths = np.array([e.length for e in net.edges if not e.is_loop])

    rows = []
    for f in filters:
        per_scen = []
        kms = []
        flagged = False
        for s in scenarios:
            mask = f.select(net, s)
            if not mask.any():
                flagged = True
                continue
            y = np.asarray(y_true[s.id])[mask]
            yh = np.asarray(y_pred[s.id])[mask]
            sstot = baseline_mse(y)
            if sstot <= 0 or y.size < 2:
                flagged = True
                continue
            per_scen.append((variance_squared_diff(y), sstot, mse(y, yh),
                             r_squared(y, yh)))
            kms.append(lengths[mask].sum() / 1000.0)
        if per_scen:
            var, base, model, r2 = np.mean(np.asarray(per_scen), axis=0)
            rows.append(EvalRow(f.name, float(np.mean(kms)), float(var),
                                float(base), float(model), float(r2),
                                len(per_scen), flagged))
        else:
            rows.append(EvalRow(f.name, 0.0, float("nan"), float("nan"),
                                float("nan"), float("nan"), 0, True))
    return EvalReport(rows)
