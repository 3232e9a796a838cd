"""File formats: dataset CSV, long-format prediction CSV, long-format
results CSV, key=value scenario files, and report serialization.

All floats are written with 17 significant digits (%.17g) so a write/read
cycle reproduces every value bit for bit.  Schema violations raise
ValidationError naming the line number.
"""

from __future__ import annotations

import ast
import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .core import (
    CompetingRisksDataset,
    MetricReport,
    PredictionSet,
    StepFunction,
    ValidationError,
)
from .simulator import SimScenario


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


# ---------------------------------------------------------------- datasets


def write_dataset_csv(dataset: CompetingRisksDataset, path) -> None:
    """Header id,time,event[,x1,...,xp]; one row per subject in row order."""
    p = dataset.covariate_dim
    header = ["id", "time", "event"] + [f"x{j + 1}" for j in range(p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(dataset.n):
            row = [str(dataset.ids[i]), _fmt(dataset.time[i]), str(int(dataset.event[i]))]
            if p:
                row.extend(_fmt(v) for v in dataset.covariates[i])
            w.writerow(row)


def read_dataset_csv(path, n_causes: int | None = None) -> CompetingRisksDataset:
    """Parse a dataset CSV; n_causes defaults to the largest event code seen
    (at least 1)."""
    ids: list[str] = []
    times: list[float] = []
    events: list[int] = []
    covs: list[list[float]] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header[:3] != ["id", "time", "event"]:
            raise ValidationError(f"{path}: line 1: header must start with id,time,event")
        expected_x = [f"x{j + 1}" for j in range(len(header) - 3)]
        if header[3:] != expected_x:
            raise ValidationError(
                f"{path}: line 1: covariate columns must be named x1..xp in order"
            )
        p = len(header) - 3
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            ids.append(row[0])
            try:
                times.append(float(row[1]))
            except ValueError:
                raise ValidationError(
                    f"{path}: line {lineno}: bad time {row[1]!r}"
                ) from None
            try:
                events.append(int(row[2]))
            except ValueError:
                raise ValidationError(
                    f"{path}: line {lineno}: bad event code {row[2]!r}"
                ) from None
            if p:
                try:
                    covs.append([float(v) for v in row[3:]])
                except ValueError:
                    raise ValidationError(
                        f"{path}: line {lineno}: bad covariate value"
                    ) from None
    if not ids:
        raise ValidationError(f"{path}: no data rows")
    if len(set(ids)) != len(ids):
        dup = next(i for k, i in enumerate(ids) if i in ids[:k])
        raise ValidationError(f"{path}: duplicate subject id {dup!r}")
    if n_causes is None:
        n_causes = max(max(events), 1)
    return CompetingRisksDataset.from_arrays(
        ids, times, events, covs if covs else None, n_causes
    )


# -------------------------------------------------------------- predictions


def write_predictions_csv(
    predictions: PredictionSet, path, id_order: Sequence[Any] | None = None
) -> None:
    """Long format id,time,cif; rows grouped by id with increasing times.

    id_order fixes the group order (e.g. dataset row order); ids not listed
    are appended in insertion order.
    """
    order: list[Any] = []
    seen = set()
    for sid in list(id_order or []) + list(predictions.curves):
        if sid not in seen and sid in predictions.curves:
            seen.add(sid)
            order.append(sid)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "time", "cif"])
        for sid in order:
            curve = predictions.curves[sid]
            for t, v in zip(curve.grid, curve.values):
                w.writerow([str(sid), _fmt(t), _fmt(v)])


def read_predictions_csv(path, cause: int = 1) -> PredictionSet:
    """Parse a long-format predictions CSV into per-subject step curves.

    Rows must be grouped by id (an id may not reappear after its group
    ends) with strictly increasing times inside each group; the implicit
    anchor before the first knot is 0.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        if [h.strip() for h in header] != ["id", "time", "cif"]:
            raise ValidationError(f"{path}: line 1: header must be id,time,cif")
        curves: dict[str, StepFunction] = {}
        cur_id: str | None = None
        cur_t: list[float] = []
        cur_v: list[float] = []

        def close_group():
            if cur_id is not None:
                curves[cur_id] = StepFunction(
                    np.array(cur_t), np.array(cur_v), 0.0, "increasing"
                )

        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValidationError(
                    f"{path}: line {lineno}: expected 3 fields, got {len(row)}"
                )
            sid = row[0]
            try:
                t = float(row[1])
                v = float(row[2])
            except ValueError:
                raise ValidationError(
                    f"{path}: line {lineno}: bad numeric value"
                ) from None
            if sid != cur_id:
                if sid in curves:
                    raise ValidationError(
                        f"{path}: line {lineno}: id {sid!r} reappears after its group"
                    )
                try:
                    close_group()
                except ValidationError as exc:
                    raise ValidationError(f"{path}: near line {lineno}: {exc}") from None
                cur_id, cur_t, cur_v = sid, [], []
            elif cur_t and t <= cur_t[-1]:
                raise ValidationError(
                    f"{path}: line {lineno}: times for id {sid!r} must be strictly increasing"
                )
            cur_t.append(t)
            cur_v.append(v)
        try:
            close_group()
        except ValidationError as exc:
            raise ValidationError(f"{path}: last group: {exc}") from None
    if not curves:
        raise ValidationError(f"{path}: no data rows")
    return PredictionSet(cause, curves)


# ------------------------------------------------------------------ results


@dataclasses.dataclass(frozen=True)
class ResultRow:
    """One long-format output record."""

    scenario_key: str
    replicate: int
    metric: str
    value: float


def write_results_csv(rows: Iterable[ResultRow], path) -> None:
    """Long format scenario_key,replicate,metric,value."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario_key", "replicate", "metric", "value"])
        for r in rows:
            w.writerow([r.scenario_key, str(r.replicate), r.metric, _fmt(r.value)])


def read_results_csv(path) -> list[ResultRow]:
    rows: list[ResultRow] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != [
            "scenario_key", "replicate", "metric", "value",
        ]:
            raise ValidationError(
                f"{path}: line 1: header must be scenario_key,replicate,metric,value"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValidationError(f"{path}: line {lineno}: expected 4 fields")
            try:
                rows.append(ResultRow(row[0], int(row[1]), row[2], float(row[3])))
            except ValueError:
                raise ValidationError(
                    f"{path}: line {lineno}: bad replicate or value"
                ) from None
    return rows


# ----------------------------------------------------------------- reports


def report_to_mapping(report: MetricReport, extra: Mapping[str, Any] | None = None) -> dict:
    out = dict(report.to_dict())
    if extra:
        out.update(extra)
    return out


def write_report(mapping: Mapping[str, Any], path, fmt: str = "csv") -> None:
    """Two-column key,value CSV or a flat JSON object."""
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dict(mapping), fh, indent=2, sort_keys=False)
            fh.write("\n")
    elif fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "value"])
            for k, v in mapping.items():
                if isinstance(v, float):
                    w.writerow([k, _fmt(v)])
                else:
                    w.writerow([k, str(v)])
    else:
        raise ValidationError(f"unknown report format {fmt!r}")


# ------------------------------------------------------------ scenario files

_SCENARIO_FIELDS = {f.name: f for f in dataclasses.fields(SimScenario)}


def parse_scenario_text(text: str, source: str = "<scenario>") -> SimScenario:
    """Flat key = value config; keys mirror the scenario fields one-to-one.

    Values are Python literals (numbers, tuples/lists for the coefficient
    vectors, None to unset).  Blank lines and # comments are ignored.
    """
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}: line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _SCENARIO_FIELDS:
            known = ", ".join(sorted(_SCENARIO_FIELDS))
            raise ValidationError(
                f"{source}: line {lineno}: unknown key {key!r} (known: {known})"
            )
        if key in values:
            raise ValidationError(f"{source}: line {lineno}: duplicate key {key!r}")
        try:
            values[key] = ast.literal_eval(val.strip())
        except (ValueError, SyntaxError):
            raise ValidationError(
                f"{source}: line {lineno}: bad literal {val.strip()!r}"
            ) from None
    # setting lambda2 explicitly should not fight the default p_target
    if "lambda2" in values and values["lambda2"] is not None and "p_target" not in values:
        values["p_target"] = None
    return SimScenario(**values)


def parse_scenario_file(path) -> SimScenario:
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"), str(path))


def scenario_to_text(scenario: SimScenario) -> str:
    lines = []
    for f in dataclasses.fields(SimScenario):
        lines.append(f"{f.name} = {getattr(scenario, f.name)!r}")
    return "\n".join(lines) + "\n"
