"""CSV and provenance persistence.

All numbers are written with 17 significant digits so that doubles
round-trip exactly. Units are volts for ``x`` and radians for phases.
Readers skip leading lines that start with ``#``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bayes import PosteriorSummary
from .campaign import CampaignResult, CampaignRow
from .errors import DataError
from .functions import SampledFunction
from .simulate import CountRecord, ResponseModel

CAMPAIGN_HEADER = ("probe", "n_resources", "method", "n_s", "delta2", "delta2_err")
ESTIMATE_HEADER = ("x", "phi_b", "var_phi", "vis_b", "var_vis", "n_shots")


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    rows = [[c.strip() for c in r] for r in reader]
    for i, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}: row {i} has {len(r)} fields, header has {len(header)}")
    return header, rows


def _column(path, header, rows, name, cast=float):
    idx = header.index(name)
    try:
        return [cast(r[idx]) for r in rows]
    except ValueError as exc:
        raise DataError(f"{path}: bad value in column '{name}': {exc}") from None


def write_sampled_function(path, fn: SampledFunction) -> None:
    if fn.variances is None:
        _write_rows(path, ("x", "phi"), zip(fn.xs, fn.values))
    else:
        _write_rows(path, ("x", "phi", "var_phi"), zip(fn.xs, fn.values, fn.variances))


def read_sampled_function(path, label: str | None = None) -> SampledFunction:
    """Read ``x,phi[,var_phi]``; estimate files (``phi_b`` column) are accepted too."""
    header, rows = _read_rows(path)
    phi_col = "phi" if "phi" in header else "phi_b" if "phi_b" in header else None
    if "x" not in header or phi_col is None:
        raise DataError(f"{path}: expected columns x,phi[,var_phi], got {','.join(header)}")
    xs = _column(path, header, rows, "x")
    vals = _column(path, header, rows, phi_col)
    var = _column(path, header, rows, "var_phi") if "var_phi" in header else None
    return SampledFunction(xs, vals, var, label=Path(path).stem if label is None else label)


def read_response_csv(path, domain=None, visibility=None) -> ResponseModel:
    """Sampled response model from ``x,phi[,vis]``.

    A ``vis`` column is used unless ``visibility`` overrides it.
    """
    header, rows = _read_rows(path)
    if header[:2] != ["x", "phi"] or not set(header) <= {"x", "phi", "vis"}:
        raise DataError(f"{path}: expected header x,phi[,vis], got {','.join(header)}")
    xs = _column(path, header, rows, "x")
    phi = SampledFunction(xs, _column(path, header, rows, "phi"), label="response")
    if visibility is None:
        if "vis" in header:
            visibility = SampledFunction(xs, _column(path, header, rows, "vis"), label="vis")
        else:
            from .simulate import DEFAULT_VISIBILITY

            visibility = DEFAULT_VISIBILITY
    return ResponseModel.sampled(phi, visibility=visibility, domain=domain)


def count_header(n_settings: int) -> tuple[str, ...]:
    return ("x", "n_shots", *(f"n_{j}" for j in range(n_settings)))


def write_counts(path, records: Sequence[CountRecord]) -> None:
    if not records:
        raise DataError("no records to write")
    n_set = records[0].counts.size
    _write_rows(path, count_header(n_set), ([r.x, r.n_shots, *r.counts.tolist()] for r in records))


def read_counts(path) -> list[CountRecord]:
    header, rows = _read_rows(path)
    count_cols = [h for h in header if h.startswith("n_") and h != "n_shots"]
    if header[:2] != ["x", "n_shots"] or tuple(header) != count_header(len(count_cols)):
        raise DataError(f"{path}: expected header x,n_shots,n_0,...; got {','.join(header)}")
    out = []
    for i, r in enumerate(rows, start=2):
        try:
            out.append(CountRecord(float(r[0]), [int(c) for c in r[2:]], int(r[1])))
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: {exc}") from None
    return out


def write_estimates(path_or_file, records: Sequence[CountRecord], summaries: Sequence[PosteriorSummary]) -> None:
    rows = [
        (r.x, s.phi_b, s.var_phi, s.vis_b, s.var_vis, r.n_shots)
        for r, s in zip(records, summaries)
    ]
    if hasattr(path_or_file, "write"):
        writer = csv.writer(path_or_file, lineterminator="\n")
        writer.writerow(ESTIMATE_HEADER)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    else:
        _write_rows(path_or_file, ESTIMATE_HEADER, rows)


def read_estimates(path) -> tuple[list[float], list[PosteriorSummary], list[int]]:
    header, rows = _read_rows(path)
    if tuple(header) != ESTIMATE_HEADER:
        raise DataError(f"{path}: expected header {','.join(ESTIMATE_HEADER)}")
    xs = _column(path, header, rows, "x")
    summaries = [
        PosteriorSummary(float(r[1]), float(r[3]), float(r[2]), float(r[4])) for r in rows
    ]
    shots = _column(path, header, rows, "n_shots", int)
    return xs, summaries, shots


def write_campaign_csv(path, rows: Sequence[CampaignRow]) -> None:
    _write_rows(
        path,
        CAMPAIGN_HEADER,
        ((r.probe, r.n_resources, r.method, r.n_s, r.delta2_mean, r.delta2_std) for r in rows),
    )


def read_campaign_csv(path) -> list[CampaignRow]:
    header, rows = _read_rows(path)
    if tuple(header) != CAMPAIGN_HEADER:
        raise DataError(f"{path}: expected header {','.join(CAMPAIGN_HEADER)}")
    try:
        return [CampaignRow(r[0], int(r[1]), r[2], int(r[3]), float(r[4]), float(r[5])) for r in rows]
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_campaign(out_dir, result: CampaignResult, config_text: str | None = None) -> dict[str, Path]:
    """Write ``campaign.csv``, ``reference.csv``, ``points_*.csv`` and ``provenance.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"campaign": out / "campaign.csv", "reference": out / "reference.csv"}
    write_campaign_csv(paths["campaign"], result.rows)
    write_sampled_function(paths["reference"], result.reference)
    for (probe, nr), fn in result.points.items():
        p = out / f"points_{probe}_{nr}.csv"
        write_sampled_function(p, fn)
        paths[f"points_{probe}_{nr}"] = p
    prov = dict(result.provenance)
    if config_text is not None:
        prov["config_text"] = config_text
    prov["failures"] = list(result.failures)
    paths["provenance"] = out / "provenance.json"
    paths["provenance"].write_text(json.dumps(prov, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths
