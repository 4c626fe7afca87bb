"""Delimited-text outputs.

Every table is CSV with one ``# schema: <name>/<version>`` comment line
followed by a header row. Parameter vectors are stored in a single
``params`` column as ``;``-joined floats so fronts of different surface
dimensions share one layout. Floats are written with ``repr`` and read back
losslessly.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError

ARCHIVE = "mlbpso-archive/1"
EVAL_LOG = "mlbpso-evallog/1"
ARCHIVE_HISTORY = "mlbpso-archive-history/1"
LOADS = "mlbpso-loads/1"
HISTOGRAM = "mlbpso-histogram/1"
HM_BEST = "mlbpso-hm-best-neighbor/1"
FRONT_TABLE = "mlbpso-front-comparison/1"
SUMMARY = "mlbpso-summary/1"

OBJECTIVE_COLUMNS = ("throughput_bps", "p_access")

LOAD_BINS = np.linspace(0.0, 1.0, 11)
HM_BINS = np.arange(-10.0, 21.0, 1.0)


class FormatError(ConfigurationError):
    """A table does not have the expected schema or columns."""


def fmt_params(params: Iterable[float]) -> str:
    return ";".join(repr(float(v)) for v in params)


def parse_params(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(";")) if text else ()


def write_table(path, schema: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: {schema}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def read_table(path) -> tuple[str | None, list[dict]]:
    path = Path(path)
    schema = None
    with path.open(newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# schema:"):
                    schema = line.split(":", 1)[1].strip()
                continue
            lines.append(line)
    return schema, list(csv.DictReader(lines))


def write_archive(path, entries, label: str) -> Path:
    rows = [(label, float(f[0]), float(f[1]), fmt_params(p)) for p, f in entries]
    return write_table(path, ARCHIVE, ("label", *OBJECTIVE_COLUMNS, "params"), rows)


def read_archive(path) -> list[dict]:
    """Rows as dicts with ``label``, ``objectives`` and ``params``."""
    schema, rows = read_table(path)
    if rows:
        missing = [c for c in ("label", *OBJECTIVE_COLUMNS, "params") if c not in rows[0]]
        if missing:
            raise FormatError(f"{path}: missing columns {missing}")
    elif schema != ARCHIVE:
        raise FormatError(f"{path}: not an archive table (schema {schema!r})")
    return [{"label": r["label"],
             "objectives": (float(r["throughput_bps"]), float(r["p_access"])),
             "params": parse_params(r["params"])} for r in rows]


def write_eval_log(path, records) -> Path:
    rows = []
    for rec in records:
        f = rec.objectives or (float("nan"), float("nan"))
        rows.append((rec.iteration, rec.particle, rec.status, float(f[0]), float(f[1]),
                     fmt_params(rec.position)))
    return write_table(path, EVAL_LOG,
                       ("iteration", "particle", "status", *OBJECTIVE_COLUMNS, "params"), rows)


def write_archive_history(path, history) -> Path:
    rows = [(it, float(f[0]), float(f[1]), fmt_params(p))
            for it, entries in enumerate(history) for p, f in entries]
    return write_table(path, ARCHIVE_HISTORY, ("iteration", *OBJECTIVE_COLUMNS, "params"), rows)


def histogram_rows(values, bins) -> list[tuple]:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]


def write_histogram(path, values, bins, label: str) -> Path:
    rows = [(label, lo, hi, c) for lo, hi, c in histogram_rows(values, bins)]
    return write_table(path, HISTOGRAM, ("label", "bin_lo", "bin_hi", "count"), rows)


def write_loads(path, loads, label: str) -> Path:
    rows = [(label, k, float(v)) for k, v in enumerate(loads)]
    return write_table(path, LOADS, ("label", "cell", "mean_load"), rows)


def write_hm_best(path, entries, label: str) -> Path:
    rows = [(label, e["cell"], e["neighbor"], float(e["hm"]), e["handovers"]) for e in entries]
    return write_table(path, HM_BEST, ("label", "cell", "neighbor", "hm_db", "handovers"), rows)
