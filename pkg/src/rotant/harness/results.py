"""Result tables and their CSV / JSON emission."""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError

COLUMNS = ("experiment", "sweep_name", "sweep_value", "scheme", "metric", "mean", "median", "stddev",
           "trials", "seed")


@dataclass(frozen=True, order=True)
class Row:
    experiment: str
    sweep_name: str
    sweep_value: float
    scheme: str
    metric: str
    mean: float
    median: float
    stddev: float
    trials: int
    seed: int


@dataclass
class ResultTable:
    """Rows of per-point trial statistics.

    ``samples`` keeps the raw per-trial values of every row for checks that
    need more than the summary (it is not serialized); ``flags`` lists
    points where a solver reported infeasibility.
    """

    experiment: str
    sweep_name: str
    seed: int
    rows: list = field(default_factory=list)
    units: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    samples: dict = field(default_factory=dict, compare=False, repr=False)

    def add(self, value, scheme: str, metric: str, values, unit: str = ""):
        v = np.asarray(values, dtype=float).reshape(-1)
        ok = v[~np.isnan(v)]  # nan marks an infeasible trial; -inf dB is a real zero
        if ok.size < v.size:
            self.flags.append(f"{self.sweep_name}={value:g} {scheme}: {v.size - ok.size} infeasible trial(s)")
        with np.errstate(invalid="ignore"):
            stats = (float(np.mean(ok)), float(np.median(ok)), float(np.std(ok))) if ok.size else (np.nan,) * 3
        key = (float(value), scheme, metric)
        if any((r.sweep_value, r.scheme, r.metric) == key for r in self.rows):
            raise ConfigurationError(f"duplicate row {key}")
        self.rows.append(Row(self.experiment, self.sweep_name, float(value), scheme, metric, *stats,
                             int(v.size), int(self.seed)))
        self.rows = self.sorted_rows()
        self.samples[key] = v
        if unit:
            self.units[metric] = unit

    def sorted_rows(self) -> list:
        return sorted(self.rows, key=lambda r: (r.experiment, r.sweep_name, r.sweep_value, r.scheme, r.metric))

    def column(self, scheme: str, metric: str, stat: str = "median"):
        """(sweep values, statistic) for one scheme and metric in sweep order."""
        rs = sorted((r for r in self.rows if r.scheme == scheme and r.metric == metric), key=lambda r: r.sweep_value)
        return np.array([r.sweep_value for r in rs]), np.array([getattr(r, stat) for r in rs])

    def trials_of(self, value, scheme: str, metric: str) -> np.ndarray:
        return self.samples[(float(value), scheme, metric)]


def _num(x) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in table.sorted_rows():
        w.writerow([r.experiment, r.sweep_name, _num(r.sweep_value), r.scheme, r.metric, repr(r.mean),
                    repr(r.median), repr(r.stddev), r.trials, r.seed])
    return buf.getvalue()


def to_json(table: ResultTable) -> str:
    doc = {
        "experiment": table.experiment,
        "sweep_name": table.sweep_name,
        "seed": table.seed,
        "units": dict(sorted(table.units.items())),
        "flags": list(table.flags),
        "columns": list(COLUMNS),
        "rows": [asdict(r) for r in table.sorted_rows()],
    }
    return json.dumps(doc, indent=2) + "\n"


def emit_results(table: ResultTable, fmt: str = "csv", path=None) -> None:
    """Write the table as CSV or JSON to ``path`` (stdout for None or "-")."""
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"format must be csv or json, got {fmt!r}")
    text = to_csv(table) if fmt == "csv" else to_json(table)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text)  # OSError propagates as the I/O error


def read_results(path) -> ResultTable:
    """Inverse of emit_results for either format (chosen by content)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        t = ResultTable(doc["experiment"], doc["sweep_name"], doc["seed"], units=doc["units"], flags=doc["flags"])
        t.rows = [Row(**r) for r in doc["rows"]]
        return t
    rd = list(csv.DictReader(io.StringIO(text)))
    if not rd:
        return ResultTable("", "", 0)
    rows = [Row(r["experiment"], r["sweep_name"], float(r["sweep_value"]), r["scheme"], r["metric"],
                float(r["mean"]), float(r["median"]), float(r["stddev"]), int(r["trials"]), int(r["seed"]))
            for r in rd]
    return ResultTable(rows[0].experiment, rows[0].sweep_name, rows[0].seed, rows=rows)
