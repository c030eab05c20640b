"""CSV schemas: measurement streams, estimate streams, aggregates.

Measurement CSV is also the ingestion format for recorded sensor logs:
header "t,Fx,Fy,Mz" with optional trailing "cx,cy" truth columns, SI
units, >= 9 significant digits.  Truth cells may be NaN during contact
gaps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from wrenchmap.errors import DataError
from wrenchmap.simulator import SimSeries

FLOAT_FMT = "{:.12g}"


@dataclass
class Measurements:
    t: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    mz: np.ndarray
    cx: np.ndarray | None = None
    cy: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.t)

    @property
    def has_truth(self) -> bool:
        return self.cx is not None and self.cy is not None

    @classmethod
    def from_sim(cls, sim: SimSeries) -> "Measurements":
        return cls(t=sim.t, fx=sim.fx, fy=sim.fy, mz=sim.mz, cx=sim.cx, cy=sim.cy)


def write_measurements_csv(path, m: Measurements) -> None:
    cols = ["t", "Fx", "Fy", "Mz"] + (["cx", "cy"] if m.has_truth else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(len(m)):
            row = [m.t[i], m.fx[i], m.fy[i], m.mz[i]]
            if m.has_truth:
                row += [m.cx[i], m.cy[i]]
            w.writerow(FLOAT_FMT.format(v) for v in row)


def read_measurements_csv(path) -> Measurements:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header[:4] != ["t", "Fx", "Fy", "Mz"]:
            raise DataError(f"{path}: header must start with t,Fx,Fy,Mz (got {header})")
        with_truth = header[4:6] == ["cx", "cy"]
        n_cols = 6 if with_truth else 4
        if len(header) != n_cols:
            raise DataError(f"{path}: unexpected columns {header[4:]}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise DataError(f"{path}: row {lineno}: expected {n_cols} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows)
    t = arr[:, 0]
    if not np.isfinite(t).all() or (np.diff(t) < 0).any():
        bad = int(np.nonzero(~np.isfinite(t) | np.r_[False, np.diff(t) < 0])[0][0]) + 2
        raise DataError(f"{path}: row {bad}: time column must be finite and nondecreasing")
    if not np.isfinite(arr[:, 1:4]).all():
        bad = int(np.nonzero(~np.isfinite(arr[:, 1:4]).all(axis=1))[0][0]) + 2
        raise DataError(f"{path}: row {bad}: non-finite wrench component")
    return Measurements(
        t=t,
        fx=arr[:, 1],
        fy=arr[:, 2],
        mz=arr[:, 3],
        cx=arr[:, 4] if with_truth else None,
        cy=arr[:, 5] if with_truth else None,
    )


def write_estimates_csv(path, t, est, ess, paused, errors=None) -> None:
    """One record per input row: t, est_cx, est_cy, ess, paused[, err]."""
    cols = ["t", "est_cx", "est_cy", "ess", "paused"] + ([] if errors is None else ["err"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(len(t)):
            row = [
                FLOAT_FMT.format(t[i]),
                FLOAT_FMT.format(est[i, 0]),
                FLOAT_FMT.format(est[i, 1]),
                FLOAT_FMT.format(ess[i]),
                str(int(paused[i])),
            ]
            if errors is not None:
                row.append(FLOAT_FMT.format(errors[i]))
            w.writerow(row)


def write_aggregate_csv(path, rows) -> None:
    """rows: iterables of (method, shape, metric, AggregateStats)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "shape", "metric", "mean", "std", "q1", "median", "q3", "n_trials"])
        for method, shape, metric, s in rows:
            w.writerow(
                [method, shape, metric]
                + [FLOAT_FMT.format(v) for v in (s.mean, s.std, s.q1, s.median, s.q3)]
                + [str(s.n_trials)]
            )


def write_plotdata_csv(path, header, rows) -> None:
    """Tidy long-format table; header is a list of column names."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(
                FLOAT_FMT.format(v) if isinstance(v, float) and not math.isnan(v)
                else ("nan" if isinstance(v, float) else str(v))
                for v in row
            )
