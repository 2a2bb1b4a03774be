"""CSV and summary writers. Every CSV starts with a header row."""

from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import Trajectory

TRAJECTORY_COLUMNS = ("event_index", "t", "s_clock", "site", "direction", "twoM_after")
SNAPSHOT_COLUMNS = ("t", "window_start", "bits")
EXCURSION_COLUMNS = ("index", "tau", "eta", "heaviside_hold")
MARGINAL_COLUMNS = ("eps", "t", "mean", "var", "ks_stat", "p_value")
DUALITY_COLUMNS = ("n", "horizon", "eps", "trials", "failures")
MEASURE_COLUMNS = ("eps", "t", "tail_start", "atoms")


class IoError(OSError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from err
    return path


def read_csv(path: str | os.PathLike) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def trajectory_rows(tr: Trajectory):
    ev = tr.events
    for n in range(len(ev)):
        yield (n, float(ev.t[n]), float(ev.s_clock[n]), int(ev.site[n]),
               "01" if ev.new_value[n] == 1 else "10", int(ev.twoM[n]))


def write_trajectory(path, tr: Trajectory) -> Path:
    return write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(tr))


def write_snapshots(path, tr: Trajectory) -> Path:
    rows = []
    for s in tr.snapshots:
        start, _, bits = s.config.partition(";")
        rows.append((s.t, int(start), bits))
    return write_csv(path, SNAPSHOT_COLUMNS, rows)


def write_excursions(path, tau, eta, hold) -> Path:
    return write_csv(path, EXCURSION_COLUMNS,
                     ((i, float(a), float(b), float(c))
                      for i, (a, b, c) in enumerate(zip(tau, eta, hold))))


def write_measure_snapshots(path, snaps) -> Path:
    return write_csv(path, MEASURE_COLUMNS,
                     ((s.eps, s.t, s.tail_start, " ".join(repr(float(a)) for a in s.one_sites_scaled))
                      for s in snaps))


def write_summary(path, entries: Mapping[str, object] | Sequence[tuple[str, object]]) -> Path:
    items = entries.items() if isinstance(entries, Mapping) else entries
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(f"{key} = {_fmt(v)}\n" for key, v in items))
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from err
    return path
