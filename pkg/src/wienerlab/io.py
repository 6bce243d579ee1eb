"""CSV / JSON helpers with atomic writes."""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidParameter, MissingArtifact
from .paths import SamplePath

FLOAT_FMT = "%.17g"


def atomic_write_text(path, text: str) -> Path:
    """Write to a temp file in the target directory, then rename over."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"missing file {path}")
    return json.loads(path.read_text())


def table_text(header, columns) -> str:
    """CSV text from equally long columns; floats use 17 significant digits."""
    buf = _io.StringIO()
    buf.write(",".join(header) + "\n")
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0]) if cols else 0
    fmt = []
    for c in cols:
        fmt.append("%d" if np.issubdtype(c.dtype, np.integer) else (FLOAT_FMT if np.issubdtype(c.dtype, np.floating) else "%s"))
    if n:
        row_fmt = ",".join(fmt) + "\n"
        lists = [c.tolist() for c in cols]
        buf.writelines(row_fmt % r for r in zip(*lists))
    return buf.getvalue()


def paths_csv_text(paths) -> str:
    ids, ts, vs = [], [], []
    for p in paths:
        ids.append(np.full(len(p), p.seed_id, dtype=np.int64))
        ts.append(p.times)
        vs.append(p.values)
    return table_text(["path_id", "t", "value"], [np.concatenate(ids), np.concatenate(ts), np.concatenate(vs)])


def write_paths_csv(path, paths) -> Path:
    return atomic_write_text(path, paths_csv_text(paths))


def read_paths_csv(path) -> list[SamplePath]:
    """Inverse of :func:`write_paths_csv`; also accepts a two-column ``t,value`` file."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"missing file {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidParameter(f"empty CSV {path}")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if header[:3] == ["path_id", "t", "value"]:
        groups: dict[int, list] = {}
        for r in body:
            groups.setdefault(int(r[0]), []).append((float(r[1]), float(r[2])))
        return [SamplePath([a for a, _ in g], [b for _, b in g], pid) for pid, g in groups.items()]
    if header[:2] == ["t", "value"]:
        return [SamplePath([float(r[0]) for r in body], [float(r[1]) for r in body], 0)]
    raise InvalidParameter(f"unrecognised CSV header {header}")
