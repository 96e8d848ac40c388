"""File formats: CSV with a one-line ``#`` metadata header, versioned JSON,
sparse triplet dumps and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def content_hash(data: bytes | str) -> str:
    """Git-style blob hash (sha1 over ``blob <len>\\0`` + content)."""
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns, rows, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = meta or {}
    with path.open("w", newline="") as fh:
        fh.write("# " + "; ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    with Path(path).open() as fh:
        first = fh.readline()
        meta = {}
        if first.startswith("#"):
            for item in first[1:].strip().split(";"):
                if "=" in item:
                    k, v = item.split("=", 1)
                    meta[k.strip()] = v.strip()
        reader = csv.reader(fh)
        columns = next(reader)
        data = [[float(x) for x in row] for row in reader if row]
    return meta, columns, np.array(data)


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(body, indent=2, default=_default) + "\n")
    return path


def read_json(path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {data.get('schema_version')!r}")
    return data


def write_triplets(path, matrix, meta: dict | None = None) -> Path:
    """Sparse coordinate dump: one ``row col value`` line per stored entry."""
    import scipy.sparse as sp

    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    rows = zip(coo.row[order], coo.col[order], coo.data[order])
    return write_csv(path, ["row", "col", "value"], rows,
                     {"shape": f"{coo.shape[0]}x{coo.shape[1]}", **(meta or {})})


class Manifest:
    """Tracks every file a run writes, relative to the output directory."""

    def __init__(self, root):
        self.root = Path(root)
        self.files: list[Path] = []

    def add(self, path) -> Path:
        path = Path(path)
        if path not in self.files:
            self.files.append(path)
        return path

    def entries(self) -> list[dict]:
        return [
            {"path": str(p.relative_to(self.root)), "sha256": file_sha256(p), "bytes": p.stat().st_size}
            for p in self.files if p.exists()
        ]

    def write(self, status: str = "complete", extra: dict | None = None) -> Path:
        return write_json(self.root / "manifest.json",
                          {"status": status, "files": self.entries(), **(extra or {})})
