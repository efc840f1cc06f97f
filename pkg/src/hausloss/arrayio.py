"""NPY arrays with optional spacing sidecars, and deterministic JSON/CSV reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ArrayFileError
from .grid import BinaryMask, GridSpec, ProbMap


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def read_spacing(path):
    """Spacing from ``<stem>.json`` next to an array file, or None."""
    side = sidecar_path(path)
    if not side.exists():
        return None
    try:
        spacing = json.loads(side.read_text())["spacing"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ArrayFileError(f"{side}: expected {{\"spacing\": [...]}}") from exc
    return tuple(float(s) for s in spacing)


def load_array(path) -> np.ndarray:
    try:
        arr = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise ArrayFileError(f"{path}: {exc}") from exc
    if arr.ndim not in (2, 3):
        raise ArrayFileError(f"{path}: expected a 2D or 3D array, got shape {arr.shape}")
    return arr


def is_mask_array(arr: np.ndarray) -> bool:
    if arr.dtype == bool:
        return True
    return np.issubdtype(arr.dtype, np.integer) and bool(np.isin(arr, (0, 1)).all())


def load_grid(path, spacing=None, threshold_level: float = 0.5, as_probability=False):
    """Load a mask or probability map.

    Integer/bool arrays holding only 0 and 1 are masks; anything else is a
    probability map, thresholded at ``threshold_level`` unless
    ``as_probability`` is set.  An explicit ``spacing`` wins over a sidecar.
    """
    arr = load_array(path)
    spacing = spacing if spacing is not None else read_spacing(path)
    spec = GridSpec(arr.shape, spacing)
    if as_probability:
        return ProbMap(arr.astype(np.float64), spec)
    if is_mask_array(arr):
        return BinaryMask(arr, spec)
    prob = ProbMap(arr.astype(np.float64), spec)
    return BinaryMask(prob.data >= threshold_level, spec)


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_array(path, arr: np.ndarray, kind: str) -> None:
    """Write NPY v1.0: ``kind`` is ``mask`` (uint8) or ``float`` (float32)."""
    dtype = {"mask": np.uint8, "float": np.float32}[kind]
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr, dtype=dtype), version=(1, 0))
    _atomic_write(path, buf.getvalue())


def jsonable(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    _atomic_write(path, dumps_json(obj).encode())


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return v


def write_csv(path, rows, fields) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n",
                            extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k)) for k in fields})
    _atomic_write(path, buf.getvalue().encode())


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
