"""Artifact writers: CSV with a JSON comment header, and JSON manifests.

Files are written to a temporary sibling and renamed into place, so readers
never see a partial artifact.
"""

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__

FLOAT_FORMAT = "{:.17g}"


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(obj, indent=2):
    return json.dumps(obj, sort_keys=True, indent=indent, default=_default, allow_nan=True)


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def artifact_header(config=None, **extra):
    head = {"tool": "ri3bp", "version": __version__}
    if config is not None:
        head["config_hash"] = config.digest()
        head["tolerances"] = config.tolerances()
    head.update(extra)
    return head


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FORMAT.format(float(v))
    return str(v)


def csv_text(columns, header=None):
    """``# {json}`` line, a header row, then rows at 17 significant digits."""
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    n = {c.shape[0] for c in cols}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    lines = []
    if header is not None:
        lines.append("# " + json.dumps(header, sort_keys=True, default=_default))
    lines.append(",".join(names))
    for row in zip(*cols):
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, columns, header=None):
    return atomic_write(path, csv_text(columns, header))


def write_json(path, obj):
    return atomic_write(path, dumps(obj) + "\n")


def read_csv(path):
    """Inverse of ``write_csv``: ``(header dict or None, {column: float array})``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = None
    if lines and lines[0].startswith("# "):
        header = json.loads(lines[0][2:])
        lines = lines[1:]
    names = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(names))
    return header, {k: data[:, i] for i, k in enumerate(names)}
