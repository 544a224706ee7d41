"""File IO: single-column CSV vectors, JSON sidecars, atomic writes."""

import json
import os
import tempfile

import numpy as np

from ._validation import as_float_vector

__all__ = [
    "atomic_write_text",
    "read_vector_csv",
    "write_vector_csv",
    "write_json",
    "read_jsonl",
]


def atomic_write_text(path, text):
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_vector_csv(path):
    """Single-column CSV (comments with '#' allowed) -> 1-D float array."""
    values = np.loadtxt(path, delimiter=",", comments="#", dtype=np.float64, ndmin=1)
    if values.ndim != 1:
        raise ValueError(f"{path} is not a single-column vector file")
    return as_float_vector(values, path)


def write_vector_csv(path, values):
    text = "\n".join(repr(float(v)) for v in np.asarray(values).ravel())
    atomic_write_text(path, text + "\n")


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_jsonl(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
