"""File formats for instances, LLR samples and reports.

Binary instance layout (little-endian)::

    magic      4 bytes  b"SPWI"
    version    u32      1
    n          u32
    lambda     f64
    seed       u64
    index      u64
    planted    u8       1 if a spike block follows
    y_upper    f64 x n(n-1)/2, row-major over i < j
    spike      f64 x n (only when planted)

CSV instance layout: header ``n,lambda,seed,sample_index,i,j,y`` and one row
per upper-triangular entry.
"""
from __future__ import annotations

import csv
import io as _io
import json
from importlib import resources
import struct

import numpy as np

from .simulator.instance import Instance

MAGIC = b"SPWI"
VERSION = 1
_HEADER = struct.Struct("<4sIIdQQB")
INSTANCE_CSV_COLUMNS = ("n", "lambda", "seed", "sample_index", "i", "j", "y")
SAMPLE_CSV_COLUMNS = ("sample_index", "log_l", "model")


def instance_to_bytes(inst: Instance) -> bytes:
    if inst.t != 1.0:
        raise ValueError("only plain-model instances are serialized")
    head = _HEADER.pack(MAGIC, VERSION, inst.n, inst.lam, inst.master_seed,
                        inst.sample_index, int(inst.planted))
    body = np.asarray(inst.y_upper, dtype="<f8").tobytes()
    if inst.planted:
        body += np.asarray(inst.spike, dtype="<f8").tobytes()
    return head + body


def instance_from_bytes(data: bytes) -> Instance:
    magic, version, n, lam, seed, index, planted = _HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise ValueError("not a version-1 instance file")
    m = n * (n - 1) // 2
    off = _HEADER.size
    need = off + 8 * (m + (n if planted else 0))
    if len(data) != need:
        raise ValueError(f"expected {need} bytes, got {len(data)}")
    y = np.frombuffer(data, dtype="<f8", count=m, offset=off).astype(float)
    spike = np.frombuffer(data, dtype="<f8", count=n, offset=off + 8 * m).astype(float) if planted else None
    y.setflags(write=False)
    return Instance(n, lam, y, spike, seed, index)


def instance_to_csv(inst: Instance) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(INSTANCE_CSV_COLUMNS)
    iu = np.triu_indices(inst.n, 1)
    for i, j, y in zip(iu[0], iu[1], inst.y_upper):
        w.writerow([inst.n, repr(inst.lam), inst.master_seed, inst.sample_index, i, j, repr(float(y))])
    return buf.getvalue()


def samples_to_csv(rows) -> str:
    """``rows`` is an iterable of ``(sample_index, log_l, model)``."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAMPLE_CSV_COLUMNS)
    for idx, val, model in rows:
        w.writerow([int(idx), repr(float(val)), model])
    return buf.getvalue()


def report_schema() -> dict:
    text = resources.files("spiked_wigner").joinpath("schemas/detection_report.schema.json").read_text()
    return json.loads(text)
