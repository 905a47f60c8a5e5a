"""File formats: binary measurement container, CSV tables, moment JSON.

The binary container is little-endian: an 8-byte magic, a 48-byte header
(kind, dims, L, M, sigma, seed), then the payload as float64 in row-major
order.  CSV numbers are written with repr, which round-trips doubles
exactly, so identical data always produces identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .core import ConfigError, ShapeError
from .mra import MomentTensor
from .mtd_sim import Measurement1D, Measurement2D, PatchSet

MAGIC = b"MTDMEAS1"
_HEADER = struct.Struct("<II QQ d Q")  # kind, dims, L, M, sigma, seed
KIND_MEASUREMENT = 0
KIND_PATCHES = 1


def _write_container(path, kind: int, dims: int, L: int, M: int, sigma: float, seed: int, payload: np.ndarray) -> None:
    data = np.ascontiguousarray(payload, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(kind, dims, L, M, float(sigma), int(seed) & (2**64 - 1)))
        fh.write(data.tobytes())


def _read_container(path) -> tuple[dict, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ConfigError(f"{path}: not a measurement container (bad magic)")
    kind, dims, L, M, sigma, seed = _HEADER.unpack_from(raw, len(MAGIC))
    payload = np.frombuffer(raw, dtype="<f8", offset=len(MAGIC) + _HEADER.size).astype(np.float64)
    meta = {"kind": kind, "dims": dims, "L": L, "M": M, "sigma": sigma, "seed": seed}
    return meta, payload


def write_measurement(path, z, sigma: float = 0.0, seed: int = 0) -> None:
    if isinstance(z, Measurement1D):
        _write_container(path, KIND_MEASUREMENT, 1, z.L, z.M, sigma, seed, z.values)
    elif isinstance(z, Measurement2D):
        _write_container(path, KIND_MEASUREMENT, 2, z.L, z.M, sigma, seed, z.values)
    else:
        raise ShapeError(f"cannot serialize {type(z).__name__} as a measurement")


def read_measurement(path):
    meta, payload = _read_container(path)
    if meta["kind"] != KIND_MEASUREMENT:
        raise ConfigError(f"{path}: container holds patches, not a measurement")
    L, M = meta["L"], meta["M"]
    if meta["dims"] == 1:
        return Measurement1D(values=payload, L=L, M=M), meta
    side = L * M
    return Measurement2D(values=payload.reshape(side, side), L=L, M=M), meta


def write_patches(path, patches: PatchSet, sigma: float = 0.0, seed: int = 0) -> None:
    if patches.two_d:
        if patches.patches.ndim != 4:
            raise ShapeError("only grid-shaped 2d patch sets are serialized")
        M = patches.patches.shape[0]
        _write_container(path, KIND_PATCHES, 2, patches.L, M, sigma, seed, patches.patches)
    else:
        _write_container(path, KIND_PATCHES, 1, patches.L, patches.patches.shape[0], sigma, seed, patches.patches)


def read_patches(path) -> tuple[PatchSet, dict]:
    meta, payload = _read_container(path)
    if meta["kind"] != KIND_PATCHES:
        raise ConfigError(f"{path}: container holds a measurement, not patches")
    L, M = meta["L"], meta["M"]
    if meta["dims"] == 1:
        return PatchSet(patches=payload.reshape(M, L), L=L), meta
    return PatchSet(patches=payload.reshape(M, M, L, L), L=L, two_d=True), meta


# --- CSV ---------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    """Write a CSV with deterministic float formatting and unix newlines."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ConfigError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def measurement_csv_rows(z):
    if isinstance(z, Measurement1D):
        return ["index", "value"], [(i, v) for i, v in enumerate(z.values)]
    return ["row", "col", "value"], [
        (r, c, z.values[r, c]) for r in range(z.values.shape[0]) for c in range(z.values.shape[1])
    ]


# --- JSON --------------------------------------------------------------------


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_moment(path, tensor: MomentTensor) -> None:
    write_json(path, tensor.to_json_dict())


def read_moment(path) -> MomentTensor:
    return MomentTensor.from_json_dict(read_json(path))


__all__ = [
    "MAGIC",
    "KIND_MEASUREMENT",
    "KIND_PATCHES",
    "write_measurement",
    "read_measurement",
    "write_patches",
    "read_patches",
    "write_csv",
    "read_csv",
    "measurement_csv_rows",
    "write_json",
    "read_json",
    "write_moment",
    "read_moment",
]
