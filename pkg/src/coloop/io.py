"""Dataset files, result digests and run reports.

Text format: a header line ``n d`` followed by ``n`` comma-separated rows.
Binary format (``.bin``): 8-byte header of two little-endian uint32 (n, d),
then ``n * d`` little-endian float32 values, row-major.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import __version__


class DatasetError(ValueError):
    pass


def generate(kind: str, n: int, d: int, seed: int, centers: int = 2,
             spread: float = 0.05) -> np.ndarray:
    """Synthetic points: ``uniform`` in ``[0, 1)^d`` or ``gaussian-blobs``."""
    if n < 1 or d < 1:
        raise DatasetError("need n >= 1 and d >= 1")
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        return rng.random((n, d))
    if kind == "gaussian-blobs":
        if centers < 1:
            raise DatasetError("need at least one blob center")
        mu = rng.random((centers, d))
        labels = np.arange(n) % centers
        return mu[labels] + spread * rng.standard_normal((n, d))
    raise DatasetError(f"unknown generator {kind!r}")


def write_points(path, data: np.ndarray, fmt: Optional[str] = None) -> Path:
    path = Path(path)
    data = np.asarray(data, dtype=np.float64)
    n, d = data.shape
    fmt = fmt or ("bin" if path.suffix == ".bin" else "csv")
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(struct.pack("<II", n, d))
            fh.write(data.astype("<f4").tobytes())
    elif fmt == "csv":
        with open(path, "w") as fh:
            fh.write(f"{n} {d}\n")
            for row in data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}")
    return path


def read_points(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset {path} not found")
    if path.suffix == ".bin":
        raw = path.read_bytes()
        if len(raw) < 8:
            raise DatasetError("truncated binary header")
        n, d = struct.unpack("<II", raw[:8])
        body = np.frombuffer(raw, dtype="<f4", offset=8)
        if body.size != n * d:
            raise DatasetError(f"expected {n * d} values, found {body.size}")
        return body.reshape(n, d).astype(np.float64)
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DatasetError("header must be 'n d'")
        n, d = int(header[0]), int(header[1])
        data = np.loadtxt(fh, delimiter=",", ndmin=2) if n else np.zeros((0, d))
    if data.shape != (n, d):
        raise DatasetError(f"header says {n}x{d}, body is {data.shape[0]}x{data.shape[1]}")
    return data


# ---------------------------------------------------------------------------
# digests


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v == 0.0:
        return "0"
    return f"{v:.12g}"


def digest(*parts: Iterable) -> str:
    """Stable 64-bit hex digest; floats are rounded to 12 significant digits."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        arr = np.asarray(part)
        h.update(repr(arr.shape).encode())
        for v in arr.ravel().tolist():
            h.update(_fmt(v).encode())
            h.update(b",")
        h.update(b"|")
    return h.hexdigest()


def join_digest(pairs, distances) -> str:
    pairs = np.asarray(pairs).reshape(-1, 2)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return digest(pairs[order], np.asarray(distances)[order])


# ---------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    command: str
    config: dict
    wall_time: float
    execution: dict
    digest: str
    version: str = __version__
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))


def write_pairs_csv(path, pairs, distances):
    with open(path, "w") as fh:
        fh.write("id_a,id_b,distance\n")
        for (a, b), dist in zip(np.asarray(pairs).tolist(), np.asarray(distances).tolist()):
            fh.write(f"{a},{b},{dist!r}\n")


def write_matrix(path, matrix, fmt: str = "csv"):
    matrix = np.asarray(matrix)
    if fmt == "json":
        Path(path).write_text(json.dumps({"rows": matrix.shape[0], "cols": matrix.shape[1],
                                          "values": matrix.tolist()}))
    else:
        np.savetxt(path, matrix, delimiter=",", fmt="%.17g")
