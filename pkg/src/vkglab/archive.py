"""Run archives: binary field snapshots, history arrays and CSV tables.

Snapshot layout (all integers little-endian):

    offset  size       content
    0       4          magic b"VKG1"
    4       4          uint32 format version (1)
    8       4          uint32 dimension d
    12      4*d        uint32 points per axis
    12+4d   4          uint32 component count m
    16+4d   8          float64 time
    24+4d   8*m*N^d    float64 samples, component-major then row-major

Complex data are stored as 2m real components: real part of component 0,
imaginary part of component 0, real part of component 1, and so on.

An archive directory holds ``config.cfg``, ``manifest.csv`` (one row per
snapshot with its time, resolution and config digest), ``norms.csv``, the
``snapshots/`` folder and ``history/*.npy`` arrays with the full step-by-step
field record.  Files are written once; an existing path is never replaced.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .config import RunConfig, load_config
from .errors import ArchiveError, UnknownQuantityError
from .spectral import BoxGrid
from .transport import FieldHistory

MAGIC = b"VKG1"
VERSION = 1


@dataclass
class Snapshot:
    time: float
    points: tuple[int, ...]
    data: np.ndarray      # (m, N, ..., N) float64

    @property
    def dimension(self) -> int:
        return len(self.points)


def encode_snapshot(data: np.ndarray, time: float) -> bytes:
    """Serialize a real (m, N, ...) or complex array; complex is split into 2m parts."""
    arr = np.asarray(data)
    if np.iscomplexobj(arr):
        arr = np.stack([arr.real, arr.imag], axis=1).reshape((-1,) + arr.shape[1:])
    arr = np.ascontiguousarray(arr, dtype="<f8")
    points = arr.shape[1:]
    head = MAGIC + struct.pack("<II", VERSION, len(points))
    head += struct.pack(f"<{len(points)}I", *points)
    head += struct.pack("<Id", arr.shape[0], float(time))
    return head + arr.tobytes(order="C")


def decode_snapshot(blob: bytes) -> Snapshot:
    if blob[:4] != MAGIC:
        raise ArchiveError("not a snapshot file (bad magic)")
    version, d = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise ArchiveError(f"unsupported snapshot version {version}")
    points = struct.unpack_from(f"<{d}I", blob, 12)
    m, time = struct.unpack_from("<Id", blob, 12 + 4 * d)
    offset = 24 + 4 * d
    count = m * int(np.prod(points))
    if len(blob) != offset + 8 * count:
        raise ArchiveError("snapshot payload has the wrong length")
    data = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape((m,) + tuple(points))
    return Snapshot(float(time), tuple(points), data.astype(np.float64))


def as_complex(snapshot: Snapshot) -> np.ndarray:
    """Recombine interleaved real/imaginary components."""
    d = snapshot.data
    return d[0::2] + 1j * d[1::2]


def _write_new(path: Path, payload: bytes | str):
    if path.exists():
        raise ArchiveError(f"refusing to overwrite {path}")
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "xb" if isinstance(payload, bytes) else "x"
    kwargs = {} if isinstance(payload, bytes) else {"encoding": "utf-8", "newline": ""}
    with open(path, mode, **kwargs) as fh:
        fh.write(payload)


def write_snapshot(path: Path, data: np.ndarray, time: float):
    _write_new(Path(path), encode_snapshot(data, time))


def read_snapshot(path: Path) -> Snapshot:
    return decode_snapshot(Path(path).read_bytes())


def csv_text(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _save_npy(path: Path, arr: np.ndarray):
    if path.exists():
        raise ArchiveError(f"refusing to overwrite {path}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "xb") as fh:
        np.save(fh, np.ascontiguousarray(arr), allow_pickle=False)


class ArchiveWriter:
    """Append-only writer for a fresh run directory."""

    def __init__(self, root: str | Path, config: RunConfig):
        self.root = Path(root)
        if self.root.exists() and any(self.root.iterdir()):
            raise ArchiveError(f"output directory {self.root} is not empty")
        self.root.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.digest = config.digest()
        self.manifest: list[tuple] = []
        _write_new(self.root / "config.cfg", config.to_text())

    def snapshot(self, kind: str, step: int, time: float, data: np.ndarray):
        name = f"snapshots/{kind}_{step:06d}.vkg"
        write_snapshot(self.root / name, data, time)
        comps = data.shape[0] * (2 if np.iscomplexobj(data) else 1)
        self.manifest.append((name, kind, step, float(time), "x".join(map(str, data.shape[1:])),
                              comps, self.digest))

    def table(self, name: str, header, rows):
        _write_new(self.root / name, csv_text(header, rows))

    def history(self, hist: FieldHistory):
        for key in ("efield", "bplus", "bminus", "rho"):
            _save_npy(self.root / "history" / f"{key}.npy", np.array(getattr(hist, key)))

    def array(self, name: str, arr: np.ndarray):
        _save_npy(self.root / name, arr)

    def close(self):
        self.table("manifest.csv", ["file", "kind", "step", "time", "points", "components", "config_sha256"],
                   self.manifest)


class Archive:
    """Read access to a finished run directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        if not (self.root / "config.cfg").is_file():
            raise ArchiveError(f"{self.root} is not a run archive")
        self.config = load_config(self.root / "config.cfg")

    @property
    def grid(self) -> BoxGrid:
        c = self.config
        return BoxGrid(c.dimension, c.half_length, c.points)

    def norms(self) -> tuple[list[str], np.ndarray]:
        with open(self.root / "norms.csv", newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])

    def series(self, column: str) -> tuple[np.ndarray, np.ndarray]:
        header, data = self.norms()
        if column not in header:
            raise UnknownQuantityError(f"archive has no series {column!r}; available: {', '.join(header[1:])}")
        return data[:, 0], data[:, header.index(column)]

    def history(self) -> FieldHistory:
        c = self.config
        hist = FieldHistory(self.grid, c.dt, 0.0, coupling=c.coupling)
        arrays = {k: np.load(self.root / "history" / f"{k}.npy") for k in ("efield", "bplus", "bminus", "rho")}
        hist.efield = list(arrays["efield"])
        hist.bplus = list(arrays["bplus"])
        hist.bminus = list(arrays["bminus"])
        hist.rho = list(arrays["rho"])
        return hist

    def manifest(self) -> list[dict]:
        with open(self.root / "manifest.csv", newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
