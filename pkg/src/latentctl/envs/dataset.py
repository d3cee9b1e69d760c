"""Single-file binary container for observation triplets.

Byte layout (all integers little-endian):

    offset      size            field
    0           4               magic b"LCT1"
    4           4               uint32 format version (currently 1)
    8           4               uint32 L = env name length in bytes
    12          L               env name, utf-8
    12+L        8               uint64 n (record count)
    20+L        4               uint32 frames
    24+L        4               uint32 height
    28+L        4               uint32 width
    32+L        4               uint32 n_u
    36+L        8               uint64 master seed
    44+L        n*frames*h*w*4  x, float32 LE, C order, record-major
    ...         n*n_u*4         u, float32 LE, record-major
    ...         n*frames*h*w*4  x_next, float32 LE, record-major

Writing the same dataset twice produces byte-identical files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"LCT1"
VERSION = 1


@dataclass
class TripletDataset:
    env: str
    seed: int
    x: np.ndarray       # (n, frames, h, w) float32
    u: np.ndarray       # (n, n_u) float32
    x_next: np.ndarray  # (n, frames, h, w) float32

    def __post_init__(self):
        if self.x.shape != self.x_next.shape:
            raise ValueError("x and x_next shapes differ")
        if len(self.x) != len(self.u):
            raise ValueError("x and u record counts differ")

    def __len__(self) -> int:
        return len(self.x)

    @property
    def obs_shape(self) -> tuple[int, int, int]:
        return tuple(self.x.shape[1:])

    @property
    def n_u(self) -> int:
        return self.u.shape[1]


def save_triplets(path: str | Path, ds: TripletDataset) -> None:
    name = ds.env.encode("utf-8")
    frames, h, w = ds.obs_shape
    header = MAGIC + struct.pack("<II", VERSION, len(name)) + name
    header += struct.pack("<QIIIIQ", len(ds), frames, h, w, ds.n_u, ds.seed)
    with open(path, "wb") as fh:
        fh.write(header)
        np.ascontiguousarray(ds.x, dtype="<f4").tofile(fh)
        np.ascontiguousarray(ds.u, dtype="<f4").tofile(fh)
        np.ascontiguousarray(ds.x_next, dtype="<f4").tofile(fh)


def load_triplets(path: str | Path) -> TripletDataset:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a triplet container (magic {magic!r})")
        version, name_len = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported container version {version}")
        env = fh.read(name_len).decode("utf-8")
        n, frames, h, w, n_u, seed = struct.unpack("<QIIIIQ", fh.read(32))
        obs_count = n * frames * h * w
        x = np.fromfile(fh, dtype="<f4", count=obs_count)
        u = np.fromfile(fh, dtype="<f4", count=n * n_u)
        x_next = np.fromfile(fh, dtype="<f4", count=obs_count)
        trailing = fh.read(1)
    if x.size != obs_count or u.size != n * n_u or x_next.size != obs_count:
        raise ValueError(f"{path}: truncated container")
    if trailing:
        raise ValueError(f"{path}: trailing bytes after payload")
    return TripletDataset(
        env=env,
        seed=seed,
        x=x.reshape(n, frames, h, w),
        u=u.reshape(n, n_u),
        x_next=x_next.reshape(n, frames, h, w),
    )
