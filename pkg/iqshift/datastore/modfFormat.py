#! /usr/bin/env python3
"""
The MODF dataset file, little-endian throughout:

    "MODF"                      4 bytes magic
    version                     u16
    manifest length             u32
    manifest                    utf-8 json (DatasetManifest.toText)
    frame records               frame_count x (META_DTYPE fields, then 2 x frame_len f32: I row then Q row)
    crc32                       u32 over every byte before it

read errors are distinct: BadMagic, BadVersion, ChecksumMismatch (also for truncation), StructuralError
"""

import os
import struct
import zlib
import logging

from typing import (
    BinaryIO,
)

import numpy as np

from ..exceptions import (
    BadMagic,
    BadVersion,
    ChecksumMismatch,
    StructuralError,
)
from .dataset import Dataset, META_DTYPE
from .manifest import DatasetManifest, FORMAT_VERSION

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

MAGIC: bytes = b"MODF"
_HEAD = struct.Struct("<4sHI")
_TRAILER = struct.Struct("<I")
_CHUNK_FRAMES: int = 4096


def recordDtype(frameLen: int) -> np.dtype:
    fields = [(name, META_DTYPE.fields[name][0]) for name in META_DTYPE.names]
    return np.dtype(fields + [("iq", "<f4", (2, frameLen))])


class _CrcWriter:
    def __init__(self, f: BinaryIO) -> None:
        self.f = f
        self.crc = 0

    def write(self, data: bytes) -> None:
        self.crc = zlib.crc32(data, self.crc)
        self.f.write(data)


def writeDataset(
    dataset: Dataset,
    path: str,
) -> None:
    manifest = dataset.manifest.validate()
    mBytes = manifest.toText().encode("utf-8")
    rDtype = recordDtype(manifest.frameLen)

    # an existing file at path is only replaced by a complete one
    tmp = path + ".tmp"
    try:
        with open(tmp, "wb") as f:
            w = _CrcWriter(f)
            w.write(_HEAD.pack(MAGIC, FORMAT_VERSION, len(mBytes)))
            w.write(mBytes)

            # sequential chunks keep the peak memory at one chunk of records
            for start in range(0, len(dataset), _CHUNK_FRAMES):
                stop = min(start + _CHUNK_FRAMES, len(dataset))
                rec = np.zeros(stop - start, dtype=rDtype)
                for name in META_DTYPE.names:
                    rec[name] = dataset.meta[name][start:stop]
                rec["iq"] = dataset.iq[start:stop]
                w.write(rec.tobytes())

            f.write(_TRAILER.pack(w.crc))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

    msg = f"wrote {len(dataset)} frames to {path}"
    log.info(msg)


def readDatasetBytes(data: bytes) -> Dataset:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"not a MODF file: magic {data[:4]!r}")
    if len(data) < _HEAD.size + _TRAILER.size:
        raise ChecksumMismatch(f"file truncated to {len(data)} bytes")

    _, version, mLen = _HEAD.unpack_from(data, 0)
    if version != FORMAT_VERSION:
        raise BadVersion(f"MODF version {version} is not supported (expected {FORMAT_VERSION})")

    (stored,) = _TRAILER.unpack_from(data, len(data) - _TRAILER.size)
    if zlib.crc32(data[: -_TRAILER.size]) != stored:
        raise ChecksumMismatch("MODF checksum mismatch (corrupt or truncated file)")

    mStart = _HEAD.size
    mEnd = mStart + mLen
    if mEnd > len(data) - _TRAILER.size:
        raise StructuralError(f"manifest length {mLen} runs past the payload")
    try:
        manifest = DatasetManifest.fromText(data[mStart:mEnd].decode("utf-8"))
    except UnicodeDecodeError as e:
        raise StructuralError(f"manifest is not utf-8: {e}") from e

    rDtype = recordDtype(manifest.frameLen)
    payload = len(data) - _TRAILER.size - mEnd
    if payload % rDtype.itemsize != 0:
        raise StructuralError(f"payload of {payload} bytes is not a whole number of {rDtype.itemsize}-byte records")
    count = payload // rDtype.itemsize
    if count != manifest.frameCount:
        raise StructuralError(f"manifest says {manifest.frameCount} frames, payload holds {count}")

    rec = np.frombuffer(data, dtype=rDtype, count=count, offset=mEnd)
    meta = np.zeros(count, dtype=META_DTYPE)
    for name in META_DTYPE.names:
        meta[name] = rec[name]
    iq = np.ascontiguousarray(rec["iq"], dtype=np.float32)

    return Dataset(iq, meta, manifest)


def readDataset(path: str) -> Dataset:
    if not os.path.isfile(path):
        raise StructuralError(f"{path} cannot be found or is not a file")

    with open(path, "rb") as f:
        data = f.read()

    ds = readDatasetBytes(data)
    msg = f"read {len(ds)} frames from {path}, profile {ds.manifest.profileId}"
    log.info(msg)
    return ds
