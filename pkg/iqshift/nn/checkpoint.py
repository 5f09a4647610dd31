#! /usr/bin/env python3
"""
The MODW weight checkpoint, little-endian throughout:

    "MODW"              4 bytes magic
    version             u16
    dtype tag           u8   (0: f4, 1: f8)
    header length       u32
    header              utf-8 json: model kind, classes, layer-spec listing, tensor table,
                        epoch, optimizer settings, history, train config and training data
    tensors             parameters in declaration order, then the optimizer velocity
    crc32               u32 over every byte before it
"""

import os
import json
import struct
import zlib
import logging
import dataclasses

from typing import (
    Optional,
    List,
    Dict,
    Tuple,
    Any,
)

import numpy as np

from ..exceptions import (
    BadMagic,
    BadVersion,
    ChecksumMismatch,
    CheckpointError,
)
from .tensor import Tensor

log = logging.getLogger(__name__)
logging.basicConfig(level=os.environ.get("LOGLEVEL", "INFO"))

MAGIC: bytes = b"MODW"
VERSION: int = 1
_HEAD = struct.Struct("<4sHBI")
_TRAILER = struct.Struct("<I")

DTYPE_TAGS: Dict[int, str] = {0: "<f4", 1: "<f8"}


@dataclasses.dataclass
class Checkpoint:
    modelKind: str
    classNames: List[str]
    specText: str
    params: List[Tuple[str, Tensor]]
    velocity: Optional[List[Tensor]] = None
    epoch: int = 0
    optimizer: Dict[str, Any] = dataclasses.field(default_factory=dict)
    history: Dict[str, Any] = dataclasses.field(default_factory=dict)
    trainConfig: str = "{}"
    dtype: str = "float32"
    trainData: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def paramDict(self) -> Dict[str, Tensor]:
        return dict(self.params)


def _tag(dtype: str) -> int:
    for k, v in DTYPE_TAGS.items():
        if np.dtype(v) == np.dtype(dtype):
            return k
    raise CheckpointError(f"no checkpoint dtype tag for {dtype}")


def checkpointBytes(ckpt: Checkpoint) -> bytes:
    tag = _tag(ckpt.dtype)
    wire = np.dtype(DTYPE_TAGS[tag])

    table: List[Dict[str, Any]] = [{"name": n, "shape": list(a.shape), "section": "param"} for n, a in ckpt.params]
    tensors = [a for _, a in ckpt.params]
    if ckpt.velocity is not None:
        table += [{"name": f"velocity.{i}", "shape": list(v.shape), "section": "velocity"} for i, v in enumerate(ckpt.velocity)]
        tensors += list(ckpt.velocity)

    header = {
        "model": ckpt.modelKind,
        "classes": ckpt.classNames,
        "spec": ckpt.specText,
        "tensors": table,
        "epoch": ckpt.epoch,
        "optimizer": ckpt.optimizer,
        "history": ckpt.history,
        "train_config": ckpt.trainConfig,
        "train_data": ckpt.trainData,
    }
    hBytes = json.dumps(header, sort_keys=True).encode("utf-8")

    parts = [_HEAD.pack(MAGIC, VERSION, tag, len(hBytes)), hBytes]
    parts += [np.ascontiguousarray(t, dtype=wire).tobytes() for t in tensors]
    body = b"".join(parts)
    return body + _TRAILER.pack(zlib.crc32(body))


def writeCheckpoint(
    ckpt: Checkpoint,
    path: str,
) -> None:
    data = checkpointBytes(ckpt)
    tmp = path + ".tmp"
    try:
        with open(tmp, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

    msg = f"wrote checkpoint {path} (epoch {ckpt.epoch}, {len(ckpt.params)} tensors, {ckpt.dtype})"
    log.debug(msg)


def readCheckpointBytes(data: bytes) -> Checkpoint:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"not a MODW file: magic {data[:4]!r}")
    if len(data) < _HEAD.size + _TRAILER.size:
        raise ChecksumMismatch(f"checkpoint truncated to {len(data)} bytes")

    _, version, tag, hLen = _HEAD.unpack_from(data, 0)
    if version != VERSION:
        raise BadVersion(f"MODW version {version} is not supported (expected {VERSION})")

    (stored,) = _TRAILER.unpack_from(data, len(data) - _TRAILER.size)
    if zlib.crc32(data[: -_TRAILER.size]) != stored:
        raise ChecksumMismatch("MODW checksum mismatch (corrupt or truncated checkpoint)")

    if tag not in DTYPE_TAGS:
        raise CheckpointError(f"unknown dtype tag {tag}")
    wire = np.dtype(DTYPE_TAGS[tag])

    try:
        header = json.loads(data[_HEAD.size : _HEAD.size + hLen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"checkpoint header is unreadable: {e}") from e

    offset = _HEAD.size + hLen
    end = len(data) - _TRAILER.size
    params: List[Tuple[str, Tensor]] = []
    velocity: List[Tensor] = []
    for entry in header.get("tensors", []):
        shape = tuple(int(d) for d in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nBytes = count * wire.itemsize
        if offset + nBytes > end:
            raise CheckpointError(f"tensor {entry['name']} runs past the payload")
        arr = np.frombuffer(data, dtype=wire, count=count, offset=offset).reshape(shape).astype(wire.type)
        offset += nBytes
        if entry["section"] == "velocity":
            velocity.append(arr)
        else:
            params.append((entry["name"], arr))

    if offset != end:
        raise CheckpointError(f"{end - offset} unexplained bytes after the tensors")

    return Checkpoint(
        modelKind=str(header["model"]),
        classNames=list(header["classes"]),
        specText=str(header["spec"]),
        params=params,
        velocity=velocity if velocity else None,
        epoch=int(header.get("epoch", 0)),
        optimizer=dict(header.get("optimizer", {})),
        history=dict(header.get("history", {})),
        trainConfig=str(header.get("train_config", "{}")),
        dtype="float32" if tag == 0 else "float64",
        trainData=dict(header.get("train_data", {})),
    )


def readCheckpoint(path: str) -> Checkpoint:
    if not os.path.isfile(path):
        raise CheckpointError(f"{path} cannot be found or is not a file")

    with open(path, "rb") as f:
        data = f.read()

    ckpt = readCheckpointBytes(data)
    msg = f"read checkpoint {path}: {ckpt.modelKind}, epoch {ckpt.epoch}"
    log.info(msg)
    return ckpt
