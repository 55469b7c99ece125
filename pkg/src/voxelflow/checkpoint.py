"""Portable binary checkpoints.

Layout: magic "EISN", u32 LE version, u32 LE header length, a UTF-8 JSON
header {model: {type, params}, tensors: [{name, shape, offset}]}, then
contiguous float32 little-endian blobs at the stated offsets (relative to
the end of the header). The embedded construction descriptor lets a
registry rebuild the module before the parameter table overwrites it.
"""

import json
import struct

import numpy as np

from .errors import VoxelflowError
from .numerics import Tensor

MAGIC = b"EISN"
VERSION = 1


class CheckpointError(VoxelflowError):
    pass


class BadMagic(CheckpointError):
    pass


class VersionMismatch(CheckpointError):
    pass


class UnknownModelType(CheckpointError):
    pass


class ParamTableMismatch(CheckpointError):
    def __init__(self, name, reason=""):
        self.name = name
        super().__init__(f"parameter {name!r}: {reason or 'not in model'}")


class ModelSnapshot:
    """Deep copy of a model's parameters plus its construction descriptor."""

    __slots__ = ("descriptor", "params")

    def __init__(self, descriptor, params):
        self.descriptor = descriptor
        self.params = list(params)  # ordered (name, float32 ndarray) pairs


def snapshot_model(model, descriptor=None):
    if descriptor is None:
        descriptor = model.descriptor
    return ModelSnapshot(descriptor, [(p.name, p.value.data.copy()) for p in model.parameters])


def write_snapshot(snapshot, path):
    tensors = []
    offset = 0
    blobs = []
    for name, data in snapshot.params:
        blob = np.ascontiguousarray(data, dtype="<f4").tobytes()
        tensors.append({"name": name, "shape": list(data.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    descriptor = snapshot.descriptor or {"type": "unknown", "params": {}}
    header = json.dumps({"model": descriptor, "tensors": tensors}, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)


def save_model(model, descriptor, path):
    """Serialize a model's parameters with its construction descriptor."""
    write_snapshot(snapshot_model(model, descriptor), path)


def read_snapshot(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise BadMagic(f"{path}: not a checkpoint file")
    version, header_len = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise VersionMismatch(f"{path}: version {version}, expected {VERSION}")
    if len(raw) < 12 + header_len:
        raise BadMagic(f"{path}: truncated header")
    try:
        header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise BadMagic(f"{path}: corrupt header: {e}") from e
    payload = raw[12 + header_len :]
    params = []
    for entry in header["tensors"]:
        shape = tuple(int(s) for s in entry["shape"])
        count = 1
        for s in shape:
            count *= s
        start = int(entry["offset"])
        end = start + 4 * count
        if end > len(payload):
            raise BadMagic(f"{path}: truncated payload for {entry['name']!r}")
        data = np.frombuffer(payload[start:end], dtype="<f4").reshape(shape)
        params.append((entry["name"], np.ascontiguousarray(data)))
    return ModelSnapshot(header["model"], params)


def load_model(path, registry):
    """Rebuild the checkpointed model: construct from the embedded
    descriptor via the registry, then overwrite every parameter."""
    snapshot = read_snapshot(path)
    descriptor = snapshot.descriptor or {}
    type_name = descriptor.get("type")
    entry = registry.get(type_name)
    if entry is None or entry.category != "model":
        raise UnknownModelType(f"{path}: registry cannot construct {type_name!r}")
    model = registry.construct(type_name, descriptor.get("params", {}), seed=0)
    restore_parameters(model, snapshot)
    return model


def restore_parameters(model, snapshot):
    if len(model.parameters) != len(snapshot.params):
        raise ParamTableMismatch(
            "<table>", f"checkpoint has {len(snapshot.params)} tensors, model has {len(model.parameters)}"
        )
    for param, (name, data) in zip(model.parameters, snapshot.params):
        if param.name != name:
            raise ParamTableMismatch(name, f"model expects {param.name!r} at this position")
        if param.value.shape != data.shape:
            raise ParamTableMismatch(name, f"shape {data.shape} != model shape {tuple(param.value.shape)}")
        param.value = Tensor(data.copy())
