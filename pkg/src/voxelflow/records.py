"""Record and Batch: the dictionary currency every pipeline stage speaks.

A Record maps field names to values (tensors, scalars, ints, strings or
lists thereof) in insertion order. Records and Batches are immutable after
construction; transforms and collation always build new instances.
"""

from collections.abc import Mapping

import numpy as np

from .errors import VoxelflowError
from .numerics import Tensor

MAX_LIST_DEPTH = 4


class MissingField(VoxelflowError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"missing field {name!r}")


class EmptyBatch(VoxelflowError):
    pass


class FieldSetMismatch(VoxelflowError):
    def __init__(self, field):
        self.field = field
        super().__init__(f"records disagree on field {field!r}")


class ShapeMismatch(VoxelflowError):
    def __init__(self, field, expected, got):
        self.field = field
        self.expected = tuple(expected)
        self.got = tuple(got)
        super().__init__(f"field {field!r}: expected shape {self.expected}, got {self.got}")


class IndexOutOfRange(VoxelflowError):
    pass


def _check_value(value, depth=0):
    if isinstance(value, (Tensor, str)):
        return
    if isinstance(value, (int, float)):  # bool passes as an integer value
        return
    if isinstance(value, (list, tuple)):
        if depth + 1 > MAX_LIST_DEPTH:
            raise VoxelflowError(f"list nesting exceeds depth {MAX_LIST_DEPTH}")
        for item in value:
            _check_value(item, depth + 1)
        return
    raise VoxelflowError(f"unsupported record value type {type(value).__name__}")


class Record(Mapping):
    """Ordered, immutable field-name -> value map."""

    __slots__ = ("_entries",)

    def __init__(self, entries):
        data = {}
        for name, value in entries.items() if isinstance(entries, Mapping) else entries:
            if not isinstance(name, str) or not name:
                raise VoxelflowError(f"field names must be non-empty strings, got {name!r}")
            if name in data:
                raise VoxelflowError(f"duplicate field {name!r}")
            _check_value(value)
            data[name] = value
        self._entries = data

    def __getitem__(self, name):
        try:
            return self._entries[name]
        except KeyError:
            raise MissingField(name) from None

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, name):
        return name in self._entries

    def fields(self):
        return tuple(self._entries)

    def with_fields(self, extra):
        """New record with `extra` entries appended (no overwrites allowed)."""
        merged = dict(self._entries)
        for name, value in extra.items():
            if name in merged:
                raise VoxelflowError(f"field {name!r} already present")
            merged[name] = value
        return Record(merged)

    def __repr__(self):
        return f"Record({list(self._entries)})"


def validate_record(record, required_fields):
    """Raise MissingField for the first required field absent from record."""
    for name in required_fields:
        if name not in record:
            raise MissingField(name)


class Batch:
    """A Record of stacked values plus its provenance."""

    __slots__ = ("entries", "batch_size", "source_indices")

    def __init__(self, entries, batch_size, source_indices):
        self.entries = entries
        self.batch_size = batch_size
        self.source_indices = tuple(source_indices)

    def __getitem__(self, name):
        return self.entries[name]

    def __contains__(self, name):
        return name in self.entries

    def fields(self):
        return self.entries.fields()

    def __repr__(self):
        return f"Batch(size={self.batch_size}, fields={list(self.entries)})"


def collate(records, indices=None):
    """Stack records into a Batch: tensors gain a leading axis, everything
    else is gathered into per-field lists."""
    records = list(records)
    if not records:
        raise EmptyBatch("cannot collate zero records")
    fields = records[0].fields()
    field_set = set(fields)
    for r in records[1:]:
        other = set(r.fields())
        if other != field_set:
            raise FieldSetMismatch(next(iter(other.symmetric_difference(field_set))))
    entries = {}
    for name in fields:
        first = records[0][name]
        if isinstance(first, Tensor):
            shape = first.shape
            for r in records[1:]:
                v = r[name]
                if not isinstance(v, Tensor):
                    raise FieldSetMismatch(name)
                if v.shape != shape:
                    raise ShapeMismatch(name, shape, v.shape)
            entries[name] = Tensor(np.stack([r[name].data for r in records]))
        else:
            entries[name] = [r[name] for r in records]
    if indices is None:
        indices = range(len(records))
    return Batch(Record(entries), len(records), indices)


def uncollate(batch, index):
    """Extract the index-th record of a batch; tensors lose the batch axis."""
    if not 0 <= index < batch.batch_size:
        raise IndexOutOfRange(f"index {index} out of range for batch of {batch.batch_size}")
    entries = {}
    for name, value in batch.entries.items():
        if isinstance(value, Tensor):
            entries[name] = Tensor(value.data[index].copy())
        else:
            entries[name] = value[index]
    return Record(entries)
