"""Datasets: ordered Record sequences loaded from JSON manifests.

Manifests hold paths and light metadata, never pixel data; volume loading
happens later in the transform chain.
"""

import json

from .errors import VoxelflowError
from .numerics import Rng
from .records import Record


class DatasetError(VoxelflowError):
    pass


class ParseError(DatasetError):
    pass


class NotAnArray(DatasetError):
    pass


class ElementNotAnObject(DatasetError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"manifest element {index} is not an object")


class MissingPhase(DatasetError):
    pass


class MalformedEntry(DatasetError):
    def __init__(self, index, reason):
        self.index = index
        super().__init__(f"entry {index}: {reason}")


class ArityMismatch(DatasetError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"item {index} does not match the declared field names")


class BadSpec(DatasetError):
    pass


class Dataset:
    """Immutable indexed sequence of Records."""

    def __init__(self, items, source_path=None):
        self.items = list(items)
        self.source_path = source_path

    def __len__(self):
        return len(self.items)

    def __getitem__(self, index):
        return self.items[index]

    def __iter__(self):
        return iter(self.items)


def _json_value(value, where):
    if isinstance(value, str):
        return value
    if isinstance(value, bool) or value is None or isinstance(value, dict):
        raise MalformedEntry(where, f"unsupported value type {type(value).__name__}")
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, list):
        return [_json_value(v, where) for v in value]
    raise MalformedEntry(where, f"unsupported value type {type(value).__name__}")


def load_json_dataset(path):
    """Load a manifest: a JSON array of flat objects, one Record each."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise DatasetError(f"cannot read {path}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(doc, list):
        raise NotAnArray(f"{path}: manifest top level must be a JSON array")
    items = []
    for i, element in enumerate(doc):
        if not isinstance(element, dict):
            raise ElementNotAnObject(i)
        items.append(Record({k: _json_value(v, i) for k, v in element.items()}))
    return Dataset(items, source_path=str(path))


def load_msd_dataset(path, phase):
    """Load a segmentation-decathlon style manifest for one phase.

    Training entries must carry image and label paths; test entries may be
    bare path strings or {"image": path} objects.
    """
    if phase not in ("training", "test"):
        raise BadSpec(f"phase must be 'training' or 'test', got {phase!r}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise DatasetError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict) or phase not in doc:
        raise MissingPhase(f"{path}: no {phase!r} section")
    items = []
    for i, entry in enumerate(doc[phase]):
        if phase == "training":
            if not isinstance(entry, dict) or "image" not in entry or "label" not in entry:
                raise MalformedEntry(i, "training entries need 'image' and 'label'")
            items.append(Record({"image": str(entry["image"]), "label": str(entry["label"])}))
        else:
            if isinstance(entry, str):
                items.append(Record({"image": entry}))
            elif isinstance(entry, dict) and "image" in entry:
                items.append(Record({"image": str(entry["image"])}))
            else:
                raise MalformedEntry(i, "test entries are path strings or {'image': path}")
    return Dataset(items, source_path=str(path))


class SplitSpec:
    def __init__(self, fractions, seed):
        fractions = [float(f) for f in fractions]
        if not fractions or any(f < 0 for f in fractions) or not any(f > 0 for f in fractions):
            raise BadSpec("fractions must be non-negative with at least one positive")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise BadSpec(f"fractions must sum to 1, got {sum(fractions)}")
        self.fractions = fractions
        self.seed = seed


def split_dataset(dataset, spec):
    """Seeded shuffle, then contiguous partition by largest-remainder
    rounding (ties go to earlier partitions)."""
    n = len(dataset)
    order = Rng(spec.seed).permutation(n)
    floors = [int(f * n) for f in spec.fractions]
    remainders = [f * n - fl for f, fl in zip(spec.fractions, floors)]
    leftover = n - sum(floors)
    # stable sort: equal remainders keep index order, so earlier splits win
    for i in sorted(range(len(floors)), key=lambda i: -remainders[i])[:leftover]:
        floors[i] += 1
    parts = []
    start = 0
    for size in floors:
        idx = order[start : start + size]
        parts.append(Dataset([dataset[i] for i in idx], source_path=dataset.source_path))
        start += size
    return parts


def dataset_adapter(source, field_names):
    """Zip positional tuples from any indexed collection into Records."""
    field_names = list(field_names)
    items = []
    for i in range(len(source)):
        row = source[i]
        if len(row) != len(field_names):
            raise ArityMismatch(i)
        items.append(Record(dict(zip(field_names, row))))
    return Dataset(items)
