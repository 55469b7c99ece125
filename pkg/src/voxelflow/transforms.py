"""Record transforms: each does one basic operation, chains compose them.

Every transform is a pure function Record -> Record that touches only its
declared fields (and their "_meta" siblings); everything else passes
through untouched.
"""

import numpy as np

from .errors import VoxelflowError
from .numerics import Tensor
from .records import MissingField, Record


class TransformError(VoxelflowError):
    pass


class NotATensor(TransformError):
    def __init__(self, field):
        super().__init__(f"field {field!r} does not hold a tensor")


class RankMismatch(TransformError):
    pass


class BadMode(TransformError):
    pass


class TargetTooLarge(TransformError):
    pass


class TargetTooSmall(TransformError):
    pass


class ClassOutOfRange(TransformError):
    pass


class NameCollision(TransformError):
    pass


class Transform:
    """Base class: subclasses set `fields` and implement apply()."""

    name = "transform"
    fields = ()

    def apply(self, record):
        raise NotImplementedError

    def __call__(self, record):
        return self.apply(record)

    def _tensor(self, record, field):
        value = record[field]
        if not isinstance(value, Tensor):
            raise NotATensor(field)
        return value

    def _replace(self, record, updates):
        # rebuild preserving field order; only declared fields may change
        return Record({name: updates.get(name, value) for name, value in record.items()})


class Compose(Transform):
    """Apply stages left to right. Nested chains are flattened."""

    name = "compose"

    def __init__(self, stages):
        flat = []
        for stage in stages:
            if isinstance(stage, Compose):
                flat.extend(stage.stages)
            else:
                flat.append(stage)
        self.stages = flat
        self.fields = tuple(dict.fromkeys(f for s in flat for f in s.fields))

    def apply(self, record):
        for stage in self.stages:
            record = stage(record)
        return record


def compose(stages):
    return Compose(stages)


class NormalizeFixed(Transform):
    """x <- (x - mean) / std on each declared tensor field."""

    name = "normalize_fixed"

    def __init__(self, fields, mean, std):
        if std <= 0:
            raise TransformError(f"std must be positive, got {std}")
        self.fields = tuple(fields)
        self.mean = np.float32(mean)
        self.std = np.float32(std)

    def apply(self, record):
        updates = {}
        for field in self.fields:
            t = self._tensor(record, field)
            updates[field] = Tensor((t.data - self.mean) / self.std)
        return self._replace(record, updates)


def _resample_axis_nearest(data, axis, target):
    src = data.shape[axis]
    if src == target:
        return data
    # half-pixel-center grid mapping, round half up, clamp to the edges
    coords = (np.arange(target, dtype=np.float64) + 0.5) * (src / target) - 0.5
    idx = np.clip(np.floor(coords + 0.5).astype(np.int64), 0, src - 1)
    return np.take(data, idx, axis=axis)


def _resample_axis_linear(data, axis, target):
    src = data.shape[axis]
    if src == target:
        return data
    coords = (np.arange(target, dtype=np.float64) + 0.5) * (src / target) - 0.5
    coords = np.clip(coords, 0.0, src - 1)
    low = np.floor(coords).astype(np.int64)
    high = np.minimum(low + 1, src - 1)
    frac = (coords - low).astype(np.float32)
    shape = [1] * data.ndim
    shape[axis] = target
    frac = frac.reshape(shape)
    lo = np.take(data, low, axis=axis)
    hi = np.take(data, high, axis=axis)
    return lo * (1 - frac) + hi * frac


class ResampleToShape(Transform):
    """Per-axis separable resampling to a target shape (nearest or linear).

    Label fields should go through nearest so class ids stay exact.
    """

    name = "resample_to_shape"

    def __init__(self, fields, target_shape, mode):
        if mode not in ("nearest", "linear"):
            raise BadMode(f"mode must be nearest|linear, got {mode!r}")
        if any(int(d) < 1 for d in target_shape):
            raise TransformError(f"target dims must be positive, got {target_shape}")
        self.fields = tuple(fields)
        self.target_shape = tuple(int(d) for d in target_shape)
        self.mode = mode

    def apply(self, record):
        resample = _resample_axis_nearest if self.mode == "nearest" else _resample_axis_linear
        updates = {}
        for field in self.fields:
            t = self._tensor(record, field)
            if t.rank != len(self.target_shape):
                raise RankMismatch(f"field {field!r} has rank {t.rank}, target has {len(self.target_shape)}")
            data = t.data
            for axis, target in enumerate(self.target_shape):
                data = resample(data, axis, target)
            updates[field] = Tensor(np.ascontiguousarray(data.astype(np.float32)))
        return self._replace(record, updates)


class CropCenter(Transform):
    """Centered crop; an odd margin drops the extra voxel high-side."""

    name = "crop_center"

    def __init__(self, fields, target_shape):
        self.fields = tuple(fields)
        self.target_shape = tuple(int(d) for d in target_shape)

    def apply(self, record):
        updates = {}
        for field in self.fields:
            t = self._tensor(record, field)
            if t.rank != len(self.target_shape):
                raise RankMismatch(f"field {field!r} has rank {t.rank}, target has {len(self.target_shape)}")
            slices = []
            for axis, target in enumerate(self.target_shape):
                src = t.shape[axis]
                if target > src:
                    raise TargetTooLarge(f"axis {axis}: target {target} exceeds source {src}")
                low = (src - target) // 2
                slices.append(slice(low, low + target))
            updates[field] = Tensor(np.ascontiguousarray(t.data[tuple(slices)]))
        return self._replace(record, updates)


class PadToShape(Transform):
    """Symmetric constant padding; an odd margin adds the extra voxel
    high-side (inverse of CropCenter, so pad then crop round-trips)."""

    name = "pad_to_shape"

    def __init__(self, fields, target_shape, value=0.0):
        self.fields = tuple(fields)
        self.target_shape = tuple(int(d) for d in target_shape)
        self.value = float(value)

    def apply(self, record):
        updates = {}
        for field in self.fields:
            t = self._tensor(record, field)
            if t.rank != len(self.target_shape):
                raise RankMismatch(f"field {field!r} has rank {t.rank}, target has {len(self.target_shape)}")
            pads = []
            for axis, target in enumerate(self.target_shape):
                src = t.shape[axis]
                if target < src:
                    raise TargetTooSmall(f"axis {axis}: target {target} below source {src}")
                margin = target - src
                pads.append((margin // 2, margin - margin // 2))
            padded = np.pad(t.data, pads, constant_values=np.float32(self.value))
            updates[field] = Tensor(np.ascontiguousarray(padded))
        return self._replace(record, updates)


class Threshold(Transform):
    """Binarize: 1 where x > threshold, else 0."""

    name = "threshold"

    def __init__(self, field, value):
        self.fields = (field,)
        self.value = np.float32(value)

    def apply(self, record):
        t = self._tensor(record, self.fields[0])
        return self._replace(record, {self.fields[0]: Tensor((t.data > self.value).astype(np.float32))})


class OneHot(Transform):
    """Integer class map -> one-hot tensor with a leading class axis."""

    name = "one_hot"

    def __init__(self, field, num_classes):
        if num_classes < 1:
            raise TransformError(f"num_classes must be positive, got {num_classes}")
        self.fields = (field,)
        self.num_classes = int(num_classes)

    def apply(self, record):
        t = self._tensor(record, self.fields[0])
        data = t.data
        ids = np.rint(data).astype(np.int64)
        if np.any(np.abs(data - ids) > 1e-6) or ids.min(initial=0) < 0 or ids.max(initial=0) >= self.num_classes:
            bad = data.ravel()[int(np.argmax((ids < 0) | (ids >= self.num_classes) | (np.abs(data - ids) > 1e-6)))]
            raise ClassOutOfRange(f"value {bad} is not an integer class in [0, {self.num_classes})")
        onehot = np.zeros((self.num_classes,) + data.shape, dtype=np.float32)
        grid = np.indices(data.shape)
        onehot[(ids,) + tuple(grid)] = 1.0
        return self._replace(record, {self.fields[0]: Tensor(onehot)})


class AddChannelDim(Transform):
    name = "add_channel_dim"

    def __init__(self, field):
        self.fields = (field,)

    def apply(self, record):
        t = self._tensor(record, self.fields[0])
        return self._replace(record, {self.fields[0]: Tensor(t.data[np.newaxis].copy())})


class Rename(Transform):
    """Move a value to a new field name, keeping its position."""

    name = "rename"

    def __init__(self, old, new):
        self.fields = (old, new)
        self.old = old
        self.new = new

    def apply(self, record):
        if self.old not in record:
            raise MissingField(self.old)
        if self.new in record:
            raise NameCollision(f"field {self.new!r} already exists")
        return Record({(self.new if name == self.old else name): value for name, value in record.items()})


class KeepOnly(Transform):
    """Drop every field not listed."""

    name = "keep_only"

    def __init__(self, fields):
        self.fields = tuple(fields)

    def apply(self, record):
        for field in self.fields:
            if field not in record:
                raise MissingField(field)
        keep = set(self.fields)
        return Record({name: value for name, value in record.items() if name in keep})


class CastScalarToTensor(Transform):
    """Wrap a numeric scalar field into a shape-[] tensor."""

    name = "cast_scalar_to_tensor"

    def __init__(self, field):
        self.fields = (field,)

    def apply(self, record):
        value = record[self.fields[0]]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise NotATensor(self.fields[0])
        return self._replace(record, {self.fields[0]: Tensor(np.asarray(value, dtype=np.float32))})
