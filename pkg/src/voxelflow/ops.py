"""Losses and metrics as named modules with scalar outputs.

Losses consume probabilities (the models end in softmax) and are built
from traced tensor ops so gradients flow; metrics are plain evaluations.
"""

import numpy as np

from .errors import VoxelflowError
from .models import NamedModule
from .numerics import ShapeError, Tensor, add, div, log, mul, neg, reduce_mean, reduce_sum, relu, sub, tensor

CLAMP_EPS = 1e-7


class ShapeMismatch(ShapeError):
    pass


class NegativeSmooth(VoxelflowError):
    pass


class NotNormalized(VoxelflowError):
    pass


def _overlap_scores(pred, target, smooth):
    """Soft overlap D = (2·Σpg + s) / (Σp² + Σg² + s) per sample and class.

    Rank-1 inputs form a single group; rank >= 2 sums over the axes after
    [batch, class]. Empty-empty groups with s = 0 are defined as D = 1.
    """
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred shape {tuple(pred.shape)} != target shape {tuple(target.shape)}")
    axes = tuple(range(2, pred.rank)) if pred.rank >= 2 else None
    inter = reduce_sum(mul(pred, target), axes)
    pp = reduce_sum(mul(pred, pred), axes)
    gg = reduce_sum(mul(target, target), axes)
    # constant 1 where the denominator would be exactly 0: turns 0/0 into
    # 1/1 with zero gradient
    guard = Tensor((pp.data + gg.data + np.float32(smooth) == 0).astype(np.float32))
    s = tensor(float(smooth))
    num = add(add(mul(tensor(2.0), inter), s), guard)
    den = add(add(add(pp, gg), s), guard)
    return div(num, den)


class DiceLoss(NamedModule):
    role = "loss"

    def __init__(self, pred_field, target_field, smooth=1.0):
        if smooth < 0:
            raise NegativeSmooth(f"smooth must be non-negative, got {smooth}")
        self.smooth = float(smooth)
        super().__init__("dice_loss", [pred_field, target_field], ["dice_loss"])

    def forward(self, inputs):
        pred, target = inputs
        scores = _overlap_scores(pred, target, self.smooth)
        return [sub(tensor(1.0), reduce_mean(scores))]


class DiceMetric(NamedModule):
    role = "metric"

    def __init__(self, pred_field, target_field, smooth=1.0):
        if smooth < 0:
            raise NegativeSmooth(f"smooth must be non-negative, got {smooth}")
        self.smooth = float(smooth)
        super().__init__("dice", [pred_field, target_field], ["dice"])

    def forward(self, inputs):
        pred, target = inputs
        return [reduce_mean(_overlap_scores(Tensor(pred.data), Tensor(target.data), self.smooth))]


def _class_probs(pred):
    if pred.rank != 2:
        raise ShapeMismatch(f"predictions must be [N, C], got shape {tuple(pred.shape)}")
    rows = pred.data.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > 1e-4):
        raise NotNormalized(f"prediction rows must sum to 1 (worst: {rows[np.argmax(np.abs(rows - 1))]:.6f})")


def _as_one_hot(target, n, c):
    if target.rank == 2:
        if target.shape != (n, c):
            raise ShapeMismatch(f"one-hot target must be [{n}, {c}], got {tuple(target.shape)}")
        return target.data
    if target.rank != 1 or target.shape[0] != n:
        raise ShapeMismatch(f"target must be [{n}] ids or [{n}, {c}] one-hot, got {tuple(target.shape)}")
    ids = np.rint(target.data).astype(np.int64)
    if ids.min(initial=0) < 0 or ids.max(initial=0) >= c:
        raise ShapeMismatch(f"class id out of range [0, {c})")
    onehot = np.zeros((n, c), dtype=np.float32)
    onehot[np.arange(n), ids] = 1.0
    return onehot


class CrossEntropyLoss(NamedModule):
    """-mean log p[target]; probabilities clamped at 1e-7 before the log."""

    role = "loss"

    def __init__(self, pred_field, target_field):
        super().__init__("cross_entropy", [pred_field, target_field], ["cross_entropy"])

    def forward(self, inputs):
        pred, target = inputs
        _class_probs(pred)
        n, c = pred.shape
        onehot = Tensor(_as_one_hot(target, n, c))
        eps = tensor(CLAMP_EPS)
        clamped = add(relu(sub(pred, eps)), eps)
        picked = reduce_sum(mul(onehot, log(clamped)), axes=(1,))
        return [neg(reduce_mean(picked))]


class MseLoss(NamedModule):
    role = "loss"

    def __init__(self, pred_field, target_field):
        super().__init__("mse", [pred_field, target_field], ["mse"])

    def forward(self, inputs):
        pred, target = inputs
        if pred.shape != target.shape:
            raise ShapeMismatch(f"pred shape {tuple(pred.shape)} != target shape {tuple(target.shape)}")
        diff = sub(pred, target)
        return [reduce_mean(mul(diff, diff))]


class Accuracy(NamedModule):
    """Fraction of rows whose argmax matches the target id (ties -> lowest
    class index)."""

    role = "metric"

    def __init__(self, pred_field, target_field):
        super().__init__("accuracy", [pred_field, target_field], ["accuracy"])

    def forward(self, inputs):
        pred, target = inputs
        if pred.rank != 2:
            raise ShapeMismatch(f"predictions must be [N, C], got {tuple(pred.shape)}")
        n, c = pred.shape
        if target.rank != 1 or target.shape[0] != n:
            raise ShapeMismatch(f"target must be [{n}] class ids, got {tuple(target.shape)}")
        picked = pred.data.argmax(axis=1)
        ids = np.rint(target.data).astype(np.int64)
        return [Tensor(np.asarray((picked == ids).mean(), dtype=np.float32))]
