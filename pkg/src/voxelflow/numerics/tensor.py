"""Dense float32 tensors with reverse-mode automatic differentiation.

Tracing is explicit: ops executed inside a `with Tape():` block append
nodes to the tape; outside a tape they are plain numpy computations. The
tape is thread-local, so independent workflows can trace concurrently.
"""

import threading

import numpy as np

from ..errors import VoxelflowError
from . import kernels


class ShapeError(VoxelflowError):
    pass


class BroadcastError(ShapeError):
    pass


class AxisError(VoxelflowError):
    pass


class DomainError(VoxelflowError):
    pass


class NonScalarRoot(VoxelflowError):
    pass


_tls = threading.local()


def _active_tape():
    return getattr(_tls, "tape", None)


class Tensor:
    """Immutable dense float32 array, optionally linked to a tape node."""

    __slots__ = ("data", "node")

    def __init__(self, data, node=None):
        self.data = data
        self.node = node

    @property
    def shape(self):
        return self.data.shape

    @property
    def rank(self):
        return self.data.ndim

    def item(self):
        return float(self.data)

    def copy(self):
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={tuple(self.shape)})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(tensor(other), self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(tensor(other), self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(values):
    """Build a float32 tensor from any array-like (scalars give shape [])."""
    if isinstance(values, Tensor):
        return values
    # asarray with order="C" keeps 0-d shapes (ascontiguousarray would
    # promote them to 1-d)
    return Tensor(np.asarray(values, dtype=np.float32, order="C"))


def zeros(shape):
    return Tensor(np.zeros(shape, dtype=np.float32))


def ones(shape):
    return Tensor(np.ones(shape, dtype=np.float32))


def full(shape, value):
    return Tensor(np.full(shape, value, dtype=np.float32))


class _Node:
    __slots__ = ("op", "parents", "backward")

    def __init__(self, op, parents, backward):
        self.op = op
        self.parents = parents
        self.backward = backward


class Tape:
    """Append-only op record; node inputs always precede their consumers."""

    def __init__(self):
        self.nodes = []
        self._touched = []

    def __enter__(self):
        if _active_tape() is not None:
            raise RuntimeError("a tape is already active on this thread")
        _tls.tape = self
        return self

    def __exit__(self, *exc):
        _tls.tape = None
        # detach every tensor this tape labeled, so node ids cannot leak
        # into a later trace
        for t in self._touched:
            t.node = None
        return False

    def _leaf(self, t):
        if t.node is None:
            self.nodes.append(_Node("leaf", (), None))
            t.node = len(self.nodes) - 1
            self._touched.append(t)
        return t.node

    def _record(self, op, parents, backward, out_data):
        parent_ids = tuple(self._leaf(p) for p in parents)
        self.nodes.append(_Node(op, parent_ids, backward))
        out = Tensor(out_data, len(self.nodes) - 1)
        self._touched.append(out)
        return out

    def backward(self, root):
        """Reverse sweep from a scalar root; returns node id -> gradient."""
        if root.node is None or self.nodes[root.node] is None:
            raise ValueError("root tensor was not computed on this tape")
        if root.data.shape != ():
            raise NonScalarRoot(f"backward root must be scalar, got shape {tuple(root.data.shape)}")
        grads = {root.node: np.ones((), dtype=np.float32)}
        for nid in range(root.node, -1, -1):
            g = grads.get(nid)
            if g is None:
                continue
            node = self.nodes[nid]
            if node.backward is None:
                continue
            for pid, contrib in zip(node.parents, node.backward(g)):
                if contrib is None:
                    continue
                if pid in grads:
                    grads[pid] = grads[pid] + contrib
                else:
                    grads[pid] = contrib
        return {nid: Tensor(g) for nid, g in grads.items()}


def backward(tape, root):
    return tape.backward(root)


def _emit(op, parents, backward_fn, out_data):
    tape = _active_tape()
    if tape is None:
        return Tensor(out_data)
    return tape._record(op, parents, backward_fn, out_data)


# ---------------------------------------------------------------------------
# elementwise ops


def relu(x):
    out = np.maximum(x.data, np.float32(0))
    mask = x.data > 0
    return _emit("relu", (x,), lambda g: (np.where(mask, g, np.float32(0)),), out)


def sigmoid(x):
    # split by sign for overflow safety in float32
    d = x.data
    out = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))), np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d)))).astype(
        np.float32
    )
    return _emit("sigmoid", (x,), lambda g: (g * out * (1.0 - out),), out)


def neg(x):
    return _emit("neg", (x,), lambda g: (-g,), -x.data)


def exp(x):
    out = np.exp(x.data)
    return _emit("exp", (x,), lambda g: (g * out,), out)


def log(x):
    if np.any(x.data <= 0):
        raise DomainError("log requires all elements > 0")
    out = np.log(x.data)
    data = x.data
    return _emit("log", (x,), lambda g: (g / data,), out)


def _broadcast_check(sa, sb):
    try:
        return np.broadcast_shapes(sa, sb)
    except ValueError:
        raise BroadcastError(f"shapes {tuple(sa)} and {tuple(sb)} do not broadcast") from None


def _unbroadcast(g, shape):
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    narrow = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if narrow:
        g = g.sum(axis=narrow, keepdims=True)
    return g.astype(np.float32, copy=False)


def _binary(op, a, b, out, da, db):
    sa, sb = a.data.shape, b.data.shape
    return _emit(op, (a, b), lambda g: (_unbroadcast(da(g), sa), _unbroadcast(db(g), sb)), out)


def add(a, b):
    a, b = tensor(a), tensor(b)
    _broadcast_check(a.shape, b.shape)
    return _binary("add", a, b, a.data + b.data, lambda g: g, lambda g: g)


def sub(a, b):
    a, b = tensor(a), tensor(b)
    _broadcast_check(a.shape, b.shape)
    return _binary("sub", a, b, a.data - b.data, lambda g: g, lambda g: -g)


def mul(a, b):
    a, b = tensor(a), tensor(b)
    _broadcast_check(a.shape, b.shape)
    ad, bd = a.data, b.data
    return _binary("mul", a, b, ad * bd, lambda g: g * bd, lambda g: g * ad)


def div(a, b):
    # IEEE semantics: division by zero yields inf/nan rather than erroring
    a, b = tensor(a), tensor(b)
    _broadcast_check(a.shape, b.shape)
    ad, bd = a.data, b.data
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ad / bd
    return _binary("div", a, b, out, lambda g: g / bd, lambda g: -(g * ad) / (bd * bd))


# ---------------------------------------------------------------------------
# linear algebra / structure


def matmul(a, b):
    if a.rank != 2 or b.rank != 2:
        raise ShapeError(f"matmul requires rank-2 operands, got ranks {a.rank} and {b.rank}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dims disagree: {tuple(a.shape)} x {tuple(b.shape)}")
    ad, bd = a.data, b.data
    out = ad @ bd
    return _emit("matmul", (a, b), lambda g: (g @ bd.T, ad.T @ g), out)


def transpose(x):
    if x.rank != 2:
        raise ShapeError(f"transpose requires rank 2, got {x.rank}")
    out = np.ascontiguousarray(x.data.T)
    return _emit("transpose", (x,), lambda g: (np.ascontiguousarray(g.T),), out)


def reshape(x, new_shape):
    new_shape = tuple(int(s) for s in new_shape)
    if int(np.prod(new_shape, dtype=np.int64)) != x.data.size:
        raise ShapeError(f"cannot reshape {x.data.size} elements into {new_shape}")
    old_shape = x.data.shape
    out = np.ascontiguousarray(x.data).reshape(new_shape)
    return _emit("reshape", (x,), lambda g: (g.reshape(old_shape),), out)


def concat(tensors, axis):
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat requires at least one input")
    rank = tensors[0].rank
    if not 0 <= axis < rank:
        raise AxisError(f"concat axis {axis} invalid for rank {rank}")
    ref = list(tensors[0].shape)
    for t in tensors[1:]:
        if t.rank != rank:
            raise ShapeError("concat inputs must share rank")
        for d in range(rank):
            if d != axis and t.shape[d] != ref[d]:
                raise ShapeError(f"concat inputs disagree on non-concat dim {d}")
    sizes = [t.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _emit("concat", tuple(tensors), bwd, out)


# ---------------------------------------------------------------------------
# convolution / pooling


def conv2d(x, w, bias=None, stride=1, padding=0):
    """Cross-correlation of NCHW input with OIHW weights, zero padding."""
    if x.rank != 4 or w.rank != 4:
        raise ShapeError("conv2d requires rank-4 input and weights")
    if stride < 1 or padding < 0:
        raise ShapeError(f"bad stride/padding: {stride}/{padding}")
    n, cin, h, wd = x.shape
    cout, wcin, kh, kw = w.shape
    if wcin != cin:
        raise ShapeError(f"weight expects {wcin} input channels, input has {cin}")
    if h + 2 * padding < kh or wd + 2 * padding < kw:
        raise ShapeError(f"kernel {kh}x{kw} exceeds padded input {h + 2 * padding}x{wd + 2 * padding}")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"bias must have shape ({cout},), got {tuple(bias.shape)}")

    xd = np.ascontiguousarray(x.data)
    wd_ = np.ascontiguousarray(w.data)
    out = kernels.conv2d_forward(xd, wd_, stride, padding)
    if bias is not None:
        out = out + bias.data.reshape(1, cout, 1, 1)

    if bias is None:

        def bwd(g):
            dx, dw = kernels.conv2d_backward(np.ascontiguousarray(g), xd, wd_, stride, padding)
            return dx, dw

        return _emit("conv2d", (x, w), bwd, out)

    def bwd_b(g):
        g = np.ascontiguousarray(g)
        dx, dw = kernels.conv2d_backward(g, xd, wd_, stride, padding)
        return dx, dw, g.sum(axis=(0, 2, 3))

    return _emit("conv2d", (x, w, bias), bwd_b, out)


def maxpool2(x):
    """2x2 max pooling, stride 2; gradient routes to the first max on ties."""
    if x.rank != 4:
        raise ShapeError("maxpool2 requires rank-4 input")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2 requires even spatial dims, got {h}x{w}")
    out, idx = kernels.maxpool2_forward(np.ascontiguousarray(x.data))
    return _emit("maxpool2", (x,), lambda g: (kernels.maxpool2_backward(np.ascontiguousarray(g), idx),), out)


def upsample_nearest2(x):
    """Double both spatial dims by pixel replication."""
    if x.rank != 4:
        raise ShapeError("upsample_nearest2 requires rank-4 input")
    n, c, h, w = x.shape
    out = np.ascontiguousarray(np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3))

    def bwd(g):
        return (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),)

    return _emit("upsample_nearest2", (x,), bwd, out)


# ---------------------------------------------------------------------------
# reductions


def _check_axes(axes, rank):
    if axes is None:
        return tuple(range(rank))
    axes = tuple(int(a) for a in axes)
    if len(set(axes)) != len(axes):
        raise AxisError(f"duplicate axes {axes}")
    for a in axes:
        if not 0 <= a < rank:
            raise AxisError(f"axis {a} invalid for rank {rank}")
    return tuple(sorted(axes))


def reduce_sum(x, axes=None):
    axes = _check_axes(axes, x.rank)
    out = x.data.sum(axis=axes)
    shape = x.data.shape

    def bwd(g):
        expanded = np.expand_dims(g, axes) if axes else g
        return (np.broadcast_to(expanded, shape).astype(np.float32, copy=True),)

    return _emit("sum", (x,), bwd, np.asarray(out, dtype=np.float32))


def reduce_mean(x, axes=None):
    axes = _check_axes(axes, x.rank)
    count = int(np.prod([x.data.shape[a] for a in axes])) if axes else 1
    out = x.data.sum(axis=axes) / np.float32(count)
    shape = x.data.shape

    def bwd(g):
        expanded = np.expand_dims(g, axes) if axes else g
        return ((np.broadcast_to(expanded, shape) / np.float32(count)).astype(np.float32, copy=True),)

    return _emit("mean", (x,), bwd, np.asarray(out, dtype=np.float32))


def reduce_max(x, axes=None):
    axes = _check_axes(axes, x.rank)
    if not axes:
        data = x.data
        return _emit("max", (x,), lambda g: (g,), data.copy())
    kept = tuple(a for a in range(x.rank) if a not in axes)
    moved = np.transpose(x.data, kept + axes)
    kept_shape = moved.shape[: len(kept)]
    flat = moved.reshape(kept_shape + (-1,))
    # first occurrence in row-major order of the reduced subspace
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    src_shape = x.data.shape
    inv = np.argsort(kept + axes)

    def bwd(g):
        dflat = np.zeros_like(flat)
        np.put_along_axis(dflat, arg[..., None], g[..., None], axis=-1)
        dmoved = dflat.reshape(moved.shape)
        return (np.ascontiguousarray(np.transpose(dmoved, inv)),)

    return _emit("max", (x,), bwd, np.asarray(out, order="C"))


def softmax(x, axis):
    if not 0 <= axis < x.rank:
        raise AxisError(f"softmax axis {axis} invalid for rank {x.rank}")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - inner),)

    return _emit("softmax", (x,), bwd, out.astype(np.float32, copy=False))
