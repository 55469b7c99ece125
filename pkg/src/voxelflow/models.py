"""Named-input/named-output computational modules.

A NamedModule declares which batch fields it consumes and produces, which
is what lets workflows route batch content automatically. Two reference
architectures are provided (an MLP and a two-level encoder-decoder) plus
an adapter for wrapping plain tensor functions.
"""

import inspect

import numpy as np

from .errors import VoxelflowError
from .numerics import (
    Parameter,
    Rng,
    ShapeError,
    Tensor,
    add,
    concat,
    conv2d,
    matmul,
    maxpool2,
    relu,
    sigmoid,
    softmax,
    transpose,
    upsample_nearest2,
)
from .records import Batch, MissingField


class BadSpec(VoxelflowError):
    pass


class ArityMismatch(VoxelflowError):
    pass


class OutputCollision(VoxelflowError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"batch already contains output field {name!r}")


class NamedModule:
    """Computational unit with declared input/output field names."""

    def __init__(self, name, input_names, output_names, parameters=(), descriptor=None):
        self.name = name
        self.input_names = tuple(input_names)
        self.output_names = tuple(output_names)
        self.parameters = list(parameters)
        self.descriptor = descriptor

    def forward(self, inputs):
        raise NotImplementedError


class Mlp(NamedModule):
    """Dense stack W·x + b; Glorot-uniform weights, zero biases."""

    def __init__(self, layer_sizes, activation="relu", final="logits", seed=0):
        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
            raise BadSpec(f"layer_sizes needs >= 2 positive entries, got {layer_sizes}")
        if activation not in ("relu", "sigmoid"):
            raise BadSpec(f"activation must be relu|sigmoid, got {activation!r}")
        if final not in ("logits", "softmax"):
            raise BadSpec(f"final must be logits|softmax, got {final!r}")
        rng = Rng(seed)
        params = []
        self.layers = []
        for i, (fan_in, fan_out) in enumerate(zip(layer_sizes, layer_sizes[1:])):
            w = Parameter(f"layer{i}.weight", Tensor(rng.glorot_uniform((fan_out, fan_in), fan_in, fan_out)))
            b = Parameter(f"layer{i}.bias", Tensor(np.zeros(fan_out, dtype=np.float32)))
            params += [w, b]
            self.layers.append((w, b))
        self.activation = activation
        self.final = final
        super().__init__("mlp", ["x"], ["y_pred"], params)

    def forward(self, inputs):
        (x,) = inputs
        act = relu if self.activation == "relu" else sigmoid
        h = x
        for i, (w, b) in enumerate(self.layers):
            h = add(matmul(h, transpose(w.value)), b.value)
            if i < len(self.layers) - 1:
                h = act(h)
        if self.final == "softmax":
            h = softmax(h, axis=1)
        return [h]


class _ConvLayer:
    """3x3 (or kxk) conv + bias, he-normal init."""

    def __init__(self, prefix, cin, cout, k, rng, params):
        fan_in = cin * k * k
        self.weight = Parameter(f"{prefix}.weight", Tensor(rng.he_normal((cout, cin, k, k), fan_in)))
        self.bias = Parameter(f"{prefix}.bias", Tensor(np.zeros(cout, dtype=np.float32)))
        self.padding = k // 2
        params += [self.weight, self.bias]

    def __call__(self, x):
        return conv2d(x, self.weight.value, bias=self.bias.value, stride=1, padding=self.padding)


class TinyUNet(NamedModule):
    """Two-level encoder-decoder with skip concatenation and a softmax head.

    Input [N, in_channels, H, W] with H and W divisible by 4; output
    [N, num_classes, H, W] of per-pixel class probabilities.
    """

    def __init__(self, in_channels, base_channels, num_classes, seed=0):
        if min(in_channels, base_channels, num_classes) < 1:
            raise BadSpec("channel counts must be positive")
        rng = Rng(seed)
        params = []
        b = base_channels
        self.enc1 = _ConvLayer("enc1.conv", in_channels, b, 3, rng, params)
        self.enc2 = _ConvLayer("enc2.conv", b, 2 * b, 3, rng, params)
        self.bottleneck = _ConvLayer("bottleneck.conv", 2 * b, 4 * b, 3, rng, params)
        self.dec2 = _ConvLayer("dec2.conv", 4 * b + 2 * b, 2 * b, 3, rng, params)
        self.dec1 = _ConvLayer("dec1.conv", 2 * b + b, b, 3, rng, params)
        self.head = _ConvLayer("head.conv", b, num_classes, 1, rng, params)
        super().__init__("tiny_unet", ["image"], ["predictions"], params)

    def forward(self, inputs):
        (x,) = inputs
        if x.rank != 4:
            raise ShapeError(f"expected [N,C,H,W] input, got rank {x.rank}")
        h, w = x.shape[2], x.shape[3]
        if h % 4 or w % 4:
            raise ShapeError(f"spatial dims must be divisible by 4, got {h}x{w}")
        e1 = relu(self.enc1(x))
        e2 = relu(self.enc2(maxpool2(e1)))
        mid = relu(self.bottleneck(maxpool2(e2)))
        d2 = relu(self.dec2(concat([upsample_nearest2(mid), e2], axis=1)))
        d1 = relu(self.dec1(concat([upsample_nearest2(d2), e1], axis=1)))
        return [softmax(self.head(d1), axis=1)]


class ModuleAdapter(NamedModule):
    """Wrap a positional tensor function as a NamedModule."""

    def __init__(self, fn, input_names, output_names, parameters=(), name=None):
        try:
            arity = len(inspect.signature(fn).parameters)
        except (TypeError, ValueError):
            arity = len(input_names)
        if arity != len(input_names):
            raise ArityMismatch(f"function takes {arity} args but {len(input_names)} input names declared")
        self._fn = fn
        super().__init__(name or getattr(fn, "__name__", "adapter"), input_names, output_names, parameters)

    def forward(self, inputs):
        out = self._fn(*inputs)
        if isinstance(out, Tensor):
            out = [out]
        return list(out)


def module_adapter(fn, input_names, output_names, parameters=(), name=None):
    return ModuleAdapter(fn, input_names, output_names, parameters, name=name)


def apply_to_batch(module, batch):
    """Route batch fields through a module by name.

    Returns an extended copy of the batch with the module's outputs added;
    an already-present output field is an error, never an overwrite.
    """
    inputs = []
    for name in module.input_names:
        if name not in batch:
            raise MissingField(name)
        value = batch[name]
        if not isinstance(value, Tensor):
            raise MissingField(f"{name} (present but not a tensor)")
        inputs.append(value)
    outputs = module.forward(inputs)
    if len(outputs) != len(module.output_names):
        raise VoxelflowError(
            f"{module.name}: forward returned {len(outputs)} outputs for {len(module.output_names)} names"
        )
    for name in module.output_names:
        if name in batch:
            raise OutputCollision(name)
    extended = batch.entries.with_fields(dict(zip(module.output_names, outputs)))
    return Batch(extended, batch.batch_size, batch.source_indices)
