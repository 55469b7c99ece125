"""Shared test machinery: the finite-difference gradient oracle (float64
reference implementations, independent of the library's kernels) and
synthetic dataset builders."""

import json
import os

import numpy as np

from voxelflow.io_formats import write_nifti
from voxelflow.numerics import Tape, Tensor, reduce_sum, mul, tensor

# ---------------------------------------------------------------------------
# finite-difference oracle


def fd_gradient(fn, arrays, which, h=1e-3):
    """Central differences of scalar fn(*arrays) w.r.t. arrays[which].

    fn must be a float64 reference implementation, independent of the
    library code under test.
    """
    base = [np.array(a, dtype=np.float64) for a in arrays]
    x = base[which]
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn(*base)
        flat[i] = orig - h
        fm = fn(*base)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def autodiff_gradients(op, tensors, weights):
    """Gradients of sum(weights * op(*tensors)) for every input tensor."""
    with Tape() as tape:
        out = op(*tensors)
        loss = reduce_sum(mul(out, tensor(weights)))
        grads = tape.backward(loss)
        return [
            grads[t.node].data.copy() if t.node is not None and t.node in grads else np.zeros_like(t.data)
            for t in tensors
        ]


def assert_gradients_match(op, ref, arrays, rtol=1e-2, h=1e-3, check_inputs=None):
    """Compare tape gradients of op against finite differences of ref.

    Relative error uses max(1, |fd|) as denominator. `check_inputs` limits
    which inputs are differentiated (e.g. to skip binary targets).
    """
    tensors = [Tensor(np.asarray(a, dtype=np.float32, order="C")) for a in arrays]
    out_shape = op(*tensors).shape
    rng = np.random.RandomState(1234 + sum(a.size for a in arrays))
    weights = rng.uniform(-1, 1, out_shape).astype(np.float32) if out_shape else np.float32(1.0)

    auto = autodiff_gradients(op, tensors, weights)

    def scalar_ref(*args):
        return float(np.sum(np.asarray(weights, dtype=np.float64) * ref(*args)))

    for which in check_inputs if check_inputs is not None else range(len(arrays)):
        fd = fd_gradient(scalar_ref, arrays, which, h=h)
        err = np.abs(auto[which].astype(np.float64) - fd) / np.maximum(1.0, np.abs(fd))
        assert err.max() < rtol, f"input {which}: max rel err {err.max():.4g} (tolerance {rtol})"


def ref_conv2d(x, w, b=None, stride=1, pad=0):
    """Naive float64 convolution, written independently of the kernels."""
    n, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    xp = np.zeros((n, cin, h + 2 * pad, wd + 2 * pad), dtype=np.float64)
    xp[:, :, pad : pad + h, pad : pad + wd] = x
    y = np.zeros((n, cout, ho, wo), dtype=np.float64)
    for bi in range(n):
        for co in range(cout):
            for i in range(ho):
                for j in range(wo):
                    acc = 0.0
                    for ci in range(cin):
                        for ki in range(kh):
                            for kj in range(kw):
                                acc += xp[bi, ci, i * stride + ki, j * stride + kj] * w[co, ci, ki, kj]
                    y[bi, co, i, j] = acc + (b[co] if b is not None else 0.0)
    return y


def ref_maxpool2(x):
    n, c, h, w = x.shape
    return x.reshape(n, c, h // 2, 2, w // 2, 2).max(axis=(3, 5))


def ref_upsample2(x):
    return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)


def ref_softmax(x, axis):
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def ref_dice(p, g, smooth):
    axes = tuple(range(2, p.ndim)) if p.ndim >= 2 else None
    inter = (p * g).sum(axis=axes)
    denom = (p * p).sum(axis=axes) + (g * g).sum(axis=axes) + smooth
    return (2.0 * inter + smooth) / denom


def distinct_values(rng, shape, lo=-1.0, hi=1.0):
    """Array with all-distinct entries (keeps max/pool argmax FD-safe)."""
    n = int(np.prod(shape))
    base = np.linspace(lo, hi, n) + rng.uniform(-0.2, 0.2, n) / max(n, 1)
    rng.shuffle(base)
    return base.reshape(shape)


# ---------------------------------------------------------------------------
# synthetic segmentation data


def make_disk_dataset(root, count, size=16, seed=0, noise=0.1, prefix=""):
    """Random bright disks on noise: images + binary masks as NIfTI pairs.

    Returns the manifest item list (paths relative to root).
    """
    rng = np.random.RandomState(seed)
    os.makedirs(root, exist_ok=True)
    items = []
    yy, xx = np.mgrid[0:size, 0:size]
    for i in range(count):
        cy, cx = rng.uniform(size * 0.25, size * 0.75, 2)
        radius = rng.uniform(size * 0.15, size * 0.3)
        mask = (((yy - cy) ** 2 + (xx - cx) ** 2) <= radius * radius).astype(np.float32)
        image = mask + rng.randn(size, size).astype(np.float32) * noise
        write_nifti(os.path.join(root, f"{prefix}img{i:03d}.nii"), Tensor(image.astype(np.float32)))
        write_nifti(os.path.join(root, f"{prefix}lbl{i:03d}.nii"), Tensor(mask))
        items.append({"image": f"{prefix}img{i:03d}.nii", "label": f"{prefix}lbl{i:03d}.nii"})
    return items


def write_manifest(path, items):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(items, f)


def segmentation_config(seed=42, epochs=40, lr=0.01, batch_size=8, base_channels=4, extra_hooks=()):
    """Golden-shaped config for the synthetic disk task: train + validate."""

    def phase_transforms():
        return [
            {"type": "LoadNifti", "params": {"fields": ["image", "label"]}},
            {"type": "AddChannelDim", "params": {"field": "image"}},
            {"type": "OneHot", "params": {"field": "label", "num_classes": 2}},
            {"type": "NormalizeFixed", "params": {"fields": ["image"], "mean": 0.5, "std": 0.5}},
        ]

    model = {"type": "TinyUNet", "params": {"in_channels": 1, "base_channels": base_channels, "num_classes": 2}}
    return {
        "version": "1.0",
        "seed": seed,
        "data_root": "./data",
        "output_dir": "./out",
        "phases": {
            "train": {
                "dataset": {"type": "JsonDataset", "params": {"path": "train.json"}},
                "transforms": phase_transforms(),
                "model": model,
                "losses": [{"type": "DiceLoss", "params": {"pred": "predictions", "target": "label", "smooth": 1.0}}],
                "metrics": [{"type": "DiceMetric", "params": {"pred": "predictions", "target": "label"}}],
                "optimizer": {"type": "Adam", "params": {"lr": lr}},
                "workflow": {
                    "type": "Training",
                    "params": {"epochs": epochs, "batch_size": batch_size, "shuffle": True},
                },
                "hooks": [
                    {"type": "SummaryHook", "params": {"path": "train_summary.jsonl"}},
                    *extra_hooks,
                ],
            },
            "validate": {
                "dataset": {"type": "JsonDataset", "params": {"path": "val.json"}},
                "transforms": phase_transforms(),
                "model": model,
                "losses": [{"type": "DiceLoss", "params": {"pred": "predictions", "target": "label", "smooth": 1.0}}],
                "metrics": [{"type": "DiceMetric", "params": {"pred": "predictions", "target": "label"}}],
                "workflow": {"type": "Validation", "params": {"batch_size": 8}},
                "hooks": [{"type": "SummaryHook", "params": {"path": "val_summary.jsonl"}}],
            },
        },
    }


def prepare_segmentation_run(root, train_count=32, val_count=8, size=16, seed=42, **config_kw):
    """Write fixtures + config under root; returns the config path."""
    data_dir = os.path.join(root, "data")
    train_items = make_disk_dataset(data_dir, train_count, size=size, seed=7)
    val_items = make_disk_dataset(data_dir, val_count, size=size, seed=1007, prefix="val_")
    write_manifest(os.path.join(data_dir, "train.json"), train_items)
    write_manifest(os.path.join(data_dir, "val.json"), val_items)
    config = segmentation_config(seed=seed, **config_kw)
    config["data_root"] = data_dir
    config["output_dir"] = os.path.join(root, "out")
    config_path = os.path.join(root, "config.json")
    with open(config_path, "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2)
    return config_path
