"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. Tolerances and case
counts are pinned here; the gradient oracle is the float64 reference suite
from helpers, independent of the library kernels.
"""

import json
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

import helpers
from test_io_formats import byteswap_nifti
from voxelflow.checkpoint import load_model, save_model
from voxelflow.cli import cli
from voxelflow.config import default_registry
from voxelflow.datasets import Dataset
from voxelflow.hooks import SaveBestModelHook, SummaryHook
from voxelflow.io_formats import VolumeMeta, read_nifti, write_nifti
from voxelflow.models import Mlp, TinyUNet
from voxelflow.numerics import (
    Adam,
    Rng,
    Tensor,
    add,
    concat,
    conv2d,
    div,
    exp,
    log,
    matmul,
    maxpool2,
    mul,
    neg,
    reduce_max,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    sigmoid,
    softmax,
    sub,
    tensor,
    transpose,
    upsample_nearest2,
)
from voxelflow.ops import Accuracy, CrossEntropyLoss, DiceLoss, MseLoss
from voxelflow.records import Record
from voxelflow.transforms import (
    AddChannelDim,
    CropCenter,
    NormalizeFixed,
    PadToShape,
    ResampleToShape,
    Threshold,
    compose,
)
from voxelflow.workflows import EPOCH_END, EventBus, LoaderSpec, WorkflowSpec, run_training


@contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"\n[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"\n[ACCEPTANCE] {name}: PASS")


# ---------------------------------------------------------------------------
# 1. gradient oracle


def _gradient_cases():
    """(name, sampler) pairs; sampler(rng) -> (op, ref, arrays, check_inputs)."""

    def shape(rng, rank=None, lo=1, hi=4):
        rank = rank if rank is not None else rng.randint(1, 4)
        return tuple(int(rng.randint(lo, hi + 1)) for _ in range(rank))

    def away(rng, s, margin=0.1):
        return rng.uniform(margin, 1.0, s) * rng.choice([-1.0, 1.0], s)

    def pair(rng):
        s = shape(rng)
        if rng.rand() < 0.5:
            return s, s
        other = tuple(1 if rng.rand() < 0.5 else d for d in s)
        return (s, other) if rng.rand() < 0.5 else (other, s)

    dice = DiceLoss("p", "g", smooth=1.0)
    ce = CrossEntropyLoss("p", "g")
    mse = MseLoss("p", "g")

    def conv_case(rng):
        cin, cout = rng.randint(1, 3, 2)
        k = int(rng.choice([1, 2, 3]))
        stride, pad = int(rng.choice([1, 2])), int(rng.choice([0, 1]))
        h, w = int(rng.randint(k, k + 3)), int(rng.randint(k, k + 3))
        arrays = [
            rng.uniform(-1, 1, (1, cin, h, w)),
            rng.uniform(-1, 1, (cout, cin, k, k)),
            rng.uniform(-1, 1, (cout,)),
        ]
        return (
            lambda x, wt, b: conv2d(x, wt, bias=b, stride=stride, padding=pad),
            lambda x, wt, b: helpers.ref_conv2d(x, wt, b, stride=stride, pad=pad),
            arrays,
            None,
        )

    def reduce_case(op, ref_fn, needs_distinct=False):
        def sampler(rng):
            s = shape(rng)
            k = rng.randint(0, len(s) + 1)
            axes = tuple(sorted(rng.choice(len(s), size=k, replace=False).tolist())) if k else None
            x = helpers.distinct_values(rng, s) if needs_distinct else rng.uniform(-1, 1, s)
            return (lambda t: op(t, axes), lambda v: ref_fn(v, axes), [x], None)

        return sampler

    def ce_case(rng):
        n, c = rng.randint(2, 5), rng.randint(2, 5)
        raw = rng.uniform(0.2, 1.0, (n, c))
        p = raw / raw.sum(axis=1, keepdims=True)
        ids = rng.randint(0, c, n).astype(np.float64)

        def ref(p_, ids_):
            picked = p_[np.arange(n), ids_.astype(np.int64)]
            return -np.log(np.maximum(picked, 1e-7)).mean()

        return (lambda pt, gt: ce.forward([pt, gt])[0], ref, [p, ids], [0])

    return [
        ("relu", lambda rng: (relu, lambda x: np.maximum(x, 0.0), [away(rng, shape(rng))], None)),
        ("sigmoid", lambda rng: (sigmoid, lambda x: 1 / (1 + np.exp(-x)), [rng.uniform(-1, 1, shape(rng))], None)),
        ("neg", lambda rng: (neg, lambda x: -x, [rng.uniform(-1, 1, shape(rng))], None)),
        ("exp", lambda rng: (exp, np.exp, [rng.uniform(-1, 1, shape(rng))], None)),
        ("log", lambda rng: (log, np.log, [rng.uniform(0.2, 3.0, shape(rng))], None)),
        ("add", lambda rng: (add, lambda a, b: a + b, [rng.uniform(-1, 1, s) for s in pair(rng)], None)),
        ("sub", lambda rng: (sub, lambda a, b: a - b, [rng.uniform(-1, 1, s) for s in pair(rng)], None)),
        ("mul", lambda rng: (mul, lambda a, b: a * b, [rng.uniform(-1, 1, s) for s in pair(rng)], None)),
        (
            "div",
            lambda rng: (
                div,
                lambda a, b: a / b,
                (lambda sa, sb: [rng.uniform(-1, 1, sa), away(rng, sb, margin=0.4)])(*pair(rng)),
                None,
            ),
        ),
        (
            "matmul",
            lambda rng: (
                matmul,
                lambda a, b: a @ b,
                (lambda m, k, n: [rng.uniform(-1, 1, (m, k)), rng.uniform(-1, 1, (k, n))])(*rng.randint(1, 5, 3)),
                None,
            ),
        ),
        ("transpose", lambda rng: (transpose, lambda x: x.T, [rng.uniform(-1, 1, shape(rng, 2))], None)),
        ("conv2d", conv_case),
        (
            "maxpool2",
            lambda rng: (
                maxpool2,
                helpers.ref_maxpool2,
                [helpers.distinct_values(rng, (1, rng.randint(1, 3), 2 * rng.randint(1, 4), 2 * rng.randint(1, 4)))],
                None,
            ),
        ),
        (
            "upsample_nearest2",
            lambda rng: (
                upsample_nearest2,
                helpers.ref_upsample2,
                [rng.uniform(-1, 1, (1, rng.randint(1, 3), rng.randint(1, 4), rng.randint(1, 4)))],
                None,
            ),
        ),
        ("reduce_sum", reduce_case(reduce_sum, lambda x, axes: x.sum(axis=axes))),
        ("reduce_mean", reduce_case(reduce_mean, lambda x, axes: x.mean(axis=axes))),
        ("reduce_max", reduce_case(reduce_max, lambda x, axes: x.max(axis=axes), needs_distinct=True)),
        (
            "softmax",
            lambda rng: (
                (lambda s, ax: (lambda t: softmax(t, ax), lambda x: helpers.ref_softmax(x, ax), [rng.uniform(-1, 1, s)], None))(
                    shape(rng), 0
                )
            ),
        ),
        (
            "reshape",
            lambda rng: (
                (lambda s: (lambda t: reshape(t, (int(np.prod(s)),)), lambda x: x.reshape(-1), [rng.uniform(-1, 1, s)], None))(
                    shape(rng, 2)
                )
            ),
        ),
        (
            "concat",
            lambda rng: (
                (
                    lambda base, ax, nb: (
                        lambda a, b: concat([a, b], ax),
                        lambda a, b: np.concatenate([a, b], axis=ax),
                        [rng.uniform(-1, 1, base), rng.uniform(-1, 1, nb)],
                        None,
                    )
                )(
                    *(
                        lambda s, ax: (
                            s,
                            ax,
                            tuple(d if i != ax else rng.randint(1, 4) for i, d in enumerate(s)),
                        )
                    )(shape(rng, 3), rng.randint(0, 3))
                )
            ),
        ),
        (
            "dice_loss",
            lambda rng: (
                (lambda s: (
                    lambda pt, gt: dice.forward([pt, gt])[0],
                    lambda p_, g_: 1.0 - helpers.ref_dice(p_, g_, 1.0).mean(),
                    [rng.uniform(0.05, 0.95, s), (rng.rand(*s) > 0.5).astype(np.float64)],
                    [0],
                ))((rng.randint(1, 3), rng.randint(1, 3), rng.randint(2, 5)))
            ),
        ),
        ("cross_entropy", ce_case),
        (
            "mse",
            lambda rng: (
                (lambda s: (
                    lambda pt, gt: mse.forward([pt, gt])[0],
                    lambda p_, g_: ((p_ - g_) ** 2).mean(),
                    [rng.uniform(-1, 1, s), rng.uniform(-1, 1, s)],
                    None,
                ))(shape(rng))
            ),
        ),
    ]


def test_gradient_oracle():
    """Every differentiable op + the losses vs the 64-bit FD oracle:
    rel err < 1e-2, >= 100 instances, under 30 seconds."""
    with criterion("gradient-oracle"):
        start = time.time()
        total = 0
        for name, case in _gradient_cases():
            rng = np.random.RandomState(abs(hash(name)) % (2**31))
            for _ in range(6):
                op, ref, arrays, check_inputs = case(rng)
                helpers.assert_gradients_match(op, ref, arrays, rtol=1e-2, h=1e-3, check_inputs=check_inputs)
                total += 1
        elapsed = time.time() - start
        assert total >= 100, f"only {total} instances"
        assert elapsed < 30.0, f"gradient oracle took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 2. classification convergence


def test_classification_convergence():
    """MLP [2,16,2] + cross-entropy on 200 two-cluster points, Adam 1e-2,
    <= 100 epochs, accuracy >= 0.95, under 60 seconds."""
    with criterion("convergence-classification"):
        start = time.time()
        rng = Rng(2025)
        items = []
        for i in range(200):
            cls = i % 2
            center = -1.0 if cls == 0 else 1.0
            point = [rng.normal(center, 0.6), rng.normal(center, 0.6)]
            items.append(Record({"x": tensor(point), "target": tensor(float(cls))}))
        model = Mlp([2, 16, 2], activation="relu", final="softmax", seed=5)
        spec = WorkflowSpec(
            kind="training",
            model=model,
            losses=[CrossEntropyLoss("y_pred", "target")],
            metrics=[Accuracy("y_pred", "target")],
            optimizer=Adam(1e-2),
            loader=LoaderSpec(batch_size=20, shuffle=True, seed=3),
            epochs=60,
            workflow_id="train",
        )
        _, history = run_training(spec, Dataset(items), None, EventBus())
        elapsed = time.time() - start
        assert spec.epochs <= 100
        assert history[-1].metrics["accuracy"] >= 0.95
        assert elapsed < 60.0, f"classification took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 3. segmentation convergence end to end through config + CLI


def test_segmentation_convergence_via_cli(tmp_path):
    """TinyUNet + DiceLoss on 32 synthetic disk volumes (NIfTI fixtures via
    LoadNifti), <= 200 epochs, held-out 8-image validation dice >= 0.90,
    under 5 minutes."""
    with criterion("convergence-segmentation"):
        start = time.time()
        config_path = helpers.prepare_segmentation_run(
            str(tmp_path), train_count=32, val_count=8, size=16, epochs=40, lr=0.01, batch_size=8
        )
        assert cli(["train", config_path]) == 0
        val_lines = open(tmp_path / "out" / "val_summary.jsonl", encoding="utf-8").read().splitlines()
        dice = json.loads(val_lines[-1])["metrics"]["dice"]
        elapsed = time.time() - start
        assert dice >= 0.90, f"validation dice {dice:.4f}"
        assert elapsed < 300.0, f"segmentation took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 4. determinism


def test_determinism_golden_config_twice(tmp_path):
    """Same golden config, seed 42, two runs: byte-identical summaries and
    bitwise-identical final checkpoints."""
    with criterion("determinism"):
        outputs = []
        for run in ("a", "b"):
            run_dir = tmp_path / run
            run_dir.mkdir()
            config_path = helpers.prepare_segmentation_run(str(run_dir), epochs=4, lr=0.01, seed=42)
            assert cli(["train", config_path]) == 0
            outputs.append(
                {
                    "train": (run_dir / "out" / "train_summary.jsonl").read_bytes(),
                    "val": (run_dir / "out" / "val_summary.jsonl").read_bytes(),
                    "ckpt": (run_dir / "out" / "final.ckpt").read_bytes(),
                }
            )
        assert outputs[0]["train"] == outputs[1]["train"]
        assert outputs[0]["val"] == outputs[1]["val"]
        assert outputs[0]["ckpt"] == outputs[1]["ckpt"]


# ---------------------------------------------------------------------------
# 5. NIfTI round-trip


def test_nifti_round_trip(tmp_path):
    """50 random rank-2/3 tensors survive write -> read bitwise; a
    big-endian twin decodes identically."""
    with criterion("nifti-round-trip"):
        rng = np.random.RandomState(7)
        for i in range(50):
            rank = int(rng.choice([2, 3]))
            shape = tuple(int(d) for d in rng.randint(1, 9, rank))
            values = rng.randn(*shape).astype(np.float32)
            spacing = tuple(float(s) for s in rng.uniform(0.1, 4.0, rank))
            path = str(tmp_path / f"t{i}.nii")
            write_nifti(path, Tensor(values), VolumeMeta(spacing))
            back, meta = read_nifti(path)
            assert back.data.tobytes() == values.tobytes()
            assert np.allclose(meta.spacing, spacing, atol=1e-6)

        le_path = tmp_path / "le.nii"
        values = np.random.RandomState(8).randn(4, 5, 6).astype(np.float32)
        write_nifti(str(le_path), Tensor(values), VolumeMeta((0.5, 1.5, 2.5)))
        be_path = tmp_path / "be.nii"
        be_path.write_bytes(byteswap_nifti(le_path.read_bytes()))
        t_le, meta_le = read_nifti(str(le_path))
        t_be, meta_be = read_nifti(str(be_path))
        assert t_le.data.tobytes() == t_be.data.tobytes()
        assert meta_le.spacing == meta_be.spacing


# ---------------------------------------------------------------------------
# 6. checkpoint round-trip


def test_checkpoint_round_trip_trained_model(tmp_path):
    """save -> load of a trained TinyUNet reproduces forward bitwise."""
    with criterion("checkpoint-round-trip"):
        rng = np.random.RandomState(0)
        items = []
        for _ in range(8):
            image = rng.rand(1, 8, 8).astype(np.float32)
            label = np.stack([(image[0] <= 0.5), (image[0] > 0.5)]).astype(np.float32)
            items.append(Record({"image": Tensor(image), "label": Tensor(label)}))
        model = TinyUNet(1, 2, 2, seed=3)
        model.descriptor = {"type": "TinyUNet", "params": {"in_channels": 1, "base_channels": 2, "num_classes": 2}}
        spec = WorkflowSpec(
            kind="training",
            model=model,
            losses=[DiceLoss("predictions", "label")],
            metrics=[],
            optimizer=Adam(1e-2),
            loader=LoaderSpec(batch_size=4, shuffle=True, seed=1),
            epochs=3,
            workflow_id="train",
        )
        run_training(spec, Dataset(items), None, EventBus())

        path = str(tmp_path / "trained.ckpt")
        save_model(model, model.descriptor, path)
        loaded = load_model(path, default_registry())
        probe = Tensor(np.random.RandomState(4).randn(2, 1, 8, 8).astype(np.float32))
        assert loaded.forward([probe])[0].data.tobytes() == model.forward([probe])[0].data.tobytes()


# ---------------------------------------------------------------------------
# 7. hook semantics


def test_hook_semantics(tmp_path):
    """Scripted watch values [0.9, 0.5, 0.7, 0.4] (min): saves at the 3
    improvements; summary lines == epochs; a throwing hook never aborts."""
    with criterion("hook-semantics"):
        from test_hooks import dummy_snapshot, make_event

        save_dir = tmp_path / "ckpts"
        hook = SaveBestModelHook(str(save_dir), watch="losses.score", mode="min", history=True)
        for epoch, value in enumerate([0.9, 0.5, 0.7, 0.4]):
            hook.on_event(make_event(epoch, losses={"score": value}, snapshot=dummy_snapshot(value)))
        history_files = sorted(p.name for p in save_dir.iterdir() if p.name != "best.ckpt")
        assert history_files == ["best_epoch0.ckpt", "best_epoch1.ckpt", "best_epoch3.ckpt"]

        # epoch_end count == summary line count, throwing hook quarantined
        class Thrower:
            name = "thrower"
            event_kinds = (EPOCH_END,)

            def on_event(self, event):
                raise RuntimeError("deliberately broken")

        epochs = 5
        rng = np.random.RandomState(1)
        items = [
            Record({"x": Tensor(rng.randn(1).astype(np.float32)), "target": Tensor(rng.randn(1).astype(np.float32))})
            for _ in range(6)
        ]
        summary_path = str(tmp_path / "summary.jsonl")
        bus = EventBus()
        bus.subscribe("train", (EPOCH_END,), Thrower())
        bus.subscribe("train", (EPOCH_END,), SummaryHook(summary_path))
        from voxelflow.numerics import Sgd

        spec = WorkflowSpec(
            kind="training",
            model=Mlp([1, 1], seed=2),
            losses=[MseLoss("y_pred", "target")],
            metrics=[],
            optimizer=Sgd(lr=0.05),
            loader=LoaderSpec(batch_size=3),
            epochs=epochs,
            workflow_id="train",
        )
        _, history = run_training(spec, Dataset(items), None, bus)
        assert len(history) == epochs  # the thrower did not abort the run
        lines = open(summary_path, encoding="utf-8").read().splitlines()
        assert len(lines) == epochs
        assert all(json.loads(line) for line in lines)


# ---------------------------------------------------------------------------
# 8. transform laws


def test_transform_laws():
    """Purity/locality, compose associativity, pad-crop restoration and
    resample identity; >= 200 randomized cases each."""
    with criterion("transform-laws"):
        cases = 200

        # purity / locality
        rng = np.random.RandomState(21)
        makers = [
            lambda: NormalizeFixed(["x"], float(rng.randn()), float(rng.rand() + 0.5)),
            lambda: ResampleToShape(["x"], (5, 3), "linear"),
            lambda: ResampleToShape(["x"], (2, 6), "nearest"),
            lambda: CropCenter(["x"], (3, 2)),
            lambda: PadToShape(["x"], (6, 5), value=float(rng.randn())),
            lambda: Threshold("x", float(rng.randn() * 0.1)),
            lambda: AddChannelDim("x"),
        ]
        for _ in range(cases):
            t = makers[rng.randint(len(makers))]()
            extras = {}
            for i in range(rng.randint(0, 4)):
                kind = rng.randint(3)
                extras[f"extra{i}"] = (
                    Tensor(rng.randn(2, 2).astype(np.float32))
                    if kind == 0
                    else (f"path{i}.nii" if kind == 1 else float(rng.randn()))
                )
            r = Record({"x": Tensor(rng.randn(4, 3).astype(np.float32)), **extras})
            out1, out2 = t(r), t(r)
            for name, value in extras.items():
                assert out1[name] is value
            assert np.array_equal(out1["x"].data, out2["x"].data)

        # compose associativity
        rng = np.random.RandomState(22)
        for _ in range(cases):
            a = NormalizeFixed(["x"], float(rng.randn()), float(rng.rand() + 0.5))
            b = PadToShape(["x"], (8,), value=float(rng.randn()))
            c = CropCenter(["x"], (int(rng.randint(1, 5)),))
            r = Record({"x": Tensor(rng.randn(4).astype(np.float32)), "tag": "t"})
            left = compose([a, compose([b, c])])(r)
            right = compose([compose([a, b]), c])(r)
            assert np.array_equal(left["x"].data, right["x"].data)
            assert left["tag"] == right["tag"]

        # pad then crop restores exactly (even margins)
        rng = np.random.RandomState(23)
        for _ in range(cases):
            shape = tuple(int(d) for d in rng.randint(1, 6, size=rng.randint(1, 4)))
            target = tuple(s + 2 * int(rng.randint(0, 3)) for s in shape)
            values = rng.randn(*shape).astype(np.float32)
            padded = PadToShape(["x"], target, value=float(rng.randn()))(Record({"x": Tensor(values.copy())}))
            restored = CropCenter(["x"], shape)(padded)
            assert np.array_equal(restored["x"].data, values)

        # resample to the source shape is the identity in both modes
        rng = np.random.RandomState(24)
        for _ in range(cases):
            shape = tuple(int(d) for d in rng.randint(1, 7, size=rng.randint(1, 4)))
            values = rng.randn(*shape).astype(np.float32)
            for mode in ("nearest", "linear"):
                out = ResampleToShape(["x"], shape, mode)(Record({"x": Tensor(values.copy())}))
                assert np.array_equal(out["x"].data, values)


# ---------------------------------------------------------------------------
# 9. config validation


BROKEN_CONFIG_MUTATIONS = [
    ("typo-type", lambda d: d["phases"]["train"]["model"].__setitem__("type", "TinyUNnet"), "phases.train.model"),
    (
        "wrong-param-type",
        lambda d: d["phases"]["train"]["workflow"]["params"].__setitem__("epochs", "ten"),
        "phases.train.workflow.params.epochs",
    ),
    ("missing-optimizer", lambda d: d["phases"]["train"].pop("optimizer"), "phases.train.optimizer"),
    ("unknown-key", lambda d: d.__setitem__("phasez", {}), "phasez"),
    ("bad-version", lambda d: d.__setitem__("version", "9.9"), "version"),
    ("empty-phases", lambda d: d.__setitem__("phases", {}), "phases"),
]


def test_config_validation(tmp_path, capsys):
    """Golden config passes `check` (exit 0); six curated broken configs
    exit 2 with a diagnostic naming the offending path."""
    with criterion("config-validation"):
        config_path = helpers.prepare_segmentation_run(str(tmp_path), epochs=2)
        assert cli(["check", config_path]) == 0
        capsys.readouterr()

        base = json.load(open(config_path, encoding="utf-8"))
        for name, mutate, expected_path in BROKEN_CONFIG_MUTATIONS:
            broken = json.loads(json.dumps(base))
            mutate(broken)
            path = tmp_path / f"broken_{name}.json"
            path.write_text(json.dumps(broken), encoding="utf-8")
            code = cli(["check", str(path)])
            err = capsys.readouterr().err
            assert code == 2, f"{name}: expected exit 2, got {code}"
            assert expected_path in err, f"{name}: diagnostic {err!r} does not name {expected_path!r}"
