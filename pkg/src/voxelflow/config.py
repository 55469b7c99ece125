"""Declarative experiment configuration.

A config document describes phases (train/validate/test), each listing the
modules to instantiate by type name. The registry maps type names to
constructors plus parameter schemas, which powers strict validation, the
machine-readable catalog, and the visual builder.
"""

import difflib
import json
import os
from dataclasses import dataclass, field

from . import hooks as hooks_mod
from . import models as models_mod
from . import ops as ops_mod
from . import transforms as transforms_mod
from .datasets import load_json_dataset, load_msd_dataset
from .errors import ConfigError
from .io_formats import LoadNifti
from .numerics import Adam, Sgd, derive_seed
from .transforms import Compose
from .workflows import EventBus, LoaderSpec, WorkflowSpec

CONFIG_VERSION = "1.0"
DEFAULT_SEED = 42
PHASE_NAMES = ("train", "validate", "test")
_TOP_KEYS = {"version", "seed", "data_root", "output_dir", "phases"}
_PHASE_KEYS = {"dataset", "transforms", "model", "losses", "metrics", "optimizer", "workflow", "hooks"}
_PHASE_WORKFLOW_KIND = {"train": "training", "validate": "validation", "test": "testing"}


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class BadVersion(ConfigError):
    pass


class MissingPhase(ConfigError):
    pass


class ConstructionError(ConfigError):
    pass


@dataclass
class ModuleDescriptor:
    type_name: str
    params: dict


@dataclass
class PhaseConfig:
    dataset: ModuleDescriptor
    transforms: list
    model: ModuleDescriptor
    losses: list
    metrics: list
    workflow: ModuleDescriptor
    hooks: list
    optimizer: ModuleDescriptor = None


@dataclass
class ConfigDocument:
    version: str
    seed: int
    data_root: str
    output_dir: str
    phases: dict


# ---------------------------------------------------------------------------
# parsing


def _descriptor(raw, path):
    if not isinstance(raw, dict):
        raise ConfigError("module entry must be an object", path)
    for key in raw:
        if key not in ("type", "params"):
            raise UnknownKey(f"unknown key {key!r}", f"{path}.{key}")
    type_name = raw.get("type")
    if not isinstance(type_name, str) or not type_name:
        raise ConfigError("missing or empty 'type'", path)
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be an object", f"{path}.params")
    return ModuleDescriptor(type_name, dict(params))


def _descriptor_list(raw, path):
    if not isinstance(raw, list):
        raise ConfigError("expected an array of module entries", path)
    return [_descriptor(entry, f"{path}[{i}]") for i, entry in enumerate(raw)]


def _parse_phase(name, raw):
    path = f"phases.{name}"
    if not isinstance(raw, dict):
        raise ConfigError("phase must be an object", path)
    for key in raw:
        if key not in _PHASE_KEYS:
            raise UnknownKey(f"unknown key {key!r}", f"{path}.{key}")
    for slot in ("dataset", "model", "workflow"):
        if slot not in raw:
            raise ConfigError(f"phase is missing required entry {slot!r}", f"{path}.{slot}")
    phase = PhaseConfig(
        dataset=_descriptor(raw["dataset"], f"{path}.dataset"),
        transforms=_descriptor_list(raw.get("transforms", []), f"{path}.transforms"),
        model=_descriptor(raw["model"], f"{path}.model"),
        losses=_descriptor_list(raw.get("losses", []), f"{path}.losses"),
        metrics=_descriptor_list(raw.get("metrics", []), f"{path}.metrics"),
        workflow=_descriptor(raw["workflow"], f"{path}.workflow"),
        hooks=_descriptor_list(raw.get("hooks", []), f"{path}.hooks"),
        optimizer=_descriptor(raw["optimizer"], f"{path}.optimizer") if "optimizer" in raw else None,
    )
    if name == "train":
        if phase.optimizer is None:
            raise ConfigError("train phase requires an optimizer", f"{path}.optimizer")
        if not phase.losses:
            raise ConfigError("train phase requires at least one loss", f"{path}.losses")
    elif phase.optimizer is not None:
        raise ConfigError(f"{name} phase must not declare an optimizer", f"{path}.optimizer")
    return phase


def parse_config(text):
    """Strict parse: unknown keys are fatal, defaults are filled."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(raw, dict):
        raise ParseError("config top level must be an object")
    for key in raw:
        if key not in _TOP_KEYS:
            raise UnknownKey(f"unknown key {key!r}", key)
    version = raw.get("version")
    if version != CONFIG_VERSION:
        raise BadVersion(f"config version must be {CONFIG_VERSION!r}, got {version!r}", "version")
    seed = raw.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}", "seed")
    data_root = raw.get("data_root", ".")
    output_dir = raw.get("output_dir", "./output")
    for key, value in (("data_root", data_root), ("output_dir", output_dir)):
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string", key)
    phases_raw = raw.get("phases")
    if not isinstance(phases_raw, dict) or not phases_raw:
        raise MissingPhase("config declares no phases", "phases")
    phases = {}
    for name, phase_raw in phases_raw.items():
        if name not in PHASE_NAMES:
            raise UnknownKey(f"unknown phase {name!r}", f"phases.{name}")
        phases[name] = _parse_phase(name, phase_raw)
    return ConfigDocument(version, seed, data_root, output_dir, phases)


def serialize_config(doc):
    """Inverse of parse_config (canonical form, two-space indent)."""

    def desc(d):
        return {"type": d.type_name, "params": d.params}

    phases = {}
    for name in PHASE_NAMES:
        if name not in doc.phases:
            continue
        p = doc.phases[name]
        entry = {
            "dataset": desc(p.dataset),
            "transforms": [desc(t) for t in p.transforms],
            "model": desc(p.model),
            "losses": [desc(l) for l in p.losses],
            "metrics": [desc(m) for m in p.metrics],
        }
        if p.optimizer is not None:
            entry["optimizer"] = desc(p.optimizer)
        entry["workflow"] = desc(p.workflow)
        entry["hooks"] = [desc(h) for h in p.hooks]
        phases[name] = entry
    return json.dumps(
        {
            "version": doc.version,
            "seed": doc.seed,
            "data_root": doc.data_root,
            "output_dir": doc.output_dir,
            "phases": phases,
        },
        indent=2,
    )


# ---------------------------------------------------------------------------
# registry

PARAM_KINDS = ("int", "real", "bool", "string", "int-list", "real-list", "string-list")


@dataclass
class ParamSpec:
    name: str
    kind: str
    required: bool = True
    default: object = None
    doc: str = ""


@dataclass
class RegistryEntry:
    type_name: str
    category: str
    constructor: object
    params: list
    doc: str = ""
    tags: dict = field(default_factory=dict)


@dataclass
class BuildContext:
    seed: int = 0
    data_root: str = "."
    output_dir: str = "."


def _kind_ok(kind, value):
    if isinstance(value, bool):
        return kind == "bool"
    if kind == "int":
        return isinstance(value, int)
    if kind == "real":
        return isinstance(value, (int, float))
    if kind == "string":
        return isinstance(value, str)
    if kind.endswith("-list"):
        if not isinstance(value, list):
            return False
        inner = kind[: -len("-list")]
        return all(_kind_ok(inner, v) for v in value)
    return False


class Registry:
    """Catalog of constructible types, keyed by type name."""

    def __init__(self):
        self._catalog = {}

    def register(self, entry):
        if entry.type_name in self._catalog:
            raise ConfigError(f"duplicate registration of {entry.type_name!r}")
        self._catalog[entry.type_name] = entry

    def get(self, type_name):
        return self._catalog.get(type_name)

    def type_names(self):
        return list(self._catalog)

    def entries(self):
        return list(self._catalog.values())

    def validate_params(self, entry, params, path, findings):
        schema = {p.name: p for p in entry.params}
        for name in params:
            if name not in schema:
                findings.append(Finding(f"{path}.params.{name}", f"unknown parameter {name!r} for {entry.type_name}"))
        for spec in entry.params:
            if spec.name not in params:
                if spec.required:
                    findings.append(Finding(f"{path}.params.{spec.name}", f"missing required parameter {spec.name!r}"))
                continue
            value = params[spec.name]
            if not _kind_ok(spec.kind, value):
                findings.append(
                    Finding(
                        f"{path}.params.{spec.name}",
                        f"parameter {spec.name!r} expects {spec.kind}, got {type(value).__name__}",
                    )
                )

    def construct(self, type_name, params, seed=0, data_root=".", output_dir="."):
        entry = self.get(type_name)
        if entry is None:
            raise ConstructionError(f"unknown type {type_name!r}")
        findings = []
        self.validate_params(entry, params, type_name, findings)
        if findings:
            raise ConstructionError("; ".join(f.message for f in findings))
        merged = {p.name: p.default for p in entry.params if not p.required}
        merged.update(params)
        ctx = BuildContext(seed=seed, data_root=data_root, output_dir=output_dir)
        return entry.constructor(merged, ctx)


# ---------------------------------------------------------------------------
# built-in catalog


def _p(name, kind, doc, default=None, required=None):
    required = default is None if required is None else required
    return ParamSpec(name, kind, required=required, default=default, doc=doc)


def default_registry():
    r = Registry()

    r.register(
        RegistryEntry(
            "JsonDataset",
            "dataset",
            lambda p, ctx: load_json_dataset(os.path.join(ctx.data_root, p["path"])),
            [_p("path", "string", "manifest path, relative to data_root")],
            doc="Dataset from a JSON array of flat objects.",
        )
    )
    r.register(
        RegistryEntry(
            "MsdDataset",
            "dataset",
            lambda p, ctx: load_msd_dataset(os.path.join(ctx.data_root, p["path"]), p["phase"]),
            [
                _p("path", "string", "challenge manifest path, relative to data_root"),
                _p("phase", "string", "'training' or 'test'"),
            ],
            doc="Medical segmentation decathlon style manifest.",
        )
    )

    r.register(
        RegistryEntry(
            "LoadNifti",
            "transform",
            lambda p, ctx: LoadNifti(p["fields"], data_root=ctx.data_root),
            [_p("fields", "string-list", "path fields to replace with loaded volumes")],
            doc="Read NIfTI-1 volumes for the named path fields.",
        )
    )
    r.register(
        RegistryEntry(
            "NormalizeFixed",
            "transform",
            lambda p, ctx: transforms_mod.NormalizeFixed(p["fields"], p["mean"], p["std"]),
            [
                _p("fields", "string-list", "tensor fields to normalize"),
                _p("mean", "real", "value subtracted from every element"),
                _p("std", "real", "positive divisor"),
            ],
            doc="x <- (x - mean) / std.",
        )
    )
    r.register(
        RegistryEntry(
            "ResampleToShape",
            "transform",
            lambda p, ctx: transforms_mod.ResampleToShape(p["fields"], p["shape"], p["mode"]),
            [
                _p("fields", "string-list", "tensor fields to resample"),
                _p("shape", "int-list", "target shape, one entry per axis"),
                _p("mode", "string", "'nearest' or 'linear'", default="linear"),
            ],
            doc="Separable resampling on a half-pixel-center grid.",
        )
    )
    r.register(
        RegistryEntry(
            "CropCenter",
            "transform",
            lambda p, ctx: transforms_mod.CropCenter(p["fields"], p["shape"]),
            [
                _p("fields", "string-list", "tensor fields to crop"),
                _p("shape", "int-list", "target shape"),
            ],
            doc="Centered crop to a target shape.",
        )
    )
    r.register(
        RegistryEntry(
            "PadToShape",
            "transform",
            lambda p, ctx: transforms_mod.PadToShape(p["fields"], p["shape"], p["value"]),
            [
                _p("fields", "string-list", "tensor fields to pad"),
                _p("shape", "int-list", "target shape"),
                _p("value", "real", "fill value", default=0.0),
            ],
            doc="Symmetric constant padding to a target shape.",
        )
    )
    r.register(
        RegistryEntry(
            "Threshold",
            "transform",
            lambda p, ctx: transforms_mod.Threshold(p["field"], p["value"]),
            [
                _p("field", "string", "tensor field to binarize"),
                _p("value", "real", "threshold"),
            ],
            doc="1 where x > threshold, else 0.",
        )
    )
    r.register(
        RegistryEntry(
            "OneHot",
            "transform",
            lambda p, ctx: transforms_mod.OneHot(p["field"], p["num_classes"]),
            [
                _p("field", "string", "integer class map field"),
                _p("num_classes", "int", "number of classes"),
            ],
            doc="Integer class map to one-hot with a leading class axis.",
        )
    )
    r.register(
        RegistryEntry(
            "AddChannelDim",
            "transform",
            lambda p, ctx: transforms_mod.AddChannelDim(p["field"]),
            [_p("field", "string", "tensor field gaining a leading size-1 axis")],
            doc="Prepend a channel axis of size 1.",
        )
    )
    r.register(
        RegistryEntry(
            "Rename",
            "transform",
            lambda p, ctx: transforms_mod.Rename(p["old"], p["new"]),
            [_p("old", "string", "existing field"), _p("new", "string", "new field name")],
            doc="Rename a field in place.",
        )
    )
    r.register(
        RegistryEntry(
            "KeepOnly",
            "transform",
            lambda p, ctx: transforms_mod.KeepOnly(p["fields"]),
            [_p("fields", "string-list", "fields to keep")],
            doc="Drop every field not listed.",
        )
    )
    r.register(
        RegistryEntry(
            "CastScalarToTensor",
            "transform",
            lambda p, ctx: transforms_mod.CastScalarToTensor(p["field"]),
            [_p("field", "string", "numeric scalar field")],
            doc="Wrap a scalar into a shape-[] tensor.",
        )
    )

    def _mlp(p, ctx):
        m = models_mod.Mlp(p["layer_sizes"], p["activation"], p["final"], seed=ctx.seed)
        m.descriptor = {"type": "Mlp", "params": dict(p)}
        return m

    r.register(
        RegistryEntry(
            "Mlp",
            "model",
            _mlp,
            [
                _p("layer_sizes", "int-list", "layer widths, at least two entries"),
                _p("activation", "string", "'relu' or 'sigmoid'", default="relu"),
                _p("final", "string", "'logits' or 'softmax'", default="softmax"),
            ],
            doc="Dense stack; consumes 'x', produces 'y_pred'.",
        )
    )

    def _tiny_unet(p, ctx):
        m = models_mod.TinyUNet(p["in_channels"], p["base_channels"], p["num_classes"], seed=ctx.seed)
        m.descriptor = {"type": "TinyUNet", "params": dict(p)}
        return m

    r.register(
        RegistryEntry(
            "TinyUNet",
            "model",
            _tiny_unet,
            [
                _p("in_channels", "int", "input channels"),
                _p("base_channels", "int", "channels after the first block"),
                _p("num_classes", "int", "output classes"),
            ],
            doc="Two-level encoder-decoder; consumes 'image', produces 'predictions'.",
        )
    )

    r.register(
        RegistryEntry(
            "DiceLoss",
            "loss",
            lambda p, ctx: ops_mod.DiceLoss(p["pred"], p["target"], p["smooth"]),
            [
                _p("pred", "string", "prediction field"),
                _p("target", "string", "target field"),
                _p("smooth", "real", "smoothing constant", default=1.0),
            ],
            doc="1 - soft overlap score; output 'dice_loss'.",
        )
    )
    r.register(
        RegistryEntry(
            "CrossEntropyLoss",
            "loss",
            lambda p, ctx: ops_mod.CrossEntropyLoss(p["pred"], p["target"]),
            [_p("pred", "string", "probability field [N, C]"), _p("target", "string", "class id field")],
            doc="Negative mean log-likelihood; output 'cross_entropy'.",
        )
    )
    r.register(
        RegistryEntry(
            "MseLoss",
            "loss",
            lambda p, ctx: ops_mod.MseLoss(p["pred"], p["target"]),
            [_p("pred", "string", "prediction field"), _p("target", "string", "target field")],
            doc="Mean squared error; output 'mse'.",
        )
    )
    r.register(
        RegistryEntry(
            "DiceMetric",
            "metric",
            lambda p, ctx: ops_mod.DiceMetric(p["pred"], p["target"], p["smooth"]),
            [
                _p("pred", "string", "prediction field"),
                _p("target", "string", "target field"),
                _p("smooth", "real", "smoothing constant", default=1.0),
            ],
            doc="Mean soft overlap score; output 'dice'.",
        )
    )
    r.register(
        RegistryEntry(
            "Accuracy",
            "metric",
            lambda p, ctx: ops_mod.Accuracy(p["pred"], p["target"]),
            [_p("pred", "string", "probability field [N, C]"), _p("target", "string", "class id field")],
            doc="Fraction of correct argmax predictions; output 'accuracy'.",
        )
    )

    r.register(
        RegistryEntry(
            "Sgd",
            "optimizer",
            lambda p, ctx: Sgd(p["lr"], p["momentum"]),
            [_p("lr", "real", "learning rate"), _p("momentum", "real", "momentum factor", default=0.0)],
            doc="Stochastic gradient descent with momentum.",
        )
    )
    r.register(
        RegistryEntry(
            "Adam",
            "optimizer",
            lambda p, ctx: Adam(p["lr"], p["beta1"], p["beta2"], p["eps"]),
            [
                _p("lr", "real", "learning rate"),
                _p("beta1", "real", "first-moment decay", default=0.9),
                _p("beta2", "real", "second-moment decay", default=0.999),
                _p("eps", "real", "denominator epsilon", default=1e-8),
            ],
            doc="Adam with bias correction.",
        )
    )

    def _workflow(kind):
        def ctor(p, ctx):
            return {
                "kind": kind,
                "epochs": p.get("epochs", 1),
                "batch_size": p["batch_size"],
                "shuffle": p.get("shuffle", False),
                "drop_last": p.get("drop_last", False),
            }

        return ctor

    r.register(
        RegistryEntry(
            "Training",
            "workflow",
            _workflow("training"),
            [
                _p("epochs", "int", "number of epochs"),
                _p("batch_size", "int", "records per batch"),
                _p("shuffle", "bool", "reshuffle every epoch", default=False),
                _p("drop_last", "bool", "drop the final short batch", default=False),
            ],
            doc="Optimization loop over the train dataset.",
            tags={"workflow_kind": "training"},
        )
    )
    r.register(
        RegistryEntry(
            "Validation",
            "workflow",
            _workflow("validation"),
            [_p("batch_size", "int", "records per batch")],
            doc="Single evaluation pass; parameters never change.",
            tags={"workflow_kind": "validation"},
        )
    )
    r.register(
        RegistryEntry(
            "Testing",
            "workflow",
            _workflow("testing"),
            [_p("batch_size", "int", "records per batch")],
            doc="Single pass with optional prediction export.",
            tags={"workflow_kind": "testing"},
        )
    )

    r.register(
        RegistryEntry(
            "LoggingHook",
            "hook",
            lambda p, ctx: hooks_mod.LoggingHook(),
            [],
            doc="One console line per epoch with losses and metrics.",
        )
    )
    r.register(
        RegistryEntry(
            "SummaryHook",
            "hook",
            lambda p, ctx: hooks_mod.SummaryHook(os.path.join(ctx.output_dir, p["path"])),
            [_p("path", "string", "summary file, relative to output_dir")],
            doc="Line-delimited JSON epoch summaries.",
        )
    )
    r.register(
        RegistryEntry(
            "SaveBestModel",
            "hook",
            lambda p, ctx: hooks_mod.SaveBestModelHook(
                os.path.join(ctx.output_dir, p["dir"]), p["watch"], p["mode"], p["history"]
            ),
            [
                _p("watch", "string", "'losses.<name>' or 'metrics.<name>'"),
                _p("mode", "string", "'min' or 'max'", default="min"),
                _p("history", "bool", "also keep per-epoch best checkpoints", default=False),
                _p("dir", "string", "checkpoint directory, relative to output_dir", default="checkpoints"),
            ],
            doc="Checkpoint on strict improvement of a watched value.",
        )
    )

    return r


# ---------------------------------------------------------------------------
# validation and wiring


@dataclass
class Finding:
    path: str
    message: str


class ValidationReport:
    def __init__(self, findings):
        self.findings = findings

    @property
    def ok(self):
        return not self.findings

    def to_dict(self):
        return {"ok": self.ok, "findings": [{"path": f.path, "message": f.message} for f in self.findings]}

    def __str__(self):
        return "\n".join(f"{f.path}: {f.message}" for f in self.findings)


_SLOT_CATEGORY = {
    "dataset": "dataset",
    "transforms": "transform",
    "model": "model",
    "losses": "loss",
    "metrics": "metric",
    "optimizer": "optimizer",
    "workflow": "workflow",
    "hooks": "hook",
}


def check_config(doc, registry):
    """Resolve every descriptor against the registry and type-check all
    parameters. Collects every finding rather than failing fast."""
    findings = []

    def check_one(desc, path, slot):
        entry = registry.get(desc.type_name)
        if entry is None:
            message = f"unknown type {desc.type_name!r}"
            close = difflib.get_close_matches(desc.type_name, registry.type_names(), n=1, cutoff=0.6)
            if close:
                message += f" (did you mean {close[0]!r}?)"
            findings.append(Finding(path, message))
            return
        expected = _SLOT_CATEGORY[slot]
        if entry.category != expected:
            findings.append(Finding(path, f"{desc.type_name} is a {entry.category}, expected a {expected}"))
            return
        registry.validate_params(entry, desc.params, path, findings)

    for phase_name, phase in doc.phases.items():
        base = f"phases.{phase_name}"
        check_one(phase.dataset, f"{base}.dataset", "dataset")
        for i, t in enumerate(phase.transforms):
            check_one(t, f"{base}.transforms[{i}]", "transforms")
        check_one(phase.model, f"{base}.model", "model")
        for i, l in enumerate(phase.losses):
            check_one(l, f"{base}.losses[{i}]", "losses")
        for i, m in enumerate(phase.metrics):
            check_one(m, f"{base}.metrics[{i}]", "metrics")
        if phase.optimizer is not None:
            check_one(phase.optimizer, f"{base}.optimizer", "optimizer")
        check_one(phase.workflow, f"{base}.workflow", "workflow")
        for i, h in enumerate(phase.hooks):
            check_one(h, f"{base}.hooks[{i}]", "hooks")
        entry = registry.get(phase.workflow.type_name)
        if entry is not None and entry.category == "workflow":
            wanted = _PHASE_WORKFLOW_KIND[phase_name]
            if entry.tags.get("workflow_kind") != wanted:
                findings.append(
                    Finding(f"{base}.workflow", f"{phase_name} phase needs a {wanted} workflow, got {desc_name(entry)}")
                )
    return ValidationReport(findings)


def desc_name(entry):
    return entry.type_name


def describe_registry(registry):
    """Catalog document: every registered type with schema and docs."""
    modules = []
    for entry in sorted(registry.entries(), key=lambda e: (e.category, e.type_name)):
        params = []
        for p in entry.params:
            spec = {"name": p.name, "kind": p.kind, "required": p.required, "doc": p.doc}
            if not p.required:
                spec["default"] = p.default
            params.append(spec)
        modules.append({"type": entry.type_name, "category": entry.category, "doc": entry.doc, "params": params})
    return {"version": CONFIG_VERSION, "modules": modules}


@dataclass
class WiredPhase:
    name: str
    kind: str
    dataset: object
    chain: Compose
    model: object
    losses: list
    metrics: list
    optimizer: object
    hooks: list
    loader: LoaderSpec
    epochs: int
    workflow_id: str
    bus: EventBus

    def workflow_spec(self):
        return WorkflowSpec(
            kind=self.kind,
            model=self.model,
            losses=self.losses,
            metrics=self.metrics,
            optimizer=self.optimizer,
            loader=self.loader,
            epochs=self.epochs,
            workflow_id=self.workflow_id,
        )


def build_phase(doc, phase_name, registry, bus=None):
    """Instantiate and wire one phase: dataset, transform chain, model,
    losses, metrics, optimizer, hooks (subscribed to the phase's workflow
    id) and the loader settings. Per-module seeds derive from the global
    seed and the module's config path."""
    if phase_name not in doc.phases:
        raise ConfigError(f"config has no {phase_name!r} phase", f"phases.{phase_name}")
    phase = doc.phases[phase_name]
    base = f"phases.{phase_name}"

    def build(desc, path):
        try:
            return registry.construct(
                desc.type_name,
                desc.params,
                seed=derive_seed(doc.seed, path),
                data_root=doc.data_root,
                output_dir=doc.output_dir,
            )
        except ConfigError as e:
            raise ConstructionError(f"cannot construct {desc.type_name}: {e}", path) from e
        except Exception as e:
            raise ConstructionError(f"cannot construct {desc.type_name}: {e}", path) from e

    dataset = build(phase.dataset, f"{base}.dataset")
    chain = Compose([build(t, f"{base}.transforms[{i}]") for i, t in enumerate(phase.transforms)])
    model = build(phase.model, f"{base}.model")
    losses = [build(l, f"{base}.losses[{i}]") for i, l in enumerate(phase.losses)]
    metrics = [build(m, f"{base}.metrics[{i}]") for i, m in enumerate(phase.metrics)]
    optimizer = build(phase.optimizer, f"{base}.optimizer") if phase.optimizer is not None else None
    hook_list = [build(h, f"{base}.hooks[{i}]") for i, h in enumerate(phase.hooks)]
    wf = build(phase.workflow, f"{base}.workflow")

    bus = bus if bus is not None else EventBus()
    workflow_id = phase_name
    for hook in hook_list:
        bus.subscribe(workflow_id, hook.event_kinds, hook)

    loader = LoaderSpec(
        batch_size=wf["batch_size"],
        shuffle=wf["shuffle"],
        seed=derive_seed(doc.seed, f"{base}.loader"),
        drop_last=wf["drop_last"],
    )
    return WiredPhase(
        name=phase_name,
        kind=wf["kind"],
        dataset=dataset,
        chain=chain,
        model=model,
        losses=losses,
        metrics=metrics,
        optimizer=optimizer,
        hooks=hook_list,
        loader=loader,
        epochs=wf["epochs"],
        workflow_id=workflow_id,
        bus=bus,
    )
