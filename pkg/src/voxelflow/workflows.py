"""Training, validation and testing loops.

A workflow owns its model for the duration of a run, routes batch fields
through model/losses/metrics by name, aggregates per-epoch means weighted
by batch size, and emits events that subscribed hooks consume. A failing
hook is quarantined to the log; it never aborts a run.
"""

import logging
import os
from dataclasses import dataclass, field

from .checkpoint import snapshot_model
from .errors import ConfigError, VoxelflowError
from .io_formats import write_rtf
from .models import apply_to_batch
from .numerics import Rng, Tape, Tensor, add, derive_seed
from .records import MissingField, Record, collate

log = logging.getLogger("voxelflow.workflows")

EPOCH_END = "epoch_end"
WORKFLOW_END = "workflow_end"


class EmptyDataset(VoxelflowError):
    pass


class DataPipelineError(VoxelflowError):
    def __init__(self, index, cause):
        self.index = index
        super().__init__(f"dataset index {index}: {cause}")


@dataclass
class LoaderSpec:
    batch_size: int
    shuffle: bool = False
    seed: int = 0
    drop_last: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class WorkflowSpec:
    kind: str  # training | validation | testing
    model: object
    losses: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    optimizer: object = None
    loader: LoaderSpec = None
    epochs: int = 1
    workflow_id: str = "workflow"


@dataclass
class EpochEvent:
    workflow_id: str
    phase: str
    epoch: int
    losses: dict
    metrics: dict
    sample_inputs: Record = None
    sample_outputs: Record = None
    model_ref: object = None


class EventBus:
    """Synchronous dispatch to hooks in subscription order."""

    def __init__(self):
        self._subs = {}

    def subscribe(self, workflow_id, event_kinds, hook):
        for kind in event_kinds:
            self._subs.setdefault((workflow_id, kind), []).append(hook)

    def emit(self, kind, event):
        for hook in self._subs.get((event.workflow_id, kind), []):
            try:
                hook.on_event(event)
            except Exception:
                log.exception("hook %s failed on %s (quarantined)", getattr(hook, "name", hook), kind)


def subscribe(bus, workflow_id, event_kinds, hook):
    bus.subscribe(workflow_id, event_kinds, hook)


def emit(bus, kind, event):
    bus.emit(kind, event)


def iterate_batches(dataset, chain, spec, epoch=0):
    """Yield collated batches for one epoch.

    Shuffling derives a fresh stream from (seed, epoch) so each epoch has a
    reproducible order without carrying generator state across epochs.
    """
    n = len(dataset)
    if n == 0:
        raise EmptyDataset("dataset has no items")
    order = Rng(derive_seed(spec.seed, epoch)).permutation(n) if spec.shuffle else range(n)
    group, indices = [], []
    for i in order:
        try:
            record = chain(dataset[i]) if chain is not None else dataset[i]
        except Exception as e:
            raise DataPipelineError(i, e) from e
        group.append(record)
        indices.append(i)
        if len(group) == spec.batch_size:
            yield _collate_group(group, indices)
            group, indices = [], []
    if group and not spec.drop_last:
        yield _collate_group(group, indices)


def _collate_group(group, indices):
    try:
        return collate(group, indices=indices)
    except VoxelflowError as e:
        raise DataPipelineError(list(indices), e) from e


def _route(module, batch):
    inputs = []
    for name in module.input_names:
        if name not in batch:
            raise MissingField(name)
        inputs.append(batch[name])
    outputs = module.forward(inputs)
    return dict(zip(module.output_names, outputs))


class _EpochStats:
    """Batch-size weighted running means."""

    def __init__(self):
        self.sums = {}
        self.count = 0

    def add(self, values, weight):
        for name, v in values.items():
            self.sums[name] = self.sums.get(name, 0.0) + v * weight

    def bump(self, weight):
        self.count += weight

    def means(self):
        return {name: s / self.count for name, s in self.sums.items()}


def _model_outputs(model, out_batch):
    return Record({name: out_batch[name] for name in model.output_names})


def run_training(spec, dataset, chain, bus):
    """Optimize for spec.epochs epochs; returns (model, list of EpochEvent)."""
    if spec.kind != "training":
        raise ConfigError(f"run_training got workflow kind {spec.kind!r}")
    if spec.epochs < 1:
        raise ConfigError(f"training needs epochs >= 1, got {spec.epochs}")
    if not spec.losses:
        raise ConfigError("training needs at least one loss")
    if spec.optimizer is None:
        raise ConfigError("training needs an optimizer")

    model = spec.model
    history = []
    for epoch in range(spec.epochs):
        loss_stats = _EpochStats()
        metric_stats = _EpochStats()
        sample_inputs = sample_outputs = None
        for batch in iterate_batches(dataset, chain, spec.loader, epoch):
            with Tape() as tape:
                out_batch = apply_to_batch(model, batch)
                batch_losses = {}
                total = None
                for loss_mod in spec.losses:
                    for name, value in _route(loss_mod, out_batch).items():
                        batch_losses[name] = batch_losses.get(name, 0.0) + value.item()
                        total = value if total is None else add(total, value)
                grads = tape.backward(total)
                for p in model.parameters:
                    g = grads.get(p.value.node) if p.value.node is not None else None
                    if g is not None:
                        p.grad = g
            spec.optimizer.step(model.parameters)

            batch_metrics = {}
            for metric_mod in spec.metrics:
                for name, value in _route(metric_mod, out_batch).items():
                    batch_metrics[name] = value.item()
            loss_stats.add(batch_losses, batch.batch_size)
            metric_stats.add(batch_metrics, batch.batch_size)
            loss_stats.bump(batch.batch_size)
            metric_stats.bump(batch.batch_size)
            if sample_inputs is None:
                sample_inputs = batch.entries
                sample_outputs = _model_outputs(model, out_batch)

        event = EpochEvent(
            workflow_id=spec.workflow_id,
            phase=spec.kind,
            epoch=epoch,
            losses=loss_stats.means(),
            metrics=metric_stats.means(),
            sample_inputs=sample_inputs,
            sample_outputs=sample_outputs,
            model_ref=snapshot_model(model),
        )
        history.append(event)
        bus.emit(EPOCH_END, event)
    bus.emit(WORKFLOW_END, history[-1])
    return model, history


def _evaluation_pass(spec, dataset, chain, bus, epoch, skip_absent_losses, output_dir):
    model = spec.model
    loss_stats = _EpochStats()
    metric_stats = _EpochStats()
    sample_inputs = sample_outputs = None
    for batch in iterate_batches(dataset, chain, spec.loader):
        out_batch = apply_to_batch(model, batch)
        batch_losses = {}
        for loss_mod in spec.losses:
            if skip_absent_losses and any(name not in out_batch for name in loss_mod.input_names):
                continue
            for name, value in _route(loss_mod, out_batch).items():
                batch_losses[name] = batch_losses.get(name, 0.0) + value.item()
        batch_metrics = {}
        for metric_mod in spec.metrics:
            for name, value in _route(metric_mod, out_batch).items():
                batch_metrics[name] = value.item()
        loss_stats.add(batch_losses, batch.batch_size)
        metric_stats.add(batch_metrics, batch.batch_size)
        loss_stats.bump(batch.batch_size)
        metric_stats.bump(batch.batch_size)
        if sample_inputs is None:
            sample_inputs = batch.entries
            sample_outputs = _model_outputs(model, out_batch)
        if output_dir is not None:
            _export_predictions(model, out_batch, output_dir)

    event = EpochEvent(
        workflow_id=spec.workflow_id,
        phase=spec.kind,
        epoch=epoch,
        losses=loss_stats.means(),
        metrics=metric_stats.means(),
        sample_inputs=sample_inputs,
        sample_outputs=sample_outputs,
        model_ref=snapshot_model(model),
    )
    bus.emit(EPOCH_END, event)
    bus.emit(WORKFLOW_END, event)
    return event


def _export_predictions(model, out_batch, output_dir):
    for row, src_index in enumerate(out_batch.source_indices):
        for name in model.output_names:
            value = out_batch[name]
            path = os.path.join(output_dir, f"{src_index:06d}_{name}.rtf")
            write_rtf(path, Tensor(value.data[row].copy()))


def run_validation(spec, dataset, chain, bus, epoch=0):
    """Single no-gradient pass; the caller supplies the epoch number so
    validation events align with the training epoch."""
    if spec.kind != "validation":
        raise ConfigError(f"run_validation got workflow kind {spec.kind!r}")
    return _evaluation_pass(spec, dataset, chain, bus, epoch, skip_absent_losses=False, output_dir=None)


def run_testing(spec, dataset, chain, bus, output_dir=None, epoch=0):
    """Single pass; losses are skipped when their fields are absent. With
    output_dir set, every prediction tensor is exported as RTF."""
    if spec.kind != "testing":
        raise ConfigError(f"run_testing got workflow kind {spec.kind!r}")
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
    return _evaluation_pass(spec, dataset, chain, bus, epoch, skip_absent_losses=True, output_dir=output_dir)
