"""Event consumers: console logging, machine-readable summaries, and
best-model checkpointing."""

import json
import logging
import os
import sys

from .checkpoint import write_snapshot
from .numerics import Tensor

log = logging.getLogger("voxelflow.hooks")


class Hook:
    """Base hook: subscribes to epoch-end events by default."""

    name = "hook"
    event_kinds = ("epoch_end",)

    def on_event(self, event):
        raise NotImplementedError


def _format_value(v):
    # '#' keeps trailing zeros, so 0.25 renders as 0.250000 (6 significant)
    return format(float(v), "#.6g")


class LoggingHook(Hook):
    """One line per epoch: phase, epoch, then name=value pairs."""

    name = "logging"

    def __init__(self, stream=None):
        self.stream = stream if stream is not None else sys.stderr

    def on_event(self, event):
        parts = [f"phase={event.phase}", f"epoch={event.epoch}"]
        parts += [f"{name}={_format_value(v)}" for name, v in event.losses.items()]
        parts += [f"{name}={_format_value(v)}" for name, v in event.metrics.items()]
        try:
            self.stream.write(" ".join(parts) + "\n")
            self.stream.flush()
        except OSError:
            log.exception("logging hook write failed (quarantined)")


def _digest(value):
    if not isinstance(value, Tensor):
        return None
    data = value.data
    return {
        "shape": list(data.shape),
        "mean": float(data.mean()) if data.size else 0.0,
        "min": float(data.min()) if data.size else 0.0,
        "max": float(data.max()) if data.size else 0.0,
    }


def _digest_record(record):
    if record is None:
        return {}
    digests = {}
    for name, value in record.items():
        d = _digest(value)
        if d is not None:
            digests[name] = d
    return digests


class SummaryHook(Hook):
    """Append one JSON object per epoch to a line-delimited summary file."""

    name = "summary"

    def __init__(self, path):
        self.path = path

    def on_event(self, event):
        line = {
            "workflow_id": event.workflow_id,
            "phase": event.phase,
            "epoch": event.epoch,
            "losses": event.losses,
            "metrics": event.metrics,
            "inputs": _digest_record(event.sample_inputs),
            "outputs": _digest_record(event.sample_outputs),
        }
        try:
            parent = os.path.dirname(self.path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(line) + "\n")
        except OSError:
            log.exception("summary hook write failed (quarantined)")


class SaveBestModelHook(Hook):
    """Checkpoint the model snapshot on strict improvement of a watched
    value ("losses.<name>" or "metrics.<name>"). The first observation
    always counts as an improvement."""

    name = "save_best_model"

    def __init__(self, directory, watch, mode="min", history=False):
        if mode not in ("min", "max"):
            raise ValueError(f"mode must be min|max, got {mode!r}")
        group, _, key = watch.partition(".")
        if group not in ("losses", "metrics") or not key:
            raise ValueError(f"watch must look like losses.<name> or metrics.<name>, got {watch!r}")
        self.directory = directory
        self.watch = watch
        self._group = group
        self._key = key
        self.mode = mode
        self.history = history
        self.best = None
        self._warned = False

    def on_event(self, event):
        values = getattr(event, self._group)
        if self._key not in values:
            if not self._warned:
                log.warning("watched value %s absent from events; never saving", self.watch)
                self._warned = True
            return
        value = values[self._key]
        improved = self.best is None or (value < self.best if self.mode == "min" else value > self.best)
        if not improved:
            return
        self.best = value
        if event.model_ref is None:
            log.warning("event carries no model snapshot; cannot save")
            return
        os.makedirs(self.directory, exist_ok=True)
        try:
            write_snapshot(event.model_ref, os.path.join(self.directory, "best.ckpt"))
            if self.history:
                write_snapshot(event.model_ref, os.path.join(self.directory, f"best_epoch{event.epoch}.ckpt"))
        except OSError:
            log.exception("best-model save failed (quarantined)")
