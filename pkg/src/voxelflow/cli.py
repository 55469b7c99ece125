"""Command line interface.

Exit codes: 0 success, 1 runtime failure, 2 configuration or validation
failure. The `train` command executes the config's phases sequentially
(train, then validate, then test when present); validate/test phases reuse
the freshly trained model when their model entry matches the train phase's.
"""

import argparse
import json
import os
import sys

from .checkpoint import load_model, save_model
from .config import build_phase, check_config, default_registry, describe_registry, parse_config
from .errors import ConfigError, VoxelflowError
from .workflows import run_testing, run_training, run_validation

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _load_doc(path, args=None):
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    doc = parse_config(text)
    if args is not None:
        if getattr(args, "seed", None) is not None:
            doc.seed = args.seed
        if getattr(args, "output_dir", None) is not None:
            doc.output_dir = args.output_dir
        if getattr(args, "epochs", None) is not None and "train" in doc.phases:
            doc.phases["train"].workflow.params["epochs"] = args.epochs
    return doc


def _checked(doc, registry):
    report = check_config(doc, registry)
    if not report.ok:
        raise ConfigError(str(report))
    return doc


def _cmd_train(args):
    registry = default_registry()
    doc = _checked(_load_doc(args.config, args), registry)
    if "train" not in doc.phases:
        raise ConfigError("train command requires a train phase", "phases.train")

    train = build_phase(doc, "train", registry)
    model, history = run_training(train.workflow_spec(), train.dataset, train.chain, train.bus)
    last_epoch = history[-1].epoch

    os.makedirs(doc.output_dir, exist_ok=True)
    save_model(model, model.descriptor, os.path.join(doc.output_dir, "final.ckpt"))

    for phase_name, runner in (("validate", run_validation), ("test", run_testing)):
        if phase_name not in doc.phases:
            continue
        wired = build_phase(doc, phase_name, registry)
        if doc.phases[phase_name].model == doc.phases["train"].model:
            wired.model = model  # evaluate the trained parameters
        runner(wired.workflow_spec(), wired.dataset, wired.chain, wired.bus, epoch=last_epoch)
    return EXIT_OK


def _cmd_validate(args):
    registry = default_registry()
    doc = _checked(_load_doc(args.config, args), registry)
    if "validate" not in doc.phases:
        raise ConfigError("validate command requires a validate phase", "phases.validate")
    wired = build_phase(doc, "validate", registry)
    wired.model = load_model(args.checkpoint, registry)
    event = run_validation(wired.workflow_spec(), wired.dataset, wired.chain, wired.bus)
    _print_event(event)
    return EXIT_OK


def _cmd_test(args):
    registry = default_registry()
    doc = _checked(_load_doc(args.config, args), registry)
    if "test" not in doc.phases:
        raise ConfigError("test command requires a test phase", "phases.test")
    wired = build_phase(doc, "test", registry)
    wired.model = load_model(args.checkpoint, registry)
    output_dir = None
    if args.export_predictions:
        output_dir = os.path.join(doc.output_dir, "predictions")
    event = run_testing(wired.workflow_spec(), wired.dataset, wired.chain, wired.bus, output_dir=output_dir)
    _print_event(event)
    return EXIT_OK


def _print_event(event):
    pairs = [f"{k}={v:.6f}" for k, v in list(event.losses.items()) + list(event.metrics.items())]
    print(f"{event.phase}: " + (" ".join(pairs) if pairs else "done"))


def _cmd_check(args):
    registry = default_registry()
    doc = _load_doc(args.config)
    report = check_config(doc, registry)
    if report.ok:
        return EXIT_OK
    print(str(report), file=sys.stderr)
    return EXIT_CONFIG


def _cmd_describe(args):
    catalog = json.dumps(describe_registry(default_registry()), indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(catalog + "\n")
    else:
        print(catalog)
    return EXIT_OK


def _cmd_serve_catalog(args):
    from .server import serve_catalog

    serve_catalog(port=args.port)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="voxelflow", description="Config-driven training, validation and testing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the train phase (then validate/test when configured)")
    p.add_argument("config")
    p.add_argument("--output-dir", help="override the config's output_dir")
    p.add_argument("--seed", type=int, help="override the config's seed")
    p.add_argument("--epochs", type=int, help="override the train workflow's epochs")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("validate", help="evaluate a checkpoint on the validate phase")
    p.add_argument("config")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("test", help="evaluate a checkpoint on the test phase")
    p.add_argument("config")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--export-predictions", action="store_true")
    p.set_defaults(fn=_cmd_test)

    p = sub.add_parser("check", help="validate a config without running anything")
    p.add_argument("config")
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("describe", help="print the module catalog as JSON")
    p.add_argument("--output", help="write to a file instead of stdout")
    p.set_defaults(fn=_cmd_describe)

    p = sub.add_parser("serve-catalog", help="serve the catalog and config checker over HTTP")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(fn=_cmd_serve_catalog)

    return parser


def cli(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except VoxelflowError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
