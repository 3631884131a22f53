"""Command line interface: ``pccorrupt <subcommand> ...``.

Exit codes: 0 success, 1 verification found problems, 2 usage or input
error, 3 suite generation failure, 4 incomplete evaluation inputs.

Every option can also come from ``--config file.json`` (keys are option
names with ``-`` or ``_``); precedence is flag > config > environment
(``PCCORRUPT_SEED`` for seeds) > default.
"""
import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MissingVariant, PCCorruptError

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_GENERATION = 3
EXIT_EVAL = 4

SEED_ENV = "PCCORRUPT_SEED"
PAIRING_SAMPLE_INDEX = 0xFFFFFFFF  # reserved sample index for the pairing shuffle


class UsageError(Exception):
    pass


# option dest -> default, per subcommand
DEFAULTS = {
    "convert": {"input": None, "input_dir": None, "format": "ply", "output": None,
                "labels": None, "label_map": None},
    "gen-suite": {"clean": None, "seed": None, "out_dir": None, "severity": None,
                  "composite": None, "threads": None},
    "corrupt": {"input": None, "kind": None, "level": None, "seed": None, "output": None,
                "severity": None},
    "augment": {"input": None, "seed": None, "output": None, "labels_out": None,
                "pairing": "shuffle"},
    "eval": {"suite_dir": None, "pred_dir": None, "oa_table": None, "baseline": None,
             "out": None, "markdown": None, "figure": None, "name": "method",
             "radar": "inv_ce"},
    "baseline": {"action": None, "out": None},
    "render": {"input": None, "index": None, "mode": "svg", "output": None,
               "highlight_from": None},
    "verify": {"suite_dir": None},
}
REQUIRED = {
    "convert": ("output", "labels"),
    "gen-suite": ("clean", "out_dir"),
    "corrupt": ("input", "kind", "level", "output"),
    "augment": ("input", "output", "labels_out"),
    "eval": ("out",),
    "baseline": ("action", "out"),
    "render": ("input", "index", "output"),
    "verify": ("suite_dir",),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pccorrupt",
        description="Point-cloud corruption suite generation, augmentation and scoring.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file providing defaults for any option")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: available CPUs); output is identical")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    S = argparse.SUPPRESS

    p = sub.add_parser("convert", help="pack PLY/CSV clouds into a PCB file")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", nargs="+", default=S, help="input cloud files")
    src.add_argument("--input-dir", default=S, help="directory of input cloud files")
    p.add_argument("--format", choices=("ply", "csv"), default=S, help="input format (ply)")
    p.add_argument("--output", default=S, help="output PCB path")
    p.add_argument("--labels", default=S, help="CSV mapping filename to class id")
    p.add_argument("--label-map", default=S, help="class-name list used to validate ids")

    p = sub.add_parser("gen-suite", help="generate clean + 35 corrupted variants")
    p.add_argument("--clean", default=S, help="clean PCB test set")
    p.add_argument("--seed", default=S, help="global seed (decimal or 0x hex)")
    p.add_argument("--out-dir", default=S, help="suite output directory")
    p.add_argument("--severity", default=S, help="JSON severity-table overrides")
    p.add_argument("--composite", default=S,
                   help="also emit composite variants, e.g. 'size=2,levels=1-5'")
    p.add_argument("--threads", type=int, default=S, help="worker threads")

    p = sub.add_parser("corrupt", help="apply one corruption to every sample")
    p.add_argument("--input", default=S, help="input PCB")
    p.add_argument("--kind", default=S, help="corruption kind, e.g. drop_global")
    p.add_argument("--level", type=int, default=S, help="severity level 1-5")
    p.add_argument("--seed", default=S, help="global seed (decimal or 0x hex)")
    p.add_argument("--output", default=S, help="output PCB")
    p.add_argument("--severity", default=S, help="JSON severity-table overrides")

    p = sub.add_parser("augment", help="WOLFMix a PCB training set")
    p.add_argument("--input", default=S, help="input PCB (uniform point counts)")
    p.add_argument("--seed", default=S, help="global seed (decimal or 0x hex)")
    p.add_argument("--output", default=S, help="output PCB")
    p.add_argument("--labels-out", default=S, help="mixed-label JSON sidecar")
    p.add_argument("--pairing", choices=("shuffle", "sequential"), default=S,
                   help="pair a seeded shuffle (default) or the file order")

    p = sub.add_parser("eval", help="compute CE/mCE/RCE/RmCE")
    p.add_argument("--suite-dir", default=S, help="generated suite directory")
    p.add_argument("--pred-dir", default=S, help="directory of <variant>.csv predictions")
    p.add_argument("--oa-table", default=S,
                   help="score an OA table JSON directly instead of predictions")
    p.add_argument("--baseline", default=S, help="baseline OA table JSON (default DGCNN)")
    p.add_argument("--out", default=S, help="report JSON path")
    p.add_argument("--markdown", default=S, help="also write a markdown table")
    p.add_argument("--figure", default=S, help="also render a radar/bar figure (png, svg, pdf)")
    p.add_argument("--name", default=S, help="method name used in the report")
    p.add_argument("--radar", choices=("inv_ce", "oa"), default=S,
                   help="radar series: 1/CE (default) or OA")

    p = sub.add_parser("baseline", help="emit the bundled baseline OA table")
    p.add_argument("action", choices=("emit-dgcnn",), nargs="?", default=S)
    p.add_argument("--out", default=S, help="output JSON path")

    p = sub.add_parser("render", help="render one sample as SVG projections or colored PLY")
    p.add_argument("--input", default=S, help="input PCB")
    p.add_argument("--index", type=int, default=S, help="sample index")
    p.add_argument("--mode", choices=("svg", "ply"), default=S, help="output kind (svg)")
    p.add_argument("--output", default=S, help="output path")
    p.add_argument("--highlight-from", default=S,
                   help="reference PCB; points absent from its same-index sample are red")

    p = sub.add_parser("verify", help="check suite hashes and point counts")
    p.add_argument("--suite-dir", default=S, help="suite directory")
    return parser


def resolve(args):
    """Merge defaults, config file, environment and flags into one dict."""
    command = args.command
    opts = dict(DEFAULTS[command])
    given = {k: v for k, v in vars(args).items()
             if k not in ("command", "config") and v is not None}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config must be a JSON object")
        config = {k.replace("-", "_"): v for k, v in config.items()}
        unknown = sorted(set(config) - set(opts))
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
        opts.update(config)
    if "seed" in opts and opts["seed"] is None and "seed" not in given:
        opts["seed"] = os.environ.get(SEED_ENV)
    opts.update({k: v for k, v in given.items() if k in opts or k == "threads"})
    missing = [k for k in REQUIRED[command] if opts.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): "
                         + ", ".join("--" + m.replace("_", "-") for m in missing))
    if opts.get("threads") is None:
        opts["threads"] = os.cpu_count() or 1
    return opts


def _seed(opts):
    from .rng import parse_seed

    value = opts.get("seed")
    if value is None:
        raise UsageError(f"a seed is required (--seed, config, or {SEED_ENV})")
    try:
        return parse_seed(value)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _severity(opts):
    from .corruptions import DEFAULT_SEVERITY, SeverityTable

    if opts.get("severity") is None:
        return DEFAULT_SEVERITY
    try:
        return SeverityTable.from_json(opts["severity"])
    except (OSError, ValueError) as exc:
        raise UsageError(f"bad severity table {opts['severity']}: {exc}") from None


# --- subcommands ---------------------------------------------------------

def cmd_convert(opts):
    from .dataset import import_csv_cloud, import_ply, load_label_map, write_pcb

    if opts["input"]:
        files = [Path(p) for p in opts["input"]]
    elif opts["input_dir"]:
        suffix = "." + opts["format"]
        files = sorted(p for p in Path(opts["input_dir"]).iterdir()
                       if p.suffix.lower() == suffix)
    else:
        raise UsageError("give --input or --input-dir")
    if not files:
        raise UsageError("no input files found")
    mapping = _read_label_csv(opts["labels"])
    num_classes = len(load_label_map(opts["label_map"])) if opts["label_map"] else None
    reader = import_ply if opts["format"] == "ply" else import_csv_cloud
    clouds, labels, problems = [], [], []
    for path in files:
        label = mapping.get(path.name, mapping.get(path.stem))
        if label is None:
            problems.append(f"{path.name}: no row in {opts['labels']}")
            continue
        if num_classes is not None and not 0 <= label < num_classes:
            problems.append(f"{path.name}: label {label} outside {num_classes} classes")
            continue
        try:
            clouds.append(reader(path))
        except (OSError, ValueError) as exc:
            problems.append(f"{path.name}: {exc}")
            continue
        labels.append(label)
    if problems:
        for line in problems:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_USAGE
    write_pcb(opts["output"], clouds, labels)
    print(f"wrote {len(clouds)} samples to {opts['output']}")
    return EXIT_OK


def _read_label_csv(path):
    mapping = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if len(row) < 2 or not row[0].strip():
                continue
            try:
                mapping[row[0].strip()] = int(row[1])
            except ValueError:
                if not mapping:
                    continue  # header row
                raise UsageError(f"{path}: bad label {row[1]!r} for {row[0]}") from None
    return mapping


def cmd_gen_suite(opts):
    from .dataset import CompositeConfig, generate_suite

    seed = _seed(opts)
    severity = _severity(opts)
    composite = None
    if opts.get("composite"):
        try:
            composite = CompositeConfig.parse(opts["composite"])
        except ValueError as exc:
            raise UsageError(f"bad --composite: {exc}") from None
    if not Path(opts["clean"]).is_file():
        raise UsageError(f"clean set {opts['clean']} not found")
    config = {"command": "gen-suite", "seed": seed, "severity_sha256": severity.sha256(),
              "composite": composite.to_dict() if composite else None}
    try:
        generate_suite(opts["clean"], seed, opts["out_dir"], severity=severity,
                       composite=composite, threads=opts["threads"], config=config)
    except (PCCorruptError, OSError, ValueError) as exc:
        print(f"error: suite generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    print(Path(opts["out_dir"]) / "manifest.json")
    return EXIT_OK


def cmd_corrupt(opts):
    from .corruptions import CorruptionKind, LEVELS
    from .dataset import corrupt_dataset, read_pcb, write_pcb

    seed = _seed(opts)
    severity = _severity(opts)
    kind = CorruptionKind.parse(opts["kind"])
    level = int(opts["level"])
    if level not in LEVELS:
        raise UsageError(f"--level must be one of {LEVELS}, got {level}")
    clouds, labels = read_pcb(opts["input"])
    out = corrupt_dataset(clouds, kind, level, seed, severity)
    write_pcb(opts["output"], out, labels)
    print(f"wrote {len(out)} {kind.slug}_{level} samples to {opts['output']}")
    return EXIT_OK


def cmd_augment(opts):
    from .augmentation import DeformConfig, MixConfig, MixedLabel, pointwolf_deform, wolfmix
    from .dataset import read_pcb, write_pcb
    from .rng import AUGMENTATION_ID, derive_stream

    seed = _seed(opts)
    clouds, labels = read_pcb(opts["input"])
    n = len(clouds)
    if n < 2:
        raise UsageError("augment needs at least 2 samples")
    if len({c.shape[0] for c in clouds}) != 1:
        raise UsageError("augment needs uniform point counts (input is ragged)")
    if opts["pairing"] == "shuffle":
        order = derive_stream(seed, AUGMENTATION_ID, 0, PAIRING_SAMPLE_INDEX).permutation(n)
    else:
        order = np.arange(n)
    # consecutive pairs (a, b) yield wolfmix(a, b) and wolfmix(b, a); output i has sample i as A
    partner = {}
    for j in range(0, n - 1, 2):
        a, b = int(order[j]), int(order[j + 1])
        partner[a], partner[b] = b, a
    dcfg = DeformConfig()
    mcfg = MixConfig(n_max=min(MixConfig().n_max, clouds[0].shape[0]))
    out_clouds, out_labels = [], []
    for i in range(n):
        stream = derive_stream(seed, AUGMENTATION_ID, 0, i)
        if i in partner:
            j = partner[i]
            cloud, mixed = wolfmix((clouds[i], int(labels[i])), (clouds[j], int(labels[j])),
                                   dcfg, mcfg, stream)
        else:
            cloud = pointwolf_deform(clouds[i], dcfg, stream)
            mixed = MixedLabel.pure(int(labels[i]))
        out_clouds.append(cloud)
        out_labels.append(mixed)
    write_pcb(opts["output"], out_clouds, [m.entries[0][0] for m in out_labels])
    with open(opts["labels_out"], "w") as fh:
        json.dump([m.to_json() for m in out_labels], fh, indent=1)
        fh.write("\n")
    print(f"wrote {n} augmented samples to {opts['output']}")
    return EXIT_OK


def cmd_eval(opts):
    from .metrics import DGCNN_BASELINE, OATable, build_report, evaluate_suite, load_prediction_dir

    baseline = DGCNN_BASELINE
    if opts.get("baseline"):
        baseline = OATable.from_json(opts["baseline"])
    if opts.get("oa_table"):
        table = OATable.from_json(opts["oa_table"])
        report = build_report(table, baseline, radar_mode=opts["radar"])
    else:
        if not opts.get("suite_dir") or not opts.get("pred_dir"):
            raise UsageError("give --suite-dir and --pred-dir, or --oa-table")
        try:
            preds = load_prediction_dir(opts["pred_dir"])
            report = evaluate_suite(opts["suite_dir"], preds, baseline, name=opts["name"],
                                    radar_mode=opts["radar"])
        except MissingVariant as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_EVAL
    Path(opts["out"]).write_text(json.dumps(report.to_json(), indent=2) + "\n")
    if opts.get("markdown"):
        Path(opts["markdown"]).write_text(report.to_markdown())
    if opts.get("figure"):
        from .plotting import report_figure

        report_figure([report], opts["figure"])
    print(report.summary())
    return EXIT_OK


def cmd_baseline(opts):
    from .metrics import DGCNN_BASELINE

    Path(opts["out"]).write_text(json.dumps(DGCNN_BASELINE.to_json(), indent=2) + "\n")
    print(f"wrote {opts['out']}")
    return EXIT_OK


def cmd_render(opts):
    from .dataset import read_pcb
    from .render import added_point_mask, render_ply, render_svg

    clouds, _ = read_pcb(opts["input"])
    index = int(opts["index"])
    if not 0 <= index < len(clouds):
        raise UsageError(f"--index {index} outside [0, {len(clouds)})")
    cloud = clouds[index]
    mask = None
    if opts.get("highlight_from"):
        ref, _ = read_pcb(opts["highlight_from"])
        if index >= len(ref):
            raise UsageError(f"--highlight-from has no sample {index}")
        mask = added_point_mask(cloud, ref[index])
    if opts["mode"] == "svg":
        render_svg(cloud, opts["output"], highlight=mask)
    else:
        render_ply(cloud, opts["output"], highlight=mask)
    print(f"wrote {opts['output']}")
    return EXIT_OK


def cmd_verify(opts):
    from .dataset import verify_suite

    report = verify_suite(opts["suite_dir"])
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["ok"] else EXIT_VERIFY


COMMANDS = {
    "convert": cmd_convert,
    "gen-suite": cmd_gen_suite,
    "corrupt": cmd_corrupt,
    "augment": cmd_augment,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "render": cmd_render,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        return COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PCCorruptError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
