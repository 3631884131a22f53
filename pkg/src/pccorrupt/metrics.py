"""Corruption robustness metrics: OA, CE, mCE, RCE and RmCE.

For corruption ``i`` with per-level accuracies ``OA[i, l]``::

    CE_i  = sum_l (1 - OA[i, l])          / sum_l (1 - OA_base[i, l])
    RCE_i = sum_l (OA_clean - OA[i, l])   / sum_l (OA_base_clean - OA_base[i, l])

and mCE / RmCE average those over the seven corruptions. A table may give a
single mean-over-levels accuracy per corruption instead of five levels; the
sums then become ``5 * (1 - mOA)`` etc., which is the same quantity.
"""
import csv
import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

import numpy as np

from .corruptions import LEVELS, CorruptionKind
from .errors import (
    BaselineNoDrop,
    EmptyInput,
    IncompleteTable,
    LengthMismatch,
    MissingVariant,
    PerfectBaseline,
    ValueOutOfRange,
    WrongArity,
)

NUM_CORRUPTIONS = len(CorruptionKind)
REPORT_ORDER = tuple(CorruptionKind)  # Scale, Jitter, Drop-G, Drop-L, Add-G, Add-L, Rotate


def _check_fraction(value, what):
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ValueOutOfRange(f"{what} = {value} is not in [0, 1]")
    return value


@dataclass(frozen=True)
class CorruptionOA:
    """Accuracy on one corruption: five per-level values or one mean."""

    levels: tuple = None
    mean: float = None

    def __post_init__(self):
        if (self.levels is None) == (self.mean is None):
            raise ValueError("give exactly one of levels or mean")
        if self.levels is not None:
            levels = tuple(_check_fraction(v, "OA") for v in self.levels)
            if len(levels) != len(LEVELS):
                raise WrongArity(f"expected {len(LEVELS)} levels, got {len(levels)}")
            object.__setattr__(self, "levels", levels)
        else:
            object.__setattr__(self, "mean", _check_fraction(self.mean, "mOA"))

    @property
    def form(self):
        return "levels" if self.levels is not None else "mean"

    def mean_oa(self):
        return self.mean if self.levels is None else sum(self.levels) / len(self.levels)

    def error_sum(self):
        """Summed error over the five levels."""
        if self.levels is None:
            return len(LEVELS) * (1.0 - self.mean)
        return sum(1.0 - v for v in self.levels)

    def drop_sum(self, clean):
        """Summed accuracy drop from ``clean`` over the five levels."""
        if self.levels is None:
            return len(LEVELS) * (clean - self.mean)
        return sum(clean - v for v in self.levels)

    def to_json(self):
        return {"levels": list(self.levels)} if self.levels is not None else {"mean": self.mean}


@dataclass(frozen=True)
class OATable:
    clean: float
    corruptions: dict
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "clean", _check_fraction(self.clean, "clean OA"))
        table = {}
        for key, value in self.corruptions.items():
            kind = CorruptionKind.parse(key)
            if not isinstance(value, CorruptionOA):
                value = CorruptionOA(**value) if isinstance(value, dict) else CorruptionOA(mean=value)
            table[kind] = value
        object.__setattr__(self, "corruptions", table)

    def require_complete(self):
        missing = [k.label for k in REPORT_ORDER if k not in self.corruptions]
        if missing:
            raise IncompleteTable(f"{self.name or 'table'} lacks {', '.join(missing)}")

    def mean_oa(self):
        self.require_complete()
        return sum(self.corruptions[k].mean_oa() for k in REPORT_ORDER) / NUM_CORRUPTIONS

    @classmethod
    def from_json(cls, data, name=""):
        if isinstance(data, (str, Path)):
            path = Path(data)
            data = json.loads(path.read_text())
            name = name or data.get("name", path.stem)
        unknown = set(data) - {"clean", "corruptions", "name"}
        if unknown:
            raise ValueError(f"unknown OA table keys: {sorted(unknown)}")
        return cls(clean=data["clean"], corruptions=data["corruptions"],
                   name=name or data.get("name", ""))

    def to_json(self):
        out = {"clean": self.clean,
               "corruptions": {k.slug: self.corruptions[k].to_json()
                               for k in REPORT_ORDER if k in self.corruptions}}
        if self.name:
            out["name"] = self.name
        return out


# Mean-form DGCNN accuracies from the published full OA results.
DGCNN_BASELINE = OATable(
    clean=0.926,
    corruptions={
        "scale": 0.906,
        "jitter": 0.684,
        "drop_global": 0.752,
        "drop_local": 0.793,
        "add_global": 0.705,
        "add_local": 0.725,
        "rotate": 0.785,
    },
    name="DGCNN",
)


def overall_accuracy(predictions, labels):
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise LengthMismatch(f"{predictions.shape[0]} predictions vs {labels.shape[0]} labels")
    if predictions.size == 0:
        raise EmptyInput("no predictions")
    return float(np.count_nonzero(predictions == labels)) / float(predictions.size)


def _as_oa(value):
    if isinstance(value, CorruptionOA):
        return value
    if np.ndim(value) == 0:
        return CorruptionOA(mean=float(value))
    return CorruptionOA(levels=tuple(value))


def corruption_error(method_oa, baseline_oa):
    """CE from per-level accuracies (sequence of 5) or a mean accuracy (scalar)."""
    method_oa, baseline_oa = _as_oa(method_oa), _as_oa(baseline_oa)
    denom = baseline_oa.error_sum()
    if denom <= 0:
        raise PerfectBaseline("baseline makes no errors on this corruption")
    return method_oa.error_sum() / denom


def relative_ce(method_clean, method_oa, baseline_clean, baseline_oa):
    """RCE: accuracy drop from clean, relative to the baseline's drop."""
    method_oa, baseline_oa = _as_oa(method_oa), _as_oa(baseline_oa)
    method_clean = _check_fraction(method_clean, "clean OA")
    baseline_clean = _check_fraction(baseline_clean, "baseline clean OA")
    denom = baseline_oa.drop_sum(baseline_clean)
    if denom <= 0:
        raise BaselineNoDrop("baseline accuracy does not drop on this corruption")
    return method_oa.drop_sum(method_clean) / denom


def mean_ce(ces):
    ces = [float(v) for v in ces]
    if len(ces) != NUM_CORRUPTIONS:
        raise WrongArity(f"expected {NUM_CORRUPTIONS} values, got {len(ces)}")
    return sum(ces) / NUM_CORRUPTIONS


@dataclass
class MetricsReport:
    method: str
    baseline: str
    clean_oa: float
    mean_oa: float
    ce: dict
    rce: dict
    mce: float
    rmce: float
    corruption_oa: dict = field(default_factory=dict)
    radar_mode: str = "inv_ce"

    def radar(self):
        """``(corruption, value)`` pairs: 1/CE (None where CE is 0) or mean OA."""
        if self.radar_mode == "oa":
            return [(k.label, self.corruption_oa[k]) for k in REPORT_ORDER]
        return [(k.label, (1.0 / self.ce[k]) if self.ce[k] > 0 else None)
                for k in REPORT_ORDER]

    def to_json(self):
        return {
            "method": self.method,
            "baseline": self.baseline,
            "clean_oa": self.clean_oa,
            "mOA": self.mean_oa,
            "mCE": self.mce,
            "RmCE": self.rmce,
            "CE": {k.slug: self.ce[k] for k in REPORT_ORDER},
            "RCE": {k.slug: self.rce[k] for k in REPORT_ORDER},
            "OA": {k.slug: self.corruption_oa[k] for k in REPORT_ORDER},
            "radar": {"mode": self.radar_mode,
                      "series": [{"corruption": c, "value": v} for c, v in self.radar()]},
        }

    def to_markdown(self):
        heads = [k.label for k in REPORT_ORDER]
        lines = [
            "| Method | OA | mCE | " + " | ".join(heads) + " |",
            "|---|---|---|" + "---|" * len(heads),
            f"| {self.method} | {fmt3(self.clean_oa)} | {fmt3(self.mce)} | "
            + " | ".join(fmt3(self.ce[k]) for k in REPORT_ORDER) + " |",
            "",
            "| Method | RmCE | " + " | ".join(heads) + " |",
            "|---|---|" + "---|" * len(heads),
            f"| {self.method} | {fmt3(self.rmce)} | "
            + " | ".join(fmt3(self.rce[k]) for k in REPORT_ORDER) + " |",
        ]
        return "\n".join(lines) + "\n"

    def summary(self):
        return f"mCE {fmt3(self.mce)} RmCE {fmt3(self.rmce)} OA {fmt3(self.clean_oa)}"


def fmt3(value):
    """Three decimals, ties to even on the shortest decimal repr."""
    if value is None:
        return "-"
    return str(Decimal(repr(float(value))).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN))


def build_report(method, baseline, radar_mode="inv_ce"):
    method.require_complete()
    baseline.require_complete()
    ce, rce, oa = {}, {}, {}
    for kind in REPORT_ORDER:
        m, b = method.corruptions[kind], baseline.corruptions[kind]
        ce[kind] = corruption_error(m, b)
        rce[kind] = relative_ce(method.clean, m, baseline.clean, b)
        oa[kind] = m.mean_oa()
    return MetricsReport(
        method=method.name or "method",
        baseline=baseline.name or "baseline",
        clean_oa=method.clean,
        mean_oa=method.mean_oa(),
        ce=ce,
        rce=rce,
        mce=mean_ce(ce[k] for k in REPORT_ORDER),
        rmce=mean_ce(rce[k] for k in REPORT_ORDER),
        corruption_oa=oa,
        radar_mode=radar_mode,
    )


# --- predictions ---------------------------------------------------------

def variant_names():
    return ["clean"] + [f"{k.slug}_{lv}" for k in CorruptionKind for lv in LEVELS]


def read_predictions(path):
    """Read a ``index,pred`` CSV into an array ordered by index."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["index", "pred"]:
            raise ValueError(f"{path}: header must be 'index,pred'")
        rows = [(int(r["index"]), int(r["pred"])) for r in reader]
    rows.sort()
    if [i for i, _ in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: indices must cover 0..{len(rows) - 1} exactly once")
    return np.array([p for _, p in rows], dtype=np.int64)


def write_predictions(path, preds):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "pred"])
        writer.writerows((i, int(p)) for i, p in enumerate(preds))


def load_prediction_dir(pred_dir):
    """Map variant name to predictions; raises MissingVariant listing absent files."""
    pred_dir = Path(pred_dir)
    missing = [f"{n}.csv" for n in variant_names() if not (pred_dir / f"{n}.csv").is_file()]
    if missing:
        raise MissingVariant("missing prediction files: " + ", ".join(missing))
    return {n: read_predictions(pred_dir / f"{n}.csv") for n in variant_names()}


def oa_table_from_predictions(predictions, labels, name="method"):
    """Fold per-variant accuracies into a levels-form :class:`OATable`.

    ``labels`` maps variant name to its label array (all variants of a suite
    share labels, but they are checked individually).
    """
    missing = [n for n in variant_names() if n not in predictions]
    if missing:
        raise MissingVariant("missing variants: " + ", ".join(missing))
    clean = overall_accuracy(predictions["clean"], labels["clean"])
    corruptions = {}
    for kind in CorruptionKind:
        levels = []
        for lv in LEVELS:
            name_ = f"{kind.slug}_{lv}"
            levels.append(overall_accuracy(predictions[name_], labels[name_]))
        corruptions[kind] = CorruptionOA(levels=tuple(levels))
    return OATable(clean=clean, corruptions=corruptions, name=name)


def evaluate_suite(suite_dir, predictions, baseline=DGCNN_BASELINE, name="method",
                   radar_mode="inv_ce"):
    """Score predictions for every suite variant against the suite's labels."""
    from .dataset import load_manifest, read_pcb

    suite_dir = Path(suite_dir)
    manifest = load_manifest(suite_dir)
    paths = {("clean" if e["kind"] == "clean" else f"{e['kind']}_{e['level']}"): e["path"]
             for e in manifest["variants"]}
    labels = {}
    for variant in variant_names():
        if variant not in paths:
            raise MissingVariant(f"suite has no {variant} variant")
        _, labels[variant] = read_pcb(suite_dir / paths[variant])
    table = oa_table_from_predictions(predictions, labels, name=name)
    return build_report(table, baseline, radar_mode=radar_mode)
