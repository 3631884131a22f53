"""File formats and suite generation.

PCB layout (little-endian)::

    magic             4 bytes  b"PCB1"
    flags             u32      bit 0: per-sample counts present (ragged)
    n_samples         u32
    points_per_sample u32      0 when ragged
    counts            u32[n_samples]        only when ragged
    labels            u16[n_samples]
    coords            f32[sum(counts) * 3]  sample-major, point-major, axis-minor

Computation happens in float64; values are rounded to float32 only when
written.
"""
import csv
import hashlib
import json
import os
import shutil
import struct
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .corruptions import (
    DEFAULT_SEVERITY,
    CorruptionKind,
    CorruptionSpec,
    SeverityTable,
    apply,
    apply_composite,
    expected_count,
    sample_composite,
    LEVELS,
)
from .errors import (
    BadMagic,
    CountOverflow,
    InvalidCloud,
    ManifestMissing,
    PCBError,
    TruncatedFile,
    UnsupportedPly,
)
from .rng import COMPOSITE_ID, derive_stream, parse_seed

MAGIC = b"PCB1"
FLAG_RAGGED = 1
_HEADER = struct.Struct("<4sIII")
_U32_MAX = 0xFFFFFFFF
_U16_MAX = 0xFFFF

MANIFEST_NAME = "manifest.json"
CLEAN_NAME = "clean.pcb"
MANIFEST_FORMAT = "pccorrupt-manifest/1"


# --- PCB -----------------------------------------------------------------

def encode_pcb(clouds, labels):
    clouds = [np.asarray(c, dtype=np.float32).reshape(-1, 3) for c in clouds]
    labels = [int(v) for v in labels]
    if len(clouds) != len(labels):
        raise PCBError(f"{len(clouds)} clouds but {len(labels)} labels")
    if len(clouds) > _U32_MAX:
        raise CountOverflow("too many samples for a u32 header")
    counts = [c.shape[0] for c in clouds]
    if any(n == 0 for n in counts):
        raise InvalidCloud("cannot store an empty cloud")
    if any(n > _U32_MAX for n in counts):
        raise CountOverflow("cloud too large for a u32 count")
    if any(not 0 <= v <= _U16_MAX for v in labels):
        raise CountOverflow("labels must fit in u16")
    ragged = len(set(counts)) > 1
    per_sample = 0 if ragged or not counts else counts[0]
    parts = [_HEADER.pack(MAGIC, FLAG_RAGGED if ragged else 0, len(clouds), per_sample)]
    if ragged:
        parts.append(np.asarray(counts, dtype="<u4").tobytes())
    parts.append(np.asarray(labels, dtype="<u2").tobytes())
    if clouds:
        parts.append(np.concatenate(clouds).astype("<f4").tobytes())
    return b"".join(parts)


def decode_pcb(data, num_classes=None):
    if len(data) < _HEADER.size:
        raise TruncatedFile("file shorter than the PCB header")
    magic, flags, n, per_sample = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
    offset = _HEADER.size
    if flags & FLAG_RAGGED:
        need = offset + 4 * n
        if len(data) < need:
            raise TruncatedFile("file ends inside the counts table")
        counts = np.frombuffer(data, dtype="<u4", count=n, offset=offset).astype(np.int64)
        offset = need
    else:
        counts = np.full(n, per_sample, dtype=np.int64)
    if (counts == 0).any():
        raise PCBError("zero-point sample in PCB file")
    need = offset + 2 * n
    if len(data) < need:
        raise TruncatedFile("file ends inside the labels table")
    labels = np.frombuffer(data, dtype="<u2", count=n, offset=offset).astype(np.int64)
    offset = need
    total = int(counts.sum())
    need = offset + 12 * total
    if len(data) < need:
        raise TruncatedFile(f"expected {12 * total} coordinate bytes, found {len(data) - offset}")
    if len(data) > need:
        raise PCBError(f"{len(data) - need} trailing bytes after coordinates")
    coords = np.frombuffer(data, dtype="<f4", count=3 * total, offset=offset).reshape(-1, 3)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    clouds = [coords[a:b].astype(np.float32) for a, b in zip(bounds[:-1], bounds[1:])]
    if num_classes is not None and (labels >= num_classes).any():
        raise PCBError(f"label {int(labels.max())} outside the {num_classes}-class label map")
    return clouds, labels


def write_pcb(path, clouds, labels):
    data = encode_pcb(clouds, labels)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def read_pcb(path, num_classes=None):
    """Return ``(clouds, labels)``; clouds are float32 arrays exactly as stored."""
    return decode_pcb(Path(path).read_bytes(), num_classes)


def read_counts(path):
    clouds, _ = read_pcb(path)
    return [c.shape[0] for c in clouds]


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# --- label maps ----------------------------------------------------------

def load_label_map(path):
    """Class names, one per line (or a JSON list); the line index is the label id."""
    text = Path(path).read_text()
    if text.lstrip().startswith("["):
        names = [str(v) for v in json.loads(text)]
    else:
        names = [line.strip() for line in text.splitlines() if line.strip()]
    if len(set(names)) != len(names):
        raise ValueError("label map has duplicate class names")
    return names


# --- PLY / CSV -----------------------------------------------------------

def import_ply(path):
    """Read the vertex positions of an ascii PLY file, in file order."""
    with open(path, "r", errors="replace") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise UnsupportedPly(f"{path}: not a PLY file")
    elements = []
    fmt = None
    body = None
    for i, line in enumerate(lines[1:], start=1):
        tokens = line.split()
        if not tokens or tokens[0] in ("comment", "obj_info"):
            continue
        if tokens[0] == "format":
            fmt = tokens[1]
        elif tokens[0] == "element":
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if not elements:
                raise UnsupportedPly(f"{path}: property before any element")
            elements[-1][2].append(tokens[-1])
        elif tokens[0] == "end_header":
            body = i + 1
            break
    if body is None:
        raise UnsupportedPly(f"{path}: missing end_header")
    if fmt != "ascii":
        raise UnsupportedPly(f"{path}: only ascii PLY is supported (got {fmt})")
    start = body
    for name, count, props in elements:
        if name == "vertex":
            try:
                cols = [props.index(axis) for axis in "xyz"]
            except ValueError:
                raise UnsupportedPly(f"{path}: vertex element lacks x, y, z") from None
            rows = lines[start:start + count]
            if len(rows) < count:
                raise UnsupportedPly(f"{path}: expected {count} vertices, found {len(rows)}")
            try:
                table = np.array([[float(r.split()[c]) for c in cols] for r in rows],
                                 dtype=np.float64)
            except (ValueError, IndexError) as exc:
                raise UnsupportedPly(f"{path}: malformed vertex row ({exc})") from None
            return table.reshape(-1, 3)
        start += count
    raise UnsupportedPly(f"{path}: no vertex element")


def export_ply(path, cloud, colors=None):
    """Write an ascii PLY; ``colors`` is an optional ``(N, 3)`` uint8 array."""
    cloud = np.asarray(cloud, dtype=np.float32).reshape(-1, 3)
    header = ["ply", "format ascii 1.0", f"element vertex {cloud.shape[0]}",
              "property float x", "property float y", "property float z"]
    if colors is not None:
        colors = np.asarray(colors, dtype=np.uint8).reshape(-1, 3)
        if colors.shape[0] != cloud.shape[0]:
            raise ValueError("one color per point is required")
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header.append("end_header")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(header) + "\n")
        for i, p in enumerate(cloud):
            row = " ".join(f"{float(v):.9g}" for v in p)
            if colors is not None:
                row += " " + " ".join(str(int(c)) for c in colors[i])
            fh.write(row + "\n")


def import_csv_cloud(path):
    """Read ``x,y,z`` rows; a non-numeric first row is treated as a header."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append([float(v) for v in row[:3]])
            except ValueError:
                if i == 0:
                    continue
                raise ValueError(f"{path}: line {i + 1} is not numeric") from None
            if len(rows[-1]) != 3:
                raise ValueError(f"{path}: line {i + 1} needs 3 columns")
    if not rows:
        raise ValueError(f"{path}: no points")
    return np.array(rows, dtype=np.float64)


# --- suite generation ----------------------------------------------------

@dataclass(frozen=True)
class CompositeConfig:
    """How composite variants are sampled: ``size`` distinct kinds per sample."""

    size: int = 2
    levels: tuple = LEVELS

    @classmethod
    def parse(cls, text):
        """Parse ``"size=3,levels=1-5"`` style specs (either key optional)."""
        kwargs = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, _, value = part.partition("=")
            key = key.strip()
            if key == "size":
                kwargs["size"] = int(value)
            elif key == "levels":
                if "-" in value:
                    lo, hi = (int(v) for v in value.split("-"))
                    kwargs["levels"] = tuple(range(lo, hi + 1))
                else:
                    kwargs["levels"] = tuple(int(v) for v in value.split("+"))
            else:
                raise ValueError(f"unknown composite option {key!r}")
        cfg = cls(**kwargs)
        if not 1 <= cfg.size <= len(CorruptionKind):
            raise ValueError(f"composite size must be in [1, {len(CorruptionKind)}]")
        if not cfg.levels or any(lv not in LEVELS for lv in cfg.levels):
            raise ValueError(f"composite levels must be within {LEVELS}")
        return cfg

    def to_dict(self):
        return {"size": self.size, "levels": list(self.levels)}


def variant_name(kind, level):
    return f"{CorruptionKind.parse(kind).slug}_{level}"


def suite_variants():
    return [(kind, level) for kind in CorruptionKind for level in LEVELS]


def corrupt_dataset(clouds, kind, level, global_seed, severity=DEFAULT_SEVERITY):
    """Corrupt every sample with its own derived stream."""
    spec = CorruptionSpec(CorruptionKind.parse(kind), level)
    out = []
    for i, cloud in enumerate(clouds):
        stream = derive_stream(global_seed, int(spec.kind), spec.level, i)
        out.append(apply(spec, cloud, stream, severity))
    return out


def composite_dataset(clouds, level, global_seed, cfg, severity=DEFAULT_SEVERITY):
    out = []
    for i, cloud in enumerate(clouds):
        stream = derive_stream(global_seed, COMPOSITE_ID, level, i)
        specs = sample_composite(level, stream, cfg.size)
        out.append(apply_composite(specs, cloud, stream, severity))
    return out


def _write_variant(tmp, name, clouds, labels):
    path = tmp / f"{name}.pcb"
    write_pcb(path, clouds, labels)
    return path


def generate_suite(clean_path, global_seed, out_dir, severity=DEFAULT_SEVERITY,
                   composite=None, threads=1, config=None):
    """Write the 35 corrupted variants, ``clean.pcb`` and ``manifest.json``.

    Output is assembled in a temporary sibling directory and renamed into
    place only when every file has been written. An existing ``out_dir`` is
    replaced only if it is empty or holds a previous suite.
    """
    global_seed = parse_seed(global_seed)
    out_dir = Path(out_dir)
    clouds, labels = read_pcb(clean_path)
    if out_dir.exists() and any(out_dir.iterdir()) and not (out_dir / MANIFEST_NAME).exists():
        raise FileExistsError(f"{out_dir} exists and does not hold a suite")
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        shutil.copyfile(clean_path, tmp / CLEAN_NAME)
        jobs = [(variant_name(k, lv), k, lv) for k, lv in suite_variants()]

        def run(job):
            name, kind, level = job
            data = corrupt_dataset(clouds, kind, level, global_seed, severity)
            return _write_variant(tmp, name, data, labels)

        def run_composite(level):
            data = composite_dataset(clouds, level, global_seed, composite, severity)
            return _write_variant(tmp, f"composite_{level}", data, labels)

        with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
            list(pool.map(run, jobs))
            if composite is not None:
                list(pool.map(run_composite, composite.levels))

        entries = [_entry(tmp, "clean", 0, CLEAN_NAME, len(clouds))]
        for name, kind, level in jobs:
            entries.append(_entry(tmp, kind.slug, level, f"{name}.pcb", len(clouds)))
        if composite is not None:
            for level in composite.levels:
                entries.append(_entry(tmp, "composite", level, f"composite_{level}.pcb",
                                      len(clouds)))
        manifest = {
            "format": MANIFEST_FORMAT,
            "tool_version": __version__,
            "global_seed": global_seed,
            "severity_sha256": severity.sha256(),
            "severity": severity.to_dict(),
            "composite": composite.to_dict() if composite is not None else None,
            "config": config or {},
            "variants": entries,
        }
        (tmp / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        if out_dir.exists():
            shutil.rmtree(out_dir)
        os.replace(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return manifest


def _entry(root, kind, level, rel, samples):
    return {"kind": kind, "level": level, "path": rel, "samples": samples,
            "sha256": sha256_file(root / rel)}


def load_manifest(suite_dir):
    path = Path(suite_dir) / MANIFEST_NAME
    if not path.is_file():
        raise ManifestMissing(f"no {MANIFEST_NAME} in {suite_dir}")
    return json.loads(path.read_text())


def verify_suite(suite_dir):
    """Check every manifest hash and the per-sample cardinality of every variant.

    Returns a dict with ``hash_mismatches``, ``cardinality_violations`` and
    ``missing`` lists plus an overall ``ok`` flag.
    """
    suite_dir = Path(suite_dir)
    manifest = load_manifest(suite_dir)
    severity = SeverityTable.from_dict(manifest.get("severity", {}))
    report = {"hash_mismatches": [], "cardinality_violations": [], "missing": []}
    clean_counts = None
    clean_path = suite_dir / CLEAN_NAME
    if clean_path.is_file():
        try:
            clean_counts = read_counts(clean_path)
        except PCBError as exc:
            report["cardinality_violations"].append({"path": CLEAN_NAME, "error": str(exc)})
    for entry in manifest["variants"]:
        path = suite_dir / entry["path"]
        if not path.is_file():
            report["missing"].append(entry["path"])
            continue
        if sha256_file(path) != entry["sha256"]:
            report["hash_mismatches"].append(entry["path"])
        if entry["kind"] in ("clean", "composite") or clean_counts is None:
            continue
        try:
            counts = read_counts(path)
        except PCBError as exc:
            report["cardinality_violations"].append({"path": entry["path"], "error": str(exc)})
            continue
        if len(counts) != len(clean_counts):
            report["cardinality_violations"].append(
                {"path": entry["path"],
                 "error": f"{len(counts)} samples, expected {len(clean_counts)}"})
            continue
        for i, (got, n) in enumerate(zip(counts, clean_counts)):
            want = expected_count(entry["kind"], entry["level"], n, severity)
            if got != want:
                report["cardinality_violations"].append(
                    {"path": entry["path"], "sample": i, "points": got, "expected": want})
                break
    report["ok"] = not any(report[k] for k in ("hash_mismatches", "cardinality_violations",
                                                 "missing"))
    return report
