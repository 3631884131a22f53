"""The seven atomic point-cloud corruptions at five severity levels.

Each corruption takes an explicit :class:`~pccorrupt.rng.RandomStream` and
draws from it in a fixed, documented order, so two implementations fed the
same stream produce the same bytes. Nothing here touches global state.

This module is for building test sets only. The augmentation module must not
import it: corruptions used at evaluation time are out-of-distribution by
construction and are never used for training.
"""
import enum
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import (
    CloudTooSmall,
    DuplicateKind,
    EmptyResult,
    InvalidKind,
    InvalidLevel,
)
from .geometry import as_cloud, euler_rotation_matrix, knn_indices, normalize_unit_sphere

LEVELS = (1, 2, 3, 4, 5)
MAX_CLUSTERS = 8


class CorruptionKind(enum.IntEnum):
    """Corruption kinds. Integer codes are stable and used in seeds and manifests."""

    SCALE = 0
    JITTER = 1
    DROP_GLOBAL = 2
    DROP_LOCAL = 3
    ADD_GLOBAL = 4
    ADD_LOCAL = 5
    ROTATE = 6

    @property
    def slug(self):
        return self.name.lower()

    @property
    def label(self):
        return DISPLAY_NAMES[self]

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, int):
            return cls(value)
        key = str(value).strip().lower().replace("-", "_")
        for kind in cls:
            if key in (kind.slug, DISPLAY_NAMES[kind].lower().replace("-", "_")):
                return kind
        valid = ", ".join(k.slug for k in cls)
        raise InvalidKind(f"unknown corruption kind {value!r}; valid kinds: {valid}")


DISPLAY_NAMES = {
    CorruptionKind.SCALE: "Scale",
    CorruptionKind.JITTER: "Jitter",
    CorruptionKind.DROP_GLOBAL: "Drop-G",
    CorruptionKind.DROP_LOCAL: "Drop-L",
    CorruptionKind.ADD_GLOBAL: "Add-G",
    CorruptionKind.ADD_LOCAL: "Add-L",
    CorruptionKind.ROTATE: "Rotate",
}


@dataclass(frozen=True)
class SeverityTable:
    """Per-level corruption parameters. Defaults are the benchmark's values."""

    jitter_sigma: tuple = (0.01, 0.02, 0.03, 0.04, 0.05)
    scale_S: tuple = (1.6, 1.7, 1.8, 1.9, 2.0)
    rotate_theta: tuple = (math.pi / 30, math.pi / 15, math.pi / 10, math.pi / 7.5, math.pi / 6)
    dropg_rho: tuple = (0.25, 0.375, 0.5, 0.675, 0.75)
    dropl_K: tuple = (100, 200, 300, 400, 500)
    addg_K: tuple = (10, 20, 30, 40, 50)
    addl_K: tuple = (100, 200, 300, 400, 500)
    cluster_C_range: tuple = (1, MAX_CLUSTERS)
    addl_sigma_range: tuple = (0.075, 0.125)

    def __post_init__(self):
        for f in fields(self):
            value = tuple(getattr(self, f.name))
            object.__setattr__(self, f.name, value)
            if f.name.endswith("_range"):
                if len(value) != 2 or not value[0] <= value[1]:
                    raise ValueError(f"{f.name} must be an ordered pair, got {value}")
                continue
            if len(value) != 5:
                raise ValueError(f"{f.name} needs 5 levels, got {len(value)}")
            if any(b <= a for a, b in zip(value, value[1:])):
                raise ValueError(f"{f.name} must be strictly increasing: {value}")
            if any(v <= 0 for v in value):
                raise ValueError(f"{f.name} must be positive: {value}")
        if self.cluster_C_range[0] < 1:
            raise ValueError("cluster counts start at 1")

    @classmethod
    def from_dict(cls, data):
        """Build a table from a (partial) mapping of overrides; unknown keys are rejected."""
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown severity keys: {sorted(unknown)}")
        ints = {"dropl_K", "addg_K", "addl_K", "cluster_C_range"}
        kwargs = {}
        for key, value in data.items():
            kwargs[key] = tuple(int(v) if key in ints else float(v) for v in value)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {k: list(v) for k, v in asdict(self).items()}

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def sha256(self):
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


DEFAULT_SEVERITY = SeverityTable()


@dataclass(frozen=True)
class CorruptionSpec:
    kind: CorruptionKind
    level: int

    def __post_init__(self):
        object.__setattr__(self, "kind", CorruptionKind.parse(self.kind))
        _check_level(self.level)

    @property
    def name(self):
        return f"{self.kind.slug}_{self.level}"


@dataclass
class ClusterPlan:
    """Cluster sizes (and, for Add-Local, centers and spreads) for a local corruption."""

    sizes: list
    centers: list = field(default_factory=list)
    sigmas: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.sizes)


def _check_level(level):
    if isinstance(level, bool) or int(level) != level or level not in LEVELS:
        raise InvalidLevel(f"severity level must be one of {LEVELS}, got {level!r}")
    return int(level)


def cluster_sizes(total, clusters, stream):
    """Split ``total`` into ``clusters`` positive sizes, uniformly over compositions.

    Draws distinct cut points from ``{1 .. total-1}`` one ``int_inclusive`` at a
    time (repeats are redrawn), sorts them and takes successive differences.
    """
    if not 1 <= clusters <= total:
        raise ValueError(f"cannot split {total} points into {clusters} clusters")
    cuts = set()
    while len(cuts) < clusters - 1:
        cuts.add(stream.int_inclusive(1, total - 1))
    bounds = [0] + sorted(cuts) + [total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def _draw_cluster_count(stream, severity, total):
    lo, hi = severity.cluster_C_range
    return min(stream.int_inclusive(lo, hi), total)


# --- atomic corruptions --------------------------------------------------

def jitter(cloud, level, stream, severity=DEFAULT_SEVERITY):
    """Add N(0, sigma^2) noise to every coordinate, point-major, axis-minor."""
    level = _check_level(level)
    cloud = as_cloud(cloud)
    sigma = severity.jitter_sigma[level - 1]
    noise = stream.gaussian_array(cloud.size, 0.0, sigma).reshape(cloud.shape)
    return cloud + noise


def scale(cloud, level, stream, severity=DEFAULT_SEVERITY):
    """Scale each axis by an independent U(1/S, S) factor, then re-normalize."""
    level = _check_level(level)
    cloud = as_cloud(cloud)
    s = severity.scale_S[level - 1]
    factors = np.array([stream.uniform(1.0 / s, s) for _ in range(3)])
    return normalize_unit_sphere(cloud * factors)


def rotate(cloud, level, stream, severity=DEFAULT_SEVERITY):
    """Rotate about the origin by Euler angles drawn from U(-theta, theta)."""
    level = _check_level(level)
    cloud = as_cloud(cloud)
    theta = severity.rotate_theta[level - 1]
    alpha, beta, gamma = (stream.uniform(-theta, theta) for _ in range(3))
    return cloud @ euler_rotation_matrix(alpha, beta, gamma).T


def drop_global(cloud, level, stream, severity=DEFAULT_SEVERITY):
    """Shuffle and drop the last ``floor(N * rho)`` points."""
    level = _check_level(level)
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    if n < 2:
        raise CloudTooSmall("drop_global needs at least 2 points")
    dropped = math.floor(n * severity.dropg_rho[level - 1])
    if dropped >= n:
        raise EmptyResult(f"dropping {dropped} of {n} points leaves nothing")
    perm = stream.permutation(n)
    return cloud[perm[: n - dropped]]


def drop_local(cloud, level, stream, severity=DEFAULT_SEVERITY, plan=None):
    """Remove ``K`` points as ``C`` k-NN clusters around random surviving centers.

    Neighbors are searched among the points that survive earlier clusters.
    Survivors keep their original relative order. If ``plan`` is a list it
    receives the :class:`ClusterPlan` used (centers as original indices).
    """
    level = _check_level(level)
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    total = severity.dropl_K[level - 1]
    if n <= total:
        raise CloudTooSmall(f"drop_local level {level} needs more than {total} points, got {n}")
    clusters = _draw_cluster_count(stream, severity, total)
    sizes = cluster_sizes(total, clusters, stream)
    alive = np.arange(n)
    centers = []
    for size in sizes:
        center = stream.int_inclusive(0, alive.size - 1)
        centers.append(int(alive[center]))
        gone = knn_indices(cloud[alive], center, size)
        keep = np.ones(alive.size, dtype=bool)
        keep[gone] = False
        alive = alive[keep]
    if plan is not None:
        plan.append(ClusterPlan(sizes=sizes, centers=centers))
    return cloud[alive]


def add_global(cloud, level, stream, severity=DEFAULT_SEVERITY):
    """Append ``K`` points drawn uniformly inside the unit ball."""
    level = _check_level(level)
    cloud = as_cloud(cloud)
    extra = stream.points_in_unit_sphere(severity.addg_K[level - 1])
    return np.concatenate([cloud, extra])


def add_local(cloud, level, stream, severity=DEFAULT_SEVERITY, plan=None):
    """Append ``K`` points as ``C`` Gaussian clusters around existing points.

    Draw order: permutation of the input, C, cluster sizes, one sigma per
    cluster, then the cluster points cluster by cluster (point-major,
    axis-minor). The result is not re-normalized.
    """
    level = _check_level(level)
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    if n < MAX_CLUSTERS:
        raise CloudTooSmall(f"add_local needs at least {MAX_CLUSTERS} points, got {n}")
    total = severity.addl_K[level - 1]
    perm = stream.permutation(n)
    clusters = min(_draw_cluster_count(stream, severity, total), n)
    centers = perm[:clusters]
    sizes = cluster_sizes(total, clusters, stream)
    lo, hi = severity.addl_sigma_range
    sigmas = [stream.uniform(lo, hi) if hi > lo else lo for _ in range(clusters)]
    parts = [cloud]
    for center, size, sigma in zip(centers, sizes, sigmas):
        offsets = stream.gaussian_array(3 * size, 0.0, sigma).reshape(size, 3)
        parts.append(cloud[center] + offsets)
    if plan is not None:
        plan.append(ClusterPlan(sizes=sizes, centers=[int(c) for c in centers], sigmas=sigmas))
    return np.concatenate(parts)


_DISPATCH = {
    CorruptionKind.SCALE: scale,
    CorruptionKind.JITTER: jitter,
    CorruptionKind.DROP_GLOBAL: drop_global,
    CorruptionKind.DROP_LOCAL: drop_local,
    CorruptionKind.ADD_GLOBAL: add_global,
    CorruptionKind.ADD_LOCAL: add_local,
    CorruptionKind.ROTATE: rotate,
}


def apply(spec, cloud, stream, severity=DEFAULT_SEVERITY):
    return _DISPATCH[spec.kind](cloud, spec.level, stream, severity)


def apply_composite(specs, cloud, stream, severity=DEFAULT_SEVERITY):
    """Apply several distinct corruptions left to right on one stream."""
    specs = list(specs)
    if not 1 <= len(specs) <= len(CorruptionKind):
        raise ValueError(f"composite needs 1 to {len(CorruptionKind)} corruptions")
    kinds = [s.kind for s in specs]
    if len(set(kinds)) != len(kinds):
        raise DuplicateKind(f"repeated corruption kind in {[k.slug for k in kinds]}")
    for spec in specs:
        cloud = apply(spec, cloud, stream, severity)
    return cloud


# Drop-Local before Drop-Global: the reverse order can leave fewer than K points.
COMPOSITE_ORDER = (
    CorruptionKind.DROP_LOCAL,
    CorruptionKind.DROP_GLOBAL,
    CorruptionKind.ADD_LOCAL,
    CorruptionKind.ADD_GLOBAL,
    CorruptionKind.SCALE,
    CorruptionKind.ROTATE,
    CorruptionKind.JITTER,
)


def sample_composite(level, stream, size=2):
    """Pick ``size`` distinct kinds uniformly at random, all at ``level``.

    Uses one ``permutation(7)`` and keeps its first ``size`` entries; the
    chosen kinds are returned in ``COMPOSITE_ORDER``.
    """
    level = _check_level(level)
    if not 1 <= size <= len(CorruptionKind):
        raise ValueError(f"composite size must be in [1, {len(CorruptionKind)}], got {size}")
    chosen = {CorruptionKind(int(k)) for k in stream.permutation(len(CorruptionKind))[:size]}
    return [CorruptionSpec(k, level) for k in COMPOSITE_ORDER if k in chosen]


def expected_count(kind, level, n, severity=DEFAULT_SEVERITY):
    """Output point count of ``kind`` at ``level`` for an ``n``-point input."""
    kind = CorruptionKind.parse(kind)
    i = _check_level(level) - 1
    if kind is CorruptionKind.DROP_GLOBAL:
        return n - math.floor(n * severity.dropg_rho[i])
    if kind is CorruptionKind.DROP_LOCAL:
        return n - severity.dropl_K[i]
    if kind is CorruptionKind.ADD_GLOBAL:
        return n + severity.addg_K[i]
    if kind is CorruptionKind.ADD_LOCAL:
        return n + severity.addl_K[i]
    return n
