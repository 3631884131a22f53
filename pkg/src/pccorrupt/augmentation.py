"""Training-time augmentation: WOLFMix and conventional scale/translate.

WOLFMix deforms two clouds independently with anchor-based local transforms
(PointWOLF style) and then rigidly transplants a k-NN patch of one into the
other (RSMix style), mixing labels by the fraction of points transplanted.

This module deliberately has no import path into ``pccorrupt.corruptions``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import CloudTooSmall, CountMismatch, InvalidRange, NMaxTooLarge
from .geometry import (
    as_cloud,
    euler_rotation_matrix,
    farthest_point_sample,
    knn_indices,
    normalize_unit_sphere,
    squared_distances,
)

KERNEL_FLOOR = 1e-12


@dataclass(frozen=True)
class DeformConfig:
    num_anchors: int = 4
    kernel_bandwidth: float = 0.5
    max_local_rotation: float = 10.0  # degrees, per axis
    max_local_scale: float = 3.0
    max_local_translation: float = 0.25

    def __post_init__(self):
        if self.num_anchors < 1:
            raise ValueError("num_anchors must be positive")
        for name in ("kernel_bandwidth", "max_local_rotation", "max_local_translation"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_local_scale <= 1.0:
            raise ValueError("max_local_scale must exceed 1")


@dataclass(frozen=True)
class MixConfig:
    mix_probability: float = 0.5
    beta: float = 1.0
    n_max: int = 512

    def __post_init__(self):
        if not 0.0 <= self.mix_probability <= 1.0:
            raise ValueError("mix_probability must be in [0, 1]")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")


@dataclass(frozen=True)
class MixedLabel:
    """Up to two ``(class_id, weight)`` entries whose weights sum to one."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((int(c), float(w)) for c, w in self.entries)
        object.__setattr__(self, "entries", entries)
        if not 1 <= len(entries) <= 2:
            raise ValueError("a mixed label has one or two entries")
        if any(w < 0 for _, w in entries):
            raise ValueError("label weights must be non-negative")
        if abs(sum(w for _, w in entries) - 1.0) > 1e-9:
            raise ValueError("label weights must sum to 1")

    @classmethod
    def pure(cls, label):
        return cls(((label, 1.0),))

    @property
    def is_mixed(self):
        return len(self.entries) == 2 and self.entries[1][1] > 0

    def to_json(self):
        a_label, a_weight = self.entries[0]
        b_label = self.entries[1][0] if len(self.entries) == 2 else a_label
        return {"a_label": a_label, "b_label": b_label, "a_weight": a_weight}


def kernel_weights(cloud, anchors, bandwidth):
    """Row-normalized Gaussian kernel weights, shape ``(N, num_anchors)``.

    Rows whose kernel values sum below 1e-12 fall back to uniform weights.
    """
    d2 = np.stack([squared_distances(cloud, a) for a in anchors], axis=1)
    k = np.exp(-d2 / (2.0 * bandwidth ** 2))
    total = k.sum(axis=1, keepdims=True)
    weak = total[:, 0] < KERNEL_FLOOR
    k[weak] = 1.0
    total[weak] = anchors.shape[0]
    return k / total


def pointwolf_deform(cloud, cfg, stream):
    """Locally deform ``cloud`` around FPS anchors, then re-normalize.

    Draw order: FPS start index, then for each anchor three rotation angles,
    three scale factors and three translations. Each anchor's transform
    rotates, scales and translates points about the anchor; a point's image is
    the kernel-weighted average of its images under all anchor transforms.
    """
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    if n < cfg.num_anchors:
        raise CloudTooSmall(f"need at least {cfg.num_anchors} points, got {n}")
    start = stream.int_inclusive(0, n - 1)
    anchors = cloud[farthest_point_sample(cloud, cfg.num_anchors, start)]
    max_angle = math.radians(cfg.max_local_rotation)
    weights = kernel_weights(cloud, anchors, cfg.kernel_bandwidth)
    out = np.zeros_like(cloud)
    for a, anchor in enumerate(anchors):
        angles = [stream.uniform(-max_angle, max_angle) for _ in range(3)]
        scales = np.array([stream.uniform(1.0, cfg.max_local_scale) for _ in range(3)])
        shift = np.array([stream.uniform(-cfg.max_local_translation, cfg.max_local_translation)
                          for _ in range(3)])
        rot = euler_rotation_matrix(*angles)
        moved = ((cloud - anchor) @ rot.T) * scales + anchor + shift
        out += weights[:, a:a + 1] * moved
    return normalize_unit_sphere(out)


def rsmix(cloud_a, label_a, cloud_b, label_b, cfg, stream):
    """Rigidly transplant a k-NN patch of ``cloud_b`` into ``cloud_a``.

    ``lambda ~ Beta(beta, beta)`` sets ``n = floor(lambda * n_max)``. A patch of
    ``n`` neighbors around a random point of B replaces the ``n`` neighbors of
    a random point of A, translated so the two patch centroids coincide.
    Returns the mixed cloud (A's survivors in order, then the patch) and the
    mixed label weighted by ``n / N``.
    """
    cloud_a = as_cloud(cloud_a)
    cloud_b = as_cloud(cloud_b)
    n_points = cloud_a.shape[0]
    if cloud_b.shape[0] != n_points:
        raise CountMismatch(f"clouds differ in size: {n_points} vs {cloud_b.shape[0]}")
    if cfg.n_max > n_points:
        raise NMaxTooLarge(f"n_max={cfg.n_max} exceeds cloud size {n_points}")
    lam = stream.beta(cfg.beta, cfg.beta)
    n = min(max(math.floor(lam * cfg.n_max), 0), cfg.n_max)
    if n == 0:
        return cloud_a.copy(), MixedLabel.pure(label_a)
    patch = knn_indices(cloud_b, stream.int_inclusive(0, n_points - 1), n)
    region = knn_indices(cloud_a, stream.int_inclusive(0, n_points - 1), n)
    source = cloud_b[patch]
    keep = np.ones(n_points, dtype=bool)
    keep[region] = False
    shift = cloud_a[region].mean(axis=0) - source.mean(axis=0)
    mixed = np.concatenate([cloud_a[keep], source + shift])
    weight_b = n / n_points
    return mixed, MixedLabel(((label_a, 1.0 - weight_b), (label_b, weight_b)))


def wolfmix(sample_a, sample_b, dcfg, mcfg, stream):
    """Deform both samples, then mix them with probability ``mix_probability``.

    ``sample_a`` and ``sample_b`` are ``(cloud, label)`` pairs. Draw order:
    sub-stream seed for A, sub-stream seed for B, the mix decision, then the
    RSMix draws on the parent stream.
    """
    cloud_a, label_a = sample_a
    cloud_b, label_b = sample_b
    cloud_a = as_cloud(cloud_a)
    cloud_b = as_cloud(cloud_b)
    if cloud_a.shape[0] != cloud_b.shape[0]:
        raise CountMismatch(
            f"clouds differ in size: {cloud_a.shape[0]} vs {cloud_b.shape[0]}")
    stream_a = stream.spawn()
    stream_b = stream.spawn()
    deformed_a = pointwolf_deform(cloud_a, dcfg, stream_a)
    deformed_b = pointwolf_deform(cloud_b, dcfg, stream_b)
    if stream.uniform() < mcfg.mix_probability:
        return rsmix(deformed_a, label_a, deformed_b, label_b, mcfg, stream)
    return deformed_a, MixedLabel.pure(label_a)


def conventional_augment(cloud, stream, scale_range=(2.0 / 3.0, 1.5), shift_range=(-0.2, 0.2)):
    """Random anisotropic scaling then random translation (standard training recipe)."""
    cloud = as_cloud(cloud)
    if not scale_range[0] < scale_range[1] or not shift_range[0] < shift_range[1]:
        raise InvalidRange("scale and shift ranges must be increasing")
    factors = np.array([stream.uniform(*scale_range) for _ in range(3)])
    shift = np.array([stream.uniform(*shift_range) for _ in range(3)])
    return cloud * factors + shift
