"""Exact geometric kernels: normalization, k-NN, farthest point sampling, rotations.

Point clouds are ``(N, 3)`` float64 arrays. Every routine here is a pure
function; none of them reorders points unless that is its stated purpose.
"""
import math

import numpy as np

from .errors import (
    DegenerateCloud,
    IndexOutOfRange,
    InvalidCloud,
    KTooLarge,
    MTooLarge,
    NonFiniteAngle,
)

DEGENERATE_EPS = 1e-12


def as_cloud(points):
    """Validate and return ``points`` as a contiguous ``(N, 3)`` float64 array."""
    cloud = np.ascontiguousarray(points, dtype=np.float64)
    if cloud.ndim != 2 or cloud.shape[1] != 3:
        raise InvalidCloud(f"expected an (N, 3) array, got shape {cloud.shape}")
    if cloud.shape[0] < 1:
        raise InvalidCloud("point cloud is empty")
    if not np.isfinite(cloud).all():
        raise InvalidCloud("point cloud contains NaN or Inf")
    return cloud


def normalize_unit_sphere(cloud):
    """Center ``cloud`` on its centroid and scale so the farthest point has norm 1.

    Raises DegenerateCloud when all points coincide.
    """
    cloud = as_cloud(cloud)
    centered = cloud - cloud.mean(axis=0)
    radius = np.sqrt((centered ** 2).sum(axis=1)).max()
    if radius <= DEGENERATE_EPS:
        raise DegenerateCloud("all points coincide; cannot normalize")
    return centered / radius


def squared_distances(cloud, point):
    diff = cloud - point
    return (diff * diff).sum(axis=1)


def _check_index(index, count):
    if not 0 <= index < count:
        raise IndexOutOfRange(f"index {index} outside [0, {count})")


def knn_indices(cloud, query_index, k):
    """Indices of the ``k`` nearest points to ``cloud[query_index]``.

    Exhaustive search on squared distances. The query itself always comes
    first; the rest are ordered by distance with ties going to the lower index.
    """
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    query_index = int(query_index)
    _check_index(query_index, n)
    if not 1 <= k <= n:
        raise KTooLarge(f"k={k} must be in [1, {n}]")
    d2 = squared_distances(cloud, cloud[query_index])
    d2[query_index] = -1.0
    order = np.argsort(d2, kind="stable")
    return order[:k]


def farthest_point_sample(cloud, m, start_index):
    """Greedy farthest point sampling, returning ``m`` indices in selection order."""
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    start_index = int(start_index)
    _check_index(start_index, n)
    if not 1 <= m <= n:
        raise MTooLarge(f"m={m} must be in [1, {n}]")
    selected = np.empty(m, dtype=np.int64)
    selected[0] = start_index
    min_d2 = squared_distances(cloud, cloud[start_index])
    min_d2[start_index] = -np.inf
    for i in range(1, m):
        nxt = int(np.argmax(min_d2))
        selected[i] = nxt
        np.minimum(min_d2, squared_distances(cloud, cloud[nxt]), out=min_d2)
        min_d2[nxt] = -np.inf
    return selected


def euler_rotation_matrix(alpha, beta, gamma):
    """Rotation ``Rz(gamma) @ Ry(beta) @ Rx(alpha)`` acting on column vectors.

    Equivalently: rotate about the fixed X axis, then Y, then Z.
    """
    angles = (alpha, beta, gamma)
    if not all(math.isfinite(a) for a in angles):
        raise NonFiniteAngle(f"non-finite Euler angle in {angles}")
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, ca, -sa], [0.0, sa, ca]])
    ry = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    rz = np.array([[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry @ rx


def rotate_points(cloud, rotation, center=None):
    """Apply ``rotation`` to every point (row vectors), optionally about ``center``."""
    if center is None:
        return cloud @ rotation.T
    return (cloud - center) @ rotation.T + center


def pairwise_distances(cloud):
    diff = cloud[:, None, :] - cloud[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))
