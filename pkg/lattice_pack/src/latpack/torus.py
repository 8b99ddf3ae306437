"""Momentum-space grids on the torus [-pi, pi)^d."""
from __future__ import annotations

import math

import numpy as np


def wrap(p: np.ndarray) -> np.ndarray:
    """Map angles into [-pi, pi)."""
    return np.mod(np.asarray(p, dtype=float) + math.pi, 2.0 * math.pi) - math.pi


def torus_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Euclidean distance on the torus, broadcasting over leading axes."""
    diff = wrap(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    return np.sqrt(np.sum(diff * diff, axis=-1))


def node_axis(n: int) -> np.ndarray:
    """n equispaced nodes -pi + 2 pi k / n (contains 0 and -pi)."""
    return -math.pi + 2.0 * math.pi * np.arange(n) / n


def midpoint_axis(m: int) -> np.ndarray:
    """Cell midpoints -pi + (k + 1/2) 2 pi / m.

    The set is symmetric under p -> -p and never contains 0 or pi,
    so minima sitting at half-period points fall between nodes.
    """
    return -math.pi + (np.arange(m) + 0.5) * (2.0 * math.pi / m)


def axis_views(axis: np.ndarray, dim: int) -> list[np.ndarray]:
    """Broadcastable copies of one axis, one per dimension (open mesh)."""
    views = []
    for i in range(dim):
        shape = [1] * dim
        shape[i] = axis.size
        views.append(axis.reshape(shape))
    return views


def seed_points(n: int, dim: int) -> np.ndarray:
    """All nodes of the n^d node grid as an (n^d, dim) array."""
    mesh = np.meshgrid(*([node_axis(n)] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere S^{dim-1} (2 for dim = 1)."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)
