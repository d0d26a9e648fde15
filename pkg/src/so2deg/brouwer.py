"""Boundary-sampling Brouwer degree of a vector field on a ball, n <= 3.

The degree of f on B(c, r) equals the degree of f/|f| restricted to the
sphere.  In one dimension that is a sign count, in two a winding number and
in three the total signed solid angle swept by the image of a triangulated
sphere, divided by 4 pi.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import BrouwerIndexError

SAMPLES_PER_DIM = 10_000
INTEGER_TOL = 1e-6


def _eval(f, pts: np.ndarray) -> np.ndarray:
    return np.array([np.asarray(f(x), dtype=float).reshape(-1) for x in pts])


def _check_boundary(vals: np.ndarray, scale: float):
    norms = np.linalg.norm(vals, axis=1)
    if np.min(norms) <= 1e-12 * max(scale, 1.0):
        raise BrouwerIndexError("vector field vanishes on the sampling sphere")


def _round_degree(total: float) -> int:
    deg = round(total)
    if abs(total - deg) > INTEGER_TOL:
        raise BrouwerIndexError(f"boundary sampling gave non-integer degree {total:.6g}")
    return int(deg)


def _degree_1d(f, c, r):
    left = float(np.asarray(f(c - r)).reshape(-1)[0])
    right = float(np.asarray(f(c + r)).reshape(-1)[0])
    if left == 0.0 or right == 0.0:
        raise BrouwerIndexError("vector field vanishes on the sampling sphere")
    return int((np.sign(right) - np.sign(left)) // 2)


def _degree_2d(f, c, r, m):
    theta = np.linspace(0.0, 2.0 * math.pi, m, endpoint=False)
    pts = c + r * np.column_stack([np.cos(theta), np.sin(theta)])
    vals = _eval(f, pts)
    _check_boundary(vals, np.max(np.abs(vals)))
    ang = np.arctan2(vals[:, 1], vals[:, 0])
    steps = np.diff(np.append(ang, ang[0]))
    steps = (steps + math.pi) % (2.0 * math.pi) - math.pi
    if np.max(np.abs(steps)) > math.pi / 2:
        raise BrouwerIndexError("winding number undersampled; refine the boundary grid")
    return _round_degree(np.sum(steps) / (2.0 * math.pi))


def _sphere_mesh(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Latitude-longitude triangulation with about ``m`` vertices, outward oriented."""
    n_lat = max(int(math.sqrt(m / 2.0)), 4)
    n_lon = 2 * n_lat
    lat = np.linspace(0.0, math.pi, n_lat + 1)[1:-1]
    lon = np.linspace(0.0, 2.0 * math.pi, n_lon, endpoint=False)
    L, P = np.meshgrid(lat, lon, indexing="ij")
    ring = np.column_stack(
        [(np.sin(L) * np.cos(P)).ravel(), (np.sin(L) * np.sin(P)).ravel(), np.cos(L).ravel()]
    )
    north = len(ring)
    south = north + 1
    verts = np.vstack([ring, [[0.0, 0.0, 1.0]], [[0.0, 0.0, -1.0]]])

    def idx(i, j):
        return i * n_lon + (j % n_lon)

    tris = []
    for j in range(n_lon):
        tris.append((north, idx(0, j), idx(0, j + 1)))
        tris.append((south, idx(n_lat - 2, j + 1), idx(n_lat - 2, j)))
    for i in range(n_lat - 2):
        for j in range(n_lon):
            a, b = idx(i, j), idx(i, j + 1)
            c, d = idx(i + 1, j), idx(i + 1, j + 1)
            tris.append((a, c, b))
            tris.append((b, c, d))
    return verts, np.array(tris)


def _solid_angles(u: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a, b, c = u[tris[:, 0]], u[tris[:, 1]], u[tris[:, 2]]
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def _degree_3d(f, c, r, m):
    verts, tris = _sphere_mesh(m)
    vals = _eval(f, c + r * verts)
    _check_boundary(vals, np.max(np.abs(vals)))
    u = vals / np.linalg.norm(vals, axis=1, keepdims=True)
    # each image triangle must be small for the signed solid-angle sum to be exact
    edges = np.concatenate(
        [np.einsum("ij,ij->i", u[tris[:, i]], u[tris[:, (i + 1) % 3]]) for i in range(3)]
    )
    if np.min(edges) < 0.0:
        raise BrouwerIndexError("solid-angle sum undersampled; refine the boundary mesh")
    return _round_degree(np.sum(_solid_angles(u, tris)) / (4.0 * math.pi))


def brouwer_degree(
    f: Callable[[np.ndarray], np.ndarray],
    center,
    radius: float,
    samples: int | None = None,
) -> int:
    """Brouwer degree deg(f, B(center, radius), 0) for dimension n <= 3."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    n = c.size
    if radius <= 0:
        raise ValueError("radius must be positive")
    if samples is None:
        samples = SAMPLES_PER_DIM * n
    if n == 1:
        return _degree_1d(f, c, radius)
    if n == 2:
        return _degree_2d(f, c, radius, samples)
    if n == 3:
        return _degree_3d(f, c, radius, samples)
    raise BrouwerIndexError(f"boundary-sampling degree needs n <= 3, got n={n}")
