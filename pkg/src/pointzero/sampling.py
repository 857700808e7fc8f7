"""Measure-proportional point sampling on meshes and k-NN cloud densification.

Every primitive (edge, face, constructed triangle) draws from its own
random substream keyed by the seed and a stable primitive identifier, so
results do not depend on iteration order or parallel schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Mesh, PointCloud
from .rng import substream

__all__ = ["SamplingParams", "sample_mesh", "knn_densify"]


@dataclass(frozen=True)
class SamplingParams:
    """Sampling densities: one point per beta_edge length / beta_face area."""

    beta_edge: float
    beta_face: float
    seed: int = 0

    def __post_init__(self):
        if not self.beta_edge > 0:
            raise ValueError(f"beta_edge must be > 0, got {self.beta_edge}")
        if not self.beta_face > 0:
            raise ValueError(f"beta_face must be > 0, got {self.beta_face}")


def _count(measure: float, beta: float) -> int:
    return max(1, math.ceil(measure / beta))


def _tri_area(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    return 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))


def _sample_triangle_fan(corners: np.ndarray, areas: np.ndarray, n: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Draw n points uniformly over a fan of triangles, weighted by area.

    corners is (T, 3, 3). Consumes the stream as: n selector draws
    (skipped when T == 1), then (n, 2) barycentric draws.
    """
    total = float(areas.sum())
    if total == 0.0:
        return np.repeat(corners[0, 0][None, :], n, axis=0)
    if len(areas) == 1:
        tri = np.zeros(n, dtype=np.intp)
    else:
        cum = np.cumsum(areas)
        tri = np.searchsorted(cum, rng.random(n) * total, side="right")
        tri = np.minimum(tri, len(areas) - 1)
    r = rng.random((n, 2))
    u = np.sqrt(r[:, 0])[:, None]
    v = r[:, 1][:, None]
    a, b, c = corners[tri, 0], corners[tri, 1], corners[tri, 2]
    return (1.0 - u) * a + u * (1.0 - v) * b + u * v * c


def sample_mesh(m: Mesh, p: SamplingParams) -> PointCloud:
    """Sample max(1, ceil(measure/beta)) points per edge and per face.

    Edge points are uniform along the segment; face points are uniform
    barycentric over the face's fan triangulation, distributed across the
    fan proportionally to triangle area. Edge samples precede face
    samples in the output. A zero-measure primitive contributes a single
    point at one of its vertices.
    """
    v = m.vertices
    blocks: list[np.ndarray] = []
    for i, (a_idx, b_idx) in enumerate(m.edges):
        a, b = v[a_idx], v[b_idx]
        k = _count(float(np.linalg.norm(b - a)), p.beta_edge)
        t = substream(p.seed, "edge", i).random(k)
        blocks.append(a + t[:, None] * (b - a))
    for i, face in enumerate(m.faces):
        corners = np.stack(
            [np.stack([v[face[0]], v[face[j]], v[face[j + 1]]]) for j in range(1, len(face) - 1)]
        )
        areas = np.array([_tri_area(*tri) for tri in corners])
        k = _count(float(areas.sum()), p.beta_face)
        blocks.append(_sample_triangle_fan(corners, areas, k, substream(p.seed, "face", i)))
    return PointCloud(points=np.vstack(blocks))


def knn_densify(c: PointCloud, k: int, p: SamplingParams) -> PointCloud:
    """Densify a cloud by sampling triangles spanned by k-NN neighborhoods.

    For each point q the C(k, 2) triangles (q, a, b) over its k nearest
    neighbors are formed, deduplicated by sorted vertex-index triple, and
    sampled like mesh faces with density beta_face. Neighbor ties break
    toward the lower point index. Returns the original points followed by
    the new samples.
    """
    if k < 2:
        raise ValueError(f"neighbor count must be >= 2, got {k}")
    pts = c.points
    n = len(pts)
    if n <= k:
        raise ValueError("not enough points for k-NN")

    neighbors = np.empty((n, k), dtype=np.int64)
    chunk = max(1, min(n, (1 << 22) // max(n, 1)))  # cap distance blocks near 32 MB
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = pts[start:stop, None, :] - pts[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        neighbors[start:stop] = order[:, :k]

    seen: set[tuple[int, int, int]] = set()
    triangles: list[tuple[int, int, int]] = []
    for q in range(n):
        nb = neighbors[q]
        for i in range(k):
            for j in range(i + 1, k):
                tri = tuple(sorted((q, int(nb[i]), int(nb[j]))))
                if tri not in seen:
                    seen.add(tri)
                    triangles.append(tri)

    blocks = [pts]
    for tri in triangles:
        corners = pts[list(tri)][None, :, :]
        areas = np.array([_tri_area(*corners[0])])
        n_tri = _count(float(areas[0]), p.beta_face)
        blocks.append(_sample_triangle_fan(corners, areas, n_tri, substream(p.seed, "tri", *tri)))
    return PointCloud(points=np.vstack(blocks), source_id=c.source_id)
