"""Synthetic labeled mesh datasets for end-to-end pipeline tests.

Class i contains objects made of i+1 well-separated slabs stacked along
Z, so a projected depth image shows i+1 disjoint blobs: a class signal a
content-aware test backend can read without any pretrained model.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import Mesh, to_off
from .rng import substream

__all__ = ["cuboid_mesh", "stacked_slabs", "make_blocks_dataset"]

# one cuboid: 8 corners, 6 quad faces
_CORNER_SIGNS = np.array(
    [[sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)]
)
_QUAD_FACES = (
    (0, 1, 3, 2),
    (4, 6, 7, 5),
    (0, 4, 5, 1),
    (2, 3, 7, 6),
    (0, 2, 6, 4),
    (1, 5, 7, 3),
)


def cuboid_mesh(center, half_extents, z_rotation_deg: float = 0.0) -> Mesh:
    """Axis-aligned box rotated about Z, as 8 vertices and 6 quads."""
    c = np.asarray(center, dtype=np.float64)
    h = np.asarray(half_extents, dtype=np.float64)
    corners = _CORNER_SIGNS * h
    a = np.radians(z_rotation_deg)
    ca, sa = np.cos(a), np.sin(a)
    rot = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    return Mesh(vertices=corners @ rot.T + c, faces=_QUAD_FACES)


def stacked_slabs(n_slabs: int, rng: np.random.Generator) -> Mesh:
    """n_slabs thin boxes stacked along Z with wide gaps and mild jitter.

    Gaps stay far larger than slab thickness so projections at moderate
    elevation keep one connected blob per slab.
    """
    spacing = 1.0
    meshes = []
    z0 = -spacing * (n_slabs - 1) / 2.0
    for i in range(n_slabs):
        half = np.array([0.08, 0.08, 0.03]) * (1.0 + 0.12 * (rng.random(3) - 0.5))
        center = np.array([0.0, 0.0, z0 + i * spacing])
        meshes.append(cuboid_mesh(center, half, z_rotation_deg=float(rng.uniform(-15, 15))))
    vertices = np.vstack([m.vertices for m in meshes])
    faces = []
    offset = 0
    for m in meshes:
        faces.extend(tuple(v + offset for v in f) for f in m.faces)
        offset += len(m.vertices)
    return Mesh(vertices=vertices, faces=tuple(faces))


def make_blocks_dataset(
    root: str | Path, n_classes: int = 3, per_class: int = 10, split: str = "test", seed: int = 0
) -> Path:
    """Write `root/blocks<i+1>/<split>/*.off`; class blocks<i+1> has i+1 slabs."""
    root = Path(root)
    for i in range(n_classes):
        cls = f"blocks{i + 1}"
        out = root / cls / split
        out.mkdir(parents=True, exist_ok=True)
        for j in range(per_class):
            mesh = stacked_slabs(i + 1, substream("blocks", seed, cls, j))
            (out / f"{cls}_{j:04d}.off").write_text(to_off(mesh))
    return root
