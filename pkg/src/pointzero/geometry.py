"""Mesh and point-cloud ingestion: OFF/XYZ parsing and unit-sphere normalization.

Parsers are pure functions of their input text. All geometry values are
immutable after construction (numpy buffers are marked read-only), so they
can be shared freely across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

__all__ = [
    "Mesh",
    "PointCloud",
    "ParseError",
    "parse_off",
    "parse_points",
    "normalize_unit",
    "to_off",
    "to_xyz",
]


class ParseError(ValueError):
    """Malformed geometry text; the message carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)
        self.line = line


def _frozen_array(values, shape_name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{shape_name} must be an (N, 3) array, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{shape_name} contain non-finite coordinates")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mesh:
    """Indexed polygonal mesh with a derived set of unique undirected edges.

    Faces keep their file arity (quads and larger polygons are stored
    as-is); triangulation is the sampler's job. The edge set is always
    derived from face boundaries, never read from a file, and lists each
    unordered index pair once, sorted for deterministic iteration.
    """

    vertices: np.ndarray
    faces: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen_array(self.vertices, "vertices"))
        if len(self.vertices) < 3:
            raise ValueError(f"mesh needs at least 3 vertices, got {len(self.vertices)}")
        nv = len(self.vertices)
        faces = tuple(tuple(int(i) for i in f) for f in self.faces)
        edge_set: set[tuple[int, int]] = set()
        for f in faces:
            if len(f) < 3:
                raise ValueError(f"face {f} has arity {len(f)} < 3")
            if len(set(f)) < 3:
                raise ValueError(f"face {f} has fewer than 3 distinct indices")
            for i in f:
                if not 0 <= i < nv:
                    raise ValueError(f"face index {i} out of range [0, {nv})")
            for a, b in zip(f, f[1:] + f[:1]):
                if a != b:  # repeated indices yield no self-edge
                    edge_set.add((a, b) if a < b else (b, a))
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "edges", tuple(sorted(edge_set)))


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Unordered 3D points, optionally tagged with a source identifier."""

    points: np.ndarray
    source_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen_array(self.points, "points"))
        if len(self.points) == 0:
            raise ValueError("point cloud is empty")

    def __len__(self) -> int:
        return len(self.points)


def _read_text(source: str | TextIO) -> str:
    return source if isinstance(source, str) else source.read()


def _meaningful_lines(lines: list[str]):
    """Yield (line_number, tokens) for lines that are not blank or comments."""
    for no, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            yield no, text.split()


def parse_off(source: str | TextIO) -> Mesh:
    """Parse OFF text into a Mesh.

    Accepts both the two-line header (``OFF`` then ``V F E``) and the
    single-line variants (``OFF V F E`` and the ModelNet40 fused
    ``OFFV F E``). The E count is ignored; edges are derived from faces.
    Comment (``#``) and blank lines are skipped everywhere.
    """
    lines = _read_text(source).splitlines()
    last_line = len(lines)
    it = _meaningful_lines(lines)

    try:
        header_no, header = next(it)
    except StopIteration:
        raise ParseError("malformed header: empty input") from None
    joined = " ".join(header)
    if not joined.startswith("OFF"):
        raise ParseError("malformed header: expected OFF signature", line=header_no)
    remainder = joined[3:].strip()
    if remainder:
        counts = remainder.split()
        counts_no = header_no
    else:
        try:
            counts_no, counts = next(it)
        except StopIteration:
            raise ParseError("malformed header: missing counts", line=last_line) from None
    if len(counts) != 3:
        raise ParseError("malformed header: expected 'V F E' counts", line=counts_no)
    try:
        n_vertices, n_faces, _ = (int(c) for c in counts)
    except ValueError:
        raise ParseError(f"malformed header: non-numeric count in {counts}", line=counts_no) from None

    vertices = np.empty((n_vertices, 3), dtype=np.float64)
    for k in range(n_vertices):
        try:
            no, tokens = next(it)
        except StopIteration:
            raise ParseError("unexpected end of vertex block", line=last_line) from None
        if len(tokens) < 3:
            raise ParseError("vertex line has fewer than 3 coordinates", line=no)
        try:
            vertices[k] = [float(t) for t in tokens[:3]]
        except ValueError:
            raise ParseError(f"non-numeric token in vertex {tokens[:3]}", line=no) from None

    faces: list[tuple[int, ...]] = []
    for _ in range(n_faces):
        try:
            no, tokens = next(it)
        except StopIteration:
            raise ParseError("unexpected end of face block", line=last_line) from None
        try:
            arity = int(tokens[0])
        except ValueError:
            raise ParseError(f"non-numeric face arity {tokens[0]!r}", line=no) from None
        if arity < 3:
            raise ParseError(f"face arity {arity} < 3", line=no)
        if len(tokens) < 1 + arity:
            raise ParseError(f"face line shorter than declared arity {arity}", line=no)
        try:
            idx = tuple(int(t) for t in tokens[1 : 1 + arity])
        except ValueError:
            raise ParseError("non-numeric face index", line=no) from None
        for i in idx:
            if not 0 <= i < n_vertices:
                raise ParseError(f"face index {i} out of range [0, {n_vertices})", line=no)
        if len(set(idx)) < 3:
            raise ParseError("face has fewer than 3 distinct indices", line=no)
        faces.append(idx)

    return Mesh(vertices=vertices, faces=tuple(faces))


def parse_points(source: str | TextIO, source_id: str | None = None) -> PointCloud:
    """Parse plain `x y z [extras]` lines into a PointCloud.

    Extra per-line columns (colors, intensities) are ignored. One point
    per data line, in file order.
    """
    lines = _read_text(source).splitlines()
    points: list[list[float]] = []
    for no, tokens in _meaningful_lines(lines):
        if len(tokens) < 3:
            raise ParseError("point line has fewer than 3 coordinates", line=no)
        try:
            points.append([float(t) for t in tokens[:3]])
        except ValueError:
            raise ParseError("non-numeric coordinate", line=no) from None
    if not points:
        raise ParseError("empty point file: no data lines")
    return PointCloud(points=np.asarray(points), source_id=source_id)


def normalize_unit(g: Mesh | PointCloud) -> Mesh | PointCloud:
    """Center the bounding box at the origin and scale the max radius to 1.

    Purely a similarity transform: topology and pairwise distance ratios
    are unchanged. Idempotent to floating-point precision.
    """
    pts = g.vertices if isinstance(g, Mesh) else g.points
    center = (pts.min(axis=0) + pts.max(axis=0)) / 2.0
    centered = pts - center
    radius = float(np.sqrt((centered * centered).sum(axis=1)).max())
    if radius == 0.0:
        raise ValueError("degenerate geometry: all points coincide")
    scaled = centered / radius
    if isinstance(g, Mesh):
        return Mesh(vertices=scaled, faces=g.faces)
    return PointCloud(points=scaled, source_id=g.source_id)


def _fmt(x: float) -> str:
    return repr(float(x))  # shortest string that parses back to the same float


def to_off(m: Mesh) -> str:
    """Serialize a Mesh to OFF text; coordinates round-trip exactly."""
    out = ["OFF", f"{len(m.vertices)} {len(m.faces)} 0"]
    for v in m.vertices:
        out.append(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    for f in m.faces:
        out.append(f"{len(f)} " + " ".join(str(i) for i in f))
    return "\n".join(out) + "\n"


def to_xyz(c: PointCloud) -> str:
    """Serialize a PointCloud to plain `x y z` lines; round-trips exactly."""
    return "\n".join(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}" for p in c.points) + "\n"
