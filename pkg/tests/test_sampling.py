"""Proportional sampling and k-NN densification against naive oracles.

The count oracle recomputes per-primitive expectations with plain math
(independent edge/area formulas); containment recovers barycentric
coordinates by least squares. Neither path reuses the sampler internals.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthdata import random_mesh, random_quad_mesh
from pointzero.geometry import Mesh, PointCloud
from pointzero.sampling import SamplingParams, knn_densify, sample_mesh


def oracle_edge_count(mesh: Mesh, beta: float) -> int:
    total = 0
    for a, b in mesh.edges:
        d = mesh.vertices[b] - mesh.vertices[a]
        length = math.sqrt(float(d[0]) ** 2 + float(d[1]) ** 2 + float(d[2]) ** 2)
        total += max(1, math.ceil(length / beta))
    return total


def oracle_face_area(mesh: Mesh, face) -> float:
    area = 0.0
    v = mesh.vertices
    for j in range(1, len(face) - 1):
        ab = v[face[j]] - v[face[0]]
        ac = v[face[j + 1]] - v[face[0]]
        cx = ab[1] * ac[2] - ab[2] * ac[1]
        cy = ab[2] * ac[0] - ab[0] * ac[2]
        cz = ab[0] * ac[1] - ab[1] * ac[0]
        area += 0.5 * math.sqrt(float(cx) ** 2 + float(cy) ** 2 + float(cz) ** 2)
    return area


def oracle_face_count(mesh: Mesh, beta: float) -> int:
    return sum(max(1, math.ceil(oracle_face_area(mesh, f) / beta)) for f in mesh.faces)


def point_on_some_edge(p: np.ndarray, mesh: Mesh, tol: float = 1e-9) -> bool:
    for a_idx, b_idx in mesh.edges:
        a, b = mesh.vertices[a_idx], mesh.vertices[b_idx]
        d = b - a
        denom = float(d @ d)
        t = 0.0 if denom == 0.0 else float((p - a) @ d) / denom
        t = min(1.0, max(0.0, t))
        if np.linalg.norm(a + t * d - p) <= tol:
            return True
    return False


def point_in_some_triangle(p: np.ndarray, mesh: Mesh, tol: float = 1e-9) -> bool:
    v = mesh.vertices
    for face in mesh.faces:
        for j in range(1, len(face) - 1):
            a, b, c = v[face[0]], v[face[j]], v[face[j + 1]]
            m = np.stack([b - a, c - a], axis=1)
            try:
                uv, res, *_ = np.linalg.lstsq(m, p - a, rcond=None)
            except np.linalg.LinAlgError:
                continue
            u, w = float(uv[0]), float(uv[1])
            if np.linalg.norm(a + m @ uv - p) > tol:
                continue
            if u >= -tol and w >= -tol and u + w <= 1.0 + tol:
                return True
    return False


class TestWorkedExamples:
    def test_single_edge_length_ten(self):
        # degenerate sliver triangle keeps face contribution at its floor
        v = [[0, 0, 0], [10, 0, 0], [5, 0, 0]]
        m = Mesh(vertices=v, faces=((0, 1, 2),))
        cloud = sample_mesh(m, SamplingParams(beta_edge=2.0, beta_face=1.0, seed=0))
        # edges: 0-1 len 10 -> 5; 0-2 len 5 -> 3; 1-2 len 5 -> 3; face area 0 -> 1
        assert len(cloud) == 5 + 3 + 3 + 1

    def test_unit_right_triangle_face_count(self):
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
        m = Mesh(vertices=v, faces=((0, 1, 2),))
        p = SamplingParams(beta_edge=100.0, beta_face=0.1, seed=1)
        cloud = sample_mesh(m, p)
        n_edge = 3  # three edges, each shorter than beta_edge -> 1 each
        assert len(cloud) == n_edge + 5  # area 0.5 / 0.1 = 5 face samples
        for q in cloud.points[n_edge:]:
            assert point_in_some_triangle(q, m)

    def test_unit_cube_600_face_samples(self):
        corners = [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)]
        faces = (
            (0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1),
            (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3),
        )
        m = Mesh(vertices=corners, faces=faces)
        p = SamplingParams(beta_edge=10.0, beta_face=0.01, seed=2)
        cloud = sample_mesh(m, p)
        n_edges = len(m.edges)  # every edge has length 1 -> 1 sample each
        assert len(cloud) - n_edges == 600

    def test_two_rectangles_proportionality(self):
        # areas A and 2A: counts must be exactly ceil(A/b) and ceil(2A/b)
        v = [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [3, 0, 0], [5, 0, 0], [5, 1, 0], [3, 1, 0],
        ]
        m = Mesh(vertices=v, faces=((0, 1, 2, 3), (4, 5, 6, 7)))
        beta = 0.03
        p = SamplingParams(beta_edge=100.0, beta_face=beta, seed=3)
        cloud = sample_mesh(m, p)
        n_edges = len(m.edges)
        expected = math.ceil(1.0 / beta) + math.ceil(2.0 / beta)
        assert len(cloud) - n_edges == expected

    def test_zero_length_edge_zero_area_face(self):
        # coincident vertices with a face: every primitive degenerates to 1 point
        m = Mesh(vertices=[[1, 2, 3], [1, 2, 3], [1, 2, 3]], faces=((0, 1, 2),))
        cloud = sample_mesh(m, SamplingParams(beta_edge=1.0, beta_face=1.0, seed=4))
        assert len(cloud) == len(m.edges) + 1
        assert np.allclose(cloud.points, [1, 2, 3])

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError, match="beta_edge"):
            SamplingParams(beta_edge=0.0, beta_face=1.0)
        with pytest.raises(ValueError, match="beta_face"):
            SamplingParams(beta_edge=1.0, beta_face=-2.0)


class TestCountsContainmentDeterminism:
    @pytest.mark.parametrize("seed", range(20))
    def test_counts_match_oracle(self, seed):
        m = random_mesh(seed, n_vertices=10, n_faces=6)
        p = SamplingParams(beta_edge=0.11, beta_face=0.07, seed=seed)
        cloud = sample_mesh(m, p)
        assert len(cloud) == oracle_edge_count(m, p.beta_edge) + oracle_face_count(m, p.beta_face)

    @pytest.mark.parametrize("seed", range(8))
    def test_quad_counts_match_oracle(self, seed):
        m = random_quad_mesh(seed)
        p = SamplingParams(beta_edge=0.2, beta_face=0.15, seed=seed)
        cloud = sample_mesh(m, p)
        assert len(cloud) == oracle_edge_count(m, p.beta_edge) + oracle_face_count(m, p.beta_face)

    @pytest.mark.parametrize("seed", range(6))
    def test_containment(self, seed):
        m = random_mesh(seed, n_vertices=8, n_faces=4)
        p = SamplingParams(beta_edge=0.3, beta_face=0.2, seed=100 + seed)
        cloud = sample_mesh(m, p)
        n_edge = oracle_edge_count(m, p.beta_edge)
        for q in cloud.points[:n_edge]:
            assert point_on_some_edge(q, m)
        for q in cloud.points[n_edge:]:
            assert point_in_some_triangle(q, m)

    def test_determinism_same_seed(self):
        m = random_mesh(42)
        p = SamplingParams(beta_edge=0.1, beta_face=0.05, seed=99)
        a = sample_mesh(m, p)
        b = sample_mesh(m, p)
        assert np.array_equal(a.points, b.points)

    def test_different_seed_differs(self):
        m = random_mesh(42)
        a = sample_mesh(m, SamplingParams(0.1, 0.05, seed=1))
        b = sample_mesh(m, SamplingParams(0.1, 0.05, seed=2))
        assert not np.array_equal(a.points, b.points)

    def test_submesh_schedule_independence(self):
        """Sampling a single-face submesh reproduces that face's points."""
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 1]]
        m = Mesh(vertices=v, faces=((0, 1, 2), (1, 3, 2)))
        p = SamplingParams(beta_edge=1e9, beta_face=0.04, seed=5)
        full = sample_mesh(m, p)
        # face 0 alone, same vertex buffer: same substream key (seed, "face", 0)
        sub = sample_mesh(Mesh(vertices=v, faces=((0, 1, 2),)), p)
        k0 = max(1, math.ceil(oracle_face_area(m, m.faces[0]) / p.beta_face))
        n_edges_full = len(m.edges)
        n_edges_sub = 3
        assert np.array_equal(
            full.points[n_edges_full : n_edges_full + k0], sub.points[n_edges_sub:]
        )

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), angle=st.floats(0.1, 359.9))
    def test_rigid_motion_equivariance(self, seed, angle):
        m = random_mesh(seed % 1000, n_vertices=8, n_faces=4)
        a = math.radians(angle)
        rot = np.array(
            [[math.cos(a), -math.sin(a), 0.0], [math.sin(a), math.cos(a), 0.0], [0.0, 0.0, 1.0]]
        )
        p = SamplingParams(beta_edge=0.25, beta_face=0.2, seed=seed)
        rotated_after = sample_mesh(m, p).points @ rot.T
        rotated_before = sample_mesh(Mesh(vertices=m.vertices @ rot.T, faces=m.faces), p).points
        assert rotated_after.shape == rotated_before.shape
        assert np.allclose(rotated_after, rotated_before, rtol=0, atol=1e-9)


class TestKnnDensify:
    def test_not_enough_points(self):
        c = PointCloud(points=[[0, 0, 0], [1, 0, 0], [0, 1, 0]])
        with pytest.raises(ValueError, match="not enough points for k-NN"):
            knn_densify(c, 3, SamplingParams(1.0, 1.0, seed=0))

    def test_k_below_two(self):
        c = PointCloud(points=[[0, 0, 0], [1, 0, 0], [0, 1, 0]])
        with pytest.raises(ValueError, match=">= 2"):
            knn_densify(c, 1, SamplingParams(1.0, 1.0, seed=0))

    def test_collinear_three_points(self):
        c = PointCloud(points=[[0, 0, 0], [1, 0, 0], [2, 0, 0]])
        out = knn_densify(c, 2, SamplingParams(1.0, 1.0, seed=0))
        # one deduplicated degenerate triangle adds exactly one point
        assert len(out) == 4
        assert np.array_equal(out.points[:3], c.points)
        assert np.allclose(out.points[:, 1:], 0.0)  # stays on the line

    def test_tetrahedron_four_triangles(self):
        pts = np.array([[0, 0, 0], [1, 0, 0], [0.5, math.sqrt(3) / 2, 0],
                        [0.5, math.sqrt(3) / 6, math.sqrt(6) / 3]])
        c = PointCloud(points=pts)
        beta = 1e9  # every triangle contributes exactly its 1-point floor
        out = knn_densify(c, 3, SamplingParams(1.0, beta, seed=0))
        assert len(out) == 4 + 4  # C(3,2)*4 = 12 triples dedup to the 4 faces

    def test_union_contract_and_determinism(self):
        rng = np.random.default_rng(8)
        c = PointCloud(points=rng.standard_normal((30, 3)))
        p = SamplingParams(1.0, 0.5, seed=13)
        a = knn_densify(c, 4, p)
        b = knn_densify(c, 4, p)
        assert len(a) >= len(c)
        assert np.array_equal(a.points[: len(c)], c.points)
        assert np.array_equal(a.points, b.points)

    def test_new_points_near_cloud(self):
        rng = np.random.default_rng(21)
        pts = rng.uniform(-1, 1, size=(40, 3))
        c = PointCloud(points=pts)
        out = knn_densify(c, 4, SamplingParams(1.0, 0.05, seed=2))
        new = out.points[len(c):]
        # every sample lies in the convex hull of some neighborhood: bounded
        assert np.abs(new).max() <= np.abs(pts).max() + 1e-12
