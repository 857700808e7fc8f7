"""Mesh/cloud parsing, validation, normalization, and serialization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointzero.geometry import (
    Mesh,
    ParseError,
    PointCloud,
    normalize_unit,
    parse_off,
    parse_points,
    to_off,
    to_xyz,
)

TRI_OFF = """OFF
3 1 0
0 0 0
1 0 0
0 1 0
3 0 1 2
"""


class TestParseOff:
    def test_two_line_header(self):
        m = parse_off(TRI_OFF)
        assert m.vertices.shape == (3, 3)
        assert m.faces == ((0, 1, 2),)
        assert m.edges == ((0, 1), (0, 2), (1, 2))

    def test_single_line_header(self):
        m = parse_off("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
        assert m.faces == ((0, 1, 2),)

    def test_fused_header_token(self):
        # ModelNet40 files write the counts glued to the signature
        m = parse_off("OFF3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
        assert m.vertices.shape == (3, 3)

    def test_comments_and_blank_lines_skipped(self):
        text = "# header comment\nOFF\n\n3 1 0  # counts\n0 0 0\n# mid\n1 0 0\n0 1 0\n\n3 0 1 2\n"
        m = parse_off(text)
        assert m.faces == ((0, 1, 2),)

    def test_edge_count_field_ignored(self):
        m = parse_off("OFF\n3 1 999\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
        assert m.edges == ((0, 1), (0, 2), (1, 2))

    def test_quad_face_kept_as_quad(self):
        text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"
        m = parse_off(text)
        assert m.faces == ((0, 1, 2, 3),)
        assert m.edges == ((0, 1), (0, 3), (1, 2), (2, 3))

    def test_truncated_vertex_block_reports_last_line(self):
        text = "OFF\n3 1 0\n0 0 0\n1 0 0\n"
        with pytest.raises(ParseError, match=r"unexpected end of vertex block at line 4"):
            parse_off(text)

    def test_truncated_face_block(self):
        text = "OFF\n3 2 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"
        with pytest.raises(ParseError, match=r"unexpected end of face block at line 6"):
            parse_off(text)

    def test_bad_signature(self):
        with pytest.raises(ParseError, match=r"expected OFF signature at line 1"):
            parse_off("PLY\n3 1 0\n")

    def test_non_numeric_vertex_has_line_number(self):
        text = "OFF\n3 1 0\n0 0 0\nx y z\n0 1 0\n3 0 1 2\n"
        with pytest.raises(ParseError, match=r"at line 4"):
            parse_off(text)

    def test_face_index_out_of_range(self):
        text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"
        with pytest.raises(ParseError, match=r"out of range"):
            parse_off(text)

    def test_face_arity_below_three(self):
        text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n2 0 1\n"
        with pytest.raises(ParseError, match=r"arity"):
            parse_off(text)

    def test_empty_input(self):
        with pytest.raises(ParseError, match=r"empty input"):
            parse_off("")

    def test_scientific_notation_coordinates(self):
        m = parse_off("OFF\n3 1 0\n1e-3 0 0\n1 0 0\n0 2.5E2 0\n3 0 1 2\n")
        assert m.vertices[0, 0] == 1e-3
        assert m.vertices[2, 1] == 250.0


class TestParsePoints:
    def test_basic(self):
        c = parse_points("0 0 0\n1 2 3\n")
        assert len(c) == 2
        assert np.array_equal(c.points[1], [1.0, 2.0, 3.0])

    def test_extra_columns_ignored(self):
        c = parse_points("0 0 0 255 128 0\n1 1 1 0 0 0\n")
        assert c.points.shape == (2, 3)

    def test_non_numeric_coordinate_line_number(self):
        with pytest.raises(ParseError, match=r"non-numeric coordinate at line 1"):
            parse_points("a b c\n")
        with pytest.raises(ParseError, match=r"non-numeric coordinate at line 3"):
            parse_points("0 0 0\n# fine\n0 0 nope\n")

    def test_short_line(self):
        with pytest.raises(ParseError, match=r"fewer than 3 coordinates at line 2"):
            parse_points("0 0 0\n1 2\n")

    def test_empty_file(self):
        with pytest.raises(ParseError, match=r"no data lines"):
            parse_points("# only a comment\n\n")


class TestValidation:
    def test_mesh_needs_three_vertices(self):
        with pytest.raises(ValueError, match=r"at least 3"):
            Mesh(vertices=[[0, 0, 0], [1, 1, 1]], faces=((0, 1, 1),))

    def test_face_distinct_indices(self):
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
        with pytest.raises(ValueError, match=r"distinct"):
            Mesh(vertices=v, faces=((0, 1, 1),))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match=r"finite"):
            PointCloud(points=[[0, 0, np.nan]])

    def test_empty_cloud_rejected(self):
        with pytest.raises(ValueError, match=r"empty"):
            PointCloud(points=np.zeros((0, 3)))

    def test_arrays_are_read_only(self):
        m = parse_off(TRI_OFF)
        with pytest.raises(ValueError):
            m.vertices[0, 0] = 5.0
        c = parse_points("0 0 0\n1 1 1\n")
        with pytest.raises(ValueError):
            c.points[0, 0] = 5.0

    def test_edges_derived_sorted_unique(self):
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
        m = Mesh(vertices=v, faces=((0, 1, 2), (2, 1, 3)))
        assert m.edges == ((0, 1), (0, 2), (1, 2), (1, 3), (2, 3))


class TestNormalizeUnit:
    def test_centers_bbox_and_scales_max_norm(self):
        c = PointCloud(points=[[2, 2, 2], [4, 2, 2], [2, 6, 2]])
        n = normalize_unit(c)
        lo, hi = n.points.min(axis=0), n.points.max(axis=0)
        assert np.allclose(lo + hi, 0.0, atol=1e-12)
        assert math.isclose(np.linalg.norm(n.points, axis=1).max(), 1.0, rel_tol=0, abs_tol=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        c = PointCloud(points=rng.normal(2.0, 3.0, size=(50, 3)))
        once = normalize_unit(c)
        twice = normalize_unit(once)
        assert np.allclose(once.points, twice.points, atol=1e-12)

    def test_degenerate_all_points_coincide(self):
        with pytest.raises(ValueError, match=r"degenerate"):
            normalize_unit(PointCloud(points=[[1, 1, 1], [1, 1, 1]]))

    def test_mesh_type_and_topology_preserved(self):
        m = parse_off(TRI_OFF)
        n = normalize_unit(m)
        assert isinstance(n, Mesh)
        assert n.faces == m.faces
        assert n.edges == m.edges

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10**6), scale=st.floats(0.01, 100.0), shift=st.floats(-50.0, 50.0))
    def test_distance_ratios_preserved(self, seed, scale, shift):
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((10, 3)) * scale + shift
        c = PointCloud(points=pts)
        try:
            n = normalize_unit(c)
        except ValueError:
            return  # coincident points are legitimately rejected
        d_in = np.linalg.norm(pts[0] - pts[1])
        d_out = np.linalg.norm(n.points[0] - n.points[1])
        if d_in == 0.0:
            assert d_out < 1e-9
            return
        d2_in = np.linalg.norm(pts[2] - pts[3])
        d2_out = np.linalg.norm(n.points[2] - n.points[3])
        assert math.isclose(d2_out / d_out, d2_in / d_in, rel_tol=1e-9, abs_tol=1e-12)


class TestRoundTrip:
    def test_off_round_trip(self):
        m = parse_off(TRI_OFF)
        again = parse_off(to_off(m))
        assert np.array_equal(again.vertices, m.vertices)
        assert again.faces == m.faces

    def test_xyz_round_trip(self):
        c = parse_points("0.125 -3.5 7\n1 2 3\n")
        again = parse_points(to_xyz(c))
        assert np.array_equal(again.points, c.points)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_off_round_trip_random(self, seed):
        from synthdata import random_mesh

        m = random_mesh(seed)
        again = parse_off(to_off(m))
        assert np.array_equal(again.vertices, m.vertices)
        assert again.faces == m.faces
        assert again.edges == m.edges
