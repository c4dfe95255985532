import numpy as np
import pytest

from nnrk import quadrature as quad


class TestBuildGrid:
    def test_1d_counts_and_measure(self):
        g = quad.build_grid([(-1.0, 1.0)], 500, gauss_order=2)
        assert g.n_points == 1000
        assert g.measure == pytest.approx(2.0, abs=1e-12)

    def test_2d_counts_and_measure(self):
        g = quad.build_grid([((-1.0, 1.0), (-1.0, 1.0))], (72, 72), gauss_order=2)
        assert g.n_points == 20736
        assert g.measure == pytest.approx(4.0, abs=1e-12)

    def test_two_point_rule_integrates_cubics_exactly(self):
        g = quad.build_grid([(-1.0, 1.0)], 10, gauss_order=2)
        x = g.points[:, 0]
        assert np.sum(g.weights * x**3) == pytest.approx(0.0, abs=1e-14)
        assert np.sum(g.weights * x**2) == pytest.approx(2.0 / 3.0, abs=1e-14)

    def test_patched_domain_measure(self):
        # union of two boxes forming an L-shape
        patches = [((0.0, 250.0), (0.0, 500.0)), ((250.0, 500.0), (250.0, 500.0))]
        g = quad.build_grid(patches, (40, 40), gauss_order=2)
        assert g.measure == pytest.approx(250 * 500 + 250 * 250, rel=1e-14)
        # no points inside the cut-out corner
        inside_cut = (g.points[:, 0] > 250.0) & (g.points[:, 1] < 250.0)
        assert not inside_cut.any()

    def test_history_initialized_to_zero(self):
        g = quad.build_grid([(-1.0, 1.0)], 10)
        assert g.history.shape == (20,)
        assert np.all(g.history == 0.0)

    def test_deterministic_layout(self):
        a = quad.build_grid([((-1.0, 1.0), (0.0, 2.0))], (5, 7))
        b = quad.build_grid([((-1.0, 1.0), (0.0, 2.0))], (5, 7))
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.weights, b.weights)


class TestBoundaries:
    def test_point_boundary_1d(self):
        g = quad.build_grid(
            [(-1.0, 1.0)], 10, boundaries={"left": {"point": [-1.0]}, "right": {"point": [1.0]}}
        )
        assert g.boundaries["left"].points.shape == (1, 1)
        assert g.boundaries["left"].weights[0] == 1.0

    def test_edge_boundary_2d_measure(self):
        g = quad.build_grid(
            [((0.0, 30.0), (0.0, 30.0))],
            (12, 12),
            boundaries={"top": {"edge": {"axis": 1, "value": 30.0, "span": [0.0, 30.0]}}},
        )
        top = g.boundaries["top"]
        assert np.all(top.points[:, 1] == 30.0)
        assert top.weights.sum() == pytest.approx(30.0, rel=1e-14)
        # 1-D Gauss along the edge integrates cubics exactly
        s = top.points[:, 0] - 15.0
        assert np.sum(top.weights * s**3) == pytest.approx(0.0, abs=1e-9)


class TestResolutionRules:
    def test_warns_on_coarse_cells(self):
        msgs = quad.check_resolution(np.array([1.0]), length_scale=1.0, node_spacing=[10.0])
        assert len(msgs) == 1  # violates the length-scale rule only

    def test_strict_mode_raises(self):
        with pytest.raises(quad.ResolutionError):
            quad.check_resolution(np.array([1.0]), length_scale=1.0, strict=True)

    def test_compliant_grid_is_silent(self):
        msgs = quad.check_resolution(np.array([0.2]), length_scale=1.0, node_spacing=[1.0])
        assert msgs == []

    def test_grid_carries_warnings(self):
        g = quad.build_grid([(-1.0, 1.0)], 4, length_scale=0.1)
        assert g.warnings
