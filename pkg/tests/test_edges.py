"""Edge extraction: Sobel, hybrid fusion, tiling, masks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from depthfuse import edges
from depthfuse.errors import ArgumentError
from depthfuse.types import BinaryMask, EdgeMap, Image


def gray(arr):
    return Image(np.repeat(np.asarray(arr, np.float64)[:, :, None], 3, axis=2))


class TestHybridFuse:
    def test_matches_elementwise_root_product(self, rng):
        a = EdgeMap(rng.uniform(0.0, 1.0, size=(16, 16)))
        b = EdgeMap(rng.uniform(0.0, 1.0, size=(16, 16)))
        fused = edges.hybrid_fuse(a, b)
        reference = np.sqrt(a.data * b.data)
        assert np.abs(fused.data - reference).max() <= 1e-12

    def test_zero_in_either_input_annihilates(self, rng):
        a = EdgeMap(np.zeros((8, 8)))
        b = EdgeMap(rng.uniform(0.0, 1.0, size=(8, 8)))
        np.testing.assert_array_equal(edges.hybrid_fuse(a, b).data, 0.0)
        np.testing.assert_array_equal(edges.hybrid_fuse(b, a).data, 0.0)

    def test_ones_are_a_fixed_point(self):
        ones = EdgeMap(np.ones((6, 6)))
        np.testing.assert_array_equal(edges.hybrid_fuse(ones, ones).data, 1.0)

    def test_equal_inputs_are_a_fixed_point(self, rng):
        e = EdgeMap(rng.uniform(0.0, 1.0, size=(10, 10)))
        fused = edges.hybrid_fuse(e, e)
        np.testing.assert_allclose(fused.data, e.data, atol=1e-12)

    def test_higher_root_flattens_response(self):
        a = EdgeMap(np.full((4, 4), 0.04))
        b = EdgeMap(np.full((4, 4), 0.04))
        quad = edges.hybrid_fuse(a, b, edges.HybridEdgeConfig(n_root=4))
        assert np.all(quad.data > 0.04)

    @settings(max_examples=50, deadline=None)
    @given(
        hnp.arrays(np.float64, (5, 5), elements=st.floats(0, 1)),
        hnp.arrays(np.float64, (5, 5), elements=st.floats(0, 1)),
    )
    def test_result_bounded_by_unit_interval(self, a, b):
        fused = edges.hybrid_fuse(EdgeMap(a), EdgeMap(b))
        assert fused.data.min() >= 0.0
        assert fused.data.max() <= 1.0 + 1e-12

    def test_shape_mismatch_is_an_error(self):
        with pytest.raises(ArgumentError):
            edges.hybrid_fuse(EdgeMap(np.zeros((4, 4))), EdgeMap(np.zeros((4, 5))))


class TestSobel:
    def test_flat_image_has_zero_response(self):
        img = gray(np.full((8, 8), 0.5))
        np.testing.assert_array_equal(edges.sobel_magnitude(img).data, 0.0)

    def test_vertical_step_peaks_at_the_step(self):
        arr = np.zeros((10, 12))
        arr[:, 6:] = 1.0
        mag = edges.sobel_magnitude(gray(arr)).data
        assert mag.max() == 1.0
        peak_cols = np.unique(np.argmax(mag, axis=1))
        assert set(peak_cols) <= {5, 6}

    def test_response_normalized_to_unit_peak(self, rng):
        img = gray(rng.uniform(0.0, 1.0, size=(16, 16)))
        mag = edges.sobel_magnitude(img).data
        assert abs(mag.max() - 1.0) < 1e-12


class TestPatchedEdges:
    def test_full_image_provider_sees_every_tile(self, rng):
        img = gray(rng.uniform(0.0, 1.0, size=(30, 30)))
        calls = []

        def provider(tile):
            calls.append(tile.data.shape[:2])
            return EdgeMap(np.full(tile.data.shape[:2], 0.5))

        out = edges.patched_edges(img, provider, edges.HybridEdgeConfig(grid=3))
        assert len(calls) == 9
        assert out.data.shape == (30, 30)
        np.testing.assert_allclose(out.data, 0.5)

    def test_constant_provider_output_is_seamless(self, rng):
        img = gray(rng.uniform(0.0, 1.0, size=(25, 31)))

        def provider(tile):
            return EdgeMap(np.full(tile.data.shape[:2], 0.25))

        out = edges.patched_edges(img, provider, edges.HybridEdgeConfig(grid=3))
        np.testing.assert_allclose(out.data, 0.25, atol=1e-12)


class TestMasks:
    def test_binarize_threshold_is_inclusive(self):
        e = EdgeMap(np.array([[0.1, 0.3], [0.299999, 0.9]]))
        mask = edges.binarize(e, 0.3)
        np.testing.assert_array_equal(
            mask.data, [[False, True], [False, True]]
        )

    def test_edge_highlight_zeroes_masked_pixels(self, rng):
        img = Image(rng.uniform(0.2, 1.0, size=(4, 4, 3)))
        mask = BinaryMask(np.zeros((4, 4), dtype=bool))
        mask.data[1, 2] = True
        out = edges.edge_highlight(img, mask)
        np.testing.assert_array_equal(out.data[1, 2], 0.0)
        untouched = ~mask.data
        np.testing.assert_array_equal(out.data[untouched], img.data[untouched])
