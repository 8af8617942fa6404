"""Flow providers: identity, file-backed, block matching."""

import numpy as np
import pytest

from depthfuse import fileio
from depthfuse.errors import ArgumentError, ProviderError
from depthfuse.flow import FlowProviderConfig, estimate_flow
from depthfuse.ops import warp_backward
from depthfuse.types import DepthMap, FlowField, Image


def gray(arr):
    return Image(np.repeat(np.asarray(arr, np.float64)[:, :, None], 3, axis=2))


def test_identity_provider_returns_zero_flow(rng):
    img = gray(rng.uniform(size=(10, 12)))
    flow = estimate_flow(img, img, FlowProviderConfig(kind="identity"))
    assert flow.data.shape == (10, 12, 2)
    np.testing.assert_array_equal(flow.data, 0.0)


def test_file_provider_loads_the_given_flow(tmp_path, rng):
    stored = FlowField(rng.normal(size=(8, 9, 2)).astype(np.float32).astype(np.float64))
    path = tmp_path / "f.flo"
    fileio.write_flo(path, stored)
    img = gray(rng.uniform(size=(8, 9)))
    flow = estimate_flow(img, img, FlowProviderConfig(kind="file", path=str(path)))
    np.testing.assert_array_equal(flow.data, stored.data)


def test_file_provider_shape_mismatch_is_an_error(tmp_path, rng):
    fileio.write_flo(tmp_path / "f.flo", FlowField(np.zeros((4, 4, 2))))
    img = gray(rng.uniform(size=(8, 9)))
    with pytest.raises(ProviderError):
        estimate_flow(img, img, FlowProviderConfig(kind="file", path=str(tmp_path / "f.flo")))


def test_file_provider_requires_a_path():
    with pytest.raises(ArgumentError):
        FlowProviderConfig(kind="file")


def test_block_matching_identical_frames_give_near_zero_flow(rng):
    img = gray(rng.uniform(size=(32, 32)))
    flow = estimate_flow(img, img, FlowProviderConfig(kind="block"))
    assert np.abs(flow.data).max() < 0.5


def test_block_matching_recovers_a_translation(rng):
    base = rng.uniform(size=(48, 48))
    base = np.repeat(base, 2, axis=0)[:48]  # coarser texture helps matching
    target_arr = np.roll(base, 3, axis=1)
    flow = estimate_flow(
        gray(target_arr), gray(base), FlowProviderConfig(kind="block", search=5)
    )
    inner = flow.data[10:-10, 10:-10]
    assert abs(inner[:, :, 0].mean() - (-3.0)) < 0.6


def test_block_flow_warps_source_onto_target(rng):
    base = rng.uniform(size=(40, 40))
    target_arr = np.roll(base, 2, axis=1)
    flow = estimate_flow(gray(target_arr), gray(base), FlowProviderConfig(kind="block"))
    warped = warp_backward(DepthMap(base), flow)
    inner = (slice(8, -8), slice(8, -8))
    err = np.abs(warped.data[inner] - target_arr[inner]).mean()
    raw = np.abs(base[inner] - target_arr[inner]).mean()
    assert err < 0.25 * raw


def test_unknown_kind_is_rejected():
    with pytest.raises(ArgumentError):
        FlowProviderConfig(kind="farneback")
