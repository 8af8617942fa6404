"""Ordinal pair sampling and the ranking loss."""

import math

import numpy as np
import pytest

from depthfuse.ranking import (
    PointPair,
    loss_ranking,
    ordinal_label,
    sample_pairs_edge_guided,
)
from depthfuse.types import BinaryMask, DepthMap


def test_ordinal_label_uses_the_ratio_not_the_difference():
    # same absolute gap, different ratios
    assert ordinal_label(100.0, 99.0) == 0
    assert ordinal_label(1.5, 0.5) == 1


def test_loss_ranking_known_values(rng):
    pred = DepthMap(np.array([[0.0, 10.0]]))
    ordered = [PointPair(p0=(0, 0), p1=(0, 1), label=-1)]
    # softplus of the signed margin: log(1 + e^{-10})
    val = loss_ranking(pred, ordered)
    assert abs(val - math.log1p(math.exp(-10.0))) <= 1e-12

    tied = [PointPair(p0=(0, 0), p1=(0, 1), label=0)]
    val = loss_ranking(pred, tied)
    assert abs(val - 100.0) <= 1e-12  # squared difference for equal pairs

    zero_margin = [PointPair(p0=(0, 0), p1=(0, 0), label=1)]
    assert abs(loss_ranking(pred, zero_margin) - math.log(2.0)) <= 1e-12


def test_loss_ranking_is_shift_invariant(rng):
    depth = rng.uniform(1.0, 5.0, size=(8, 8))
    pairs = sample_pairs_edge_guided(
        DepthMap(depth), np.zeros((8, 8), bool), 50, seed=1
    )
    a = loss_ranking(DepthMap(depth), pairs)
    b = loss_ranking(DepthMap(depth + 3.0), pairs)
    assert abs(a - b) <= 1e-9


def test_sampler_is_deterministic_per_seed(rng):
    gt = DepthMap(rng.uniform(0.5, 5.0, size=(16, 16)))
    mask = np.zeros((16, 16), bool)
    mask[:, 8] = True
    a = sample_pairs_edge_guided(gt, mask, 100, seed=4)
    b = sample_pairs_edge_guided(gt, mask, 100, seed=4)
    c = sample_pairs_edge_guided(gt, mask, 100, seed=5)
    assert a == b
    assert a != c


def test_sampler_straddles_edges(rng):
    gt_data = np.ones((20, 20))
    gt_data[:, 10:] = 3.0
    mask = np.zeros((20, 20), bool)
    mask[:, 10] = True
    pairs = sample_pairs_edge_guided(DepthMap(gt_data), mask, 200, seed=0)
    straddling = sum(
        1 for p in pairs if (p.p0[1] < 10) != (p.p1[1] < 10)
    )
    assert straddling >= 0.45 * len(pairs)


def test_sampler_labels_come_from_gt(rng):
    gt = DepthMap(rng.uniform(0.5, 5.0, size=(12, 12)))
    pairs = sample_pairs_edge_guided(gt, np.zeros((12, 12), bool), 100, seed=2)
    for p in pairs:
        assert p.label == ordinal_label(gt.data[p.p0], gt.data[p.p1])


def test_constant_gt_yields_all_tied_labels():
    gt = DepthMap(np.full((10, 10), 2.0))
    pairs = sample_pairs_edge_guided(gt, np.zeros((10, 10), bool), 60, seed=3)
    assert all(p.label == 0 for p in pairs)


def test_mask_object_and_array_are_interchangeable(rng):
    gt = DepthMap(rng.uniform(1.0, 2.0, size=(8, 8)))
    mask = np.zeros((8, 8), bool)
    mask[4, 4] = True
    a = sample_pairs_edge_guided(gt, mask, 40, seed=9)
    b = sample_pairs_edge_guided(gt, BinaryMask(mask), 40, seed=9)
    assert a == b
