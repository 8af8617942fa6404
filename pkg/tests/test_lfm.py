"""Two-stage fusion: stage-1/2 behavior, losses, desk training."""

import numpy as np
import pytest

from depthfuse.errors import ArgumentError, LossError
from depthfuse.guided import GuidedFilterParams, guided_filter
from depthfuse.lfm import (
    FusionNetSpec,
    LfmTrainConfig,
    evaluate_lfm,
    fuse_stage1,
    fuse_stage2,
    load_training_pairs,
    loss_ilnr,
    make_pseudo_pair,
    train_lfm,
)
from depthfuse.synthetic import blurred_depth, distorted_sharp_depth, make_scene, write_fusion_pairs
from depthfuse.types import DepthMap


class TestIlnr:
    def test_frozen_reference_value(self):
        # gt = 1..10, pred = 0. Statistics trim one value per end, so
        # mu = mean(2..9) = 5.5 and sigma = sqrt(21/4); the normalized
        # target t_i = (i - 5.5) / sigma gives
        # mean |t_i| + mean |tanh(t_i / 100)| = 1.1019994971711586.
        gt = DepthMap(np.arange(1.0, 11.0).reshape(2, 5))
        pred = DepthMap(np.zeros((2, 5)))
        assert abs(loss_ilnr(pred, gt) - 1.1019994971711586) <= 1e-12

    def test_invariant_to_positive_gt_scaling(self, rng):
        gt = rng.uniform(1.0, 7.0, size=(9, 9))
        pred = DepthMap(rng.normal(size=(9, 9)))
        base = loss_ilnr(pred, DepthMap(gt))
        for c in (0.5, 3.0, 250.0):
            assert abs(loss_ilnr(pred, DepthMap(gt * c)) - base) <= 1e-9

    def test_matching_normalized_prediction_scores_zero(self, rng):
        gt = rng.uniform(1.0, 4.0, size=(8, 8))
        flat = np.sort(gt, axis=None)
        k = int(0.1 * flat.size)
        core = flat[k : flat.size - k]
        target = (gt - core.mean()) / np.sqrt(((core - core.mean()) ** 2).mean())
        assert loss_ilnr(DepthMap(target), DepthMap(gt)) <= 1e-12

    def test_constant_gt_is_an_error(self):
        with pytest.raises(LossError):
            loss_ilnr(DepthMap(np.zeros((4, 4))), DepthMap(np.full((4, 4), 2.0)))

    def test_shape_mismatch_is_an_error(self):
        with pytest.raises(ArgumentError):
            loss_ilnr(DepthMap(np.zeros((4, 4))), DepthMap(np.ones((4, 5))))


class TestStageOne:
    def test_constant_filtered_map_passes_through(self, rng):
        d_edge = DepthMap(rng.uniform(0.5, 2.0, size=(24, 24)))
        d_eh = DepthMap(np.full((24, 24), 1.5))
        out = fuse_stage1(d_edge, d_eh, GuidedFilterParams(2, 1e-3))
        np.testing.assert_array_equal(out.data, 1.5)

    def test_edge_guide_sharpens_a_blurred_step(self):
        scene = make_scene(seed=5, height=48, width=64)
        d_eh = blurred_depth(scene.depth, 2.5)
        d_edge = distorted_sharp_depth(scene.depth, seed=6)
        params = GuidedFilterParams(radius=4, eps=1e-4)
        out = fuse_stage1(d_edge, d_eh, params)
        col = scene.step_column
        # transition across the depth step gets steeper than the blur
        blurred_jump = np.abs(np.diff(d_eh.data[24, col - 4 : col + 5])).max()
        fused_jump = np.abs(np.diff(out.data[24, col - 4 : col + 5])).max()
        assert fused_jump > blurred_jump

    def test_swap_roles_swaps_guide_and_input(self, rng):
        a = DepthMap(rng.uniform(0.2, 1.0, size=(20, 20)))
        b = DepthMap(rng.uniform(0.2, 1.0, size=(20, 20)))
        params = GuidedFilterParams(2, 1e-4)
        swapped = fuse_stage1(a, b, params, swap_roles=True)
        direct = guided_filter(b, a, params)
        np.testing.assert_array_equal(swapped.data, direct.data)


class TestStageTwo:
    def test_guided_mode_is_the_plain_guided_filter(self, rng):
        d = DepthMap(rng.uniform(0.5, 3.0, size=(24, 24)))
        s1 = DepthMap(rng.uniform(0.5, 3.0, size=(24, 24)))
        params = GuidedFilterParams(3, 1e-4)
        out = fuse_stage2(d, s1, mode="guided", params=params)
        ref = guided_filter(s1, d, params)
        np.testing.assert_array_equal(out.data, ref.data)

    def test_no_weights_is_identity_on_the_original(self, rng):
        d = DepthMap(rng.uniform(0.5, 3.0, size=(16, 16)))
        s1 = DepthMap(rng.uniform(0.5, 3.0, size=(16, 16)))
        out = fuse_stage2(d, s1, weights=None, mode="network")
        np.testing.assert_array_equal(out.data, d.data)

    def test_untrained_network_is_bit_exact_identity(self, rng):
        from depthfuse._torchops import build_fusion_net, module_to_weights

        weights = module_to_weights(build_fusion_net(FusionNetSpec(), seed=0))
        d = DepthMap(rng.uniform(0.5, 3.0, size=(16, 16)))
        s1 = DepthMap(rng.uniform(0.5, 3.0, size=(16, 16)))
        out = fuse_stage2(d, s1, weights=weights, mode="network")
        np.testing.assert_array_equal(out.data, d.data)

    def test_network_output_stays_in_the_original_range(self, rng):
        from depthfuse._torchops import build_fusion_net, module_to_weights
        import torch

        net = build_fusion_net(FusionNetSpec(), seed=0)
        with torch.no_grad():  # knock the head off zero
            for p in net.parameters():
                p.add_(0.05)
        weights = module_to_weights(net)
        d = DepthMap(rng.uniform(1.0, 2.0, size=(16, 16)))
        s1 = DepthMap(rng.uniform(1.0, 2.0, size=(16, 16)))
        out = fuse_stage2(d, s1, weights=weights, mode="network")
        assert not np.array_equal(out.data, d.data)
        assert out.data.min() >= d.data.min() - 1e-12
        assert out.data.max() <= d.data.max() + 1e-12

    def test_unknown_mode_is_an_error(self, rng):
        d = DepthMap(np.ones((4, 4)))
        with pytest.raises(ArgumentError):
            fuse_stage2(d, d, mode="blend")


class TestPseudoPairs:
    def test_label_keeps_lo_structure_with_hi_edges(self):
        scene = make_scene(seed=8, height=48, width=64)
        lo = blurred_depth(scene.depth, 2.0)
        hi = distorted_sharp_depth(scene.depth, seed=9)
        (lo_out, hi_out), label = make_pseudo_pair(lo, hi)
        assert label.data.shape == lo_out.data.shape == hi_out.data.shape
        col = scene.step_column
        lo_jump = np.abs(np.diff(lo.data[24, col - 4 : col + 5])).max()
        label_jump = np.abs(np.diff(label.data[24, col - 4 : col + 5])).max()
        assert label_jump > lo_jump

    def test_constant_lo_gives_constant_label(self, rng):
        lo = DepthMap(np.full((20, 20), 1.25))
        hi = DepthMap(rng.uniform(0.5, 2.0, size=(20, 20)))
        _, label = make_pseudo_pair(lo, hi)
        np.testing.assert_array_equal(label.data, 1.25)

    def test_lo_is_resampled_onto_hi_grid(self, rng):
        lo = DepthMap(rng.uniform(0.5, 1.5, size=(10, 10)))
        hi = DepthMap(rng.uniform(0.5, 1.5, size=(20, 20)))
        (lo_out, _), label = make_pseudo_pair(lo, hi)
        assert lo_out.data.shape == (20, 20)
        assert label.data.shape == (20, 20)


class TestTraining:
    @pytest.fixture(scope="class")
    @staticmethod
    def dataset(tmp_path_factory):
        root = tmp_path_factory.mktemp("pairs")
        write_fusion_pairs(root, count=3, seed=2, height=48, width=48)
        return str(root)

    def small_config(self, iterations, seed=0):
        return LfmTrainConfig(
            iterations=iterations,
            pair_count=80,
            pair_sample_count=48,
            seed=seed,
        )

    def test_dataset_loader_reads_all_pairs(self, dataset):
        samples = load_training_pairs(dataset, self.small_config(1))
        assert len(samples) == 3

    def test_zero_iterations_return_untouched_init_weights(self, dataset):
        from depthfuse._torchops import build_fusion_net, module_to_weights

        weights, history = train_lfm(dataset, self.small_config(0, seed=3))
        assert history == []
        init = module_to_weights(build_fusion_net(FusionNetSpec(), seed=3))
        assert set(weights) == set(init)
        for name in weights:
            np.testing.assert_array_equal(weights[name], init[name])

    def test_training_is_deterministic_per_seed(self, dataset):
        w1, h1 = train_lfm(dataset, self.small_config(3, seed=4))
        w2, h2 = train_lfm(dataset, self.small_config(3, seed=4))
        assert h1 == h2
        for name in w1:
            np.testing.assert_array_equal(w1[name], w2[name])

    def test_loss_decreases_over_a_short_run(self, dataset):
        _, history = train_lfm(dataset, self.small_config(25, seed=1))
        assert history[-1]["total"] < history[0]["total"]

    def test_log_csv_has_one_row_per_iteration(self, dataset, tmp_path):
        log = tmp_path / "log.csv"
        train_lfm(dataset, self.small_config(4), log_path=str(log))
        lines = log.read_text().strip().splitlines()
        assert lines[0] == "iteration,ilnr,rank,total"
        assert len(lines) == 5

    def test_evaluate_uses_the_same_losses(self, dataset):
        ilnr, rank, total = evaluate_lfm(dataset, self.small_config(1))
        assert total == pytest.approx(ilnr + rank)
        assert total > 0.0
