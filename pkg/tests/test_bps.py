import numpy as np
import pytest

import bpsplan as bp
from bpsplan import bps as bps_mod
from bpsplan.bps import FREE, OCCUPIED


def spec64(seed=7, thr=0.4):
    return bp.WorldSpec(seed, 4.0, thr, (64, 64), 1 / 64)


@pytest.fixture(scope="module")
def world64():
    grid = bp.generate_world(spec64())
    return grid, bp.compute_sdf(grid)


class TestHexBps:
    def test_target_below_minimum_rejected(self):
        with pytest.raises(ValueError):
            bp.generate_hex_bps([0.0, 0.0], 1.0, 1, 2)

    def test_all_points_within_reach(self):
        bps = bp.generate_hex_bps([0.5, 0.5], 0.66, 256, 2)
        assert np.all(np.linalg.norm(bps.points - [0.5, 0.5], axis=1) <= 0.66)

    def test_2d_count_regression(self):
        # Spec band is +-10% of 256; exact value frozen from this lattice.
        bps = bp.generate_hex_bps([0.0, 0.0], 1.0, 256, 2)
        assert 231 <= bps.n_points <= 281
        assert bps.n_points == 253

    def test_3d_count_within_band(self):
        bps = bp.generate_hex_bps([0.0, 0.0, 0.0], 1.0, 300, 3)
        assert 270 <= bps.n_points <= 330

    def test_deterministic(self):
        a = bp.generate_hex_bps([0.5, 0.5], 0.66, 200, 2)
        b = bp.generate_hex_bps([0.5, 0.5], 0.66, 200, 2)
        assert np.array_equal(a.points, b.points)


class TestEncode:
    def test_all_free_world_gives_sentinel(self):
        grid = bp.OccupancyGrid((64, 64), 1 / 64, np.zeros(2),
                                np.zeros((64, 64), dtype=bool))
        sdf = bp.compute_sdf(grid)
        bps = bp.generate_hex_bps([0.5, 0.5], 0.6, 64, 2)
        feats = bp.encode_sdf(sdf, bps)
        assert feats.signed
        assert np.allclose(feats.values, 10.0, rtol=1e-12)

    def test_obstacle_cell_center_keeps_stored_value(self, world64):
        grid, sdf = world64
        idx = np.argwhere(grid.cells)[0]
        center = (idx + 0.5) * grid.voxel_size
        bps = bps_mod.BasisPointSet(center[None], "custom", np.array([0.5, 0.5]), 1.0)
        feats = bp.encode_sdf(sdf, bps)
        assert feats.values[0] == pytest.approx(sdf.values[tuple(idx)])
        assert feats.values[0] < 0

    def test_grid_bps_equals_subsampled_sdf(self, world64):
        grid, sdf = world64
        bps = bps_mod.generate_grid_bps(sdf.shape, sdf.voxel_size, sdf.origin, 16)
        feats = bp.encode_sdf(sdf, bps)
        stride = 4
        sub = sdf.values[stride // 2::stride, stride // 2::stride]
        assert np.allclose(np.sort(feats.values), np.sort(sub.ravel()))

    def test_pointcloud_trivials(self):
        bps = bps_mod.BasisPointSet(np.array([[0.0, 0.0], [1.0, 0.0]]),
                                    "custom", np.zeros(2), 2.0)
        feats = bp.encode_pointcloud(np.array([[0.0, 0.0]]), bps)
        assert not feats.signed
        assert feats.values[0] == 0.0
        assert feats.values[1] == pytest.approx(1.0)

    def test_pointcloud_single_far_point_exact(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(20, 3))
        bps = bps_mod.BasisPointSet(pts, "custom", np.zeros(3), 10.0)
        p = np.array([[5.0, -2.0, 1.0]])
        feats = bp.encode_pointcloud(p, bps)
        assert np.allclose(feats.values, np.linalg.norm(pts - p, axis=1))

    def test_pointcloud_permutation_invariant(self):
        rng = np.random.default_rng(1)
        cloud = rng.random((200, 2))
        bps = bp.generate_hex_bps([0.5, 0.5], 0.7, 64, 2)
        a = bp.encode_pointcloud(cloud, bps)
        b = bp.encode_pointcloud(cloud[rng.permutation(200)], bps)
        assert np.allclose(a.values, b.values)

    def test_pointcloud_monotone_under_additions(self):
        rng = np.random.default_rng(2)
        cloud = rng.random((50, 2))
        extra = rng.random((50, 2))
        bps = bp.generate_hex_bps([0.5, 0.5], 0.7, 64, 2)
        a = bp.encode_pointcloud(cloud, bps)
        b = bp.encode_pointcloud(np.vstack([cloud, extra]), bps)
        assert np.all(b.values <= a.values + 1e-12)

    def test_cloud_vs_sdf_cross_oracle(self, world64):
        # Obstacle cell centers as a cloud: unsigned distances agree with the
        # interpolated signed field up to interpolation error (the exact
        # corner values sit at most a cell diagonal from the query).
        grid, sdf = world64
        cloud = grid.cell_centers()[grid.cells.ravel()]
        bps = bp.generate_hex_bps([0.5, 0.5], 0.6, 128, 2)
        pc = bp.encode_pointcloud(cloud, bps)
        sd = bp.encode_sdf(sdf, bps)
        # Outside the grid the field is clamped, so compare in-grid points only.
        inside = np.all((bps.points >= 0.0) & (bps.points <= 1.0), axis=1)
        free = (sd.values > grid.voxel_size) & inside
        assert np.all(np.abs(pc.values[free] - sd.values[free]) <= np.sqrt(2) * grid.voxel_size)

    def test_empty_cloud_rejected(self):
        bps = bp.generate_hex_bps([0.5, 0.5], 0.7, 64, 2)
        with pytest.raises(ValueError):
            bp.encode_pointcloud(np.zeros((0, 2)), bps)


class TestReconstruction:
    def test_basis_point_labels_match_feature_sign(self, world64):
        grid, sdf = world64
        bps = bps_mod.generate_grid_bps(sdf.shape, sdf.voxel_size, sdf.origin, 16)
        feats = bp.encode_sdf(sdf, bps)
        labels = bps_mod.reconstruct_conservative(bps, feats, grid.shape,
                                                  grid.voxel_size, grid.origin)
        cells = np.rint(bps.points / grid.voxel_size - 0.5).astype(int)
        for (i, j), v in zip(cells, feats.values):
            if v > 0:
                assert labels[i, j] == FREE
            elif v < 0:
                assert labels[i, j] == OCCUPIED

    def test_zero_false_labels_on_random_worlds(self):
        for seed in range(10):
            grid = bp.generate_world(spec64(seed=seed))
            sdf = bp.compute_sdf(grid)
            bps = bps_mod.generate_grid_bps(sdf.shape, sdf.voxel_size, sdf.origin, 16)
            feats = bp.encode_sdf(sdf, bps)
            labels = bps_mod.reconstruct_conservative(bps, feats, grid.shape,
                                                      grid.voxel_size, grid.origin)
            assert not np.any((labels == FREE) & grid.cells)
            assert not np.any((labels == OCCUPIED) & ~grid.cells)

    def test_soundness_exhaustive_small_worlds(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            cells = rng.random((16, 16)) < rng.uniform(0.1, 0.9)
            if cells.all() or not cells.any():
                continue
            grid = bp.OccupancyGrid((16, 16), 1.0, np.zeros(2), cells)
            sdf = bp.compute_sdf(grid)
            bps = bps_mod.generate_grid_bps(sdf.shape, sdf.voxel_size, sdf.origin, 4)
            feats = bp.encode_sdf(sdf, bps)
            labels = bps_mod.reconstruct_conservative(bps, feats, grid.shape,
                                                      grid.voxel_size, grid.origin)
            assert not np.any((labels == FREE) & cells)
            assert not np.any((labels == OCCUPIED) & ~cells)

    def test_unsigned_features_rejected(self):
        bps = bp.generate_hex_bps([0.5, 0.5], 0.7, 64, 2)
        feats = bps_mod.BpsFeatures(np.ones(bps.n_points), signed=False)
        with pytest.raises(ValueError):
            bps_mod.reconstruct_conservative(bps, feats, (16, 16), 1.0, np.zeros(2))

    def test_beats_conservative_downsampling_typically(self, world64):
        grid, sdf = world64
        bps = bps_mod.generate_grid_bps(sdf.shape, sdf.voxel_size, sdf.origin, 16)
        feats = bp.encode_sdf(sdf, bps)
        labels = bps_mod.reconstruct_conservative(bps, feats, grid.shape,
                                                  grid.voxel_size, grid.origin)
        unknown = bps_mod.unknown_fraction(labels)
        lost = bps_mod.downsample_loss_fraction(grid.cells, 4)
        assert unknown < lost


class TestDownsample:
    def test_block_any_rule(self):
        cells = np.zeros((8, 8), dtype=bool)
        cells[0, 0] = True
        coarse = bps_mod.downsample_conservative(cells, 4)
        assert coarse.shape == (2, 2)
        assert coarse[0, 0] and not coarse[0, 1]

    def test_loss_fraction_counts_free_cells_only(self):
        cells = np.zeros((8, 8), dtype=bool)
        cells[0, 0] = True
        # One obstacle grows to a 4x4 block: 15 free cells lost out of 64.
        assert bps_mod.downsample_loss_fraction(cells, 4) == pytest.approx(15 / 64)


class TestBpsFile:
    def test_roundtrip(self, tmp_path):
        bps = bp.generate_hex_bps([0.5, 0.5], 0.66, 256, 2)
        path = tmp_path / "points.bps"
        bps_mod.save_bps(path, bps)
        again = bps_mod.load_bps(path)
        assert np.array_equal(again.points, bps.points)
        assert again.layout == bps.layout
        assert again.reach == bps.reach
        assert again.spacing == bps.spacing

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bps"
        path.write_bytes(b"XXXX" + b"\0" * 32)
        with pytest.raises(bp.DataError):
            bps_mod.load_bps(path)
