import math

import numpy as np
import pytest

import votepose as vp


def test_bin_of_layout():
    g = vp.LogPolarGrid()
    assert g.num_classes == 50
    assert vp.bin_of(0, 0) == 1
    assert vp.bin_of(0, 3) == 2  # first ring, east sector
    assert vp.bin_of(0, 40) == 0


def test_kernel_channels_sum_to_one():
    k = vp.build_kernel()
    assert k.shape == (65, 65, 50)
    sums = k.sum(axis=(0, 1))
    assert sums[0] == 0.0
    assert np.allclose(sums[1:], 1.0, atol=1e-12)
    assert np.all((k != 0).sum(axis=2) <= 1)


def test_aggregate_matches_naive():
    rng = np.random.default_rng(3)
    field = rng.random((9, 7, 50)).astype(np.float32)
    field /= field.sum(axis=2, keepdims=True)
    fast, origin = vp.aggregate(field)
    slow, origin2 = vp.naive_aggregate(field)
    assert origin == origin2 == (-32, -32)
    assert fast.shape == (9 + 64, 7 + 64)
    assert np.max(np.abs(fast - slow)) <= 1e-9


def test_single_center_vote():
    field = np.zeros((5, 5, 50), dtype=np.float32)
    field[..., 0] = 1.0
    field[2, 2, :] = 0.0
    field[2, 2, 1] = 1.0
    heat, origin = vp.aggregate(field)
    assert heat.sum() == pytest.approx(1.0)
    rows, cols = np.indices(heat.shape)
    centroid = ((heat * rows).sum() + origin[0], (heat * cols).sum() + origin[1])
    assert centroid == pytest.approx((2.0, 2.0), abs=1e-12)


def test_trws_matches_brute_force_on_a_chain():
    rng = np.random.default_rng(4)
    unaries = [rng.random(4) for _ in range(4)]
    edges = [(i, i + 1, rng.random((4, 4))) for i in range(3)]
    fast = vp.trws_solve(unaries, edges)
    exact = vp.brute_force_map(unaries, edges)
    assert fast["energy"] == pytest.approx(exact["energy"], abs=1e-12)
    assert fast["lower_bound"] <= fast["energy"]


def test_invalid_model_raises():
    with pytest.raises(ValueError):
        vp.trws_solve([np.zeros(2), np.zeros(3)], [(0, 1, np.zeros((3, 3)))])


def test_synthetic_end_to_end():
    names = vp.keypoint_names()
    assert len(names) == 30
    poses = vp.random_scene(7)
    assert poses[0].shape == (30, 2)
    fields = vp.gen_synthetic(poses, seed=7)
    assert len(fields) == 30
    assert fields[0].shape == (126, 126, 50)
    est = vp.predict(fields)
    assert len(est["stages"]) == 3
    kp = est["keypoints"]
    assert kp.shape == (30, 2)
    truth = vp.annotate(poses[0])
    assert truth.head_length > 0
    score = vp.pckh([kp], [truth])
    assert score["mean"] == 1.0
    assert set(score["groups"]) >= {"head", "shoulder", "ankle"}


def test_all_background_fails():
    fields = vp.gen_synthetic(vp.random_scene(3), seed=3, background=1.0)
    with pytest.raises(vp._core.StageError):
        vp.predict(fields)


def test_selftest():
    results = vp.selftest(seed=2, cases=10)
    assert len(results) >= 4
    for r in results:
        assert r["failures"] == 0, r
        assert not math.isnan(r["max_error"])
