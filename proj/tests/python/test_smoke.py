import math

import numpy as np
import pytest

import tscenejal as tj


def car(x, y, conf=0.9):
    return tj.Detection("Car", conf, tj.Box3D(x, y, 0.0, 1.6, 3.9, 1.56, 0.0))


def test_entropy_of_balanced_scene():
    scene = tj.Scene("s", [car(5, 1), tj.Detection("Pedestrian", 0.8, tj.Box3D(3, 2, 0, 0.6, 0.8, 1.7, 0)),
                           tj.Detection("Cyclist", 0.7, tj.Box3D(9, -2, 0, 0.6, 1.8, 1.7, 0))])
    assert tj.category_entropy(scene) == pytest.approx(math.log(3.0), abs=1e-9)
    assert tj.category_entropy(tj.Scene("empty")) == 0.0


def test_threshold_override():
    scene = tj.Scene("s", [car(5, 1), tj.Detection("Pedestrian", 0.4, tj.Box3D(3, 2, 0, 0.6, 0.8, 1.7, 0))])
    assert tj.category_entropy(scene) > 0.0
    assert tj.category_entropy(scene, config={"entropy.tau": "0.5"}) == pytest.approx(0.0, abs=1e-9)


def test_similarity_matrix_is_symmetric_with_unit_diagonal():
    scenes = [tj.Scene("a", [car(5, 1)]), tj.Scene("b", [car(5, 1), car(-7, 12)]), tj.Scene("c")]
    s = tj.similarity_matrix(scenes)
    assert s.shape == (3, 3)
    np.testing.assert_allclose(np.diag(s), 1.0, atol=1e-9)
    np.testing.assert_array_equal(s, s.T)
    assert tj.similarity(scenes[0], scenes[1]) == pytest.approx(s[0, 1])


def test_mixture_stats():
    mean, au, eu = tj.mixture_stats([0.5, 0.3, 0.2], [1.0, 2.0, 3.0], [0.01, 0.02, 0.04])
    assert mean == pytest.approx(1.7)
    assert au == pytest.approx(0.019)
    assert eu == pytest.approx(0.61)
    assert tj.mixture_stats([1.0], [4.0], [0.5])[2] == 0.0


def test_label_round_trip():
    scene = tj.Scene("000001", [car(1.25, -3.5)])
    text = tj.serialize_label_file(scene)
    assert tj.parse_label_text(text, "000001") == scene


def test_farthest_sampling_prefers_far_points():
    sim = np.array([[1.0, 0.9, 0.1], [0.9, 1.0, 0.2], [0.1, 0.2, 1.0]])
    assert tj.farthest_sampling(["a", "b", "c"], sim, 2) == ["c", "a"]


def test_three_stage_select_and_simulation():
    cfg = {"synth.n_scenes": "40", "plan.n_r": "3", "plan.rounds": "2", "diag.n_pairs": "50"}
    gt, pred = tj.generate_pool(4, cfg)
    assert len(gt) == len(pred) == 40
    assert all(d.mixture is not None for s in pred for d in s.detections)
    ids, stats = tj.three_stage_select(pred, cfg)
    assert len(ids) == 3
    assert list(stats["stage_sizes"]) == [9, 7, 3]
    assert stats["entropy_sorts"] == 1
    rows = tj.simulate(["random", "tscenejal"], seed=4, config=cfg)
    assert [r["strategy"] for r in rows] == ["random", "tscenejal"]
    assert all(len(r["selected"]) == 6 for r in rows)


def test_errors_map_to_exceptions():
    with pytest.raises(tj._core.InvalidArgument):
        tj.category_entropy(tj.Scene("s"), config={"kernel.gama": "0.1"})
    with pytest.raises(tj._core.DataError):
        tj.parse_label_text("Car 0 0\n", "bad")
