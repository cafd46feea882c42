"""Scoring layer: greedy matching against a step-simulation oracle,
metric arithmetic, aggregation, detection windows, compression ratio."""

import numpy as np
import pytest

from texsum.errors import FormatError, InputError
from texsum.evaluate import (EvalReport, GroundTruthWindow, MatchResult,
                             aggregate, build_longterm_report,
                             build_user_report, compression_ratio, cus_match,
                             detection_accuracy, evaluate_tree, metrics,
                             read_ground_truth, write_report)
from texsum.histograms import FrameSignature, FusionWeights, fused_distance

from conftest import (codebook_from_frames, segment_frames, write_frame_dir)


def sig(bot, hue=None, idx=0):
    return FrameSignature(frame_index=idx, timestamp_s=float(idx),
                          bot=np.asarray(bot, dtype=np.float64),
                          hue=None if hue is None else np.asarray(hue, np.float64))


# --- greedy matching ---------------------------------------------------------

def simulate_matching(auto, user, delta, weights, hue_norm):
    """Step-by-step replay with an explicit availability mask, as an
    independent restatement of the matching rule."""
    taken = [False] * len(user)
    pairs = []
    for ai in range(len(auto)):
        for ui in range(len(user)):
            if taken[ui]:
                continue
            if fused_distance(auto[ai], user[ui], weights, hue_norm) < delta:
                taken[ui] = True
                pairs.append((ai, ui))
                break
    return pairs


def random_instance(rng, n_auto, n_user, dim=4):
    auto = [sig(rng.dirichlet(np.ones(dim)), idx=i) for i in range(n_auto)]
    user = [sig(rng.dirichlet(np.ones(dim)), idx=i) for i in range(n_user)]
    return auto, user


def test_cus_match_agrees_with_simulation_all_small_sizes():
    rng = np.random.default_rng(41)
    w = FusionWeights(1.0)
    for n_auto in range(1, 7):
        for n_user in range(1, 7):
            for _ in range(12):
                auto, user = random_instance(rng, n_auto, n_user)
                delta = float(rng.uniform(0.05, 1.2))
                got = cus_match(auto, user, delta, w)
                want = simulate_matching(auto, user, delta, w, "l1")
                assert list(got.pairs) == want
                assert got.n_matched == len(want)
                assert got.n_unmatched == n_auto - len(want)
                assert got.n_auto == n_auto and got.n_user == n_user


def test_cus_match_consumes_user_frames():
    # two identical auto frames, one matching user frame: only one match
    a = sig([1.0, 0.0], idx=0)
    b = sig([1.0, 0.0], idx=1)
    u = sig([1.0, 0.0], idx=0)
    got = cus_match([a, b], [u], delta=0.5, weights=FusionWeights(1.0))
    assert got.n_matched == 1 and got.n_unmatched == 1
    assert got.pairs == ((0, 0),)


def test_cus_match_first_match_in_temporal_order():
    # auto frame equidistant-close to two user frames: earliest user wins
    a = sig([0.5, 0.5], idx=0)
    u1 = sig([0.55, 0.45], idx=0)
    u2 = sig([0.45, 0.55], idx=1)
    got = cus_match([a], [u1, u2], delta=0.5, weights=FusionWeights(1.0))
    assert got.pairs == ((0, 0),)


def test_cus_match_threshold_is_strict():
    a = sig([1.0, 0.0], idx=0)
    u = sig([0.0, 1.0], idx=0)
    d = fused_distance(a, u, FusionWeights(1.0), "l1")
    got = cus_match([a], [u], delta=d, weights=FusionWeights(1.0))
    assert got.n_matched == 0       # distance == delta does not match
    got = cus_match([a], [u], delta=d * 1.001, weights=FusionWeights(1.0))
    assert got.n_matched == 1


def test_cus_match_uses_l1_hue_by_default():
    a = sig([1.0, 0.0], hue=[1.0, 0.0, 0.0, 0.0], idx=0)
    u = sig([1.0, 0.0], hue=[0.0, 1.0, 0.0, 0.0], idx=0)
    w = FusionWeights(0.5)
    d_l1 = fused_distance(a, u, w, "l1")    # 0.5*0 + 0.5*2 = 1.0
    d_l2 = fused_distance(a, u, w, "l2")    # 0.5*sqrt(2) = 0.707
    assert cus_match([a], [u], (d_l1 + d_l2) / 2, w).n_matched == 0
    assert cus_match([a], [u], d_l1 * 1.01, w).n_matched == 1


def test_cus_match_rejects_bad_delta():
    with pytest.raises(InputError):
        cus_match([], [], 0.0, FusionWeights(1.0))


# --- metric arithmetic -------------------------------------------------------

def test_metric_reference_case():
    m = MatchResult(n_matched=3, n_unmatched=3, n_auto=6, n_user=5)
    b = metrics(m)
    assert b.accuracy == 0.6
    assert b.error == 0.6
    assert b.precision == 0.5
    assert b.recall == 0.6
    assert abs(b.f_measure - 6.0 / 11.0) < 1e-15


def test_metrics_perfect_and_zero():
    perfect = metrics(MatchResult(4, 0, 4, 4))
    assert perfect.accuracy == 1.0 and perfect.error == 0.0
    assert perfect.f_measure == 1.0
    nothing = metrics(MatchResult(0, 5, 5, 4))
    assert nothing.accuracy == 0.0 and nothing.f_measure == 0.0
    assert nothing.error == 1.25     # error can exceed 1


def test_metrics_require_nonempty_sides():
    with pytest.raises(InputError):
        metrics(MatchResult(0, 0, 0, 5))
    with pytest.raises(InputError):
        metrics(MatchResult(0, 0, 5, 0))


def test_aggregate_unweighted_two_level():
    def bundle(acc):
        return metrics(MatchResult(acc, 10 - acc, 10, 10))
    per_video = {
        "a": [bundle(10), bundle(5)],        # mean acc 0.75
        "b": [bundle(2)],                    # mean acc 0.2
    }
    video_means, overall = aggregate(per_video)
    assert video_means["a"].accuracy == 0.75
    assert video_means["b"].accuracy == 0.2
    assert abs(overall.accuracy - (0.75 + 0.2) / 2) < 1e-15


def test_aggregate_five_users():
    accs = [10, 8, 6, 9, 7]
    bundles = [metrics(MatchResult(a, 10 - a, 10, 10)) for a in accs]
    means, overall = aggregate({"v": bundles})
    assert abs(means["v"].accuracy - 0.8) < 1e-15
    assert overall.accuracy == means["v"].accuracy


def test_aggregate_rejects_empty():
    with pytest.raises(InputError):
        aggregate({})
    with pytest.raises(InputError):
        aggregate({"v": []})


# --- long-term metrics -------------------------------------------------------

def test_detection_accuracy_28_of_33():
    windows = [GroundTruthWindow(f"v{i}", 10.0, 20.0) for i in range(33)]
    times = {f"v{i}": ([15.0] if i < 28 else [50.0]) for i in range(33)}
    acc = detection_accuracy(times, windows)
    assert abs(acc - 28.0 / 33.0) < 1e-12


def test_detection_window_bounds_inclusive():
    windows = [GroundTruthWindow("v", 10.0, 20.0)]
    assert detection_accuracy({"v": [10.0]}, windows) == 1.0
    assert detection_accuracy({"v": [20.0]}, windows) == 1.0
    assert detection_accuracy({"v": [9.999]}, windows) == 0.0
    assert detection_accuracy({"v": [20.001]}, windows) == 0.0


def test_detection_multiple_windows_per_video():
    windows = [GroundTruthWindow("v", 5.0, 6.0), GroundTruthWindow("v", 50.0, 60.0)]
    assert detection_accuracy({"v": [55.0]}, windows) == 1.0


def test_detection_missing_window_raises():
    with pytest.raises(InputError):
        detection_accuracy({"v": [1.0]}, [GroundTruthWindow("other", 0.0, 1.0)])


def test_window_validation():
    with pytest.raises(InputError):
        GroundTruthWindow("v", 5.0, 5.0)
    with pytest.raises(InputError):
        GroundTruthWindow("v", -1.0, 5.0)


def test_compression_ratio_reference():
    assert abs(compression_ratio(1500.0, 888) - 27.03) < 0.01


def test_compression_ratio_equal_durations_is_four():
    # storyboard duration equals video duration -> ratio exactly 4
    n = 100
    duration = n * 0.25
    assert compression_ratio(duration, n) == 4.0


def test_compression_ratio_validation():
    with pytest.raises(InputError):
        compression_ratio(10.0, 0)
    with pytest.raises(InputError):
        compression_ratio(0.0, 5)


# --- ground-truth CSV --------------------------------------------------------

def test_read_ground_truth(tmp_path):
    p = tmp_path / "gt.csv"
    p.write_text("vid_a,10.5,20\nvid_b,0,3.25\n")
    ws = read_ground_truth(p)
    assert [(w.video_id, w.start_s, w.end_s) for w in ws] == \
           [("vid_a", 10.5, 20.0), ("vid_b", 0.0, 3.25)]


def test_read_ground_truth_tolerates_header(tmp_path):
    p = tmp_path / "gt.csv"
    p.write_text("video_id,start_s,end_s\nvid_a,1,2\n")
    ws = read_ground_truth(p)
    assert len(ws) == 1 and ws[0].video_id == "vid_a"


def test_read_ground_truth_rejects_bad_rows(tmp_path):
    p = tmp_path / "gt.csv"
    p.write_text("vid_a,1\n")
    with pytest.raises(FormatError):
        read_ground_truth(p)
    p.write_text("vid_a,1,2\nvid_b,foo,3\n")
    with pytest.raises(FormatError, match=":2"):
        read_ground_truth(p)
    p.write_text("vid_a,5,2\n")
    with pytest.raises(FormatError):
        read_ground_truth(p)
    p.write_text("\n\n")
    with pytest.raises(FormatError):
        read_ground_truth(p)


# --- tree harness and reports --------------------------------------------------

@pytest.fixture(scope="module")
def mini_tree(tmp_path_factory):
    """Two clips; auto summaries hit some user picks and miss others."""
    root = tmp_path_factory.mktemp("tree")
    frames = segment_frames(n_segments=4, frames_per_segment=3,
                            height=64, width=64, seed=11)
    cb = codebook_from_frames(frames)
    # clip 1: auto = one frame per segment, user1 = same, user2 = half
    write_frame_dir(root / "clip1" / "auto", [frames[0], frames[3], frames[6], frames[9]])
    write_frame_dir(root / "clip1" / "user1", [frames[1], frames[4], frames[7], frames[10]])
    write_frame_dir(root / "clip1" / "user2", [frames[2], frames[8]])
    # clip 2: auto misses one segment entirely
    write_frame_dir(root / "clip2" / "auto", [frames[0], frames[3]])
    write_frame_dir(root / "clip2" / "user1", [frames[1], frames[4], frames[7]])
    return root, cb


def test_evaluate_tree_schema(mini_tree):
    root, cb = mini_tree
    from texsum.summarize import FeatureConfig
    per_video = evaluate_tree(root, cb, FeatureConfig(), delta=0.05,
                              weights=FusionWeights(1.0))
    assert sorted(per_video) == ["clip1", "clip2"]
    assert len(per_video["clip1"]) == 2
    assert len(per_video["clip2"]) == 1
    # clip1/user1: same segments, near-identical signatures -> full match
    assert per_video["clip1"][0].accuracy == 1.0
    # clip2 misses a segment: recall 2/3
    assert abs(per_video["clip2"][0].recall - 2.0 / 3.0) < 1e-12


def test_evaluate_tree_validation(tmp_path, mini_tree):
    _, cb = mini_tree
    from texsum.summarize import FeatureConfig
    with pytest.raises(InputError):
        evaluate_tree(tmp_path / "missing", cb, FeatureConfig(), 0.5,
                      FusionWeights(1.0))
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(InputError):
        evaluate_tree(empty, cb, FeatureConfig(), 0.5, FusionWeights(1.0))
    noauto = tmp_path / "noauto"
    (noauto / "clip" / "user1").mkdir(parents=True)
    with pytest.raises(InputError):
        evaluate_tree(noauto, cb, FeatureConfig(), 0.5, FusionWeights(1.0))


def test_user_report_schema_and_files(mini_tree, tmp_path):
    root, cb = mini_tree
    from texsum.summarize import FeatureConfig
    per_video = evaluate_tree(root, cb, FeatureConfig(), delta=0.05,
                              weights=FusionWeights(1.0))
    report = build_user_report(per_video, rc_by_video={"clip1": 30.0, "clip2": 50.0})
    doc = report.to_dict()
    assert set(doc) == {"per_video", "mean", "detection_accuracy", "mean_Rc"}
    assert doc["detection_accuracy"] is None
    assert doc["mean_Rc"] == 40.0
    assert {e["video_id"] for e in doc["per_video"]} == {"clip1", "clip2"}
    for entry in doc["per_video"]:
        assert {"per_user", "acc_P", "err_P", "F_P"} <= set(entry)
        for b in entry["per_user"]:
            assert set(b) == {"acc", "err", "precision", "recall", "F"}
    json_path, csv_path = write_report(report, tmp_path / "report")
    assert json_path.exists() and csv_path.exists()
    import json as json_mod
    loaded = json_mod.loads(json_path.read_text())
    assert loaded == doc
    lines = csv_path.read_text().strip().splitlines()
    # header + (2 users + mean) + (1 user + mean) + overall mean + mean Rc
    assert len(lines) == 1 + 3 + 2 + 1 + 1
    assert lines[-2].startswith("__mean__,")
    assert lines[-1].startswith("__mean_Rc__,")


def test_longterm_report(tmp_path):
    times = {"a": [5.0], "b": [99.0]}
    windows = [GroundTruthWindow("a", 4.0, 6.0), GroundTruthWindow("b", 0.0, 10.0)]
    durations = {"a": 100.0, "b": 200.0}
    report = build_longterm_report(times, windows, durations)
    doc = report.to_dict()
    assert doc["detection_accuracy"] == 0.5
    assert doc["mean"] is None
    ra = compression_ratio(100.0, 1)
    rb = compression_ratio(200.0, 1)
    assert abs(doc["mean_Rc"] - (ra + rb) / 2) < 1e-12
    json_path, csv_path = write_report(report, tmp_path / "lt")
    assert json_path.exists() and csv_path.exists()
