import json
import math

import numpy as np
import pytest

import neurowave as nw


def small_synth(seed=7):
    return nw.synth_config(
        channels=6,
        sample_rate_hz=512,
        session={"duration_s": 40, "baseline_s": 5, "n_fake_segments": 3, "insertion_policy": "end",
                 "silence_gap_s": 1, "seed": seed},
    )


def quick_pipeline():
    return nw.pipeline_config(
        ica={"components": 4},
        model={"embed_dim": 8, "heads": 2, "ffn_dim": 16, "temporal_filters": 4},
        train={"epochs": 2},
    )


def test_synth_is_deterministic():
    rec_a, track_a = nw.synthesize(small_synth())
    rec_b, _ = nw.synthesize(small_synth())
    assert rec_a.data.shape == (6, 40 * 512)
    assert np.array_equal(rec_a.data, rec_b.data)
    assert track_a.intervals[0].tag == nw.Tag.baseline


def test_bad_config_key_raises_input_error():
    with pytest.raises(nw.InputError, match="session.durration_s"):
        nw.synthesize(json.dumps({"version": 1, "session": {"durration_s": 4}}))
    assert issubclass(nw.InputError, nw.Error)


def test_common_average_zero_mean_across_channels():
    data = np.random.default_rng(0).normal(size=(4, 300))
    rec = nw.Recording(data, 250.0, ["a", "b", "c", "d"])
    out = nw.rereference_common_average(rec)
    assert np.abs(out.data.sum(axis=0)).max() < 1e-9


def test_segment_count_and_split():
    assert nw.segment_count(64 * 7547 + 128, 128, 64) == 7548
    train, test = nw.split_random(7548, 0.2, 0)
    assert (len(train), len(test)) == (6038, 1510)
    assert sorted(train + test) == list(range(7548))


def test_metrics_from_counts():
    m = nw.metrics_from_counts("fake", 48, 2, 1)
    assert m["precision"] == pytest.approx(0.96)
    assert m["recall"] == pytest.approx(48 / 49)
    empty = nw.metrics_from_counts("real", 0, 0, 0, 10)
    assert empty["undefined"] and empty["f1"] == 0.0


def test_band_power_of_pure_tone():
    rate, n = 256.0, 256
    t = np.arange(n) / rate
    window = np.column_stack([np.sin(2 * math.pi * 10 * t), np.zeros(n)])
    p = nw.band_power(window, rate, 9.5, 10.5)
    assert p[0] > 1.0 and p[1] == 0.0


def test_pipeline_end_to_end():
    rec, track = nw.synthesize(small_synth())
    epochs, stages = nw.preprocess(quick_pipeline(), rec, track)
    assert "ica" in stages and stages[-1] == "label"
    assert len(epochs) > 50
    assert set(epochs.labels()) == {0, 1}
    result = nw.train_eval(quick_pipeline(), epochs)
    assert "Random train/test split" in result["table"]
    again = nw.train_eval(quick_pipeline(), epochs)
    assert again["checksum"] == result["checksum"]


def test_gradient_check():
    assert nw.gradient_check(1) < 1e-3


def test_mapper_separates_blobs():
    points, labels = nw.synthetic_cloud(80, 6, 6.0, 1)
    graph = nw.build_mapper(points, labels)
    assert graph.n_points == 160
    assert graph.purity() > 0.9
    assert json.loads(graph.to_json())["nodes"]
    assert graph.to_dot().startswith("graph mapper {")
    kept = nw.hdr_filter(graph, 1.0)
    assert len(kept.nodes) == len(graph.nodes)
    with pytest.raises(nw.InputError):
        nw.build_mapper(points, labels[:-1])
