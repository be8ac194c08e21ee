import json

import numpy as np
import pytest

import handkit


def test_version_and_constants():
    assert handkit.__version__
    assert handkit.CONTACT_THRESHOLD == 0.02


def test_hmx_round_trip_is_exact():
    motion = handkit.synthetic_motion(12, seed=3)
    assert motion.shape == (12, 42, 3)
    fps, back = handkit.parse_hmx(handkit.dump_hmx(motion, 30.0))
    assert fps == 30.0
    assert np.array_equal(back, motion)


def test_state_labels():
    assert handkit.state_label("finger_flexing", 45.0) == "partially bent"
    assert handkit.state_label("finger_palm_distance", 0.03) == "near"
    with pytest.raises(handkit.ValidationError):
        handkit.state_label("wrist_trajectory", 0.0)


def test_clips_and_intensity():
    assert handkit.extract_clips(200, [70]) == [(0, 60), (71, 131), (131, 191)]
    still = np.repeat(handkit.synthetic_motion(1, seed=0), 60, axis=0)
    w = handkit.clip_intensity(still)
    assert (w["left"], w["right"], w["avg"]) == (0.0, 0.0, 0.0)
    assert not handkit.passes_filter(w["left"], w["right"], w["avg"])
    assert handkit.passes_filter(30.0, 30.0, 30.0)


def test_descriptors_events_and_captions():
    motion = handkit.synthetic_motion(60, seed=1)
    descriptors = handkit.descriptors(motion, seed=5)
    assert len(descriptors) == 96
    assert all(len(d["values"]) == 60 for d in descriptors)
    features = json.loads(handkit.feature_json(motion, seed=5))
    assert features["num_frames"] == 60 and features["events"]
    captions = json.loads(handkit.captions(json.dumps(features), [1, 3]))
    assert set(captions) == {"level_1", "level_3"}
    assert set(captions["level_1"]) == {"left", "right", "inter"}
    assert "left" in handkit.build_prompt(json.dumps(features))


def test_contact_report_of_identical_motion():
    motion = handkit.synthetic_motion(30, seed=2)
    report = json.loads(handkit.contact_report(motion, motion))
    assert report["intra"]["f1"] == 1.0 and report["inter"]["f1"] == 1.0


def test_representation_fsq_and_guidance():
    motion = handkit.synthetic_motion(10, seed=4)
    rep = handkit.diffusion_rep(motion)
    assert rep.shape == (10, 42, 4)
    assert np.array_equal(rep[..., :3], motion)
    codes, index = handkit.fsq_quantize([0.0, 0.0, 0.0, 0.0], [8, 5, 5, 5])
    assert handkit.fsq_code(index, [8, 5, 5, 5]) == codes
    gamma = handkit.gamma_field("keyframe", 30, keyframes=[10])
    assert gamma.shape == (30, 42)
    assert gamma[10, 0] == 0.85 and gamma[16, 0] == 0.0


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(handkit.DataError):
        handkit.parse_hmx("{not json")
    with pytest.raises(handkit.ValidationError):
        handkit.dump_hmx(np.zeros((3, 41, 3)))
    config = json.dumps({"output": str(tmp_path / "out"), "clip": {"length": 0}})
    with pytest.raises(handkit.ValidationError):
        handkit.run_pipeline(config, 1, 120)


def test_pipeline_runs(tmp_path):
    out = tmp_path / "run"
    result = handkit.run_pipeline(json.dumps({"output": str(out), "workers": 1}), 2, 180)
    assert result["frames"] == 360
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["complete"] is True
