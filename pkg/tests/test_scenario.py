import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from nestpred.scenario import (
    KINDS,
    FrameTransform,
    ScenarioError,
    ScenarioFormatError,
    denormalize_scales,
    denormalize_xy,
    generate_synthetic,
    load_scenarios,
    normalize_frame,
    parse_record,
    save_scenarios,
)

from conftest import straight_track, toy_scenario


def _record(**over):
    s = toy_scenario(n=1)
    rec = s.to_record()
    rec.update(over)
    return rec


def _write(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return path


# ------------------------------------------------------------------- io
def test_load_single_record(tmp_path):
    out = load_scenarios(_write(tmp_path / "a.jsonl", [_record()]))
    assert len(out) == 1
    assert out[0].target.agent_id == "tgt"
    assert out[0].n == 1


def test_two_targets_error_names_line(tmp_path):
    bad = _record()
    bad["agents"][1]["role"] = "target"
    path = _write(tmp_path / "b.jsonl", [_record(), bad])
    with pytest.raises(ScenarioFormatError, match="line 2") as info:
        load_scenarios(path)
    assert info.value.line == 2


@pytest.mark.parametrize("mutate, what", [
    (lambda r: r.pop("dt"), "dt"),
    (lambda r: r["agents"][0]["states"][3].__setitem__(0, 99.0), "increasing"),
    (lambda r: r["agents"][0]["states"][2].__setitem__(0, r["agents"][0]["states"][2][0] + 0.1), "dt"),
    (lambda r: r["agents"][0]["states"][0].pop(), "7"),
    (lambda r: r["agents"][1].__setitem__("agent_id", "tgt"), "unique"),
    (lambda r: r["lanes"][0].__setitem__("points", [[0, 0]]), "2 points"),
    (lambda r: r["lanes"][0].__setitem__("points", [[0, 0], [0, 0]]), "distinct"),
    (lambda r: r["agents"][0]["states"][0].__setitem__(1, float("nan")), "finite"),
    (lambda r: [a.__setitem__("role", "surrounding") for a in r["agents"]], "target"),
])
def test_invariant_violations_are_rejected(tmp_path, mutate, what):
    rec = _record()
    mutate(rec)
    with pytest.raises(ScenarioFormatError, match=what):
        load_scenarios(_write(tmp_path / "c.jsonl", [rec]))


def test_malformed_json_line_number(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text(json.dumps(_record()) + "\n\n{not json\n")
    with pytest.raises(ScenarioFormatError, match="line 3"):
        load_scenarios(path)


def test_round_trip_100_generated(tmp_path):
    scenes = generate_synthetic("merge", 50, 3) + generate_synthetic("intersection", 50, 4)
    path = save_scenarios(tmp_path / "r.jsonl", scenes)
    back = load_scenarios(path)
    assert len(back) == 100
    for a, b in zip(scenes, back):
        assert a.to_record() == b.to_record()
    save_scenarios(tmp_path / "r2.jsonl", back)
    assert (tmp_path / "r2.jsonl").read_bytes() == path.read_bytes()


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(data=st.data())
def test_fuzzed_files_fail_cleanly(tmp_path, data):
    good = json.dumps(_record()).encode()
    kind = data.draw(st.sampled_from(["truncate", "flip", "garbage", "json"]))
    if kind == "truncate":
        blob = good[: data.draw(st.integers(0, len(good) - 1))]
    elif kind == "flip":
        i = data.draw(st.integers(0, len(good) - 1))
        blob = good[:i] + bytes([data.draw(st.integers(0, 255))]) + good[i + 1:]
    elif kind == "garbage":
        blob = data.draw(st.binary(max_size=200))
    else:
        blob = json.dumps(data.draw(st.recursive(
            st.none() | st.booleans() | st.floats() | st.text(max_size=5),
            lambda c: st.lists(c, max_size=4) | st.dictionaries(st.text(max_size=8), c, max_size=4),
            max_leaves=20))).encode()
    path = tmp_path / "fuzz.jsonl"
    path.write_bytes(blob + b"\n")
    try:
        load_scenarios(path)
    except ScenarioFormatError:
        pass


def test_parse_record_rejects_non_object():
    with pytest.raises(ScenarioError):
        parse_record([1, 2])


# ------------------------------------------------------------ normalize
def _heading_north_scene():
    # target moving +y, ending at (5, 5)
    tgt = straight_track("t", "target", 5.0, 5.0 - 7 * 1.0, 0.0, 2.0, 8 + 2)
    other = straight_track("o", "surrounding", -3.0, 1.0, 1.0, 0.5, 8)
    from nestpred.scenario import LanePolyline, Scenario
    return Scenario("n", 0.5, tgt, [other], [LanePolyline("l", np.array([[5.0, -20.0], [5.0, 40.0]]))])


def test_normalize_heading_example():
    s = normalize_frame(_heading_north_scene())
    hist = s.target.history(8)
    np.testing.assert_allclose(hist[-1, 0:2], [0.0, 0.0], atol=1e-12)
    assert hist[-2, 0] < 0 and abs(hist[-2, 1]) < 1e-12
    np.testing.assert_allclose(hist[-1, 2:4], [2.0, 0.0], atol=1e-12)
    assert s.frame.angle == pytest.approx(math.pi / 2)


def test_normalize_inverse():
    raw = _heading_north_scene()
    s = normalize_frame(raw)
    for a, b in zip(raw.agents, s.agents):
        np.testing.assert_allclose(denormalize_xy(b.states[:, 1:3], s.frame), a.states[:, 1:3], atol=1e-9)
        np.testing.assert_allclose(s.frame.vec_to_world(b.states[:, 3:5]), a.states[:, 3:5], atol=1e-9)


@pytest.mark.parametrize("kind", KINDS)
def test_normalize_is_rigid(kind):
    for raw in generate_synthetic(kind, 5, 2):
        s = normalize_frame(raw)

        def dists(sc):
            pts = np.stack([a.history(8)[-1, 0:2] for a in sc.agents])
            return np.linalg.norm(pts[:, None] - pts[None], axis=-1)

        np.testing.assert_allclose(dists(s), dists(raw), atol=1e-9)


def test_normalize_twice_composes():
    raw = _heading_north_scene()
    once = normalize_frame(raw)
    twice = normalize_frame(once)
    np.testing.assert_allclose(twice.target.states, once.target.states, atol=1e-9)
    pts = twice.target.states[:, 1:3]
    np.testing.assert_allclose(denormalize_xy(pts, twice.frame), raw.target.states[:, 1:3], atol=1e-9)


def test_motionless_target_is_flagged(caplog):
    from nestpred.scenario import Scenario
    tgt = straight_track("t", "target", 3.0, 4.0, 0.0, 0.0, 10)
    s = normalize_frame(Scenario("still", 0.5, tgt, [], []))
    assert s.frame.degenerate
    assert s.frame.angle == 0.0
    assert "no motion" in caplog.text


def test_scales_exact_for_right_angles():
    b = np.array([[1.0, 3.0]])
    np.testing.assert_allclose(denormalize_scales(b, FrameTransform((0, 0), math.pi / 2)), [[3.0, 1.0]])
    np.testing.assert_allclose(denormalize_scales(b, FrameTransform((0, 0), math.pi)), [[1.0, 3.0]])


# ------------------------------------------------------------ synthetic
def _first_brake(track):
    ax = track.states[:, 5]
    return int(np.nonzero(ax < -1e-9)[0][0])


def test_chain_delay_example():
    s = generate_synthetic("chain", 1, 0, {"n_vehicles": 5, "brake_step": 3, "delay": 2,
                                           "randomize_pose": False})[0]
    # independent recurrence: onset_0 = 3, onset_k = onset_{k-1} + 2
    onset = 3
    for _ in range(4):
        onset += 2
    assert s.target.agent_id == "veh4"
    assert _first_brake(s.target) == onset == 11


def test_merge_without_merging_vehicles_has_no_lateral_motion():
    for s in generate_synthetic("merge", 5, 1, {"n_merging": 0, "randomize_pose": False}):
        for a in s.agents:
            assert np.all(a.states[:, 2] == 0.0)
            assert np.all(a.states[:, 4] == 0.0)


@pytest.mark.parametrize("kind", KINDS)
def test_generation_is_deterministic(kind):
    a = [s.to_record() for s in generate_synthetic(kind, 4, 21)]
    b = [s.to_record() for s in generate_synthetic(kind, 4, 21)]
    c = [s.to_record() for s in generate_synthetic(kind, 4, 22)]
    assert a == b
    assert a != c


@pytest.mark.parametrize("kind", KINDS)
def test_kinematic_consistency(kind):
    a_max, dt = 4.0, 0.5
    for s in generate_synthetic(kind, 10, 5):
        for a in s.agents:
            st_ = a.states
            err = np.abs(st_[1:, 1:3] - st_[:-1, 1:3] - st_[:-1, 3:5] * dt)
            assert np.all(err <= 0.5 * a_max * dt * dt + 1e-9)
            assert np.all(np.hypot(st_[:, 5], st_[:, 6]) <= a_max + 1e-9)


def test_uturn_shares_history_and_has_two_futures():
    scenes = [normalize_frame(s) for s in generate_synthetic("uturn", 20, 3)]
    h0 = scenes[0].target.history(8)
    for s in scenes:
        np.testing.assert_allclose(s.target.history(8), h0, atol=1e-9)
    ends = np.array([s.target.future(12)[-1, 0:2] for s in scenes])
    straight = ends[:, 0] > 20
    assert 0 < straight.sum() < len(scenes)
    assert straight.sum() == 10


def test_synthetic_rejects_bad_input():
    with pytest.raises(ValueError):
        generate_synthetic("roundabout", 3, 0)
    with pytest.raises(ValueError):
        generate_synthetic("chain", 0, 0)
    with pytest.raises(ValueError):
        generate_synthetic("chain", 2, 0, {"radius": 3})


def test_surrounding_tracks_are_history_only():
    s = generate_synthetic("chain", 1, 0)[0]
    assert all(len(a.states) == 8 for a in s.surrounding)
    assert s.target.future(12).shape == (12, 6)
