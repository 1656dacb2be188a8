import dataclasses
import json
from pathlib import Path

import pytest

from lanecoord import simulator
from lanecoord.config import ConfigError, ScenarioConfig, VehicleSpec, load_scenario
from lanecoord.simulator import SimulationError, TrajectoryLog, check_invariance, run
from lanecoord.vehicle import StateError

ROOT = Path(__file__).resolve().parents[1]


def _single(v_ref=20.0, horizon=3.0, **kw):
    ego = VehicleSpec("ego", 0.0, 4.0, v_ref, v_ref, ((0.0, 1),))
    return ScenarioConfig("empty", (ego,), horizon=horizon, **kw)


@pytest.fixture(scope="module")
def empty_log():
    return run(_single())


def test_empty_road_drives_straight(empty_log):
    recs = empty_log.of("ego")
    assert len(recs) == 31
    for r in recs:
        assert r.omega == pytest.approx(0.0, abs=1e-9)
        assert r.v == pytest.approx(20.0, rel=1e-6)
        assert r.y == pytest.approx(4.0, abs=1e-9)
        assert not r.real_neighbors
    assert recs[-1].x == pytest.approx(20.0 * 3.0, rel=1e-6)


def test_empty_road_invariance_at_mock_values(empty_log):
    rep = check_invariance(empty_log)
    assert rep.passed
    assert rep.minima["B2"] == pytest.approx(1.9 + 4 * 1.01, abs=1e-6)
    assert rep.minima["B1"] == pytest.approx(100.0 - 0.9 * 20.0, rel=1e-6)


def test_log_shape(empty_log):
    times = [r.time for r in empty_log.records]
    assert times == sorted(times)
    r = empty_log.records[0]
    assert set(r.barriers) == {f"B{i}" for i in range(1, 8)}
    assert r.status == "optimal"


def test_corrupted_log_fails_with_location(empty_log):
    recs = [dataclasses.replace(r, barriers=dict(r.barriers)) for r in empty_log.records]
    recs[12].barriers["B4"] = -0.5
    rep = check_invariance(TrajectoryLog("bad", recs))
    assert not rep.passed
    assert (rep.worst_barrier, rep.worst_step, rep.worst_vehicle) == ("B4", 12, "ego")
    assert "FAIL" in rep.line() and "B4" in rep.line()


def test_empty_log_passes():
    assert check_invariance(TrajectoryLog("none", [])).passed


def test_jsonl_round_trip(empty_log, tmp_path):
    path = tmp_path / "t.jsonl"
    empty_log.to_jsonl(path)
    back = TrajectoryLog.from_jsonl(path)
    assert back.records == empty_log.records and back.scenario == "empty"
    empty_log.to_csv(tmp_path / "s.csv")
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header == "time,vehicle,x,y,v,min_barrier"


def test_scenario1_follows_the_lead():
    sc = load_scenario(ROOT / "scenarios" / "scenario1.json")
    log = run(sc)
    ego, lead = sc.vehicles
    assert log.final(ego.name).v == pytest.approx(min(ego.v_ref, lead.v_ref), rel=0.02)
    assert min(r.barriers["B1"] for r in log.of(ego.name)) >= -1e-3
    assert log.of(ego.name)[0].real_neighbors == {"0F": lead.name}


def test_controllers_only_see_their_frame():
    """Another vehicle's references must not reach the ego's first decision."""
    base = json.loads((ROOT / "scenarios" / "scenario2.json").read_text())
    from lanecoord.config import from_dict

    a = run(dataclasses.replace(from_dict(ScenarioConfig, base), horizon=0.1))
    base["vehicles"][1]["v_ref"] = 5.0
    base["vehicles"][1]["lanes"] = [[0.0, 1]]
    b = run(dataclasses.replace(from_dict(ScenarioConfig, base), horizon=0.1))
    assert a.of("ego")[0] == b.of("ego")[0]
    assert a.of("left")[0] != b.of("left")[0]


def test_initially_unsafe_is_rejected():
    ego = VehicleSpec("ego", 0.0, 4.0, 20.0, 20.0, ((0.0, 1),))
    lead = VehicleSpec("lead", 10.0, 4.0, 20.0, 20.0, ((0.0, 1),))
    with pytest.raises(ConfigError, match="initially unsafe"):
        run(ScenarioConfig("tight", (ego, lead)))


def test_state_errors_abort_with_vehicle(monkeypatch):
    def boom(*a, **k):
        raise StateError("heading 1.6 rad left (-pi/2, pi/2)")

    monkeypatch.setattr(simulator, "advance", boom)
    with pytest.raises(SimulationError, match="vehicle ego"):
        run(_single(horizon=0.2))


def test_schedule_sets_y_ref():
    sc = load_scenario(ROOT / "scenarios" / "scenario2.json")
    ego = sc.vehicles[0]
    assert ego.lane_at(0.5) == 1 and ego.lane_at(1.0) == 2
    assert ego.command_time == 1.0
