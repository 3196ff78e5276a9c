import numpy as np
import pytest

from nestpred.config import Config
from nestpred.scenario import AgentTrack, LanePolyline, Scenario, generate_synthetic

TINY = dict(d=8, s=4, K=2, H=2, t_h=8, t_f=4, h_neuro=6, hidden_gen=16)


def tiny_config(**kw) -> Config:
    return Config(**{**TINY, **kw})


def straight_track(agent_id, role, x0, y0, vx, vy, steps, dt=0.5, t0=None):
    """Constant-velocity track starting at time ``t0`` (default so that history ends at t=0)."""
    t0 = -(8 - 1) * dt if t0 is None else t0
    t = t0 + dt * np.arange(steps)
    x = x0 + vx * (t - t0)
    y = y0 + vy * (t - t0)
    states = np.stack([t, x, y, np.full(steps, vx), np.full(steps, vy),
                       np.zeros(steps), np.zeros(steps)], axis=1)
    return AgentTrack(agent_id, role, states)


def toy_scenario(n=2, t_f=4, seed=0, lanes=True, sid="toy") -> Scenario:
    rng = np.random.default_rng(seed)
    target = straight_track("tgt", "target", 0.0, 0.0, 8.0 + rng.random(), rng.normal(0, 0.3), 8 + t_f)
    sur = [straight_track(f"a{i}", "surrounding", rng.normal(0, 15), rng.normal(0, 6),
                          rng.normal(6, 2), rng.normal(0, 1), 8) for i in range(n)]
    ln = [LanePolyline("l0", np.array([[-30.0, 0.0], [40.0, 0.0]]))] if lanes else []
    return Scenario(sid, 0.5, target, sur, ln)


@pytest.fixture
def tiny_cfg():
    return tiny_config()


@pytest.fixture(scope="session")
def chain20():
    return generate_synthetic("chain", 20, 11)


# ------------------------------------------------------ acceptance report
_CRITERIA: list[tuple[str, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _CRITERIA.append(("PASS" if rep.passed else "FAIL", mark.args[0], detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _CRITERIA:
        terminalreporter.write_line(f"{status}  {name}" + (f"  ({detail})" if detail else ""))
