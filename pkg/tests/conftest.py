import os
import re

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

WORKERS = max(1, min(4, os.cpu_count() or 1))


@pytest.fixture(scope="session")
def desk_study():
    """Every model on every scenario at desk scale: 20 replicates, 5k/1k chains, seed 0."""
    from adlm.sampler import ChainConfig
    from adlm.simulate import Scenario, SimConfig, run_study

    rows = run_study(["M1", "M2", "M3", "M4", "M5"], list(Scenario), SimConfig(reps=20, master_seed=0),
                     ChainConfig(n_iter=5000, burn_in=1000), workers=WORKERS)
    return {(r.scenario, r.model): r for r in rows}


# ---------------------------------------------------------------------------
# one summary line per acceptance criterion

_ACCEPT = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not (rep.when == "setup" and rep.failed)):
        return
    detail = dict(item.user_properties).get("detail", "")
    _ACCEPT.append((mark.args[0], "PASS" if rep.passed else "FAIL", detail))


def _key(label):
    m = re.match(r"(\d+)(\w*)", label)
    return int(m.group(1)), m.group(2)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPT:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label, status, detail in sorted(_ACCEPT, key=lambda t: _key(t[0])):
        tr.write_line(f"criterion {label:<4} {status}  {detail}".rstrip())
