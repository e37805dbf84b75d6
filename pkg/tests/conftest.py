import time

import numpy as np
import pytest

from switchctrl import load_fixture

SUITE_BUDGET_S = 300.0
TITLES = {
    1: "invariance verdicts on exp-3-3 and exp-3-4",
    2: "closed-form Riccati oracle and RK4 order",
    3: "exact-null verdict positive on exp-3-4",
    4: "exact-null verdict negative on exp-3-3",
    5: "Gramian control reaches zero",
    6: "stationary dual solution",
    7: "duality identity with random policies",
    8: "Riccati feedback cost bracket",
    9: "burst policy cost vanishes",
    10: "property suites and total runtime",
}
# criterion 10 is spread over several modules; it only passes if all of them ran
PARTS_10 = {"subspace", "invariance_fixed_point", "riccati_invariants",
            "eps_monotonicity", "jump_clock"}
_results = {}
_parts_seen = set()
_session_start = time.perf_counter()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, part=None): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    number = marker.args[0]
    part = marker.kwargs.get("part")
    if part is not None:
        _parts_seen.add(part)
    details = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    prev = _results.get(number)
    if prev is not None:
        # several tests may share a criterion; all of them must pass
        _results[number] = (prev[0] and rep.passed,
                            "; ".join(d for d in (prev[1], details) if d))
    else:
        _results[number] = (rep.passed, details)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    elapsed = time.perf_counter() - _session_start
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_results):
        ok, details = _results[number]
        status = "PASS" if ok else "FAIL"
        if number == 10:
            missing = sorted(PARTS_10 - _parts_seen)
            extra = [f"suite_runtime={elapsed:.1f}s"]
            if missing:
                extra.append("not run: " + ",".join(missing))
            if ok and missing:
                status = "INCOMPLETE"
            elif ok and elapsed >= SUITE_BUDGET_S:
                status = "FAIL"
            details = "; ".join([d for d in (details,) if d] + extra)
        tr.write_line(f"criterion {number:2d}: {status}  {TITLES[number]}"
                      + (f"  [{details}]" if details else ""))


@pytest.fixture(scope="session")
def exp33():
    return load_fixture("exp-3-3")


@pytest.fixture(scope="session")
def exp34():
    return load_fixture("exp-3-4")


@pytest.fixture(scope="session")
def diag34(exp34):
    from switchctrl.metric import k0_estimate
    return k0_estimate(exp34)


@pytest.fixture(scope="session")
def diag33(exp33):
    from switchctrl.metric import k0_estimate
    return k0_estimate(exp33)
