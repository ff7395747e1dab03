import re
import time

import numpy as np
import pytest
from scipy import stats

from kendall_walk.steps import KendallStable, SymmetricPareto, SymmetricPoint

ALPHAS = (0.5, 1.0, 2.0)

_acceptance: dict[int, list] = {}
_session = {}
SUITE_BUDGET = 600.0


def catalog_params():
    return [
        pytest.param(law, id=f"{law.family}-a{law.alpha:g}")
        for alpha in ALPHAS
        for law in (SymmetricPoint(1.0, alpha), SymmetricPareto(alpha), KendallStable(1.0, alpha))
    ]


def ks_distance(samples, cdf, cdf_left=None) -> float:
    """Kolmogorov-Smirnov distance that handles atoms.

    ``cdf`` is ``P(X <= x)`` and ``cdf_left`` is ``P(X < x)``; they differ
    only at atoms. Both are compared at every distinct sample value.
    """
    cdf_left = cdf_left or cdf
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    values, first = np.unique(x, return_index=True)
    last = np.append(first[1:], n)
    right = np.abs(last / n - cdf(values))
    left = np.abs(first / n - cdf_left(values))
    return float(max(right.max(), left.max()))


def ks_critical(n: int, level: float = 0.999) -> float:
    return float(stats.kstwo(n).ppf(level))


def pytest_sessionstart(session):
    _session["start"] = time.monotonic()


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if m:
        detail = dict(report.user_properties).get("detail", "")
        _acceptance.setdefault(int(m.group(1)), []).append((report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_acceptance):
        results = _acceptance[crit]
        ok = all(outcome == "passed" for outcome, _ in results)
        details = "; ".join(d for _, d in results if d)
        if crit == 7:
            # the suite runtime budget belongs to the extremes criterion
            elapsed = time.monotonic() - _session["start"]
            ok = ok and elapsed < SUITE_BUDGET
            details += f"; suite runtime {elapsed:.0f}s (budget {SUITE_BUDGET:.0f}s)"
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {details}")
