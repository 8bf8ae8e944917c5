import math

import numpy as np
import pytest

from rydecho.model import AtomCloud, DriveParams, InteractionModel, build_spin_model

RABI = 2 * math.pi * 90.5e3


@pytest.fixture
def rabi():
    return RABI


def random_model(n, seed, rabi=1.0, a_block=1.0, r_min_frac=0.5, detuning=0.0):
    """Atoms uniform in a cube of side 1.5 a_block; pair energies up to 64 * rabi per pair."""
    rng = np.random.default_rng(seed)
    cloud = AtomCloud(rng.uniform(0, 1.5 * a_block, size=(n, 3)))
    interaction = InteractionModel(rabi * a_block ** 6, r_min=r_min_frac * a_block)
    return build_spin_model(cloud, interaction, DriveParams(rabi, detuning))


def tight_cluster(n, spacing, c6, rabi):
    """``n`` atoms on a small ring of nearest-neighbour distance ``spacing``."""
    angles = 2 * math.pi * np.arange(n) / n
    radius = spacing / (2 * math.sin(math.pi / n)) if n > 1 else 0.0
    pos = np.column_stack([radius * np.cos(angles), radius * np.sin(angles), np.zeros(n)])
    return build_spin_model(AtomCloud(pos), InteractionModel(c6, r_min=spacing / 10),
                            DriveParams(rabi))


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and not report.failed and not report.skipped):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "ran": False, "detail": []})
    entry["ran"] = True
    if report.failed or report.skipped:
        entry["ok"] = False
    entry["detail"].extend(v for k, v in item.user_properties if k == "detail" and report.when == "call")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        detail = "; ".join(entry["detail"])
        terminalreporter.write_line(
            f"criterion {number} {status}: {entry['title']}" + (f" [{detail}]" if detail else ""))
