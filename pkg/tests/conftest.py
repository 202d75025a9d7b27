import pytest

from samaqm.config import parse_config
from samaqm.sam import train_sam


@pytest.fixture(scope="session")
def trained(tmp_path_factory):
    """Default SAM pipeline (n=2000, seed 0) written to a model file."""
    path = tmp_path_factory.mktemp("model") / "sam.model"
    report = train_sam(path=path)
    return report, path


@pytest.fixture(scope="session")
def default_model(trained):
    return trained[0].model


@pytest.fixture(scope="session")
def model_path(trained):
    return trained[1]


def desk(controller, seed=0, *extra, model_path=None):
    sets = [f"controller={controller}", f"seed={seed}", *extra]
    if model_path is not None:
        sets.append(f"sam.model_path={model_path}")
    return parse_config(None, sets, preset="desk")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


_CRITERIA = {}


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or report.outcome != "passed":
        n, title = crit
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[n] = (title, report.outcome, detail)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, outcome, detail = _CRITERIA[n]
        mark = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{mark}] criterion {n}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
