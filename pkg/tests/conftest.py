import numpy as np
import pytest

from ctxlime.schema import Dataset, FeatureKind, FeatureSchema


@pytest.fixture
def unit_feature():
    return FeatureSchema("v", FeatureKind.CONTINUOUS, min=0.0, max=1.0)


@pytest.fixture
def hour_feature():
    return FeatureSchema("hour", FeatureKind.CYCLIC, period=24.0)


@pytest.fixture
def colour_feature():
    return FeatureSchema("colour", FeatureKind.CATEGORICAL, categories=("red", "blue", "green"))


@pytest.fixture
def mixed_dataset(unit_feature, hour_feature, colour_feature):
    rng = np.random.default_rng(7)
    n = 60
    X = np.column_stack([rng.random(n), rng.random(n) * 24.0, rng.integers(0, 3, n)])
    y = 2.0 * X[:, 0] + np.sin(2 * np.pi * X[:, 1] / 24.0) + 0.5 * X[:, 2]
    return Dataset.from_arrays([unit_feature, hour_feature, colour_feature], X, y)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
