import numpy as np
import pytest

from wavelab.model import ModelParams
from wavelab.spectral import Grid

ACCEPTANCE: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE.append((name, bool(passed), detail))
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def grid64():
    return Grid(2 * np.pi, 64)


@pytest.fixture
def grid256():
    return Grid(2 * np.pi, 256)


@pytest.fixture
def params():
    return ModelParams()
