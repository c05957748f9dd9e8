import pytest

from hoskip.model import NetworkParams

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Store one acceptance verdict: record(k, ok, detail)."""

    def _record(k: int, ok: bool, detail: str):
        _ACCEPTANCE[k] = (bool(ok), detail)
        print(f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def net_l1b3():
    return NetworkParams(1.0, 3.0, 0.0)


@pytest.fixture
def net_l1b4():
    return NetworkParams(1.0, 4.0, 0.0)


@pytest.fixture
def net_dense_noisy():
    return NetworkParams(10.0, 3.0, 25.0)
