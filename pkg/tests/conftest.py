import numpy as np
import pytest

from thermonu.model import CameraModel

CENTER_COEFFS = (2215.32, 0.36, 2.55)  # center-pixel response at t_amb = 38.9 C


def constant_model(coeffs=CENTER_COEFFS, h=5, w=5, m_ambient=1, m_radial=1, **kw):
    """Model whose every pixel has the same t_obj polynomial, independent of t_amb."""
    gamma = np.zeros((len(coeffs), m_ambient + 1, m_radial + 1))
    gamma[:, 0, 0] = coeffs
    kw.setdefault("temp_bounds", (0.0, 100.0))
    kw.setdefault("gl_bounds", (0.0, 16383.0))
    kw.setdefault("t_amb_range", (20.0, 50.0))
    return CameraModel(gamma, h, w, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
