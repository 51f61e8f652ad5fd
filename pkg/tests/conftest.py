import pytest

TINY = """
[geometry]
period_nm = 400.0
depth_nm = 60.0
fill = 0.5
separation_nm = 100.0

[materials.substrate]
kind = "drude"
plasma_ev = 9.0
damping_ev = 0.035

[scan]
theta_deg = [30.0, 60.0]
d_theta_deg = 0.5

[quadrature]
orders = 1
n_xi = 6
n_k = 4
n_angle = 4

[convergence]
theta_deg = 30.0
orders = [0, 1]

[run]
output_dir = "{out}"
seed = 5
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY.format(out=(tmp_path / "out").as_posix()))
    return path


ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
