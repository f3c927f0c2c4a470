import shutil
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from semint.config import bundled_scenario_dir, load_config  # noqa: E402

HIGH_TEMP = (
    "HighTemp(avg_temp = AVG(Temperature.value)) := WINDOW(Temperature, 1h, MIN_COUNT=4) "
    "WHERE AVG(Temperature.value) >= 30.0 EMIT AverageDailyTemp is High CF 1.0"
)

FOUR_READINGS_CSV = (
    "sensor_id,property,value,unit,timestamp\n"
    "ws1,Temperature,31.0,C,0\n"
    "ws1,Temperature,33.0,C,900\n"
    "ws1,Temperature,29.0,C,1800\n"
    "ws1,Temperature,35.0,C,2700\n"
)


@pytest.fixture
def drought_dir() -> Path:
    return bundled_scenario_dir()


@pytest.fixture
def drought_copy(tmp_path, drought_dir) -> Path:
    """Writable copy of the bundled scenario with vocabularies alongside."""
    dest = tmp_path / "drought"
    shutil.copytree(drought_dir, dest)
    vocab_dir = drought_dir.parent.parent
    for name in ("ikon.vocab", "ssn.vocab"):
        shutil.copy(vocab_dir / name, tmp_path / name)
    cfg = (dest / "config.json").read_text().replace("../../", "../")
    cfg = cfg.replace('"semint-data"', f'"{(tmp_path / "data").as_posix()}"')
    (dest / "config.json").write_text(cfg)
    return dest


@pytest.fixture
def drought_config(drought_copy):
    return load_config(drought_copy / "config.json")


# -- acceptance reporting ------------------------------------------------------

_criteria: list[str] = []


@pytest.fixture
def criterion(capsys):
    """Context manager that records one PASS/FAIL line for an acceptance criterion."""
    from contextlib import contextmanager

    @contextmanager
    def check(label: str):
        try:
            yield
        except BaseException:
            line = f"FAIL  {label}"
            _criteria.append(line)
            with capsys.disabled():
                print(f"\n{line}")
            raise
        line = f"PASS  {label}"
        _criteria.append(line)
        with capsys.disabled():
            print(f"\n{line}")

    return check


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for line in _criteria:
            terminalreporter.write_line(line)
