import os
import shutil
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nl2gql.demo import bundle_dir, load_demo_store  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def demo_store():
    return load_demo_store()


@pytest.fixture
def demo_dir(tmp_path):
    """A writable copy of the packaged demo bundle."""
    src = Path(str(bundle_dir()))
    dst = tmp_path / "demo"
    shutil.copytree(src, dst)
    return dst


def golden(name: str, text: str) -> None:
    """Compare against tests/golden/<name>; NL2GQL_UPDATE_GOLDEN=1 rewrites it."""
    path = GOLDEN / name
    if os.environ.get("NL2GQL_UPDATE_GOLDEN") == "1":
        path.write_text(text, encoding="utf-8")
    assert path.exists(), f"missing golden file {name}"
    assert text == path.read_text(encoding="utf-8"), f"output differs from golden file {name}"


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
