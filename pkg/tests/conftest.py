import contextlib
import io
from pathlib import Path

import pytest

from swarmsentry.cli import main as cli_main

REPO_ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = REPO_ROOT / "scenarios"
DATA = REPO_ROOT / "data"


@pytest.fixture
def scenarios_dir():
    return SCENARIOS


@pytest.fixture
def data_dir():
    return DATA


def run_cli(argv):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    code = 0
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = cli_main(argv)
        except SystemExit as exc:  # argparse usage errors
            code = exc.code if isinstance(exc.code, int) else 1
    return code, out.getvalue(), err.getvalue()
