from __future__ import annotations

import os
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
DEMO_DIR = REPO_ROOT / "data" / "demo"


@pytest.fixture()
def demo_workspace() -> Path:
    return DEMO_DIR / "workspace.txt"


@pytest.fixture()
def run_cli():
    """Run the CLI in a subprocess with results redirected to a chosen directory."""

    def run(*args: str, output_dir: Path | str) -> subprocess.CompletedProcess[str]:
        env = dict(os.environ)
        env["SPECPLAN_OUTPUT_DIR"] = str(output_dir)
        return subprocess.run(
            [sys.executable, "-m", "specplan", *args],
            capture_output=True,
            text=True,
            env=env,
        )

    return run
