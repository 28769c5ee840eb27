import re
import shutil
import subprocess
import time
from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def live_server():
    """A real `vg serve` subprocess; live tests skip when vg is absent."""
    vg = shutil.which("vg")
    if vg is None:
        pytest.skip("vg CLI not installed; live-server tests need the simulator")
    proc = subprocess.Popen(
        [vg, "serve", "--map", "city8", "--route", "n1:s1", "--port", "0"],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    try:
        line = proc.stdout.readline()
        match = re.match(r"listening ([\d.]+):(\d+)", line)
        if not match:
            proc.terminate()
            raise RuntimeError(f"server did not announce its port: {line!r}")
        host, port = match.group(1), int(match.group(2))
        # give the acceptor a beat
        time.sleep(0.1)
        yield host, port
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
