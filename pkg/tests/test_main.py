import subprocess
import sys

import occupancy.__main__  # noqa: F401

# import for coverage


def test_execute_package() -> None:
    proc = subprocess.run(
        [sys.executable, "-m", "occupancy", "--help"],
        stdout=subprocess.PIPE,
        text=True,
        check=True,
    )
    assert "analyses of rental listings" in proc.stdout.lower()
