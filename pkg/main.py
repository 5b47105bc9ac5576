"""Checkout entry point: ``python main.py sweep --out sweep.csv``."""
from __future__ import annotations

import runpy
import sys
from pathlib import Path

SRC = Path(__file__).resolve().parent / "src"


if __name__ == "__main__":
    if str(SRC) not in sys.path:
        sys.path.insert(0, str(SRC))
    runpy.run_path(str(SRC / "main.py"), run_name="__main__")
