"""Run every config in scripts/configs through the CLI and print a summary table."""

import argparse
import json
import sys
import time
from pathlib import Path

from fockext.cli import main

MODES = {
    "verify": "verify-calculus",
    "expand_single_A": "expand",
    "flat": "simulate",
    "curved": "simulate",
    "perturbed": "simulate",
    "decay_flat": "decay",
}


def run_all(out_root: Path) -> int:
    configs = Path(__file__).resolve().parent / "configs"
    worst = 0
    for name, mode in MODES.items():
        t0 = time.perf_counter()
        code = main([mode, "--config", str(configs / f"{name}.json"), "--out", str(out_root / name)])
        worst = max(worst, code)
        report = json.loads((out_root / name / f"{mode.replace('-', '_')}.json").read_text())
        failed = sorted(k for k, v in report.get("checks", {}).items() if not v)
        print(f"{name:16s} {mode:16s} exit {code}  {time.perf_counter() - t0:6.1f} s"
              + (f"  failed checks: {', '.join(failed)}" if failed else ""))
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", type=Path)
    sys.exit(run_all(ap.parse_args().out))
