"""Regenerate the problem fixtures in tests/data from the true systems in tests/data/systems.

Every system file fixes x0, u and w explicitly, so the output is deterministic.
"""

import argparse
import json
from pathlib import Path

from informativity.cli import cmd_simulate, load_system

ROOT = Path(__file__).resolve().parents[1] / "tests" / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=ROOT)
    args = ap.parse_args()
    for path in sorted((ROOT / "systems").glob("*.json")):
        horizon = len(load_system(path)["u"][0])
        doc = cmd_simulate(path, horizon)
        target = args.out / path.name
        target.write_text(json.dumps(doc) + "\n")
        print(f"{path.name}: T={horizon} -> {target}")


if __name__ == "__main__":
    main()
