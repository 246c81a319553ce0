"""Run every shipped YAML config through the CLI into one output tree."""

import argparse
import sys
from pathlib import Path

from apstat.cli import main

ROOT = Path(__file__).resolve().parent.parent
PREFIX = {"ap_ou": "certify-ap", "periodic_ou": "certify-ap", "bound": "bound", "clt": "clt",
          "domain": "domain-check", "exponent": "exponent", "metric": "metric",
          "simulate_ou": "simulate-ou", "triplet": "triplet-transform"}


def command_for(stem: str) -> str:
    for pre, cmd in PREFIX.items():
        if stem.startswith(pre):
            return cmd
    raise SystemExit(f"no command known for {stem}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/all")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    failed = 0
    for cfg in sorted((ROOT / "configs").glob("*.yaml")):
        code = main([command_for(cfg.stem), str(cfg), "--out-dir", f"{args.out}/{cfg.stem}",
                     "--threads", str(args.threads)])
        print(f"{cfg.stem:28s} exit {code}")
        failed += code != 0
    sys.exit(1 if failed else 0)
