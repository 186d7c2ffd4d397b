"""Refresh and query cost as pods per server grow; also how many pod indexes a query touches."""

import argparse
import json
import sys

from podsearch.cli import main as cli


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/example.json")
    ap.add_argument("--scales", default="1,2,4,8")
    ap.add_argument("--queries", type=int, default=100)
    args = ap.parse_args()
    sys.exit(cli(["bench", "--config", args.config, "--scales", args.scales,
                  "--queries", str(args.queries), "--text"]))


if __name__ == "__main__":
    main()
