#!/usr/bin/env python3
"""Assemble a scores table for the toy model from a ScandEval leaderboard export.

Best effort. The leaderboard is published as a web page; its layout, URLs and metric
choices change between releases, so this script does not scrape. Export the Germanic
NLG leaderboard to CSV yourself (one row per model) and pass it with --source, either
as a local path or an http(s) URL.

Choices made here:
  * one score per task, taken from the column named in COLUMN_MAP (edit it if the export
    uses different headers; matching is case-insensitive and ignores spaces/dashes);
  * the row id is the model name column (first column matching MODEL_COLUMNS);
  * rows with any of the four scores missing are kept as empty cells; sembench drops
    them by listwise deletion and reports how many were removed.

Usage:
    python3 scripts/fetch_scandeval.py --source leaderboard.csv \
        [--out data/scandeval_germanic_nlg.csv]
"""

import argparse
import io
import re
import sys
from pathlib import Path

import pandas as pd
import requests

# output column -> candidate headers in the leaderboard export
COLUMN_MAP = {
    "danish_citizen_tests": ["danish citizen tests", "danish_citizen_tests", "citizen tests"],
    "danske_talemaader": ["danske talemaader", "danske talemåder", "danske_talemaader", "talemaader"],
    "cnn_dm": ["cnn dailymail", "cnn-dailymail", "cnn_dm", "cnn/dailymail"],
    "squad": ["squad", "squad en"],
}
MODEL_COLUMNS = ["model", "model id", "model_id", "model name"]


def normalize(name: str) -> str:
    return re.sub(r"[\s\-_/]+", "", str(name).strip().lower())


def read_source(source: str) -> pd.DataFrame:
    if re.match(r"^https?://", source):
        response = requests.get(source, timeout=30)
        response.raise_for_status()
        return pd.read_csv(io.StringIO(response.text))
    return pd.read_csv(source)


def find_column(frame: pd.DataFrame, candidates: list[str]) -> str | None:
    lookup = {normalize(c): c for c in frame.columns}
    for candidate in candidates:
        hit = lookup.get(normalize(candidate))
        if hit is not None:
            return hit
    return None


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--source", required=True, help="leaderboard CSV export (path or URL)")
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "scandeval_germanic_nlg.csv"))
    args = parser.parse_args()

    try:
        frame = read_source(args.source)
    except Exception as exc:  # network errors, parse errors
        print(f"could not read {args.source}: {exc}", file=sys.stderr)
        return 1

    model_col = find_column(frame, MODEL_COLUMNS)
    if model_col is None:
        print(f"no model-name column among {list(frame.columns)}", file=sys.stderr)
        return 1

    out = pd.DataFrame({"model": frame[model_col].astype(str)})
    missing = []
    for target, candidates in COLUMN_MAP.items():
        column = find_column(frame, candidates)
        if column is None:
            missing.append(target)
            continue
        out[target] = pd.to_numeric(frame[column], errors="coerce")
    if missing:
        print(f"leaderboard export lacks columns for: {', '.join(missing)}", file=sys.stderr)
        return 1

    out = out.drop_duplicates(subset="model")
    complete = int(out.dropna().shape[0])
    out.to_csv(args.out, index=False, float_format="%.17g")
    print(f"wrote {args.out}: {len(out)} models, {complete} with all four scores")
    return 0


if __name__ == "__main__":
    sys.exit(main())
