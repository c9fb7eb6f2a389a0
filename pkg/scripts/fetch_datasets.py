#!/usr/bin/env python3
"""Download the six small LIBSVM binary datasets used by the test suite.

Files land in <repo>/data by default (override with --dest or EMTAUC_DATA_DIR).
Each download is sanity-checked by parsing it and comparing the instance
count against the published size.
"""

import argparse
import os
import sys
import urllib.request
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from emtauc.data import parse_libsvm  # noqa: E402

BASE_URL = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary"

# file name on the server -> expected instance count
FILES = {
    "diabetes": 768,
    "fourclass": 862,
    "german.numer": 1000,
    "australian": 690,
    "sonar_scale": 208,
    "svmguide3": 1243,
}


def fetch(name: str, expected: int, dest: Path) -> bool:
    target = dest / name
    if target.is_file():
        print(f"{name}: already present, skipping")
        return True
    url = f"{BASE_URL}/{name}"
    print(f"{name}: downloading {url}")
    try:
        with urllib.request.urlopen(url, timeout=60) as resp:
            text = resp.read().decode("ascii")
    except OSError as exc:
        print(f"{name}: download failed ({exc})", file=sys.stderr)
        return False
    try:
        ds = parse_libsvm(text)
    except Exception as exc:
        print(f"{name}: downloaded file did not parse ({exc})", file=sys.stderr)
        return False
    if ds.n != expected:
        print(
            f"{name}: expected {expected} instances, found {ds.n}; not saving",
            file=sys.stderr,
        )
        return False
    target.write_text(text)
    print(f"{name}: saved {ds.n} instances, {ds.X.shape[1]} features")
    return True


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--dest",
        type=Path,
        default=Path(os.environ.get("EMTAUC_DATA_DIR", str(REPO_ROOT / "data"))),
        help="directory to store the files (default: EMTAUC_DATA_DIR or <repo>/data)",
    )
    args = parser.parse_args()
    args.dest.mkdir(parents=True, exist_ok=True)
    ok = all([fetch(name, count, args.dest) for name, count in FILES.items()])
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
