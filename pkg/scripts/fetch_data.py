#!/usr/bin/env python3
"""Download the benchmark datasets into data/ (UCI text files + MNIST IDX).

The library itself never touches the network; run this once if your checkout
is missing the data files. Each file is verified against a pinned sha256, so
a stale mirror cannot silently change an experiment.

Usage: python scripts/fetch_data.py [--root DIR]
"""

import argparse
import hashlib
import sys
import urllib.request
from pathlib import Path

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
MNIST = "https://ossci-datasets.s3.amazonaws.com/mnist"

FILES = [
    ("uci/iris.data", f"{UCI}/iris/iris.data",
     "596ffd580471ca4d4880f8e439c7281f3b50d8249a5960353cb200b1490f63a0"),
    ("uci/breast-cancer-wisconsin.data",
     f"{UCI}/breast-cancer-wisconsin/breast-cancer-wisconsin.data",
     "402c585309c399237740f635ef9919dc512cca12cbeb20de5e563a4593f22b64"),
    ("uci/abalone.data", f"{UCI}/abalone/abalone.data",
     "eb2de13be807e9bb9ec4128b9c89b98ab23d7739121cfd17b7dde69b46ba7bf6"),
    ("uci/yeast.data", f"{UCI}/yeast/yeast.data",
     "7cf61776fc04f527f93bf57a327b863893a1225d82df02d457e8950173218258"),
    ("mnist/train-images-idx3-ubyte.gz", f"{MNIST}/train-images-idx3-ubyte.gz",
     "440fcabf73cc546fa21475e81ea370265605f56be210a4024d2ca8f203523609"),
    ("mnist/train-labels-idx1-ubyte.gz", f"{MNIST}/train-labels-idx1-ubyte.gz",
     "3552534a0a558bbed6aed32b30c495cca23d567ec52cac8be1a0730e8010255c"),
    ("mnist/t10k-images-idx3-ubyte.gz", f"{MNIST}/t10k-images-idx3-ubyte.gz",
     "8d422c7b0a1c1c79245a5bcf07fe86e33eeafee792b84584aec276f5a2dbc4e6"),
    ("mnist/t10k-labels-idx1-ubyte.gz", f"{MNIST}/t10k-labels-idx1-ubyte.gz",
     "f7ae60f92e00ec6debd23a6088c31dbd2371eca3ffa0defaefb259924204aec6"),
]


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=Path(__file__).resolve().parent.parent / "data")
    args = ap.parse_args()
    root = Path(args.root)

    failures = 0
    for rel, url, digest in FILES:
        dest = root / rel
        if dest.exists() and sha256(dest) == digest:
            print(f"ok       {rel}")
            continue
        dest.parent.mkdir(parents=True, exist_ok=True)
        print(f"fetching {rel} <- {url}")
        try:
            with urllib.request.urlopen(url, timeout=60) as r:
                dest.write_bytes(r.read())
        except Exception as exc:
            print(f"  FAILED: {exc}")
            failures += 1
            continue
        if sha256(dest) != digest:
            print(f"  FAILED: checksum mismatch for {rel}")
            dest.unlink()
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
