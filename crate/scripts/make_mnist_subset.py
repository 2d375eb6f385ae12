#!/usr/bin/env python3
"""Build an IDX-format MNIST subset from the `mnist` npm package.

The npm package (https://www.npmjs.com/package/mnist) ships the 10,000 MNIST
test digits as per-class JSON arrays of floats in [0, 1]. This script shuffles
them with a fixed seed, keeps the first N, and writes the standard IDX pair.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_mnist_subset.py package/src/digits data/mnist 7000
"""
import json
import struct
import sys
from pathlib import Path

import numpy as np


def main():
    digits_dir, out_dir, count = Path(sys.argv[1]), Path(sys.argv[2]), int(sys.argv[3])
    images, labels = [], []
    for label in range(10):
        raw = np.asarray(json.loads((digits_dir / f"{label}.json").read_text())["data"])
        raw = raw.reshape(-1, 28 * 28)
        images.append(np.rint(raw * 255.0).clip(0, 255).astype(np.uint8))
        labels.append(np.full(len(raw), label, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.RandomState(0).permutation(len(labels))[:count]
    images, labels = images[order], labels[order]

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, count, 28, 28))
        f.write(images.tobytes())
    with open(out_dir / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, count))
        f.write(labels.tobytes())
    print("wrote", count, "samples; class counts", np.bincount(labels, minlength=10).tolist())


if __name__ == "__main__":
    main()
