#!/usr/bin/env python3
"""Build the bundled MNIST subset in IDX format.

Source: the `mnist` npm package (MIT, Juan Cazala), which ships 10,000 real
MNIST digits as JSON arrays of pixel/255 values rounded to three decimals.
Pixels are recovered exactly with round(v * 255). The digits are shuffled with
a fixed seed and split 75/25 into train and test files.

usage: scripts/mnist_subset.py <path-to-npm-package>/src/digits data/mnist-subset
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path


def write_idx_images(path, images):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    samples = []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        for i in range(0, len(data), 784):
            pixels = [int(round(v * 255)) for v in data[i : i + 784]]
            samples.append((pixels, digit))
    random.Random(20231).shuffle(samples)
    cut = len(samples) * 3 // 4
    dst.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", samples[:cut]), ("t10k", samples[cut:])):
        write_idx_images(dst / f"{name}-images-idx3-ubyte.gz", [p for p, _ in part])
        write_idx_labels(dst / f"{name}-labels-idx1-ubyte.gz", [l for _, l in part])
    print(f"train={cut} test={len(samples) - cut}")


if __name__ == "__main__":
    main()
