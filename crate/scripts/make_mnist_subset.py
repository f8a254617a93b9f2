#!/usr/bin/env python3
"""Build the bundled MNIST subset in IDX format.

Source: the `mnist` npm package (cazala/mnist, MIT), which ships 10k MNIST
digits as JSON arrays of intensities in [0, 1].

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_mnist_subset.py package/src/digits data/mnist

Writes `images-idx3-ubyte` and `labels-idx1-ubyte` holding PER_DIGIT samples
of each digit, interleaved so that sample k of digit d sits at index 10*k + d.
"""
import json
import struct
import sys
from pathlib import Path

PER_DIGIT = 300
SIZE = 28 * 28


def main(src: Path, dst: Path) -> None:
    digits = []
    for d in range(10):
        raw = json.loads((src / f"{d}.json").read_text())["data"]
        digits.append([raw[k * SIZE:(k + 1) * SIZE] for k in range(PER_DIGIT)])
    images = bytearray(struct.pack(">IIII", 2051, 10 * PER_DIGIT, 28, 28))
    labels = bytearray(struct.pack(">II", 2049, 10 * PER_DIGIT))
    for k in range(PER_DIGIT):
        for d in range(10):
            images.extend(min(255, max(0, round(v * 255))) for v in digits[d][k])
            labels.append(d)
    dst.mkdir(parents=True, exist_ok=True)
    (dst / "images-idx3-ubyte").write_bytes(images)
    (dst / "labels-idx1-ubyte").write_bytes(labels)


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))
