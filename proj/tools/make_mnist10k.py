#!/usr/bin/env python3
#
# Copyright 2026 The xnornet Authors.
# SPDX-License-Identifier: Apache-2.0
#
"""Build a 10k-sample MNIST subset in IDX format.

The digits come from the `mnist` npm package (10,000 MNIST samples stored as
JSON, pixels scaled to [0, 1] with three decimals). The samples are shuffled
with a fixed seed and split 8000 / 2000 into the standard IDX file names:

    train-images-idx3-ubyte  train-labels-idx1-ubyte
    t10k-images-idx3-ubyte   t10k-labels-idx1-ubyte

Usage:
    tools/make_mnist10k.py [--package DIR] [--out data/mnist10k]

Without --package the script runs `npm pack mnist` in a temporary directory.
"""

import argparse
import json
import math
import pathlib
import random
import struct
import subprocess
import tarfile
import tempfile

PIXELS = 28 * 28
TRAIN_COUNT = 8000
SEED = 20160316


def fetch_package(workdir: pathlib.Path) -> pathlib.Path:
    subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=workdir, check=True,
                   stdout=subprocess.DEVNULL)
    tarball = next(workdir.glob("mnist-*.tgz"))
    with tarfile.open(tarball) as tar:
        tar.extractall(workdir)
    return workdir / "package"


def load_digits(package: pathlib.Path):
    samples = []
    for digit in range(10):
        with open(package / "src" / "digits" / f"{digit}.json") as f:
            flat = json.load(f)["data"]
        if len(flat) % PIXELS != 0:
            raise ValueError(f"digit {digit}: {len(flat)} values is not a multiple of {PIXELS}")
        for i in range(0, len(flat), PIXELS):
            # Three-decimal floats recover the original byte exactly.
            pixels = bytes(min(255, max(0, int(math.floor(v * 255.0 + 0.5))))
                           for v in flat[i:i + PIXELS])
            samples.append((pixels, digit))
    return samples


def write_idx(out: pathlib.Path, prefix: str, samples) -> None:
    with open(out / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(samples), 28, 28))
        for pixels, _ in samples:
            f.write(pixels)
    with open(out / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(samples)))
        f.write(bytes(label for _, label in samples))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--package", type=pathlib.Path,
                        help="extracted npm `mnist` package directory")
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/mnist10k"))
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        package = args.package or fetch_package(pathlib.Path(tmp))
        samples = load_digits(package)

    random.Random(SEED).shuffle(samples)
    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out, "train", samples[:TRAIN_COUNT])
    write_idx(args.out, "t10k", samples[TRAIN_COUNT:])
    print(f"wrote {TRAIN_COUNT} train / {len(samples) - TRAIN_COUNT} val samples to {args.out}")


if __name__ == "__main__":
    main()
