#!/usr/bin/env python3
# Copyright 2026 The cstrain Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes a small MNIST subset as IDX files.

The source is the 5000-image MNIST sample bundled with mlxtend
(mlxtend/data/data/mnist_5k.csv.gz, BSD-3-Clause). Rows are shuffled with a
fixed seed and split into train/test IDX pairs.

    pip download --no-deps mlxtend
    python3 tools/make_mnist_subset.py mnist_5k.csv.gz data/mnist-subset
"""
import argparse
import gzip
import pathlib
import struct

import numpy as np


def write_idx_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv_gz")
    ap.add_argument("out_dir")
    ap.add_argument("--train", type=int, default=2000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240101)
    args = ap.parse_args()

    with gzip.open(args.csv_gz, "rt") as f:
        data = np.loadtxt(f, delimiter=",")
    pixels = data[:, :-1].astype(np.uint8).reshape(-1, 28, 28)
    labels = data[:, -1].astype(np.uint8)

    order = np.random.default_rng(args.seed).permutation(len(labels))
    train = order[: args.train]
    test = order[args.train : args.train + args.test]

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_idx_images(out / "train-images-idx3-ubyte", pixels[train])
    write_idx_labels(out / "train-labels-idx1-ubyte", labels[train])
    write_idx_images(out / "test-images-idx3-ubyte", pixels[test])
    write_idx_labels(out / "test-labels-idx1-ubyte", labels[test])


if __name__ == "__main__":
    main()
