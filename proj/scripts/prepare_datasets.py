#!/usr/bin/env python3
"""Convert the raw comma-separated dataset dumps in data/raw/ into the CSV
layout read by `fedboost` (header row, numeric features, label last).

Categorical attributes are one-hot encoded; numeric attributes are copied
verbatim. The category vocabulary of each column is sorted so the output is
reproducible.

    python3 scripts/prepare_datasets.py [--raw data/raw] [--out data]
"""

import argparse
import csv
import pathlib

# name -> (raw file, categorical?)
DATASETS = {
    "kr-vs-kp": ("kr-vs-kp.dat", True),
    "splice": ("splice.dat", True),
    "vehicle": ("vehicle.dat", False),
}


def read_rows(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("@"):
                continue
            rows.append([cell.strip() for cell in line.split(",")])
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise SystemExit(f"{path}: ragged row {i + 1}")
    return rows


def one_hot(rows):
    n_attr = len(rows[0]) - 1
    vocab = [sorted({row[j] for row in rows}) for j in range(n_attr)]
    header = [f"a{j}_{v}" for j in range(n_attr) for v in vocab[j]]
    out = []
    for row in rows:
        encoded = []
        for j in range(n_attr):
            encoded.extend("1" if row[j] == v else "0" for v in vocab[j])
        out.append(encoded + [row[-1]])
    return header + ["label"], out


def numeric(rows):
    n_attr = len(rows[0]) - 1
    header = [f"f{j}" for j in range(n_attr)] + ["label"]
    return header, [row[:-1] + [row[-1]] for row in rows]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--raw", default="data/raw")
    parser.add_argument("--out", default="data")
    args = parser.parse_args()

    raw_dir = pathlib.Path(args.raw)
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (fname, categorical) in DATASETS.items():
        rows = read_rows(raw_dir / fname)
        header, body = one_hot(rows) if categorical else numeric(rows)
        with open(out_dir / f"{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(body)
        print(f"{name}: {len(body)} rows, {len(header) - 1} features")


if __name__ == "__main__":
    main()
