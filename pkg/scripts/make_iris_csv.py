#!/usr/bin/env python3
"""Regenerate data/iris.csv from scikit-learn's bundled copy of the dataset."""

import csv
import pathlib

from sklearn.datasets import load_iris

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "iris.csv"

HEADER = ["sepal_length", "sepal_width", "petal_length", "petal_width", "species"]


def main():
    iris = load_iris()
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for row, label in zip(iris.data, iris.target):
            writer.writerow([f"{v:.1f}" for v in row] + [iris.target_names[label]])
    print(f"wrote {OUT} ({len(iris.target)} rows)")


if __name__ == "__main__":
    main()
