#!/usr/bin/env python3
"""Writes the benchmark CSVs into data/.

wine.csv and breast_cancer.csv are exported from scikit-learn's bundled
copies of the UCI datasets. diabetes.csv is a synthetic stand-in with the
shape of the Pima diabetes table (768 rows, 8 continuous features, binary
label), generated from a fixed seed; see data/README.md.
"""

import csv
import pathlib

import numpy as np
from sklearn.datasets import load_breast_cancer, load_wine

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"


def write_csv(path, names, X, y):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + ["target"])
        for row, label in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    print(f"wrote {path} ({X.shape[0]} rows, {X.shape[1]} features)")


def make_synthetic_diabetes(rng):
    """768 rows, 8 positively skewed clinical-style features, binary label."""
    n, p = 768, 8
    n_pos = 268
    y = np.array([1] * n_pos + [0] * (n - n_pos))
    rng.shuffle(y)

    # Latent risk drives both the label mixture and feature shifts, with
    # heavy overlap so classifiers stay imperfect.
    base_means = np.array([3.8, 120.0, 69.0, 20.5, 80.0, 32.0, 0.47, 33.0])
    base_stds = np.array([3.4, 32.0, 19.0, 16.0, 115.0, 7.9, 0.33, 11.8])
    shift = np.array([0.55, 0.95, 0.25, 0.35, 0.45, 0.55, 0.35, 0.45])

    X = np.empty((n, p))
    for i in range(n):
        z = rng.standard_normal(p)
        # Mild feature correlations via one shared factor.
        shared = rng.standard_normal()
        z = 0.85 * z + 0.55 * shared
        mu = base_means + shift * base_stds * (1.0 if y[i] else -0.35)
        X[i] = mu + base_stds * z * 0.9
    # Positive skew, clipped at zero like count/measurement columns.
    X = np.abs(X)
    return X, y


def main():
    OUT.mkdir(exist_ok=True)

    wine = load_wine()
    write_csv(OUT / "wine.csv", wine.feature_names, wine.data, wine.target)

    bc = load_breast_cancer()
    names = [n.replace(" ", "_") for n in bc.feature_names]
    write_csv(OUT / "breast_cancer.csv", names, bc.data, bc.target)

    rng = np.random.default_rng(20240817)
    X, y = make_synthetic_diabetes(rng)
    names = [
        "pregnancies", "glucose", "blood_pressure", "skin_thickness",
        "insulin", "bmi", "pedigree", "age",
    ]
    write_csv(OUT / "diabetes.csv", names, X, y)


if __name__ == "__main__":
    main()
