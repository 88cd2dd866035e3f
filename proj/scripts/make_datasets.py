"""Regenerates the bundled CSV datasets under configs/data."""

import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "configs" / "data"


def fmt(v):
    return repr(float(v))


def write(path, header, rows):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(v) for v in row) + "\n")


def conjugate(seed=1, n=20):
    r = np.random.default_rng(seed)
    x = r.normal(1.0, 1.0, n)
    write(OUT / "conjugate.csv", ["x"], x[:, None])


def linreg(seed=3, d=5, n=50):
    # Orthogonal columns with norm sqrt(n) give a diagonal posterior covariance.
    r = np.random.default_rng(seed)
    q, _ = np.linalg.qr(r.normal(size=(n, d)))
    x = q * np.sqrt(n)
    w = r.normal(size=d)
    y = x @ w + r.normal(size=n)
    write(OUT / "linreg.csv", [f"x{j + 1}" for j in range(d)] + ["y"], np.column_stack([x, y]))


def logreg(seed=5, d=3, n=100):
    r = np.random.default_rng(seed)
    x = r.normal(size=(n, d))
    w = np.array([1.0, -0.5, 0.25])[:d]
    p = 1.0 / (1.0 + np.exp(-(x @ w)))
    y = (r.uniform(size=n) < p).astype(float)
    write(OUT / "logreg.csv", [f"x{j + 1}" for j in range(d)] + ["y"], np.column_stack([x, y]))


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    conjugate()
    linreg()
    logreg()
