"""Write a synthetic daily close series to demos/data/sample_index.csv.

The series is a calm random walk with one turbulent stretch and a sharp
two-day fall inside it, which is enough to exercise every warning rule.
Run from anywhere: ``python demos/make_sample_data.py``.
"""

from pathlib import Path

import numpy as np

OUT = Path(__file__).parent / "data" / "sample_index.csv"


def make_closes(n=1500, seed=2008):
    rng = np.random.default_rng(seed)
    sig = np.full(n, 0.008)
    sig[700:820] = 0.03  # turbulent stretch
    r = 0.0002 + sig * rng.standard_normal(n)
    r[740:744] -= 0.04  # a four-day slide
    return 1500.0 * np.exp(np.cumsum(r))


if __name__ == "__main__":
    closes = make_closes()
    dates = np.datetime64("2010-01-04") + np.arange(len(closes))
    OUT.parent.mkdir(exist_ok=True)
    with OUT.open("w") as fh:
        fh.write("date,close\n")
        for d, c in zip(dates, closes):
            fh.write(f"{d},{c:.2f}\n")
    print(f"wrote {len(closes)} rows to {OUT}")
