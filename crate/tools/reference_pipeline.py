"""Independent numpy/scipy recomputation of the detection pipeline.

Prints the values that the Rust tests freeze: retained component count,
control limit, per-series alarm index and final-step top-6 contributors.
"""

import sys
from pathlib import Path

import numpy as np
from scipy import stats

data_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
ALPHA, TARGET, RUN = 0.01, 0.90, 6


def load(k):
    return np.loadtxt(data_dir / f"fault_{k}.csv", delimiter=",", skiprows=1)


normal = load(0)
mean = normal.mean(axis=0)
std = normal.std(axis=0, ddof=1)
floor = np.where(mean == 0, 1e-12, 1e-12 * np.abs(mean))
keep = np.flatnonzero(std > floor)
print("dropped", sorted(set(range(52)) - set(keep.tolist())))
x = (normal[:, keep] - mean[keep]) / std[keep]
n = x.shape[0]
s = x.T @ x / (n - 1)
lam, vec = np.linalg.eigh(s)
order = np.argsort(-lam, kind="stable")
lam, vec = lam[order], vec[:, order]
ratio = np.cumsum(lam) / lam.sum()
a = int(np.argmax(ratio >= TARGET)) + 1
p, la = vec[:, :a], lam[:a]
f = stats.f.ppf(1 - ALPHA, a, n - a)
limit = a * (n - 1) * (n + 1) / (n * (n - a)) * f
print("a", a, "captured", repr(ratio[a - 1]), "threshold", repr(limit))

for k in range(16):
    series = load(k)
    z = (series[:, keep] - mean[keep]) / std[keep]
    t = z @ p
    t2 = (t**2 / la).sum(axis=1)
    exc = t2 > limit
    run, alarm = 0, None
    for i, e in enumerate(exc):
        run = run + 1 if e else 0
        if run >= RUN:
            alarm = i
            break
    cont = z[-1] * ((t[-1] / la) @ p.T)
    top = np.lexsort((keep, -cont))[:6]
    ids = [int(keep[c]) for c in top]
    pct = [100 * (series[-1, j] - mean[j]) / abs(mean[j]) for j in ids]
    print(k, "alarm", alarm, "top6", ids, "pct", [round(v, 2) for v in pct],
          "t2_last", repr(t2[-1]))
