"""Reference values for the transport and chain tests.

FM distances are solved as the dense potential LP with scipy; chain values
use numpy matrix powers. Run: python3 tests/oracles/fm_lp.py
"""
import itertools
import numpy as np
from scipy.optimize import linprog


def fm(atoms1, atoms2, rho):
    pts = sorted({tuple(p) for p, _ in atoms1} | {tuple(p) for p, _ in atoms2})
    idx = {p: i for i, p in enumerate(pts)}
    diff = np.zeros(len(pts))
    for p, w in atoms1:
        diff[idx[tuple(p)]] += w
    for p, w in atoms2:
        diff[idx[tuple(p)]] -= w
    rows, rhs = [], []
    for i, j in itertools.permutations(range(len(pts)), 2):
        r = np.zeros(len(pts))
        r[i], r[j] = 1, -1
        rows.append(r)
        rhs.append(rho(np.array(pts[i]), np.array(pts[j])))
    res = linprog(-diff, A_ub=np.array(rows), b_ub=rhs, bounds=[(-1, 1)] * len(pts), method="highs")
    return -res.fun


euclid = lambda p, q: float(np.linalg.norm(p - q))
cheb = lambda p, q: float(np.max(np.abs(p - q)))
trunc = lambda cap: (lambda p, q: min(cap, euclid(p, q)))

a1 = [((0.0,), 0.2), ((0.7,), 0.5), ((2.5,), 0.3)]
a2 = [((0.1,), 0.4), ((1.9,), 0.6)]
b1 = [((0.0, 0.0), 0.5), ((1.0, 1.0), 0.25), ((3.0, 0.0), 0.25)]
b2 = [((0.5, 0.0), 0.3), ((0.0, 2.0), 0.7)]
print("fm 1d euclid", repr(fm(a1, a2, euclid)))
print("fm 1d trunc 0.5", repr(fm(a1, a2, trunc(0.5))))
print("fm 2d euclid", repr(fm(b1, b2, euclid)))
print("fm 2d cheb", repr(fm(b1, b2, cheb)))
print("fm 3pt", repr(fm([((0.0,), .5), ((1.0,), .5)], [((0.0,), .5), ((2.0,), .5)], euclid)))

# 1-D W1 by CDF difference
def w1(x1, x2):
    pts = sorted({p for p, _ in x1} | {p for p, _ in x2})
    F = lambda atoms, t: sum(w for p, w in atoms if p <= t)
    return sum(abs(F(x1, pts[i]) - F(x2, pts[i])) * (pts[i + 1] - pts[i]) for i in range(len(pts) - 1))

print("w1 1d", repr(w1([(p[0], w) for p, w in a1], [(p[0], w) for p, w in a2])))

P = np.array([[0.9, 0.1], [0.2, 0.8]])


def cesaro(P, t):
    acc, cur = np.zeros_like(P), np.eye(len(P))
    for _ in range(t):
        cur = cur @ P
        acc += cur
    return acc / t


for T in (100, 1000):
    C = cesaro(P, 3) @ cesaro(P, 5) @ cesaro(P, T)
    print("composed gap two-state T", T, repr(np.abs(C - cesaro(P, T)).sum(axis=1).max()))
for n in (10, 100):
    Pn = np.linalg.matrix_power(P, n + 1)
    print("cesaro tv residual z=0 n", n, repr(np.abs(Pn[0] - P[0]).sum() / n))
