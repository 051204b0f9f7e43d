"""Offline generator for the problem registry constants.

For every problem: evaluate 2^20 scrambled Sobol points (scipy, seed 0),
record per-outcome minima and maxima (polished with L-BFGS-B from the five
best dense points and checked against the cube's corners) and keep the feasible Pareto front. With two objectives
the hypervolume is the trapezoid integral of the attainment curve
max{f2 : f1 >= L}, evaluated by SLSQP on 4000 levels. With more objectives
each dense front point is moved by SLSQP to a point dominating it and the
exact hypervolume of the resulting front is taken (a lower bound).
"""

import itertools

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc
import moocore

SEED = 0
LOG2_POINTS = 20
LEVELS = 4000


def branin_currin(u):
    x1, x2 = u[:, 0], u[:, 1]
    a, b = 15 * x1 - 5, 15 * x2
    branin = (b - 5.1 / (4 * np.pi**2) * a**2 + 5 / np.pi * a - 6) ** 2 + 10 * (1 - 1 / (8 * np.pi)) * np.cos(a) + 10
    with np.errstate(divide="ignore"):
        fac = np.where(x2 > 0, 1 - np.exp(-1 / (2 * np.where(x2 > 0, x2, 1))), 1.0)
    currin = fac * (2300 * x1**3 + 1900 * x1**2 + 2092 * x1 + 60) / (100 * x1**3 + 500 * x1**2 + 4 * x1 + 20)
    return np.stack([-branin, -currin], 1)


def constrained_branin_currin(u):
    a, b = 15 * u[:, 0] - 5, 15 * u[:, 1]
    c = 50 - (a - 2.5) ** 2 - (b - 7.5) ** 2
    return np.concatenate([branin_currin(u), c[:, None]], 1)


def vehicle_safety(u):
    x1, x2, x3, x4, x5 = (1 + 2 * u).T
    f1 = 1640.2823 + 2.3573285 * x1 + 2.3220035 * x2 + 4.5688768 * x3 + 7.7213633 * x4 + 4.4559504 * x5
    f2 = (6.5856 + 1.15 * x1 - 1.0427 * x2 + 0.9738 * x3 + 0.8364 * x4 - 0.3695 * x1 * x4 + 0.0861 * x1 * x5
          + 0.3628 * x2 * x4 + 0.1106 * x1**2 - 0.3437 * x3**2 + 0.1764 * x4**2)
    f3 = (-0.0551 + 0.0181 * x1 + 0.1024 * x2 + 0.0421 * x3 - 0.0073 * x1 * x2 + 0.024 * x2 * x3 - 0.0118 * x2 * x4
          - 0.0204 * x3 * x4 - 0.008 * x3 * x5 - 0.0241 * x2**2 + 0.0109 * x4**2)
    return -np.stack([f1, f2, f3], 1)


CAR_LO = np.array([0.5, 0.45, 0.5, 0.5, 0.875, 0.4, 0.4])
CAR_HI = np.array([1.5, 1.35, 1.5, 1.5, 2.625, 1.2, 1.2])


def car_side_impact(u):
    x1, x2, x3, x4, x5, x6, x7 = (CAR_LO + (CAR_HI - CAR_LO) * u).T
    f1 = 1.98 + 4.9 * x1 + 6.67 * x2 + 6.98 * x3 + 4.01 * x4 + 1.78 * x5 + 1e-5 * x6 + 2.73 * x7
    f2 = 4.72 - 0.5 * x4 - 0.19 * x2 * x3
    vmbp = 10.58 - 0.674 * x1 * x2 - 0.67275 * x2
    vfd = 16.45 - 0.489 * x3 * x7 - 0.843 * x5 * x6
    f3 = 0.5 * (vmbp + vfd)
    g = np.stack([
        1 - 1.16 + 0.3717 * x2 * x4 + 0.0092928 * x3,
        0.32 - 0.261 + 0.0159 * x1 * x2 + 0.06486 * x1 + 0.019 * x2 * x7 - 0.0144 * x3 * x5 - 0.0154464 * x6,
        0.32 - 0.214 - 0.00817 * x5 + 0.045195 * x1 + 0.0135168 * x1 - 0.03099 * x2 * x6 + 0.018 * x2 * x7
        - 0.007176 * x3 - 0.023232 * x3 + 0.00364 * x5 * x6 + 0.018 * x2**2,
        0.32 - 0.74 + 0.61 * x2 + 0.031296 * x3 + 0.031872 * x7 - 0.227 * x2**2,
        32 - 28.98 - 3.818 * x3 + 4.2 * x1 * x2 - 1.27296 * x6 + 2.68065 * x7,
        32 - 33.86 - 2.95 * x3 + 5.057 * x1 * x2 + 3.795 * x2 + 3.4431 * x7 - 1.45728,
        32 - 46.36 + 9.9 * x2 + 4.4505 * x1,
        4 - f2,
        9.9 - vmbp,
        15.7 - vfd,
    ])
    f4 = -np.maximum(g, 0).sum(0)
    return -np.stack([f1, f2, f3, f4], 1)


X1 = np.array([-0.0299, 2.1458, -3.2922, -2.9438, -1.5406])
X2 = np.array([2.0611, -1.7655, -0.7754, 1.8775, -3.7657])


def t_osz(d):
    nz = d != 0
    h = np.where(nz, np.log(np.abs(np.where(nz, d, 1))), 0)
    c1 = np.where(d >= 0, 10, 5.5)
    c2 = np.where(d >= 0, 7.9, 3.1)
    return np.sign(d) * np.exp(h + 0.049 * (np.sin(c1 * h) + np.sin(c2 * h)))


def sphere_ellipsoidal(u):
    x = -5 + 10 * u
    f1 = ((x - X1) ** 2).sum(1) + 203.71
    z = t_osz(x - X2)
    w = 10 ** (6 * np.arange(5) / 4)
    f2 = (w * z**2).sum(1) + 135.6
    return -np.stack([f1, f2], 1)


PROBLEMS = [
    ("branincurrin", branin_currin, 2, 2, 0, [-18.0, -6.0]),
    ("vehiclesafety", vehicle_safety, 5, 3, 0, [-1698.55, -11.21, -0.29]),
    ("carsideimpact", car_side_impact, 7, 4, 0, [-45.49, -4.51, -13.34, -10.39]),
    ("sphereellipsoidal", sphere_ellipsoidal, 5, 2, 0, [-261.0, -6.77e6]),
    ("constrained-branincurrin", constrained_branin_currin, 2, 2, 1, [-80.0, -12.0]),
]


def outcome_range(f, y, d, j, u):
    # Local searches stop just short of extremes on the cube's corners.
    corners = f(np.array(list(itertools.product([0.0, 1.0], repeat=d)))) if d <= 10 else y
    lo, hi = min(y[:, j].min(), corners[:, j].min()), max(y[:, j].max(), corners[:, j].max())
    for s in u[np.argsort(y[:, j])[:5]]:
        r = minimize(lambda v: f(v[None, :])[0, j], s, method="L-BFGS-B", bounds=[(0, 1)] * d)
        lo = min(lo, r.fun)
    for s in u[np.argsort(-y[:, j])[:5]]:
        r = minimize(lambda v: -f(v[None, :])[0, j], s, method="L-BFGS-B", bounds=[(0, 1)] * d)
        hi = max(hi, -r.fun)
    return lo, hi


def constraints(f, m, v):
    return [{"type": "ineq", "fun": lambda x, k=k: f(x[None, :])[0, m + k]} for k in range(v)]


def solve(f, d, m, v, start, objective, extra):
    r = minimize(objective, start, method="SLSQP", bounds=[(0, 1)] * d,
                 constraints=extra + constraints(f, m, v), options={"maxiter": 200, "ftol": 1e-12})
    y = f(np.clip(r.x, 0, 1)[None, :])[0]
    return y if np.all(y[m:] >= 0) else None


def attainment(f, d, m, v, fu, fy, levels):
    """Best f2 subject to f1 >= L on a grid of levels, polished by SLSQP."""
    out = []
    for level in levels:
        idx = np.where(fy[:, 0] >= level)[0]
        best = fy[idx, 1].max()
        start = fu[idx[np.argmin(fy[idx, 0])]]
        cons = [{"type": "ineq", "fun": lambda x, L=level: f(x[None, :])[0, 0] - L}]
        y = solve(f, d, m, v, start, lambda x: -f(x[None, :])[0, 1], cons)
        if y is not None and y[0] >= level - 1e-9:
            best = max(best, y[1])
        out.append(best)
    return np.maximum.accumulate(np.array(out)[::-1])[::-1]


def dominance_polish(f, d, m, v, fu, fy, scale):
    """Moves each point to one that dominates it."""
    out = []
    for s, y0 in zip(fu, fy):
        cons = [{"type": "ineq", "fun": lambda x, j=j, y0=y0: f(x[None, :])[0, j] - y0[j]} for j in range(m)]
        y = solve(f, d, m, v, s, lambda x, y0=y0: -(((f(x[None, :])[0, :m] - y0) / scale).sum()), cons)
        if y is not None and np.all(y[:m] >= y0):
            out.append(y[:m])
    return np.array(out).reshape(-1, m)


def true_hypervolume(f, d, m, v, u, y, ref, ranges):
    feas = np.all(y[:, m:] >= 0, axis=1)
    u, y = u[feas], y[feas]
    nd = moocore.is_nondominated(y[:, :m], maximise=True)
    fu, fy = u[nd], y[nd, :m]
    if m == 2:
        # Trapezoid integral of the attainment curve over the reference box.
        levels = np.linspace(max(ref[0], fy[:, 0].min()), fy[:, 0].max(), LEVELS)
        f2 = np.maximum(attainment(f, d, m, v, fu, fy, levels) - ref[1], 0)
        area = np.trapezoid(f2, levels)
        return area + max(levels[0] - ref[0], 0) * f2[0], len(fy)
    scale = np.array([hi - lo for lo, hi in ranges[:m]])
    pts = np.vstack([fy, dominance_polish(f, d, m, v, fu, fy, scale)])
    pts = pts[moocore.is_nondominated(pts, maximise=True)]
    pts = pts[np.all(pts > ref, axis=1)]
    return moocore.hypervolume(-pts, ref=-ref), len(pts)


def main():
    for name, f, d, m, v, ref in PROBLEMS:
        u = qmc.Sobol(d, scramble=True, seed=SEED).random_base2(LOG2_POINTS)
        y = f(u)
        ranges = [outcome_range(f, y, d, j, u) for j in range(m + v)]
        hv, size = true_hypervolume(f, d, m, v, u, y, np.array(ref), ranges)
        print(name, "front", size, "hv", repr(hv))
        for j, (lo, hi) in enumerate(ranges):
            print("   outcome", j, "min", repr(float(lo)), "max", repr(float(hi)))


if __name__ == "__main__":
    main()
