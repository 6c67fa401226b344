"""Independent oracles for pinning expected values.

Everything here deliberately avoids the implementation's own numerical
paths: curve evaluation by de Casteljau recursion, integrals by fixed-step
Simpson/midpoint rules, quantiles by bisection, the mass-shift root by a
dense grid scan, and QPs by brute-force active-set enumeration.
"""

from __future__ import annotations

import itertools

import numpy as np


def de_casteljau(control_points, t):
    """Evaluate a Bezier curve by repeated linear interpolation."""
    pts = np.asarray(control_points, dtype=float).copy()
    while pts.shape[0] > 1:
        pts = (1.0 - t) * pts[:-1] + t * pts[1:]
    return pts[0]


def simpson_fixed(f, a, b, n=20001):
    """Composite Simpson on a fixed grid (n odd)."""
    if n % 2 == 0:
        n += 1
    xs = np.linspace(a, b, n)
    ys = f(xs)
    h = (b - a) / (n - 1)
    return h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-2:2].sum())


def riemann_midpoint(f, a, b, n):
    xs = a + (np.arange(n) + 0.5) * (b - a) / n
    return (b - a) / n * f(xs).sum()


def bisect_quantile(cdf, p, lo=-60.0, hi=60.0, iters=200):
    """Quantile by bisection on a monotone CDF."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def eta_star_grid(family, risk, radius, fine_step=1e-6, coarse_step=1e-3, span_limit=200.0):
    """Dense grid search for the minimal eta with nonnegative residual.

    The mass-shift integral is accumulated by per-step composite Simpson
    (two panels per step), first on a coarse grid to bracket the sign
    change of ``psi(eta) = eta (F(eta) - (1 - risk)) - kappa - radius``,
    then on a ``fine_step`` grid inside the bracketing interval. Returns
    the first fine grid point with psi >= 0.
    """
    from drcorridor.elliptical import std_cdf, std_pdf, std_quantile

    a = float(std_quantile(family, 1.0 - risk))
    if radius == 0.0:
        return a

    def g(x):
        return x * std_pdf(family, x)

    def scan(start, kappa0, step, count):
        """psi on start + step*(1..count); returns (edges, kappas, psis)."""
        edges = start + step * np.arange(count + 1)
        mids = edges[:-1] + 0.5 * step
        ge = g(edges)
        gm = g(mids)
        increments = step / 6.0 * (ge[:-1] + 4.0 * gm + ge[1:])
        kappas = kappa0 + np.concatenate(([0.0], np.cumsum(increments)))
        psis = edges * (std_cdf(family, edges) - (1.0 - risk)) - kappas - radius
        return edges, kappas, psis

    block = 4096
    start, kappa0 = a, 0.0
    bracket = None
    while bracket is None:
        edges, kappas, psis = scan(start, kappa0, coarse_step, block)
        hit = np.where(psis >= 0.0)[0]
        if hit.size:
            j = int(hit[0])
            if j == 0:
                return float(edges[0])
            bracket = (edges[j - 1], kappas[j - 1])
        else:
            start, kappa0 = edges[-1], kappas[-1]
            if start - a > span_limit:
                raise RuntimeError("no residual sign change within the scan span")
    left, kappa_left = bracket
    count = int(np.ceil(coarse_step / fine_step)) + 1
    edges, _, psis = scan(left, kappa_left, fine_step, count)
    hit = np.where(psis >= 0.0)[0]
    return float(edges[int(hit[0])])


def enumerate_box_qp(Q, q, A, l, u, feas_tol=1e-8, dual_tol=1e-8):
    """Global minimum of ``0.5 x'Qx + q'x s.t. l <= Ax <= u`` by enumeration.

    Rows with l == u are always active; every other row is tried inactive,
    active-at-lower and active-at-upper. A candidate survives when its KKT
    system is consistent, it is primal feasible, and the recovered
    multipliers have the right signs (nu <= 0 at lower, nu >= 0 at upper).
    Returns (x, objective); raises if no candidate survives (infeasible).
    """
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    A = np.asarray(A, dtype=float)
    l = np.asarray(l, dtype=float)
    u = np.asarray(u, dtype=float)
    nvar = Q.shape[0]
    nrow = A.shape[0]
    eq_rows = [i for i in range(nrow) if np.isfinite(l[i]) and np.isfinite(u[i]) and u[i] - l[i] <= 1e-12]
    ineq_rows = [i for i in range(nrow) if i not in eq_rows]

    options = []
    for i in ineq_rows:
        states = [None]
        if np.isfinite(l[i]):
            states.append("lower")
        if np.isfinite(u[i]):
            states.append("upper")
        options.append(states)

    best = None
    for assignment in itertools.product(*options) if options else [()]:
        rows, rhs, sides = list(eq_rows), [l[i] for i in eq_rows], ["eq"] * len(eq_rows)
        for i, state in zip(ineq_rows, assignment):
            if state is None:
                continue
            rows.append(i)
            rhs.append(l[i] if state == "lower" else u[i])
            sides.append(state)
        k = len(rows)
        K = np.zeros((nvar + k, nvar + k))
        K[:nvar, :nvar] = Q
        if k:
            K[:nvar, nvar:] = A[rows].T
            K[nvar:, :nvar] = A[rows]
        rhs_full = np.concatenate([-q, np.asarray(rhs)])
        sol, *_ = np.linalg.lstsq(K, rhs_full, rcond=None)
        if np.abs(K @ sol - rhs_full).max() > 1e-7 * max(1.0, np.abs(rhs_full).max()):
            continue
        x = sol[:nvar]
        nu = sol[nvar:]
        ax = A @ x
        if np.any(ax < l - feas_tol) or np.any(ax > u + feas_tol):
            continue
        ok = True
        for mult, side in zip(nu, sides):
            if side == "lower" and mult > dual_tol:
                ok = False
            if side == "upper" and mult < -dual_tol:
                ok = False
        if not ok:
            continue
        obj = float(0.5 * x @ Q @ x + q @ x)
        if best is None or obj < best[1]:
            best = (x, obj)
    if best is None:
        raise RuntimeError("enumeration found no KKT-consistent candidate (infeasible?)")
    return best
