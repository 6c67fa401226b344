"""Embedded convex QP solver: operator splitting with active-set polish.

Solves ``min 0.5 x'Px + q'x  s.t.  l <= Ax <= u`` (equality rows have
``l == u``). The splitting iteration is the standard over-relaxed ADMM on
the constraint slacks with per-row step sizes; once the residuals are
small the active set is read off the duals and an equality-constrained
KKT solve (with iterative refinement) polishes the iterate to machine
precision. Optimal status is only reported when the polished or final
iterate passes the stationarity / feasibility / complementarity gate.

The iteration schedule is fixed and free of randomness, so identical
inputs produce bitwise-identical solutions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"

KKT_GATE = 1e-6
_CHECK_EVERY = 25
_PINF_TOL = 1e-7


@dataclass
class QpSolution:
    """Solver outcome with verified KKT residuals.

    ``stationarity`` is the dual residual ``||Px + q + A'y||_inf``,
    ``feasibility`` the largest constraint violation, ``complementarity``
    the largest |dual| * |slack| product. ``violated_rows`` carries the
    support of the infeasibility certificate when status is infeasible.
    """

    status: str
    x: np.ndarray | None
    objective: float | None
    stationarity: float
    feasibility: float
    complementarity: float
    iterations: int
    wall_time: float
    y: np.ndarray | None = None
    violated_rows: list[int] = field(default_factory=list)


def kkt_residuals(P, q, A, l, u, x, y):
    """(stationarity, feasibility, complementarity) for a primal/dual pair."""
    stat = float(np.abs(P @ x + q + (A.T @ y if A.size else 0.0)).max())
    if A.size:
        ax = A @ x
        prim = float(np.maximum(np.maximum(l - ax, ax - u), 0.0).max())
        up_slack = np.where(np.isfinite(u), np.abs(u - ax), np.inf)
        lo_slack = np.where(np.isfinite(l), np.abs(ax - l), np.inf)
        comp = np.where(y > 0.0, y * up_slack, 0.0) + np.where(y < 0.0, -y * lo_slack, 0.0)
        comp = float(np.max(comp, initial=0.0))
    else:
        prim = 0.0
        comp = 0.0
    return stat, prim, comp


def _polish(P, q, A, l, u, y, eq_mask):
    """Equality-constrained KKT solve on the active set read from the duals.

    Returns (x, y_full) or None when the linear algebra fails. Rows whose
    recovered multiplier has the wrong sign are dropped and the solve is
    repeated; inactive rows violated by the candidate are added back.
    """
    nvar = P.shape[0]
    nrow = A.shape[0]
    scale = max(1.0, float(np.abs(y).max(initial=0.0)))
    act_low = (~eq_mask) & (y < -1e-10 * scale) & np.isfinite(l)
    act_up = (~eq_mask) & (y > 1e-10 * scale) & np.isfinite(u)

    for _ in range(10):
        rows = np.where(eq_mask | act_low | act_up)[0]
        A_hat = A[rows]
        b_hat = np.where(act_up[rows], u[rows], l[rows])
        k = len(rows)
        delta = 1e-9
        K = np.zeros((nvar + k, nvar + k))
        K[:nvar, :nvar] = P + delta * np.eye(nvar)
        K[:nvar, nvar:] = A_hat.T
        K[nvar:, :nvar] = A_hat
        K[nvar:, nvar:] = -delta * np.eye(k)
        rhs = np.concatenate([-q, b_hat])
        try:
            lu = lu_factor(K)
            sol = lu_solve(lu, rhs)
        except (np.linalg.LinAlgError, ValueError):
            return None
        # refine against the unregularized system
        K0 = np.zeros_like(K)
        K0[:nvar, :nvar] = P
        K0[:nvar, nvar:] = A_hat.T
        K0[nvar:, :nvar] = A_hat
        for _ in range(3):
            sol = sol + lu_solve(lu, rhs - K0 @ sol)
        x = sol[:nvar]
        nu = sol[nvar:]

        y_full = np.zeros(nrow)
        y_full[rows] = nu
        wrong_low = act_low & (y_full > 1e-9 * scale)
        wrong_up = act_up & (y_full < -1e-9 * scale)
        ax = A @ x
        viol_low = (~eq_mask) & (~act_low) & np.isfinite(l) & (ax < l - 1e-9)
        viol_up = (~eq_mask) & (~act_up) & np.isfinite(u) & (ax > u + 1e-9)
        if not (wrong_low.any() or wrong_up.any() or viol_low.any() or viol_up.any()):
            return x, y_full
        act_low = (act_low & ~wrong_low) | viol_low
        act_up = (act_up & ~wrong_up) | viol_up
    return None


def _infeasibility_certificate(A, l, u, dy):
    """OSQP-style primal infeasibility test on a dual increment."""
    norm_dy = float(np.abs(dy).max(initial=0.0))
    if norm_dy <= 1e-14:
        return None
    if float(np.abs(A.T @ dy).max()) > _PINF_TOL * norm_dy:
        return None
    pos = np.maximum(dy, 0.0)
    neg = np.minimum(dy, 0.0)
    # a positive multiplier on a row without a finite upper bound (or negative
    # without finite lower) cannot certify anything
    if np.any(pos[~np.isfinite(u)] > _PINF_TOL * norm_dy):
        return None
    if np.any(-neg[~np.isfinite(l)] > _PINF_TOL * norm_dy):
        return None
    support = float(np.sum(u[np.isfinite(u)] * pos[np.isfinite(u)])) + float(
        np.sum(l[np.isfinite(l)] * neg[np.isfinite(l)])
    )
    if support <= -_PINF_TOL * norm_dy:
        return np.where(np.abs(dy) > 0.1 * norm_dy)[0].tolist()
    return None


def solve_box_qp(P, q, A, l, u, tol: float = 1e-8, max_iter: int = 20000) -> QpSolution:
    """Run the splitting iteration with polish attempts and certificates."""
    t0 = time.perf_counter()
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float).reshape(-1)
    A = np.asarray(A, dtype=float).reshape(-1, P.shape[0]) if np.size(A) else np.zeros((0, P.shape[0]))
    l = np.asarray(l, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    nvar, nrow = P.shape[0], A.shape[0]
    P = 0.5 * (P + P.T)

    if nrow == 0:
        x = np.linalg.lstsq(P, -q, rcond=None)[0]
        stat = float(np.abs(P @ x + q).max(initial=0.0))
        return QpSolution(
            OPTIMAL if stat <= KKT_GATE else MAX_ITER,
            x,
            float(0.5 * x @ P @ x + q @ x),
            stat,
            0.0,
            0.0,
            0,
            time.perf_counter() - t0,
            y=np.zeros(0),
        )

    crossed = np.where(l > u + 1e-12)[0]
    if crossed.size:
        return QpSolution(
            INFEASIBLE, None, None, np.inf, np.inf, np.inf, 0,
            time.perf_counter() - t0, violated_rows=crossed.tolist(),
        )

    eq_mask = np.isfinite(l) & np.isfinite(u) & (u - l <= 1e-12)
    sigma = 1e-6
    alpha = 1.6
    rho = np.where(eq_mask, 1e2, 1e-1)

    M = P + sigma * np.eye(nvar) + (A.T * rho) @ A
    chol = cho_factor(M)

    x = np.zeros(nvar)
    z = np.clip(np.zeros(nrow), l, u)
    y = np.zeros(nrow)
    y_prev_check = y.copy()
    best = None

    def gated(x_c, y_c, iters):
        stat, prim, comp = kkt_residuals(P, q, A, l, u, x_c, y_c)
        if max(stat, prim, comp) <= KKT_GATE:
            return QpSolution(
                OPTIMAL, x_c, float(0.5 * x_c @ P @ x_c + q @ x_c),
                stat, prim, comp, iters, time.perf_counter() - t0, y=y_c.copy(),
            )
        return None

    it = 0
    while it < max_iter:
        it += 1
        rhs = sigma * x - q + A.T @ (rho * z - y)
        xt = cho_solve(chol, rhs)
        zt = A @ xt
        x = alpha * xt + (1.0 - alpha) * x
        z_relaxed = alpha * zt + (1.0 - alpha) * z
        z = np.clip(z_relaxed + y / rho, l, u)
        y = y + rho * (z_relaxed - z)

        if it % _CHECK_EVERY == 0 or it == max_iter:
            r_prim = float(np.abs(A @ x - z).max(initial=0.0))
            r_dual = float(np.abs(P @ x + q + A.T @ y).max(initial=0.0))
            if max(r_prim, r_dual) <= 1e-5:
                polished = _polish(P, q, A, l, u, y, eq_mask)
                if polished is not None:
                    sol = gated(polished[0], polished[1], it)
                    if sol is not None:
                        return sol
            if max(r_prim, r_dual) <= tol:
                sol = gated(x, y, it)
                if sol is not None:
                    return sol
                best = (x.copy(), y.copy())
            rows = _infeasibility_certificate(A, l, u, y - y_prev_check)
            if rows is not None:
                return QpSolution(
                    INFEASIBLE, None, None, np.inf, np.inf, np.inf, it,
                    time.perf_counter() - t0, violated_rows=rows,
                )
            y_prev_check = y.copy()

    x_c, y_c = best if best is not None else (x, y)
    stat, prim, comp = kkt_residuals(P, q, A, l, u, x_c, y_c)
    return QpSolution(
        MAX_ITER, x_c, float(0.5 * x_c @ P @ x_c + q @ x_c),
        stat, prim, comp, it, time.perf_counter() - t0, y=y_c.copy(),
    )
