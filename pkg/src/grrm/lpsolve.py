"""Linear programming backend with self-checked optimality certificates.

Solutions are never trusted blindly: every optimal claim is backed by a
recomputed primal residual, a stationarity residual, and a primal-dual gap.
The euclidean norm is handled by outer cutting planes around the same
backend, certified by the gap between the true objective at the incumbent
and the relaxation bound.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .program import ConvexProgram


@dataclass(frozen=True)
class SolveCertificate:
    """Evidence attached to a solve outcome.

    ``gap`` is the absolute primal-dual gap for linear norms and the outer
    approximation gap for the euclidean norm.
    """

    status: str
    objective: float = float("nan")
    dual_objective: float = float("nan")
    gap: float = float("nan")
    primal_residual: float = float("nan")
    stationarity_residual: float = float("nan")
    rounds: int = 0
    message: str = ""


def _residuals(program, a_ub, b_ub, x, result):
    eq_res = 0.0
    if program.a_eq.shape[0]:
        eq_res = float(np.abs(program.a_eq @ x - program.b_eq).max())
    ub_res = 0.0
    if a_ub.shape[0]:
        ub_res = float(np.clip(a_ub @ x - b_ub, 0.0, None).max())
    finite_lo = np.isfinite(program.lower)
    lo_res = 0.0
    if finite_lo.any():
        lo_res = float(np.clip(program.lower[finite_lo] - x[finite_lo], 0.0, None).max())
    primal = max(eq_res, ub_res, lo_res)

    y_ub = np.asarray(result.ineqlin.marginals, dtype=float)
    y_eq = np.asarray(result.eqlin.marginals, dtype=float)
    lo_marg = np.asarray(result.lower.marginals, dtype=float)
    up_marg = np.asarray(result.upper.marginals, dtype=float)
    grad = program.c.copy()
    if a_ub.shape[0]:
        grad -= a_ub.T @ y_ub
    if program.a_eq.shape[0]:
        grad -= program.a_eq.T @ y_eq
    grad -= lo_marg
    grad -= up_marg
    stationarity = float(np.abs(grad).max()) if grad.size else 0.0

    dual = 0.0
    if a_ub.shape[0]:
        dual += float(y_ub @ b_ub)
    if program.a_eq.shape[0]:
        dual += float(y_eq @ program.b_eq)
    lo_term = np.where(np.isfinite(program.lower), program.lower, 0.0)
    up_term = np.where(np.isfinite(program.upper), program.upper, 0.0)
    dual += float(lo_marg @ lo_term) + float(up_marg @ up_term)
    return primal, stationarity, dual


def _solve_once(program: ConvexProgram, a_ub, b_ub, tolerance: float):
    result = linprog(
        program.c,
        A_ub=a_ub if a_ub.shape[0] else None,
        b_ub=b_ub if a_ub.shape[0] else None,
        A_eq=program.a_eq if program.a_eq.shape[0] else None,
        b_eq=program.b_eq if program.a_eq.shape[0] else None,
        bounds=program.bounds(),
        method="highs",
    )
    if result.status == 2:
        return None, SolveCertificate(status="infeasible", message=result.message)
    if result.status == 3:
        return None, SolveCertificate(status="unbounded", message=result.message)
    if result.status != 0 or result.x is None:
        return None, SolveCertificate(status="tolerance-not-met", message=result.message)

    x = np.asarray(result.x, dtype=float)
    objective = float(program.c @ x)
    primal, stationarity, dual = _residuals(program, a_ub, b_ub, x, result)
    gap = abs(objective - dual)
    scale = 1.0 + abs(objective)
    grad_scale = 1.0 + float(np.abs(program.c).max())
    certified = (
        gap <= tolerance * scale
        and primal <= tolerance
        and stationarity <= tolerance * grad_scale
    )
    cert = SolveCertificate(
        status="optimal" if certified else "tolerance-not-met",
        objective=objective,
        dual_objective=dual,
        gap=gap,
        primal_residual=primal,
        stationarity_residual=stationarity,
        message=result.message,
    )
    return x, cert


def solve_linear(program: ConvexProgram, tolerance: float = 1e-6):
    """Solve a pure linear program and certify the outcome."""
    return _solve_once(program, program.a_ub, program.b_ub, tolerance)


def solve_second_order(
    program: ConvexProgram, tolerance: float = 1e-6, max_rounds: int = 200
):
    """Cutting-plane loop for euclidean norm bounds.

    The assembled rows already bound each coordinate (an outer polytope), so
    the first relaxation is finite.  Each round adds the gradient cut of the
    most violated euclidean term until the incumbent objective and the
    relaxation bound meet within tolerance.
    """
    extra_rows: list = []
    extra_rhs: list = []
    a_ub, b_ub = program.a_ub, program.b_ub
    q_sl = program.blocks["q"]
    last = None
    for round_count in range(1, max_rounds + 1):
        x, cert = _solve_once(program, a_ub, b_ub, tolerance)
        if x is None:
            return x, replace(cert, rounds=round_count)
        q = x[q_sl]
        true_objective = float(program.c @ x)
        cut_added = False
        norms = {}
        for term in program.second_order:
            v = term.matrix @ q - term.shift
            norm_v = float(np.sqrt(v @ v))
            norms[term.bound_col] = norm_v
            weight = program.c[term.bound_col]
            true_objective += weight * (norm_v - float(x[term.bound_col]))
            if norm_v > float(x[term.bound_col]) + 0.1 * tolerance and norm_v > 0:
                u = v / norm_v
                row = np.zeros(program.n_variables)
                row[q_sl] = u @ term.matrix
                row[term.bound_col] = -1.0
                extra_rows.append(sparse.csr_matrix(row))
                extra_rhs.append(float(u @ term.shift))
                cut_added = True
        lower_bound = cert.objective
        gap = true_objective - lower_bound
        adjusted = x.copy()
        for col, value in norms.items():
            adjusted[col] = value
        last = (
            adjusted,
            SolveCertificate(
                status=cert.status,
                objective=true_objective,
                dual_objective=lower_bound,
                gap=abs(gap),
                primal_residual=cert.primal_residual,
                stationarity_residual=cert.stationarity_residual,
                rounds=round_count,
                message=cert.message,
            ),
        )
        if abs(gap) <= tolerance * (1.0 + abs(true_objective)) or not cut_added:
            return last
        a_ub = sparse.vstack([program.a_ub] + extra_rows).tocsr()
        b_ub = np.concatenate([program.b_ub, np.asarray(extra_rhs)])
    x, cert = last
    return x, replace(cert, status="tolerance-not-met")
