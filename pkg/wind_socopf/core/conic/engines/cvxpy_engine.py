import logging
import time
from typing import Any

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from ...errors import ConicSolveError
from ..engine import ConicEngine
from ..program import ConicProgram, ConicSolution, SolveStatus, kkt_residuals

logger = logging.getLogger(__name__)

_STATUS = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolveStatus.OPTIMAL,
    cp.INFEASIBLE: SolveStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
    cp.UNBOUNDED: SolveStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolveStatus.UNBOUNDED,
}


def _solver_options(solver: str, tol: float, max_iterations: int) -> dict[str, Any]:
    if solver == "CLARABEL":
        return {
            "tol_gap_abs": tol,
            "tol_gap_rel": tol,
            "tol_feas": tol,
            "max_iter": max_iterations,
        }
    if solver == "ECOS":
        return {"abstol": tol, "reltol": tol, "feastol": tol, "max_iters": max_iterations}
    if solver == "SCS":
        return {"eps_abs": tol, "eps_rel": tol, "max_iters": max_iterations * 100}
    return {}


def _flatten_dual(value: Any) -> np.ndarray:
    if value is None:
        return np.zeros(0)
    if isinstance(value, (list, tuple)):
        return np.concatenate([np.atleast_1d(np.asarray(v, dtype=float)).ravel() for v in value])
    return np.atleast_1d(np.asarray(value, dtype=float)).ravel()


class CvxpyEngine(ConicEngine):
    """Conic backend over cvxpy (Clarabel by default)"""

    name = "cvxpy"

    def __init__(self, solver: str = "CLARABEL", max_iterations: int = 200, verbose: bool = False):
        self.solver = solver.upper()
        self.max_iterations = max_iterations
        self.verbose = verbose

    def available(self) -> bool:
        return self.solver in cp.installed_solvers()

    def _objective(self, program: ConicProgram, x: cp.Variable) -> cp.Expression:
        expr = program.q @ x + program.c0
        P = program.P
        if P.nnz == 0:
            return expr
        off_diag = P - sp.diags(P.diagonal())
        if off_diag.count_nonzero() == 0:
            diag = P.diagonal()
            active = np.flatnonzero(diag)
            return expr + 0.5 * cp.sum(cp.multiply(diag[active], cp.square(x[active])))
        return expr + 0.5 * cp.quad_form(x, cp.psd_wrap(P))

    def solve(self, program: ConicProgram, tol: float = 1e-8) -> ConicSolution:
        if not self.available():
            raise ConicSolveError(
                f"solver {self.solver} is not installed (available: {cp.installed_solvers()})"
            )

        n = program.n
        x = cp.Variable(n)
        constraints = []
        eq = ineq = lo = hi = None
        if program.n_eq:
            eq = program.A @ x == program.b
            constraints.append(eq)
        if program.n_ineq:
            ineq = program.G @ x <= program.h
            constraints.append(ineq)
        lb_idx = np.flatnonzero(np.isfinite(program.lb))
        ub_idx = np.flatnonzero(np.isfinite(program.ub))
        if lb_idx.size:
            lo = x[lb_idx] >= program.lb[lb_idx]
            constraints.append(lo)
        if ub_idx.size:
            hi = x[ub_idx] <= program.ub[ub_idx]
            constraints.append(hi)
        cones = []
        for blk in program.cones:
            affine = blk.rows @ x + blk.offset
            cone = cp.SOC(affine[0], affine[1:])
            cones.append(cone)
            constraints.append(cone)

        problem = cp.Problem(cp.Minimize(self._objective(program, x)), constraints)
        options = _solver_options(self.solver, tol, self.max_iterations)

        start = time.perf_counter()
        try:
            problem.solve(solver=self.solver, verbose=self.verbose, **options)
        except cp.error.SolverError as e:
            logger.warning(f"{self.solver} failed: {e}")
            return ConicSolution(
                status=SolveStatus.NUMERICAL_FAILURE,
                solve_seconds=time.perf_counter() - start,
                message=str(e),
            )
        elapsed = time.perf_counter() - start

        status = _STATUS.get(problem.status, SolveStatus.NUMERICAL_FAILURE)
        stats = problem.solver_stats
        iterations = int(stats.num_iters) if stats and stats.num_iters is not None else 0

        if x.value is None:
            return ConicSolution(
                status=status,
                iterations=iterations,
                solve_seconds=elapsed,
                message=str(problem.status),
            )

        mu_lb = np.zeros(n)
        mu_ub = np.zeros(n)
        for target, idx, con in ((mu_lb, lb_idx, lo), (mu_ub, ub_idx, hi)):
            dual = _flatten_dual(con.dual_value) if con is not None else np.zeros(0)
            if dual.size == idx.size:
                target[idx] = dual

        solution = ConicSolution(
            status=status,
            x=np.asarray(x.value, dtype=float),
            y=_flatten_dual(eq.dual_value) if eq is not None else np.zeros(0),
            z=_flatten_dual(ineq.dual_value) if ineq is not None else np.zeros(0),
            s=[_flatten_dual(c.dual_value) for c in cones],
            mu_lb=mu_lb,
            mu_ub=mu_ub,
            objective=float(problem.value),
            iterations=iterations,
            solve_seconds=elapsed,
            accurate=problem.status == cp.OPTIMAL,
            message=str(problem.status),
        )
        solution.residuals = kkt_residuals(program, solution)
        return solution


def make_engine(backend: str = "cvxpy", solver: str = "CLARABEL", max_iterations: int = 200) -> ConicEngine:
    if backend != "cvxpy":
        raise ConicSolveError(f"unknown conic backend {backend!r}")
    return CvxpyEngine(solver=solver, max_iterations=max_iterations)

