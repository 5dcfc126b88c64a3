"""Dense linear and small mixed-integer program solver.

``solve_lp`` is a two-phase revised simplex on the bounded-variable form
(every variable has a finite lower bound, the upper bound may be infinite).
``solve_milp`` wraps it in a deterministic best-bound branch-and-bound.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
INT_TOL = 1e-6
NODE_LIMIT = 10**6
_REFACTOR_EVERY = 50

MAXIMIZE = "maximize"
MINIMIZE = "minimize"
RELATIONS = ("<=", "=", ">=")

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
NODE_LIMIT_STATUS = "NodeLimit"


class MalformedProblem(ValueError):
    """Problem data violates a structural invariant."""


class IterationLimit(RuntimeError):
    """The simplex iteration cap was exceeded."""


@dataclass
class LpProblem:
    """``sense c.x`` subject to ``A x (rel) b`` and ``lower <= x <= upper``.

    Arrays are coerced to float numpy arrays on construction; validation is
    deferred to :meth:`validate` so that solvers can reject bad input with
    :class:`MalformedProblem`.
    """

    objective: np.ndarray
    A: np.ndarray
    relations: list[str]
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    integer: np.ndarray | None = None
    sense: str = MAXIMIZE
    var_names: list[str] | None = None
    row_names: list[str] | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = self.objective.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        self.A = A
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.relations = list(self.relations)
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).reshape(-1)
        if self.integer is None:
            self.integer = np.zeros(n, dtype=bool)
        else:
            self.integer = np.asarray(self.integer, dtype=bool).reshape(-1)
        if self.var_names is None:
            self.var_names = [f"x{v}" for v in range(n)]
        if self.row_names is None:
            self.row_names = [f"r{i}" for i in range(len(self.relations))]

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return len(self.relations)

    def validate(self) -> None:
        n, m = self.n_vars, self.n_rows
        if self.sense not in (MAXIMIZE, MINIMIZE):
            raise MalformedProblem(f"unknown sense {self.sense!r}")
        if self.A.ndim != 2 or self.A.shape != (m, n):
            raise MalformedProblem(f"constraint matrix has shape {self.A.shape}, expected {(m, n)}")
        if self.rhs.size != m:
            raise MalformedProblem(f"{self.rhs.size} right-hand sides for {m} rows")
        for name, arr in (("lower", self.lower), ("upper", self.upper), ("integer", self.integer)):
            if arr.size != n:
                raise MalformedProblem(f"{name} has length {arr.size}, expected {n}")
        if len(self.var_names) != n or len(self.row_names) != m:
            raise MalformedProblem("label count does not match problem dimensions")
        bad = [r for r in self.relations if r not in RELATIONS]
        if bad:
            raise MalformedProblem(f"unknown relation {bad[0]!r}")
        for name, arr in (("objective", self.objective), ("A", self.A), ("rhs", self.rhs)):
            if not np.all(np.isfinite(arr)):
                raise MalformedProblem(f"non-finite value in {name}")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise MalformedProblem("NaN variable bound")
        if not np.all(np.isfinite(self.lower)):
            raise MalformedProblem("lower bounds must be finite")
        if np.any(self.upper == -np.inf):
            raise MalformedProblem("upper bound of -inf")
        bad = np.flatnonzero(self.lower > self.upper)
        if bad.size:
            v = bad[0]
            raise MalformedProblem(
                f"{self.var_names[v]}: lower {self.lower[v]} > upper {self.upper[v]}")
        if np.any(self.integer & ~np.isfinite(self.upper)):
            raise MalformedProblem("integer variables need finite bounds")

    def with_bounds(self, lower, upper) -> "LpProblem":
        return replace(self, lower=np.array(lower, dtype=float), upper=np.array(upper, dtype=float))

    def relaxation(self) -> "LpProblem":
        return replace(self, integer=np.zeros(self.n_vars, dtype=bool))


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    dual_objective: float | None = None
    iterations: int = 0


@dataclass
class MilpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    nodes: int = 0
    best_bound: float | None = None
    lp_iterations: int = 0


class _Simplex:
    """Revised simplex state over shifted variables ``0 <= x' <= ub``."""

    def __init__(self, A, b, ub, max_iter, bland_after):
        self.A = A
        self.b = b
        self.ub = ub
        self.m, self.ntot = A.shape
        self.max_iter = max_iter
        self.bland_after = bland_after
        self.iterations = 0
        self.degenerate = 0
        self.at_upper = np.zeros(self.ntot, dtype=bool)

    def set_basis(self, basis):
        self.basis = np.array(basis, dtype=int)
        self.refactor()

    def nonbasic_values(self):
        x = np.where(self.at_upper, self.ub, 0.0)
        x[self.basis] = 0.0
        return x

    def refactor(self):
        B = self.A[:, self.basis]
        self.Binv = np.linalg.inv(B) if self.m else np.zeros((0, 0))
        xn = self.nonbasic_values()
        self.xB = self.Binv @ (self.b - self.A @ xn)

    def values(self):
        x = self.nonbasic_values()
        x[self.basis] = self.xB
        return x

    def duals(self, cost):
        return cost[self.basis] @ self.Binv

    def run(self, cost, allowed):
        """Iterate to optimality; returns OPTIMAL or UNBOUNDED."""
        is_basic = np.zeros(self.ntot, dtype=bool)
        since_refactor = 0
        while True:
            is_basic[:] = False
            is_basic[self.basis] = True
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A
            movable = allowed & ~is_basic & (self.ub > 0)
            improving = movable & np.where(self.at_upper, d > PIVOT_TOL, d < -PIVOT_TOL)
            cand = np.flatnonzero(improving)
            if cand.size == 0:
                return OPTIMAL
            if self.iterations >= self.max_iter:
                raise IterationLimit(f"simplex exceeded {self.max_iter} iterations")
            self.iterations += 1

            bland = self.degenerate >= self.bland_after
            if bland:
                q = cand[0]
            else:
                q = cand[np.argmax(np.abs(d[cand]))]
            direction = -1.0 if self.at_upper[q] else 1.0
            alpha = self.Binv @ self.A[:, q]
            step = direction * alpha

            ratios = np.full(self.m, np.inf)
            ub_b = self.ub[self.basis]
            dec = step > PIVOT_TOL
            inc = (step < -PIVOT_TOL) & np.isfinite(ub_b)
            ratios[dec] = self.xB[dec] / step[dec]
            ratios[inc] = (ub_b[inc] - self.xB[inc]) / (-step[inc])
            np.maximum(ratios, 0.0, out=ratios)
            theta_row = ratios.min() if self.m else np.inf
            theta_flip = self.ub[q]

            if not np.isfinite(theta_row) and not np.isfinite(theta_flip):
                return UNBOUNDED

            if theta_flip <= theta_row:
                theta = theta_flip
                self.xB -= theta * step
                self.at_upper[q] = not self.at_upper[q]
            else:
                theta = theta_row
                ties = np.flatnonzero(ratios <= theta + 1e-12 * max(1.0, theta))
                if bland:
                    r = ties[np.argmin(self.basis[ties])]
                else:
                    mags = np.abs(alpha[ties])
                    best = ties[mags >= mags.max() - 1e-12]
                    r = best[np.argmin(self.basis[best])]
                leaving = self.basis[r]
                entering_value = theta if direction > 0 else self.ub[q] - theta
                self.xB -= theta * step
                self.at_upper[leaving] = bool(step[r] < 0)
                self.at_upper[q] = False
                self._pivot(r, q, alpha)
                self.xB[r] = entering_value
                since_refactor += 1
                if since_refactor >= _REFACTOR_EVERY:
                    self.refactor()
                    since_refactor = 0
            if theta <= 1e-12:
                self.degenerate += 1

    def _pivot(self, r, q, alpha):
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.basis[r] = q


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve an LP, ignoring integrality flags."""
    problem.validate()
    m, n = problem.n_rows, problem.n_vars
    maximize = problem.sense == MAXIMIZE
    lower, upper = problem.lower, problem.upper

    scale = np.abs(problem.A).max(axis=1) if m else np.zeros(0)
    scale[scale == 0] = 1.0
    A = problem.A / scale[:, None]
    b = problem.rhs / scale
    rhs_shift = b - A @ lower
    sign = np.where(rhs_shift >= 0, 1.0, -1.0)

    slack_rows = [i for i, rel in enumerate(problem.relations) if rel != "="]
    k = len(slack_rows)
    S = np.zeros((m, k))
    for col, i in enumerate(slack_rows):
        S[i, col] = 1.0 if problem.relations[i] == "<=" else -1.0
    A_full = np.hstack([sign[:, None] * A, sign[:, None] * S, np.eye(m)])
    b_full = sign * rhs_shift
    ub = np.concatenate([upper - lower, np.full(k, np.inf), np.full(m, np.inf)])
    ntot = n + k + m
    art = np.zeros(ntot, dtype=bool)
    art[n + k:] = True

    sx = _Simplex(A_full, b_full, ub, max_iter=50 * (m + n + 1), bland_after=3 * (m + n))
    sx.set_basis(np.arange(n + k, ntot))

    phase1_cost = art.astype(float)
    sx.run(phase1_cost, ~art)
    infeas = float(phase1_cost @ sx.values())
    if infeas > FEAS_TOL * max(1.0, float(np.abs(b_full).max(initial=0.0))):
        return LpSolution(status=INFEASIBLE, iterations=sx.iterations)

    _drive_out_artificials(sx, art)
    sx.ub[art] = 0.0
    sx.refactor()

    obj_sign = -1.0 if maximize else 1.0
    cost = np.concatenate([obj_sign * problem.objective, np.zeros(k + m)])
    status = sx.run(cost, ~art)
    if status == UNBOUNDED:
        return LpSolution(status=UNBOUNDED, iterations=sx.iterations)
    sx.refactor()

    x = lower + sx.values()[:n]
    # clip drift from the last refactor back into the box
    x = np.minimum(np.maximum(x, lower), upper)
    y_int = sx.duals(cost)
    duals = obj_sign * sign * y_int / scale
    reduced = problem.objective - problem.A.T @ duals
    objective = float(problem.objective @ x)
    return LpSolution(
        status=OPTIMAL,
        x=x,
        objective=objective,
        duals=duals,
        reduced_costs=reduced,
        dual_objective=_dual_objective(problem, duals, reduced, x),
        iterations=sx.iterations,
    )


def _drive_out_artificials(sx: _Simplex, art: np.ndarray) -> None:
    for r in range(sx.m):
        if not art[sx.basis[r]]:
            continue
        basic = np.zeros(sx.ntot, dtype=bool)
        basic[sx.basis] = True
        cols = np.flatnonzero(~art & ~basic)
        if cols.size == 0:
            continue
        row = sx.Binv[r] @ sx.A[:, cols]
        mags = np.abs(row)
        if mags.max(initial=0.0) <= PIVOT_TOL:
            continue  # redundant row; the artificial stays basic at zero
        q = cols[np.argmax(mags)]
        sx._pivot(r, q, sx.Binv @ sx.A[:, q])
    sx.refactor()


def _dual_objective(problem, duals, reduced, x):
    maximize = problem.sense == MAXIMIZE
    total = float(problem.rhs @ duals)
    for v, d in enumerate(reduced):
        if abs(d) <= PIVOT_TOL:
            total += d * x[v]
            continue
        at_upper = (d > 0) == maximize
        bound = problem.upper[v] if at_upper else problem.lower[v]
        total += d * (bound if np.isfinite(bound) else x[v])
    return total


# --- branch and bound -------------------------------------------------------

@dataclass(order=True)
class _Node:
    key: float
    seq: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    branch_var: int = field(compare=False)
    branch_val: float = field(compare=False)


def _most_fractional(x, integer):
    frac = np.abs(x - np.round(x))
    frac[~integer] = 0.0
    v = int(np.argmax(frac))  # argmax returns the lowest index on ties
    return v if frac[v] > INT_TOL else None


def solve_milp(problem: LpProblem, node_limit: int = NODE_LIMIT,
               objective_step: float | None = None) -> MilpSolution:
    """Best-bound branch-and-bound over the integrality-flagged variables.

    ``objective_step`` declares that every integral-feasible objective value
    is a multiple of it; node bounds are then rounded down to that grid
    before pruning.
    """
    problem.validate()
    maximize = problem.sense == MAXIMIZE
    sgn = 1.0 if maximize else -1.0
    integer = problem.integer

    lower0 = problem.lower.copy()
    upper0 = problem.upper.copy()
    lower0[integer] = np.ceil(lower0[integer] - INT_TOL)
    upper0[integer] = np.floor(upper0[integer] + INT_TOL)
    if np.any(lower0 > upper0):
        return MilpSolution(status=INFEASIBLE)

    incumbent_x = None
    incumbent = -np.inf  # in maximization terms
    nodes = 0
    lp_iters = 0
    seq = 0
    heap: list[_Node] = []

    def evaluate(lo, up):
        nonlocal lp_iters
        sol = solve_lp(problem.with_bounds(lo, up))
        lp_iters += sol.iterations
        return sol

    root = evaluate(lower0, upper0)
    nodes += 1
    if root.status == INFEASIBLE:
        return MilpSolution(status=INFEASIBLE, nodes=nodes, lp_iterations=lp_iters)
    if root.status == UNBOUNDED:
        return MilpSolution(status=UNBOUNDED, nodes=nodes, lp_iterations=lp_iters)
    pending = [(root, lower0, upper0)]

    while True:
        for sol, lo, up in pending:
            if sol.status != OPTIMAL:
                continue
            bound = _snap(sgn * sol.objective, objective_step)
            if bound <= incumbent + _gap_tol(incumbent):
                continue
            v = _most_fractional(sol.x, integer)
            if v is None:
                incumbent = bound
                incumbent_x = sol.x.copy()
                incumbent_x[integer] = np.round(incumbent_x[integer])
                continue
            heapq.heappush(heap, _Node(-bound, seq, lo, up, v, float(sol.x[v])))
            seq += 1
        pending = []
        # best-bound order: if the top node cannot win, none can
        if heap and -heap[0].key <= incumbent + _gap_tol(incumbent):
            heap = []
        if not heap:
            break
        if nodes >= node_limit:
            best_bound = sgn * max(-heap[0].key, incumbent)
            return MilpSolution(
                status=NODE_LIMIT_STATUS,
                x=incumbent_x,
                objective=None if incumbent_x is None else sgn * incumbent,
                nodes=nodes,
                best_bound=best_bound,
                lp_iterations=lp_iters,
            )
        node = heapq.heappop(heap)
        v, val = node.branch_var, node.branch_val
        down_up = node.upper.copy()
        down_up[v] = math.floor(val)
        up_lo = node.lower.copy()
        up_lo[v] = math.ceil(val)
        for lo, up in ((node.lower, down_up), (up_lo, node.upper)):
            if lo[v] > up[v]:
                continue
            nodes += 1
            pending.append((evaluate(lo, up), lo, up))

    if incumbent_x is None:
        return MilpSolution(status=INFEASIBLE, nodes=nodes, lp_iterations=lp_iters)
    objective = float(problem.objective @ incumbent_x)
    return MilpSolution(
        status=OPTIMAL,
        x=incumbent_x,
        objective=objective,
        nodes=nodes,
        best_bound=objective,
        lp_iterations=lp_iters,
    )


def _snap(bound, step):
    if step is None:
        return bound
    return step * math.floor(bound / step + 1e-9)


def _gap_tol(incumbent):
    if not np.isfinite(incumbent):
        return 0.0
    return 1e-9 * max(1.0, abs(incumbent))


def format_lp(problem: LpProblem) -> str:
    """Render a problem in a CPLEX-like LP text form for inspection.

    Layout: a ``maximize``/``minimize`` line, ``obj:`` expression,
    ``subject to`` with one ``name: expr rel rhs`` row per line, a
    ``bounds`` section, an optional ``general`` list, then ``end``.
    """

    def expr(coeffs):
        terms = []
        for v, a in enumerate(coeffs):
            if a == 0:
                continue
            sgn = "-" if a < 0 else "+"
            mag = abs(a)
            coef = "" if mag == 1 else f"{mag:g} "
            terms.append(f"{sgn} {coef}{problem.var_names[v]}")
        if not terms:
            return "0"
        text = " ".join(terms)
        return text[2:] if text.startswith("+ ") else text

    lines = [problem.sense, f"  obj: {expr(problem.objective)}", "subject to"]
    for i in range(problem.n_rows):
        lines.append(f"  {problem.row_names[i]}: {expr(problem.A[i])} "
                     f"{problem.relations[i]} {problem.rhs[i]:g}")
    lines.append("bounds")
    for v in range(problem.n_vars):
        lines.append(f"  {problem.lower[v]:g} <= {problem.var_names[v]} <= {problem.upper[v]:g}")
    ints = [problem.var_names[v] for v in np.flatnonzero(problem.integer)]
    if ints:
        lines.append("general")
        lines.append("  " + " ".join(ints))
    lines.append("end")
    return "\n".join(lines) + "\n"


def make_problem(objective: Sequence[float], rows: Sequence[tuple], sense=MAXIMIZE, **kw) -> LpProblem:
    """Convenience constructor from ``(coeffs, relation, rhs)`` row triples."""
    n = len(objective)
    A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), n)
    return LpProblem(objective=objective, A=A, relations=[r[1] for r in rows],
                     rhs=[r[2] for r in rows], sense=sense, **kw)
