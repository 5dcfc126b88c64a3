"""Independent brute-force oracles and random instance generators for the tests."""

from __future__ import annotations

import itertools

import numpy as np

from ofdmflow.lp_core import LpProblem
from ofdmflow.robust_gainflow import Arc, DemandUncertainty, GainNetwork, Node, UncertainNode


def lp_vertex_oracle(problem: LpProblem, tol=1e-9):
    """Optimum over all basic solutions of a bounded LP.

    Returns ``None`` when no basic solution is feasible (the polytope is
    bounded, so that means infeasible).
    """
    n, m = problem.n_vars, problem.n_rows
    rows = [(problem.A[i], problem.rhs[i]) for i in range(m)]
    for v in range(n):
        e = np.zeros(n)
        e[v] = 1.0
        rows.append((e, problem.lower[v]))
        rows.append((e, problem.upper[v]))
    # equality rows are enforced by the feasibility filter below
    combos = list(itertools.combinations(range(len(rows)), n))
    M = np.stack([np.stack([rows[k][0] for k in c]) for c in combos])
    r = np.array([[rows[k][1] for k in c] for c in combos])
    ok = np.abs(np.linalg.det(M)) > 1e-9
    if not ok.any():
        return None
    X = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]
    feas = np.all(X >= problem.lower - tol, axis=1) & np.all(X <= problem.upper + tol, axis=1)
    lhs = X @ problem.A.T
    for i, rel in enumerate(problem.relations):
        scale = max(1.0, np.abs(problem.A[i]).max())
        if rel == "<=":
            feas &= lhs[:, i] <= problem.rhs[i] + tol * scale
        elif rel == ">=":
            feas &= lhs[:, i] >= problem.rhs[i] - tol * scale
        else:
            feas &= np.abs(lhs[:, i] - problem.rhs[i]) <= tol * scale
    if not feas.any():
        return None
    obj = X[feas] @ problem.objective
    return obj.max() if problem.sense == "maximize" else obj.min()


def milp_enumeration_oracle(problem: LpProblem):
    """Exact optimum of a pure-binary program by enumerating 2^n points."""
    n = problem.n_vars
    pts = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    lhs = pts @ problem.A.T
    feas = np.ones(len(pts), dtype=bool)
    for i, rel in enumerate(problem.relations):
        if rel == "<=":
            feas &= lhs[:, i] <= problem.rhs[i] + 1e-9
        elif rel == ">=":
            feas &= lhs[:, i] >= problem.rhs[i] - 1e-9
        else:
            feas &= np.abs(lhs[:, i] - problem.rhs[i]) <= 1e-9
    if not feas.any():
        return None
    obj = pts[feas] @ problem.objective
    return obj.max() if problem.sense == "maximize" else obj.min()


def random_bounded_lp(rng: np.random.Generator, max_vars=6, max_rows=6) -> LpProblem:
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    lower = rng.integers(-5, 1, size=n).astype(float)
    upper = lower + rng.integers(1, 7, size=n)
    relations = [str(r) for r in rng.choice(["<=", ">=", "="], size=m, p=[0.45, 0.4, 0.15])]
    if rng.random() < 0.8:
        x0 = lower + rng.random(n) * (upper - lower)
        base = A @ x0
        slack = rng.random(m) * 4
        rhs = np.where([r == "<=" for r in relations], base + slack,
                       np.where([r == ">=" for r in relations], base - slack, base))
    else:
        rhs = rng.integers(-10, 11, size=m).astype(float)
    return LpProblem(
        objective=rng.integers(-5, 6, size=n),
        A=A,
        relations=relations,
        rhs=rhs,
        lower=lower,
        upper=upper,
        sense=str(rng.choice(["maximize", "minimize"])),
    )


def random_binary_program(rng: np.random.Generator, max_vars=12) -> LpProblem:
    n = int(rng.integers(2, max_vars + 1))
    m = int(rng.integers(1, 5))
    A = rng.integers(-3, 8, size=(m, n)).astype(float)
    relations = [str(r) for r in rng.choice(["<=", ">="], size=m, p=[0.75, 0.25])]
    rhs = []
    for i, rel in enumerate(relations):
        total = A[i].clip(min=0).sum()
        rhs.append(float(rng.integers(0, int(total) + 2)) * (0.6 if rel == "<=" else 0.3))
    return LpProblem(
        objective=rng.integers(-2, 10, size=n),
        A=A,
        relations=relations,
        rhs=np.floor(rhs),
        upper=np.ones(n),
        integer=np.ones(n, dtype=bool),
        sense=str(rng.choice(["maximize", "minimize"])),
    )


def random_gain_network(rng: np.random.Generator, max_nodes=8, max_arcs=16):
    """Random network whose balances are read off a random feasible flow.

    Returns ``(network, uncertainty)`` with uncertainty on a subset of the
    demand nodes.
    """
    n_nodes = int(rng.integers(2, max_nodes + 1))
    n_arcs = int(rng.integers(1, max_arcs + 1))
    ids = [f"v{i}" for i in range(n_nodes)]
    arcs = []
    flow = []
    for _ in range(n_arcs):
        t, h = rng.choice(n_nodes, size=2, replace=False)
        cap = float(rng.uniform(1.0, 10.0))
        gain = float(rng.uniform(0.3, 1.5))
        arcs.append(Arc(ids[t], ids[h], cap, gain, float(rng.uniform(0.5, 5.0))))
        flow.append(float(rng.uniform(0.0, 0.7)) * cap)
    balance = np.zeros(n_nodes)
    index = {v: i for i, v in enumerate(ids)}
    for a, f in zip(arcs, flow):
        balance[index[a.tail]] += f
        balance[index[a.head]] -= a.gain * f
    nodes = [Node(ids[i], float(balance[i])) for i in range(n_nodes)]
    demand = [nd.id for nd in nodes if nd.balance < 0]
    uncertain = []
    for nid in demand:
        if rng.random() < 0.6:
            b = -index_balance(nodes, nid)
            uncertain.append(UncertainNode(nid, float(rng.uniform(0.0, 0.5) * b), 1.0))
    return GainNetwork(nodes, arcs), DemandUncertainty(uncertain)


def index_balance(nodes, nid):
    return next(n.balance for n in nodes if n.id == nid)
