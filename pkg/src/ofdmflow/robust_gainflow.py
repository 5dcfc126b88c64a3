"""Generalized min-cost flow with arc gains, robust to uncertain node demand.

Demand uncertainty is moved into the coefficient matrix: every uncertain
node receives a unit-flow artificial arc from a super source whose gain
carries the node's balance. A budgeted (per-row Gamma) robust counterpart
then protects each affected row against deviating coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .lp_core import OPTIMAL, LpProblem, MalformedProblem, solve_lp

SUPER_NODE = "__super__"
ROBUST_TOL = 1e-7


class EqualityUnderUncertainty(ValueError):
    """An equality row carries an uncertain coefficient."""


SUPPLY, DEMAND, TRANSSHIP = "supply", "demand", "transship"


@dataclass(frozen=True)
class Node:
    """A node and its balance (supply > 0, demand < 0).

    ``kind`` fixes the row form and is inferred from the balance sign when
    omitted; the transform keeps the kind of nodes whose balance it zeroes.
    """

    id: str
    balance: float = 0.0
    kind: str | None = None

    @property
    def row_kind(self) -> str:
        if self.kind is not None:
            return self.kind
        if self.balance > 0:
            return SUPPLY
        return DEMAND if self.balance < 0 else TRANSSHIP

    @property
    def is_demand(self) -> bool:
        return self.row_kind == DEMAND


@dataclass(frozen=True)
class Arc:
    tail: str
    head: str
    capacity: float
    gain: float = 1.0
    cost: float = 0.0
    artificial: bool = False


@dataclass
class GainNetwork:
    nodes: list[Node]
    arcs: list[Arc]

    def validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise MalformedProblem("node labels must be unique")
        known = set(ids)
        for k, a in enumerate(self.arcs):
            if a.tail not in known or a.head not in known:
                raise MalformedProblem(f"arc {k} references an unknown node")
            if a.tail == a.head:
                raise MalformedProblem(f"arc {k} is a self-loop at {a.tail}")
            if a.artificial:
                continue
            if not (math.isfinite(a.capacity) and a.capacity >= 0):
                raise MalformedProblem(f"arc {k} needs a finite capacity >= 0")
            if not (math.isfinite(a.gain) and a.gain > 0):
                raise MalformedProblem(f"arc {k} needs a positive gain")
            if not math.isfinite(a.cost):
                raise MalformedProblem(f"arc {k} has a non-finite cost")
        for n in self.nodes:
            if not math.isfinite(n.balance):
                raise MalformedProblem(f"node {n.id} has a non-finite balance")
            kind = n.row_kind
            if kind not in (SUPPLY, DEMAND, TRANSSHIP):
                raise MalformedProblem(f"node {n.id}: unknown kind {kind!r}")
            if (kind == SUPPLY and n.balance < 0) or (kind == DEMAND and n.balance > 0) \
                    or (kind == TRANSSHIP and n.balance != 0):
                raise MalformedProblem(f"node {n.id}: balance {n.balance} contradicts kind {kind}")

    def node_index(self) -> dict[str, int]:
        return {n.id: i for i, n in enumerate(self.nodes)}

    def real_arcs(self) -> list[int]:
        return [k for k, a in enumerate(self.arcs) if not a.artificial]


@dataclass(frozen=True)
class UncertainNode:
    node: str
    deviation: float
    gamma: float = 1.0


@dataclass
class DemandUncertainty:
    entries: list[UncertainNode] = field(default_factory=list)

    def validate(self) -> None:
        seen = set()
        for e in self.entries:
            if e.node in seen:
                raise ValueError(f"node {e.node} listed twice as uncertain")
            seen.add(e.node)
            if not e.deviation >= 0:
                raise ValueError(f"node {e.node}: deviation must be >= 0")
            # one artificial arc per node means one uncertain coefficient per row
            if not 0 <= e.gamma <= 1:
                raise ValueError(f"node {e.node}: gamma must lie in [0, 1]")


@dataclass(frozen=True)
class UncertainGain:
    row: int  # node index in the transformed network
    arc: int  # artificial arc index
    nominal: float
    deviation: float
    gamma: float


@dataclass
class RobustFlowSolution:
    status: str
    flows: np.ndarray | None = None  # real arcs, in network order
    objective: float | None = None
    protection: dict = field(default_factory=dict)  # z/p variable name -> value
    artificial_flows: dict = field(default_factory=dict)
    protected_demand: dict = field(default_factory=dict)  # node -> demand the flow must cover


def build_gainflow_lp(network: GainNetwork) -> LpProblem:
    """Minimize cost; one gain-scaled balance row per node.

    Transshipment: ``out - gain*in = 0``. Supply: ``out - gain*in >= b``
    (at least the supply is injected). Demand: ``gain*in - out >= -b``
    (free disposal). An artificial arc entering a node contributes
    ``-gain`` in that row's own orientation.
    """
    network.validate()
    index = network.node_index()
    m, n = len(network.nodes), len(network.arcs)
    A = np.zeros((m, n))
    lower = np.zeros(n)
    upper = np.zeros(n)
    for k, a in enumerate(network.arcs):
        t, h = index[a.tail], index[a.head]
        if a.artificial:
            lower[k] = upper[k] = 1.0
            A[h, k] -= a.gain
            A[t, k] += -1.0 if network.nodes[t].is_demand else 1.0
            continue
        upper[k] = a.capacity
        head_demand = network.nodes[h].is_demand
        tail_demand = network.nodes[t].is_demand
        A[t, k] += -1.0 if tail_demand else 1.0
        A[h, k] += a.gain if head_demand else -a.gain
    relations, rhs = [], []
    for node in network.nodes:
        kind = node.row_kind
        relations.append("=" if kind == TRANSSHIP else ">=")
        rhs.append(-node.balance if kind == DEMAND else node.balance)
    return LpProblem(
        objective=[a.cost for a in network.arcs],
        A=A,
        relations=relations,
        rhs=rhs,
        lower=lower,
        upper=upper,
        sense="minimize",
        var_names=[f"f{k}[{a.tail}->{a.head}]" for k, a in enumerate(network.arcs)],
        row_names=[node.id for node in network.nodes],
    )


def transform_demand_to_gain(network: GainNetwork, uncertainty: DemandUncertainty):
    """Move uncertain balances onto unit-flow artificial arcs.

    Returns the transformed network and a list of :class:`UncertainGain`.
    Nominal gains are ``-b`` for demand nodes and ``+b`` otherwise, so the
    arc's row coefficient ``-gain`` reproduces the original balance term.
    """
    uncertainty.validate()
    if not uncertainty.entries:
        return network, []
    index = network.node_index()
    for e in uncertainty.entries:
        if e.node not in index:
            raise MalformedProblem(f"uncertain node {e.node!r} is not in the network")
    if SUPER_NODE in index:
        raise MalformedProblem(f"node label {SUPER_NODE!r} is reserved")

    by_node = {e.node: e for e in uncertainty.entries}
    nodes = []
    for node in network.nodes:
        if node.id in by_node:
            nodes.append(Node(node.id, 0.0, kind=node.row_kind))
        else:
            nodes.append(node)
    nodes.append(Node(SUPER_NODE, float(len(uncertainty.entries)), kind=SUPPLY))

    arcs = list(network.arcs)
    gains = []
    for e in uncertainty.entries:
        node = network.nodes[index[e.node]]
        nominal = -node.balance if node.is_demand else node.balance
        arcs.append(Arc(SUPER_NODE, e.node, capacity=1.0, gain=nominal, cost=0.0, artificial=True))
        gains.append(UncertainGain(index[e.node], len(arcs) - 1, nominal, e.deviation, e.gamma))
    return GainNetwork(nodes, arcs), gains


def robust_counterpart(problem: LpProblem, uncertain, gamma) -> LpProblem:
    """Budgeted robust counterpart of ``problem``.

    ``uncertain`` lists ``(row, variable, deviation)`` triples; ``gamma``
    maps row -> budget in [0, number of uncertain entries in the row].
    For each row, ``z >= 0`` and ``p_v >= 0`` are added with
    ``z + p_v >= deviation * x_v``, and the row is tightened by
    ``gamma * z + sum(p)`` on its binding side.
    """
    problem.validate()
    rows: dict[int, list[tuple[int, float]]] = {}
    for row, var, dev in uncertain:
        if problem.relations[row] == "=" and dev != 0:
            raise EqualityUnderUncertainty(
                f"row {problem.row_names[row]!r} is an equality with an uncertain coefficient")
        if problem.lower[var] < 0:
            raise MalformedProblem(f"uncertain variable {problem.var_names[var]} may be negative")
        rows.setdefault(row, []).append((var, float(dev)))
    for row, entries in rows.items():
        g = gamma.get(row, 0.0)
        if not 0 <= g <= len(entries):
            raise ValueError(f"gamma {g} for row {problem.row_names[row]!r} outside [0, {len(entries)}]")

    n0, m0 = problem.n_vars, problem.n_rows
    extra_names, extra_rows = [], []
    new_cols = []  # (row, coefficient) per added column, filled below
    for row in sorted(rows):
        entries = rows[row]
        side = 1.0 if problem.relations[row] == "<=" else -1.0
        z = n0 + len(new_cols)
        new_cols.append([(row, side * gamma.get(row, 0.0))])
        extra_names.append(f"z[{problem.row_names[row]}]")
        for var, dev in entries:
            p = n0 + len(new_cols)
            new_cols.append([(row, side)])
            extra_names.append(f"p[{problem.row_names[row]},{problem.var_names[var]}]")
            extra_rows.append((z, p, var, dev, f"prot[{problem.row_names[row]},{problem.var_names[var]}]"))

    n1 = n0 + len(new_cols)
    m1 = m0 + len(extra_rows)
    A = np.zeros((m1, n1))
    A[:m0, :n0] = problem.A
    for c, entries in enumerate(new_cols):
        for row, coef in entries:
            A[row, n0 + c] = coef
    for k, (z, p, var, dev, _) in enumerate(extra_rows):
        A[m0 + k, z] = 1.0
        A[m0 + k, p] = 1.0
        A[m0 + k, var] -= dev
    return LpProblem(
        objective=np.concatenate([problem.objective, np.zeros(n1 - n0)]),
        A=A,
        relations=problem.relations + [">="] * len(extra_rows),
        rhs=np.concatenate([problem.rhs, np.zeros(len(extra_rows))]),
        lower=np.concatenate([problem.lower, np.zeros(n1 - n0)]),
        upper=np.concatenate([problem.upper, np.full(n1 - n0, np.inf)]),
        integer=np.concatenate([problem.integer, np.zeros(n1 - n0, dtype=bool)]),
        sense=problem.sense,
        var_names=problem.var_names + extra_names,
        row_names=problem.row_names + [r[4] for r in extra_rows],
    )


def interval_worst_case(problem: LpProblem, uncertain) -> LpProblem:
    """Every uncertain coefficient moved fully to its harmful extreme."""
    A = problem.A.copy()
    for row, var, dev in uncertain:
        if problem.relations[row] == "<=":
            A[row, var] += dev
        elif problem.relations[row] == ">=":
            A[row, var] -= dev
        else:
            raise EqualityUnderUncertainty(f"row {problem.row_names[row]!r}")
    return replace(problem, A=A)


def _uncertain_triples(gains):
    return [(g.row, g.arc, g.deviation) for g in gains]


def protected_demand(network: GainNetwork, uncertainty: DemandUncertainty) -> dict:
    """Demand level each uncertain demand node must be able to absorb."""
    index = network.node_index()
    out = {}
    for e in uncertainty.entries:
        node = network.nodes[index[e.node]]
        if node.is_demand:
            out[e.node] = -node.balance + e.gamma * e.deviation
    return out


def solve_robust_gainflow(network: GainNetwork, uncertainty: DemandUncertainty) -> RobustFlowSolution:
    transformed, gains = transform_demand_to_gain(network, uncertainty)
    nominal = build_gainflow_lp(transformed)
    robust = robust_counterpart(nominal, _uncertain_triples(gains), {g.row: g.gamma for g in gains})
    sol = solve_lp(robust)
    demand = protected_demand(network, uncertainty)
    if sol.status != OPTIMAL:
        return RobustFlowSolution(status=sol.status, protected_demand=demand)

    n_real = len(network.arcs)
    x = sol.x
    protection = {}
    for v in range(nominal.n_vars, robust.n_vars):
        protection[robust.var_names[v]] = float(x[v])
    artificial = {transformed.arcs[g.arc].head: float(x[g.arc]) for g in gains}
    flows = x[:n_real].copy()
    return RobustFlowSolution(
        status=OPTIMAL,
        flows=flows,
        objective=float(np.dot([a.cost for a in network.arcs], flows)),
        protection=protection,
        artificial_flows=artificial,
        protected_demand=demand,
    )


@dataclass
class OracleReport:
    feasible: bool
    row: str | None = None
    violation: float = 0.0


def worst_case_oracle(network: GainNetwork, uncertainty: DemandUncertainty, flows) -> OracleReport:
    """Check ``flows`` against the adversary that spends each row's budget.

    Per row the adversary deviates the ``floor(gamma)`` most damaging
    coefficients fully and the next one by the fractional remainder.
    """
    transformed, gains = transform_demand_to_gain(network, uncertainty)
    lp = build_gainflow_lp(transformed)
    x = np.concatenate([np.asarray(flows, dtype=float), np.ones(len(gains))])
    lhs = lp.A @ x
    damage = {}
    for g in gains:
        damage.setdefault(g.row, ([], g.gamma))[0].append(g.deviation * abs(x[g.arc]))

    worst_row, worst = None, -np.inf
    for i in range(lp.n_rows):
        hit = 0.0
        if i in damage:
            devs, gamma = damage[i]
            devs = sorted(devs, reverse=True)
            full = int(math.floor(gamma))
            hit = sum(devs[:full])
            if full < len(devs):
                hit += (gamma - full) * devs[full]
        rel = lp.relations[i]
        if rel == ">=":
            violation = lp.rhs[i] - (lhs[i] - hit)
        elif rel == "<=":
            violation = lhs[i] + hit - lp.rhs[i]
        else:
            violation = abs(lhs[i] - lp.rhs[i])
        if violation > worst:
            worst_row, worst = lp.row_names[i], float(violation)
    if worst <= ROBUST_TOL:
        return OracleReport(feasible=True, violation=max(worst, 0.0))
    return OracleReport(feasible=False, row=worst_row, violation=worst)
