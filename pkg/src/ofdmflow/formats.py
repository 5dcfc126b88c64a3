"""Readers and writers for the scenario, trace, assignment, network and flow files.

All indices in files are 1-based (owner 0 marks an unassigned subcarrier).
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .channel_model import ChannelTrace, DomainError, RateTable, Scenario
from .maxmin_assign import Assignment
from .robust_gainflow import (
    DEMAND,
    Arc,
    DemandUncertainty,
    GainNetwork,
    Node,
    RobustFlowSolution,
    UncertainNode,
)


class FormatError(ValueError):
    """A file parsed but its content is invalid."""


SCENARIO_KEYS = (
    "n_subcarriers",
    "n_terminals",
    "n_phases",
    "phase_duration",
    "total_power",
    "noise_power",
    "cell_radius",
    "min_distance",
    "pathloss_exponent",
    "shadowing_sigma",
    "symbols_per_phase",
    "target_ber",
    "seed",
)
_INT_KEYS = {"n_subcarriers", "n_terminals", "n_phases", "symbols_per_phase", "seed"}


def _read_json(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise FormatError("scenario must be a JSON object")
    allowed = set(SCENARIO_KEYS) | {"rate_table"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise FormatError(f"unknown scenario key(s): {', '.join(unknown)}")
    missing = [k for k in SCENARIO_KEYS if k not in data]
    if missing:
        raise FormatError(f"missing scenario key(s): {', '.join(missing)}")
    values = {}
    for key in SCENARIO_KEYS:
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise FormatError(f"scenario key {key!r} must be a number")
        if key in _INT_KEYS and not isinstance(v, int):
            raise FormatError(f"scenario key {key!r} must be an integer")
        values[key] = v
    table = None
    if "rate_table" in data:
        table = _rate_table_from_json(data["rate_table"])
    try:
        return Scenario(**values, rate_table_override=table)
    except ValueError as exc:
        raise FormatError(f"invalid scenario: {exc}") from exc


def _rate_table_from_json(levels) -> RateTable:
    if not isinstance(levels, list) or not levels:
        raise FormatError("rate_table must be a non-empty list")
    th, bits = [], []
    for k, level in enumerate(levels):
        if not isinstance(level, dict) or set(level) != {"threshold_db", "bits_per_symbol"}:
            raise FormatError(f"rate_table[{k}] needs exactly threshold_db and bits_per_symbol")
        th.append(10.0 ** (float(level["threshold_db"]) / 10.0))
        bits.append(int(level["bits_per_symbol"]))
    try:
        return RateTable(tuple(th), tuple(bits))
    except DomainError as exc:
        raise FormatError(f"rate_table: {exc}") from exc


def load_scenario(path) -> Scenario:
    return scenario_from_dict(_read_json(path))


def scenario_to_dict(scenario: Scenario) -> dict:
    data = {k: getattr(scenario, k) for k in SCENARIO_KEYS}
    table = scenario.rate_table_override
    if table is not None:
        data["rate_table"] = [
            {"threshold_db": 10.0 * math.log10(t), "bits_per_symbol": b}
            for t, b in zip(table.thresholds, table.bits)
        ]
    return data


# --- channel trace -----------------------------------------------------------

TRACE_HEADER = ["phase", "subcarrier", "terminal", "attenuation"]


def format_trace(trace: ChannelTrace) -> str:
    a = trace.attenuation
    N, J, T = a.shape
    buf = io.StringIO()
    buf.write(",".join(TRACE_HEADER) + "\n")
    for t in range(T):
        for n in range(N):
            for j in range(J):
                buf.write(f"{t + 1},{n + 1},{j + 1},{float(a[n, j, t])!r}\n")
    return buf.getvalue()


def write_trace(trace: ChannelTrace, path) -> None:
    Path(path).write_text(format_trace(trace), encoding="utf-8")


def read_trace(path, scenario: Scenario) -> ChannelTrace:
    N, J, T = scenario.n_subcarriers, scenario.n_terminals, scenario.n_phases
    a = np.full((N, J, T), np.nan)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise FormatError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                t, n, j = (int(x) for x in row[:3])
                value = float(row[3])
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed row") from exc
            if not (1 <= t <= T and 1 <= n <= N and 1 <= j <= J):
                raise FormatError(
                    f"{path}:{lineno}: index ({t},{n},{j}) outside scenario dimensions {T}x{N}x{J}")
            if not (math.isfinite(value) and value > 0):
                raise FormatError(f"{path}:{lineno}: attenuation must be finite and > 0")
            a[n - 1, j - 1, t - 1] = value
    if np.isnan(a).any():
        raise FormatError(f"{path}: trace does not cover all {N * J * T} (phase, subcarrier, terminal) entries")
    return ChannelTrace(attenuation=a, distances=np.full(J, np.nan), scenario=scenario)


# --- assignment ----------------------------------------------------------------

def format_assignment(assignment: Assignment) -> str:
    lines = ["subcarrier,owner"]
    lines += [f"{n + 1},{int(o)}" for n, o in enumerate(assignment.owner)]
    lines.append(f"# epsilon={int(assignment.epsilon)}")
    return "\n".join(lines) + "\n"


def write_assignment(assignment: Assignment, path) -> None:
    Path(path).write_text(format_assignment(assignment), encoding="utf-8")


def read_assignment(path):
    """Return ``(owner array, epsilon)`` from an assignment CSV."""
    owner, epsilon = [], None
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "subcarrier,owner":
        raise FormatError(f"{path}: expected header subcarrier,owner")
    for line in lines[1:]:
        if line.startswith("# epsilon="):
            epsilon = int(line.split("=", 1)[1])
            continue
        n, o = (int(x) for x in line.split(","))
        if n != len(owner) + 1:
            raise FormatError(f"{path}: subcarriers out of order at {n}")
        owner.append(o)
    if epsilon is None:
        raise FormatError(f"{path}: missing epsilon trailer")
    return np.array(owner, dtype=np.int64), epsilon


# --- gain network ----------------------------------------------------------------

def network_from_dict(data: dict):
    """Parse the network JSON into ``(GainNetwork, DemandUncertainty)``.

    A node listed as uncertain with zero nominal balance is treated as a
    (possibly empty) demand node.
    """
    if not isinstance(data, dict):
        raise FormatError("network must be a JSON object")
    unknown = sorted(set(data) - {"nodes", "arcs", "uncertain"})
    if unknown:
        raise FormatError(f"unknown network key(s): {', '.join(unknown)}")
    try:
        uncertain = [
            UncertainNode(str(u["node"]), float(u["deviation"]), float(u.get("gamma", 1.0)))
            for u in data.get("uncertain", [])
        ]
        flagged = {u.node for u in uncertain}
        nodes = []
        for raw in data["nodes"]:
            nid, balance = str(raw["id"]), float(raw.get("balance", 0.0))
            kind = DEMAND if nid in flagged and balance == 0 else None
            nodes.append(Node(nid, balance, kind))
        arcs = [
            Arc(str(a["tail"]), str(a["head"]), float(a["capacity"]),
                float(a.get("gain", 1.0)), float(a.get("cost", 0.0)))
            for a in data["arcs"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed network: {exc!r}") from exc
    return GainNetwork(nodes, arcs), DemandUncertainty(uncertain)


def load_network(path):
    return network_from_dict(_read_json(path))


def format_flows(network: GainNetwork, solution: RobustFlowSolution) -> str:
    lines = ["tail,head,flow,cost"]
    for a, f in zip(network.arcs, solution.flows):
        lines.append(f"{a.tail},{a.head},{_num(f)},{_num(a.cost * f)}")
    lines.append(f"# objective={_num(solution.objective)}")
    return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    x = float(x)
    if x == 0:
        x = 0.0  # no "-0"
    return f"{x:.12g}"
