"""Max-min throughput subcarrier assignment at equal power.

Owners are 1-based terminal indices with 0 meaning "unassigned", the same
convention the assignment CSV uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lp_core import OPTIMAL, LpProblem, MalformedProblem, solve_milp

BRUTE_FORCE_LOG2_LIMIT = 24
_CHUNK = 1 << 16


class TooLarge(ValueError):
    """Enumeration space exceeds the brute-force guard."""


class SolverFailure(RuntimeError):
    pass


@dataclass
class RateMatrix:
    rates: np.ndarray  # (J, N) bits per phase
    tag: str = ""

    def __post_init__(self):
        r = np.asarray(self.rates)
        if r.ndim != 2:
            raise ValueError("rate matrix must be 2-D (terminals x subcarriers)")
        if r.size and (np.any(r < 0) or np.any(r != np.round(r))):
            raise ValueError("rates must be nonnegative integers")
        self.rates = r.astype(np.int64)

    @property
    def n_terminals(self) -> int:
        return self.rates.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.rates.shape[1]


@dataclass
class Assignment:
    owner: np.ndarray  # (N,), 0 = unassigned
    throughput: np.ndarray  # (J,)
    epsilon: int

    @classmethod
    def from_owner(cls, owner, rates: RateMatrix) -> "Assignment":
        owner = np.asarray(owner, dtype=np.int64)
        tp = throughput_vector(owner, rates)
        return cls(owner=owner, throughput=tp, epsilon=int(tp.min()))


def throughput_vector(owner, rates: RateMatrix) -> np.ndarray:
    owner = np.asarray(getattr(owner, "owner", owner), dtype=np.int64)
    J, N = rates.rates.shape
    if owner.shape != (N,):
        raise IndexError(f"owner vector has shape {owner.shape}, expected ({N},)")
    bad = np.flatnonzero((owner < 0) | (owner > J))
    if bad.size:
        raise IndexError(f"subcarrier {bad[0] + 1}: owner {owner[bad[0]]} out of range 0..{J}")
    tp = np.zeros(J, dtype=np.int64)
    for n, o in enumerate(owner):
        if o:
            tp[o - 1] += rates.rates[o - 1, n]
    return tp


def build_maxmin_milp(rates: RateMatrix) -> LpProblem:
    """Binary x[n,j] (n-major) then a continuous epsilon; maximize epsilon."""
    J, N = rates.rates.shape
    if J == 0 or N == 0:
        raise MalformedProblem("rate matrix has a zero dimension")
    nv = N * J + 1
    eps = nv - 1
    A = np.zeros((N + J, nv))
    for n in range(N):
        A[n, n * J:(n + 1) * J] = 1.0
    for j in range(J):
        A[N + j, j:N * J:J] = rates.rates[j]
        A[N + j, eps] = -1.0
    objective = np.zeros(nv)
    objective[eps] = 1.0
    upper = np.ones(nv)
    upper[eps] = np.inf
    integer = np.ones(nv, dtype=bool)
    integer[eps] = False
    var_names = [f"x_{n + 1}_{j + 1}" for n in range(N) for j in range(J)] + ["eps"]
    row_names = [f"carrier_{n + 1}" for n in range(N)] + [f"terminal_{j + 1}" for j in range(J)]
    return LpProblem(
        objective=objective,
        A=A,
        relations=["<="] * N + [">="] * J,
        rhs=np.r_[np.ones(N), np.zeros(J)],
        lower=np.zeros(nv),
        upper=upper,
        integer=integer,
        sense="maximize",
        var_names=var_names,
        row_names=row_names,
    )


def solve_maxmin(rates: RateMatrix) -> Assignment:
    J, N = rates.rates.shape
    # integer rates make every achievable epsilon an integer
    sol = solve_milp(build_maxmin_milp(rates), objective_step=1.0)
    if sol.status != OPTIMAL:
        raise SolverFailure(f"max-min MILP ended with status {sol.status}")
    x = np.round(sol.x[:-1]).reshape(N, J)
    owner = np.zeros(N, dtype=np.int64)
    for n in range(N):
        chosen = np.flatnonzero(x[n] > 0.5)
        if chosen.size:
            owner[n] = chosen[0] + 1
    result = Assignment.from_owner(owner, rates)
    if abs(result.epsilon - sol.objective) > 1e-6:
        raise SolverFailure(f"MILP objective {sol.objective} disagrees with recomputed {result.epsilon}")
    return result


def brute_force_maxmin(rates: RateMatrix) -> Assignment:
    """Enumerate all J^N full assignments in lexicographic owner order.

    Leaving a subcarrier unassigned never raises the minimum (rates are
    nonnegative), so only full assignments are visited. The first maximizer
    found, i.e. the lexicographically smallest owner vector, is returned.
    """
    J, N = rates.rates.shape
    if N * math.log2(max(J, 1)) > BRUTE_FORCE_LOG2_LIMIT:
        raise TooLarge(f"{J}^{N} assignments exceed the enumeration guard")
    total = J**N
    powers = J ** np.arange(N - 1, -1, -1, dtype=np.int64)
    r = rates.rates
    best_eps, best_index = -1, 0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % J  # (chunk, N), digit n = owner of carrier n
        tp = np.zeros((idx.size, J), dtype=np.int64)
        for j in range(J):
            tp[:, j] = (r[j][None, :] * (digits == j)).sum(axis=1)
        mins = tp.min(axis=1)
        k = int(np.argmax(mins))
        if mins[k] > best_eps:
            best_eps, best_index = int(mins[k]), int(idx[k])
    owner = (best_index // powers) % J + 1
    return Assignment.from_owner(owner, rates)


def static_assignment(rates: RateMatrix) -> Assignment:
    """Channel-oblivious round robin: carrier n goes to terminal (n mod J) + 1."""
    J, N = rates.rates.shape
    owner = np.arange(N, dtype=np.int64) % J + 1
    return Assignment.from_owner(owner, rates)
