"""Channel traces, SNR and adaptive-modulation rates for an equal-power OFDM cell."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng

DEFAULT_LEVELS = (1, 2, 4, 6)  # BPSK, QPSK, 16-QAM, 64-QAM


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class RateTable:
    """Adaptive-modulation step function: ``thresholds[k]`` (linear SNR) unlocks ``bits[k]``."""

    thresholds: tuple[float, ...]
    bits: tuple[int, ...]

    def __post_init__(self):
        th, b = self.thresholds, self.bits
        if len(th) != len(b) or not th:
            raise DomainError("rate table needs matching, non-empty thresholds and bits")
        if not all(math.isfinite(t) for t in th) or th[0] <= 0:
            raise DomainError("thresholds must be finite and positive")
        if any(x >= y for x, y in zip(th, th[1:])):
            raise DomainError("thresholds must be strictly increasing")
        if b[0] < 0 or any(x >= y for x, y in zip(b, b[1:])):
            raise DomainError("bits per symbol must be strictly increasing and nonnegative")

    @property
    def max_bits(self) -> int:
        return self.bits[-1]


@dataclass(frozen=True)
class Scenario:
    n_subcarriers: int
    n_terminals: int
    n_phases: int
    phase_duration: float
    total_power: float
    noise_power: float
    cell_radius: float
    min_distance: float
    pathloss_exponent: float
    shadowing_sigma: float
    symbols_per_phase: int
    target_ber: float
    seed: int
    rate_table_override: RateTable | None = field(default=None, compare=True)

    def __post_init__(self):
        problems = []
        for name in ("n_subcarriers", "n_terminals", "n_phases", "symbols_per_phase"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                problems.append(f"{name} must be a positive integer")
        if not self.total_power > 0:
            problems.append("total_power must be > 0")
        if not self.noise_power > 0:
            problems.append("noise_power must be > 0")
        if not 0 < self.min_distance < self.cell_radius:
            problems.append("need 0 < min_distance < cell_radius")
        if not self.pathloss_exponent >= 1:
            problems.append("pathloss_exponent must be >= 1")
        if not self.shadowing_sigma >= 0:
            problems.append("shadowing_sigma must be >= 0")
        if not self.phase_duration > 0:
            problems.append("phase_duration must be > 0")
        if not 0 < self.target_ber < 0.5:
            problems.append("target_ber must lie in (0, 0.5)")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            problems.append("seed must be an unsigned 64-bit integer")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def power_per_subcarrier(self) -> float:
        return self.total_power / self.n_subcarriers

    def rate_table(self) -> RateTable:
        if self.rate_table_override is not None:
            return self.rate_table_override
        return rate_table_from_ber(self.target_ber)


@dataclass
class ChannelTrace:
    attenuation: np.ndarray  # (N, J, T)
    distances: np.ndarray  # (J,)
    scenario: Scenario | None = None

    @property
    def shape(self):
        return self.attenuation.shape


def place_terminals(scenario: Scenario, u=None) -> np.ndarray:
    """Area-uniform terminal distances, clamped below at ``min_distance``.

    ``u`` overrides the per-terminal uniforms (default: counter-based draws
    keyed on the scenario seed).
    """
    if u is None:
        u = rng.uniform(scenario.seed, rng.PLACEMENT, np.arange(scenario.n_terminals))
    u = np.asarray(u, dtype=float)
    return np.maximum(scenario.min_distance, scenario.cell_radius * np.sqrt(u))


def path_loss(distance, min_distance, exponent):
    return (min_distance / np.asarray(distance, dtype=float)) ** exponent


def attenuation(distance, shadow_db, fading, min_distance, exponent):
    """Path loss x log-normal shadowing x fading power gain."""
    return path_loss(distance, min_distance, exponent) * 10.0 ** (np.asarray(shadow_db) / 10.0) * fading


def shadowing_db(scenario: Scenario) -> np.ndarray:
    z = rng.standard_normal(scenario.seed, rng.SHADOWING, np.arange(scenario.n_terminals))
    return scenario.shadowing_sigma * z


def fading_gains(seed: int, n_idx, j_idx, t_idx) -> np.ndarray:
    """Rayleigh fading power gains, one exponential draw per (n, j, t)."""
    return rng.exponential(seed, rng.FADING, n_idx, j_idx, t_idx)


def generate_trace(scenario: Scenario, workers: int = 1) -> ChannelTrace:
    """Draw a full N x J x T attenuation trace.

    Phases are generated in independent blocks; with the counter-based
    draws the result does not depend on ``workers``.
    """
    N, J, T = scenario.n_subcarriers, scenario.n_terminals, scenario.n_phases
    d = place_terminals(scenario)
    static = path_loss(d, scenario.min_distance, scenario.pathloss_exponent) * 10.0 ** (shadowing_db(scenario) / 10.0)
    n_idx = np.arange(N)[:, None, None]
    j_idx = np.arange(J)[None, :, None]

    def block(t_range):
        t_idx = np.arange(t_range.start, t_range.stop)[None, None, :]
        return static[None, :, None] * fading_gains(scenario.seed, n_idx, j_idx, t_idx)

    workers = max(1, int(workers))
    step = max(1, math.ceil(T / workers))
    chunks = [range(s, min(T, s + step)) for s in range(0, T, step)]
    if workers == 1:
        parts = [block(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, chunks))
    a = np.concatenate(parts, axis=2)
    return ChannelTrace(attenuation=a, distances=d, scenario=scenario)


def snr(power_per_subcarrier, attenuation, noise_power):
    """Linear SNR ``p * a / noise``; accepts scalars or arrays."""
    p = np.asarray(power_per_subcarrier, dtype=float)
    a = np.asarray(attenuation, dtype=float)
    s2 = np.asarray(noise_power, dtype=float)
    for name, arr in (("power", p), ("attenuation", a), ("noise power", s2)):
        if not np.all(arr > 0):
            raise DomainError(f"{name} must be > 0")
    out = p * a / s2
    return float(out) if out.ndim == 0 else out


def rate_table_from_ber(target_ber: float, levels=DEFAULT_LEVELS) -> RateTable:
    """Thresholds from the exponential M-QAM approximation ``BER = 0.2 exp(-1.6 snr / (2^b - 1))``."""
    if not 0 < target_ber < 0.2:
        raise DomainError(f"target_ber {target_ber} outside (0, 0.2)")
    levels = tuple(int(b) for b in levels)
    if not levels or levels[0] < 1:
        raise DomainError("levels must be positive integers")
    factor = math.log(0.2 / target_ber) / 1.6
    return RateTable(thresholds=tuple((2.0**b - 1.0) * factor for b in levels), bits=levels)


def ber_approx(snr_value: float, bits: int) -> float:
    return 0.2 * math.exp(-1.6 * snr_value / (2.0**bits - 1.0))


def rate_from_snr(snr_value, table: RateTable, symbols_per_phase: int):
    """Bits per downlink phase; threshold comparison is inclusive.

    Works elementwise on arrays and returns int64 values.
    """
    s = np.asarray(snr_value, dtype=float)
    level = np.searchsorted(np.asarray(table.thresholds), s, side="right")
    bits = np.concatenate([[0], np.asarray(table.bits, dtype=np.int64)])
    out = symbols_per_phase * bits[level]
    return int(out) if out.ndim == 0 else out


def rate_matrix_for_phase(trace: ChannelTrace, scenario: Scenario, phase: int, total_power: float | None = None):
    """J x N integer rates for one phase at equal power ``P / N``."""
    P = scenario.total_power if total_power is None else total_power
    s = snr(P / scenario.n_subcarriers, trace.attenuation[:, :, phase], scenario.noise_power)
    return rate_from_snr(s, scenario.rate_table(), scenario.symbols_per_phase).T


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)
