"""Chromosome evaluation, diagnosis orchestration and report assembly.

A chromosome selects nodes whose balance equations are replaced by their
measurement series.  Its objective is the sum of squared residuals between
measured and simulated indoor air temperature:

    J = sum_i (T_air_measured[i] - T_air_simulated[i])^2

A large drop of J when a node is forced singles that node's sub-model out as
the defective one.  The module provides the memoised evaluator used by the
GA, an exhaustive-search oracle for small node sets, per-node single-forcing
scores, residual statistics and the report writers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .ga import GAConfig, GAHistory, ScoredIndividual, decode, encode, run_ga
from .model import NodalModel, StateMatrices
from .simulate import MeasurementSeries, WeatherSeries, initial_state, simulate

__all__ = [
    "DiagnosisReport",
    "ChromosomeEvaluator",
    "measurable_mask",
    "objective",
    "exhaustive_search",
    "per_node_scores",
    "residual_stats",
    "run_diagnosis",
    "format_report",
    "report_key_values",
    "history_csv",
    "air_comparison_csv",
]


def objective(sim_air: np.ndarray, meas_air: np.ndarray) -> float:
    """Sum of squared residuals (measured minus simulated), in °C²."""
    sim_air = np.asarray(sim_air, dtype=float)
    meas_air = np.asarray(meas_air, dtype=float)
    if sim_air.shape != meas_air.shape:
        raise ValueError(f"series lengths differ: {sim_air.shape} vs {meas_air.shape}")
    if sim_air.size < 1:
        raise ValueError("objective needs at least one sample")
    residuals = meas_air - sim_air
    return float(residuals @ residuals)


def residual_stats(sim_air: np.ndarray, meas_air: np.ndarray) -> tuple[float, float]:
    """Mean and sample standard deviation (N-1) of measured minus simulated."""
    sim_air = np.asarray(sim_air, dtype=float)
    meas_air = np.asarray(meas_air, dtype=float)
    if sim_air.shape != meas_air.shape:
        raise ValueError(f"series lengths differ: {sim_air.shape} vs {meas_air.shape}")
    if sim_air.size < 2:
        raise ValueError("residual statistics need at least two samples")
    residuals = meas_air - sim_air
    return float(np.mean(residuals)), float(np.std(residuals, ddof=1))


def measurable_mask(n_nodes: int, measured_nodes: Iterable[int],
                    air_node: int) -> tuple:
    """Chromosome mask over nodes 1..n_nodes-1: 1 where a measurement exists.

    The air node is the comparison output and is excluded from the chromosome
    (it is the last node, so the mask simply has length n_nodes - 1).
    """
    mask = [0] * (n_nodes - 1)
    for node in measured_nodes:
        if node == air_node:
            continue
        if not 1 <= node < n_nodes:
            raise ValueError(f"measured node {node} outside 1..{n_nodes - 1}")
        mask[node - 1] = 1
    return tuple(mask)


class ChromosomeEvaluator:
    """Memoised chromosome -> J map over one fixed simulation setup.

    Pure per chromosome: the same bit pattern always yields the same J, so
    results are cached by pattern.  Thread-safe enough for concurrent reads;
    a racing first evaluation only costs a redundant simulation.
    """

    def __init__(self, sm: StateMatrices, weather: WeatherSeries,
                 meas: MeasurementSeries, air_node: int, skip_steps: int = 0):
        if air_node not in meas.node_ids:
            raise ValueError(f"air node {air_node} has no measurement series")
        if not 0 <= skip_steps < meas.n_samples:
            raise ValueError("skip_steps must leave at least one sample")
        self.sm = sm
        self.weather = weather
        self.meas = meas
        self.air_node = air_node
        self.skip_steps = skip_steps
        self.chromosome_length = sm.n_nodes - 1
        self._T0 = initial_state(sm, weather.values[0])
        self._cache: dict[tuple, float] = {}

    @property
    def cache_size(self) -> int:
        return len(self._cache)

    def air_series(self, chromosome: tuple) -> np.ndarray:
        """Simulated air-node series under the chromosome's forcing (full horizon)."""
        forcing = decode(chromosome)
        if self.air_node in forcing:
            raise ValueError("the air node must not be forced")
        traj = simulate(self.sm, self.weather, forcing, self.meas, self._T0)
        return traj.node_series(self.air_node)

    def __call__(self, chromosome: tuple) -> float:
        key = tuple(int(b) for b in chromosome)
        if len(key) != self.chromosome_length:
            raise ValueError(
                f"chromosome length {len(key)} != {self.chromosome_length}")
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        sim_air = self.air_series(key)[self.skip_steps:]
        meas_air = self.meas.node_series(self.air_node)[self.skip_steps:]
        J = objective(sim_air, meas_air)
        self._cache[key] = J
        return J


def exhaustive_search(measurable_nodes: Iterable[int], evaluator,
                      chromosome_length: int) -> tuple[frozenset, dict]:
    """Evaluate every subset of the measurable nodes (the brute-force oracle).

    Returns the best subset and the full subset -> J table.  Ties are broken
    toward fewer forced nodes, then the lowest bit pattern, matching the GA's
    ordering, so oracle and GA agree whenever the GA finds an optimum.
    """
    nodes = sorted(set(measurable_nodes))
    if len(nodes) > 20:
        raise ValueError(f"{len(nodes)} measurable nodes: exhaustive search capped at 20")
    table: dict[frozenset, float] = {}
    best_key = None
    best_subset = None
    for pattern in range(2 ** len(nodes)):
        subset = frozenset(n for i, n in enumerate(nodes) if pattern >> i & 1)
        bits = encode(subset, chromosome_length)
        J = float(evaluator(bits))
        table[subset] = J
        key = (J, len(subset), bits)
        if best_key is None or key < best_key:
            best_key = key
            best_subset = subset
    return best_subset, table


def per_node_scores(measurable_nodes: Iterable[int], evaluator,
                    chromosome_length: int) -> dict[int, float]:
    """J for each single-node forcing, plus the unforced run under key 0."""
    scores = {0: float(evaluator(encode((), chromosome_length)))}
    for node in sorted(set(measurable_nodes)):
        scores[node] = float(evaluator(encode((node,), chromosome_length)))
    return scores


@dataclass(frozen=True)
class DiagnosisReport:
    """Everything one diagnosis run produced."""

    best: ScoredIndividual
    best_forcing: frozenset
    unforced_J: float            # °C²
    per_node: dict               # node id -> J; key 0 is the unforced run
    residuals_before: tuple      # (mean °C, sd °C) with no forcing
    residuals_after: tuple       # same under the best forcing set
    history: GAHistory
    air_node: int
    measured_nodes: tuple
    skip_steps: int
    oracle_best: frozenset | None = None
    oracle_best_J: float | None = None
    oracle_table: dict | None = None


def run_diagnosis(sm: StateMatrices, weather: WeatherSeries,
                  meas: MeasurementSeries, air_node: int, config: GAConfig,
                  skip_steps: int = 0, exhaustive: bool = False,
                  workers: int | None = None
                  ) -> tuple[DiagnosisReport, ChromosomeEvaluator]:
    """Run the GA (and optionally the oracle) and assemble the report.

    Also returns the evaluator so callers can extract trajectories (for the
    plot-data files) without re-simulating from scratch.
    """
    evaluator = ChromosomeEvaluator(sm, weather, meas, air_node, skip_steps)
    measured = sorted(meas.node_ids - {air_node})

    best, history = run_ga(config, evaluator, workers)
    scores = per_node_scores(measured, evaluator, evaluator.chromosome_length)
    unforced_J = scores[0]

    meas_air = meas.node_series(air_node)[skip_steps:]
    empty = encode((), evaluator.chromosome_length)
    before = residual_stats(evaluator.air_series(empty)[skip_steps:], meas_air)
    after = residual_stats(evaluator.air_series(best.chromosome)[skip_steps:], meas_air)

    oracle_best = oracle_J = oracle_table = None
    if exhaustive:
        oracle_best, oracle_table = exhaustive_search(
            measured, evaluator, evaluator.chromosome_length)
        oracle_J = oracle_table[oracle_best]

    report = DiagnosisReport(
        best=best,
        best_forcing=decode(best.chromosome),
        unforced_J=unforced_J,
        per_node=scores,
        residuals_before=before,
        residuals_after=after,
        history=history,
        air_node=air_node,
        measured_nodes=tuple(measured),
        skip_steps=skip_steps,
        oracle_best=oracle_best,
        oracle_best_J=oracle_J,
        oracle_table=oracle_table,
    )
    return report, evaluator


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _set_label(nodes: Iterable[int]) -> str:
    nodes = sorted(nodes)
    return "none" if not nodes else " ".join(str(n) for n in nodes)


def format_report(report: DiagnosisReport, model: NodalModel | None = None) -> str:
    """Human-readable report: best set, per-node table, residual statistics."""

    def name(node: int) -> str:
        return model.label(node) if model is not None else str(node)

    lines = []
    lines.append("Diagnosis report")
    lines.append("================")
    lines.append(f"air node:        {name(report.air_node)}")
    lines.append(f"measured nodes:  {', '.join(name(n) for n in report.measured_nodes)}")
    if report.skip_steps:
        lines.append(f"skipped samples: {report.skip_steps}")
    lines.append("")
    lines.append(f"best forcing set: {_set_label(report.best_forcing)}")
    lines.append(f"J best:     {_fmt(report.best.J)}")
    lines.append(f"J unforced: {_fmt(report.unforced_J)}")
    if report.unforced_J > 0.0:
        lines.append(f"J ratio:    {_fmt(report.best.J / report.unforced_J)}")
    lines.append(f"generations: {report.history.generations - 1}")
    if report.oracle_best is not None:
        lines.append("")
        lines.append(f"oracle best set: {_set_label(report.oracle_best)}")
        lines.append(f"oracle best J:   {_fmt(report.oracle_best_J)}")
        agree = report.oracle_best_J == report.best.J
        lines.append(f"ga matches oracle J: {'yes' if agree else 'no'}")
    lines.append("")
    lines.append("single-node forcing scores")
    lines.append("--------------------------")
    width = max(len(name(n)) for n in report.per_node if n) if len(report.per_node) > 1 else 4
    width = max(width, len("none"))
    for node, J in sorted(report.per_node.items(), key=lambda kv: (kv[1], kv[0])):
        label = "none" if node == 0 else name(node)
        lines.append(f"  {label:<{width}}  J = {_fmt(J)}")
    lines.append("")
    lines.append("air-temperature residuals (measured - simulated)")
    lines.append("-------------------------------------------------")
    mb, sb = report.residuals_before
    ma, sa = report.residuals_after
    lines.append(f"  before forcing: mean {_fmt(mb)} °C, sd {_fmt(sb)} °C")
    lines.append(f"  after forcing:  mean {_fmt(ma)} °C, sd {_fmt(sa)} °C")
    lines.append("")
    return "\n".join(lines)


def report_key_values(report: DiagnosisReport) -> str:
    """Machine-readable report: one `key = value` per line, full precision."""
    kv = []
    kv.append(("air_node", report.air_node))
    kv.append(("measured_nodes", _set_label(report.measured_nodes)))
    kv.append(("skip_steps", report.skip_steps))
    kv.append(("best_forcing_set", _set_label(report.best_forcing)))
    kv.append(("best_chromosome", "".join(str(b) for b in report.best.chromosome)))
    kv.append(("best_J", repr(report.best.J)))
    kv.append(("best_fitness", repr(report.best.f)))
    kv.append(("unforced_J", repr(report.unforced_J)))
    kv.append(("generations", report.history.generations - 1))
    for node, J in sorted(report.per_node.items()):
        key = "J_unforced" if node == 0 else f"J_node_{node}"
        kv.append((key, repr(J)))
    kv.append(("residual_mean_before", repr(report.residuals_before[0])))
    kv.append(("residual_sd_before", repr(report.residuals_before[1])))
    kv.append(("residual_mean_after", repr(report.residuals_after[0])))
    kv.append(("residual_sd_after", repr(report.residuals_after[1])))
    if report.oracle_best is not None:
        kv.append(("oracle_best_set", _set_label(report.oracle_best)))
        kv.append(("oracle_best_J", repr(report.oracle_best_J)))
        kv.append(("ga_matches_oracle", int(report.oracle_best_J == report.best.J)))
    return "\n".join(f"{k} = {v}" for k, v in kv) + "\n"


def history_csv(history: GAHistory) -> str:
    """Plot data: generation index vs best/mean scores."""
    lines = ["generation,best_J,best_fitness,mean_fitness,best_bits"]
    for g in range(history.generations):
        bits = "".join(str(b) for b in history.best_individual[g])
        lines.append(
            f"{g},{history.best_J[g]!r},{history.best_fitness[g]!r},"
            f"{history.mean_fitness[g]!r},{bits}"
        )
    return "\n".join(lines) + "\n"


def air_comparison_csv(report: DiagnosisReport, evaluator: ChromosomeEvaluator) -> str:
    """Plot data: measured vs simulated air temperature, unforced and best."""
    meas_air = evaluator.meas.node_series(report.air_node)
    unforced = evaluator.air_series(encode((), evaluator.chromosome_length))
    best = evaluator.air_series(report.best.chromosome)
    lines = ["step,measured,simulated_unforced,simulated_best_forcing"]
    for k in range(meas_air.shape[0]):
        lines.append(
            f"{k},{float(meas_air[k])!r},{float(unforced[k])!r},{float(best[k])!r}")
    return "\n".join(lines) + "\n"
