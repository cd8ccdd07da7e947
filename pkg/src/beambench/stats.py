"""Sample-complexity estimation over collections of training runs.

A RunMatrix stacks N independent runs' per-checkpoint validation values
V_t (rows = runs).  For an error threshold epsilon and a probability
threshold delta, the empirical sample complexity S_hat counts the
checkpoints at which fewer than a delta fraction of runs have reached
performance 1 - epsilon.  Uncertainty comes from a cluster bootstrap
that resamples whole runs, preserving each run's temporal correlation.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

DEFAULT_N_RESAMPLES = 1000
DEFAULT_STEPS_PER_CHECKPOINT = 2000


@dataclass
class RunMatrix:
    """N x T matrix of validation values, rows independent runs."""

    values: np.ndarray
    steps_per_checkpoint: int = DEFAULT_STEPS_PER_CHECKPOINT

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError(f"values must be a non-empty N x T matrix, got {self.values.shape}")
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise ValueError("validation values must lie in [0, 1]")
        if self.steps_per_checkpoint < 1:
            raise ValueError("steps_per_checkpoint must be positive")

    @property
    def n_runs(self) -> int:
        return self.values.shape[0]

    @property
    def n_checkpoints(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_log_dir(cls, directory: Union[str, Path]) -> "RunMatrix":
        """Assemble the matrix from run-*.jsonl files in a directory.

        Runs of unequal length are a usage error and are listed by name.
        """
        from .rl.runlog import RunLog

        directory = Path(directory)
        paths = sorted(directory.glob("run-*.jsonl"))
        if not paths:
            raise FileNotFoundError(f"no run-*.jsonl files in {directory}")
        logs = [RunLog.read_jsonl(p) for p in paths]
        lengths = {len(log.entries) for log in logs}
        if len(lengths) > 1:
            offenders = [
                f"{p.name} ({len(log.entries)} epochs)" for p, log in zip(paths, logs)
            ]
            raise ValueError("ragged run logs: " + ", ".join(offenders))
        steps = logs[0].entries[0].steps if logs[0].entries else DEFAULT_STEPS_PER_CHECKPOINT
        return cls(
            values=np.array([log.values for log in logs]),
            steps_per_checkpoint=steps,
        )


@dataclass(frozen=True)
class EpsDeltaGrid:
    epsilons: tuple
    deltas: tuple

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        dts = tuple(float(d) for d in self.deltas)
        if not eps or not dts:
            raise ValueError("grid needs at least one epsilon and one delta")
        if min(eps) < 0.0 or max(eps) > 1.0:
            raise ValueError("epsilon values must lie in [0, 1]")
        if min(dts) <= 0.0 or max(dts) > 1.0:
            raise ValueError("delta values must lie in (0, 1]")
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "deltas", dts)

    @classmethod
    def default(cls) -> "EpsDeltaGrid":
        return cls(
            epsilons=(0.05, 0.10, 0.15, 0.20, 0.25),
            deltas=(0.75, 0.80, 0.85, 0.90, 0.95),
        )

    def cells(self):
        for eps in self.epsilons:
            for delta in self.deltas:
                yield eps, delta


@dataclass(frozen=True)
class ComplexityCell:
    epsilon: float
    delta: float
    s_hat_checkpoints: int
    s_hat_interactions: int
    p5: float
    p95: float
    saturated: bool


class Verdict(enum.Enum):
    A_OUTPERFORMS_B = "A_OUTPERFORMS_B"
    B_OUTPERFORMS_A = "B_OUTPERFORMS_A"
    NEITHER = "NEITHER"


def empirical_probability(column, epsilon: float) -> float:
    """Fraction of runs with value >= 1 - epsilon (inclusive boundary)."""
    col = np.asarray(column, dtype=float)
    if col.size == 0:
        raise ValueError("empty column")
    return float(np.mean(col >= 1.0 - epsilon))


def _s_hat(values: np.ndarray, epsilon: float, delta: float) -> int:
    p_hat = np.mean(values >= 1.0 - epsilon, axis=0)
    return int(np.sum(p_hat < delta))


def sample_complexity(matrix: RunMatrix, epsilon: float, delta: float) -> int:
    """S_hat in checkpoints: count of t with P_hat_t strictly below delta."""
    return _s_hat(matrix.values, epsilon, delta)


def cluster_bootstrap(
    matrix: RunMatrix,
    epsilon: float,
    delta: float,
    n_resamples: int = DEFAULT_N_RESAMPLES,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, float]:
    """(5th, 95th) percentiles of S_hat under whole-run resampling."""
    if n_resamples < 100:
        raise ValueError("need at least 100 resamples for stable percentiles")
    rng = rng if rng is not None else np.random.default_rng()
    n = matrix.n_runs
    stats = np.empty(n_resamples)
    for b in range(n_resamples):
        rows = rng.integers(0, n, size=n)
        stats[b] = _s_hat(matrix.values[rows], epsilon, delta)
    p5, p95 = np.percentile(stats, [5.0, 95.0])
    return float(p5), float(p95)


def complexity_table(
    matrix: RunMatrix,
    grid: Optional[EpsDeltaGrid] = None,
    n_resamples: int = DEFAULT_N_RESAMPLES,
    rng: Optional[np.random.Generator] = None,
) -> list:
    """One ComplexityCell per (epsilon, delta) of the grid."""
    grid = grid if grid is not None else EpsDeltaGrid.default()
    rng = rng if rng is not None else np.random.default_rng()
    out = []
    for eps, delta in grid.cells():
        s = sample_complexity(matrix, eps, delta)
        p5, p95 = cluster_bootstrap(matrix, eps, delta, n_resamples, rng)
        out.append(
            ComplexityCell(
                epsilon=eps,
                delta=delta,
                s_hat_checkpoints=s,
                s_hat_interactions=s * matrix.steps_per_checkpoint,
                p5=p5,
                p95=p95,
                saturated=s == matrix.n_checkpoints,
            )
        )
    return out


def outperforms(
    matrix_a: RunMatrix,
    matrix_b: RunMatrix,
    grid: Optional[EpsDeltaGrid] = None,
    n_resamples: int = DEFAULT_N_RESAMPLES,
    rng: Optional[np.random.Generator] = None,
) -> tuple[Verdict, list]:
    """Interval-disjointness comparison over the grid.

    A cell is significant iff the two bootstrap intervals are disjoint.
    A outperforms B iff A is significantly lower somewhere and
    significantly higher nowhere (and symmetrically for B).  Returns the
    verdict and a per-cell table of dicts.
    """
    if matrix_a.n_checkpoints != matrix_b.n_checkpoints:
        raise ValueError(
            f"matrices disagree on T: {matrix_a.n_checkpoints} vs {matrix_b.n_checkpoints}"
        )
    if matrix_a.steps_per_checkpoint != matrix_b.steps_per_checkpoint:
        raise ValueError("matrices disagree on steps_per_checkpoint")
    grid = grid if grid is not None else EpsDeltaGrid.default()
    rng = rng if rng is not None else np.random.default_rng()
    table = []
    a_lower = a_higher = False
    for eps, delta in grid.cells():
        s_a = sample_complexity(matrix_a, eps, delta)
        s_b = sample_complexity(matrix_b, eps, delta)
        a5, a95 = cluster_bootstrap(matrix_a, eps, delta, n_resamples, rng)
        b5, b95 = cluster_bootstrap(matrix_b, eps, delta, n_resamples, rng)
        sig_a_lower = a95 < b5
        sig_b_lower = b95 < a5
        a_lower = a_lower or sig_a_lower
        a_higher = a_higher or sig_b_lower
        table.append(
            {
                "epsilon": eps,
                "delta": delta,
                "s_a": s_a,
                "s_b": s_b,
                "a_p5": a5,
                "a_p95": a95,
                "b_p5": b5,
                "b_p95": b95,
                "significant": sig_a_lower or sig_b_lower,
                "lower": "A" if sig_a_lower else ("B" if sig_b_lower else ""),
            }
        )
    if a_lower and not a_higher:
        return Verdict.A_OUTPERFORMS_B, table
    if a_higher and not a_lower:
        return Verdict.B_OUTPERFORMS_A, table
    return Verdict.NEITHER, table


def clt_reference(p_t, delta: float, n_runs: int):
    """Phi((delta - P_t) sqrt(N) / sqrt(P_t (1 - P_t)))."""
    p = np.asarray(p_t, dtype=float)
    sigma = np.sqrt(p * (1.0 - p))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0.0, (delta - p) * np.sqrt(n_runs) / sigma, np.inf * np.sign(delta - p))
    return norm.cdf(z)


def bias_curve(
    n_runs: int,
    delta: float,
    p_grid,
    n_trials: int = 10**4,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Empirical P(P_hat < delta) vs true P_t, with the CLT reference.

    Per grid point, n_trials collections of N uniform values are thresholded
    at 1 - P_t (so successes are Bernoulli(P_t)) and run through the
    empirical-probability estimator.  Returns rows (p_t, empirical,
    clt_reference).
    """
    if n_runs < 2:
        raise ValueError("need at least 2 runs")
    rng = rng if rng is not None else np.random.default_rng()
    p_grid = np.asarray(p_grid, dtype=float)
    rows = np.empty((p_grid.size, 3))
    for i, p in enumerate(p_grid):
        vals = rng.random((n_trials, n_runs))
        p_hat = np.mean(vals >= 1.0 - p, axis=1)
        rows[i] = (p, float(np.mean(p_hat < delta)), float(clt_reference(p, delta, n_runs)))
    return rows


def consistency_check(
    p_t: np.ndarray,
    n_ladder: Sequence[int],
    epsilon: float,
    delta: float,
    n_repetitions: int = 100,
    rng: Optional[np.random.Generator] = None,
) -> list:
    """Mean |S_hat - S| per N for a synthetic Bernoulli process.

    p_t gives the known per-checkpoint success probabilities; each
    simulated value is 1 with probability p_t (success) else 0.  The true
    S counts checkpoints with p_t < delta.  Returns [(N, mean_abs_err,
    worst_abs_err), ...].
    """
    p_t = np.asarray(p_t, dtype=float)
    if np.any(np.abs(p_t - delta) < 0.1):
        raise ValueError("synthetic p_t must stay >= 0.1 away from delta")
    rng = rng if rng is not None else np.random.default_rng()
    true_s = int(np.sum(p_t < delta))
    out = []
    for n in n_ladder:
        errs = np.empty(n_repetitions)
        for rep in range(n_repetitions):
            draws = rng.random((n, p_t.size)) < p_t[None, :]
            values = draws.astype(float)  # 1.0 = converged, 0.0 = not
            s_hat = _s_hat(values, epsilon, delta)
            errs[rep] = abs(s_hat - true_s)
        out.append((int(n), float(errs.mean()), float(errs.max())))
    return out


def write_complexity_csv(cells: Iterable[ComplexityCell], path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["epsilon", "delta", "s_hat_checkpoints", "s_hat_interactions", "p5", "p95", "saturated"]
        )
        for c in cells:
            writer.writerow(
                [c.epsilon, c.delta, c.s_hat_checkpoints, c.s_hat_interactions, c.p5, c.p95,
                 int(c.saturated)]
            )


def write_compare_csv(table: Iterable[dict], path: Union[str, Path]) -> None:
    rows = list(table)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def write_bias_csv(curves: dict, path: Union[str, Path]) -> None:
    """curves maps delta -> rows (p_t, empirical, clt_reference)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "p_t", "empirical", "clt_reference"])
        for delta in sorted(curves):
            for p, emp, ref in curves[delta]:
                writer.writerow([delta, p, emp, ref])
