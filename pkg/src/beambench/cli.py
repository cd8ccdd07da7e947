"""`bench` command-line interface.

Subcommands cover the full pipeline: train multi-seed sweeps, distill
run logs into sample-complexity tables, compare two sweeps, render the
ground-truth intensity map, sanity-check estimator bias, and evaluate a
trained checkpoint against random and brute-force baselines.

Output root resolution: BENCH_OUT environment variable if set, else the
config's output_dir.  Run files land in
<root>/<experiment>/<config-hash>/run-<seed>.jsonl.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import stats
from .config import ConfigError, ExperimentConfig, load_config
from .env import BeamEnv
from .models import model_from_doc
from .rl import ddqn_train, ppo_train, run_filename
from .rl.ddqn import validate as greedy_validate
from .seeding import draw_seed
from .trajectory import sample_trajectory

DEFAULT_P_GRID = np.linspace(0.05, 0.95, 37)


def _output_root(cfg: ExperimentConfig) -> Path:
    return Path(os.environ.get("BENCH_OUT") or cfg.output_dir)


def _parse_seed_range(text: str) -> range:
    try:
        lo, hi = text.split("..")
        return range(int(lo), int(hi) + 1)
    except ValueError:
        raise click.BadParameter("expected A..B, e.g. 0..9") from None


def _parse_grid(text: str) -> stats.EpsDeltaGrid:
    try:
        eps_text, delta_text = text.split(":")
        return stats.EpsDeltaGrid(
            epsilons=tuple(float(v) for v in eps_text.split(",")),
            deltas=tuple(float(v) for v in delta_text.split(",")),
        )
    except (ValueError, TypeError):
        raise click.BadParameter(
            "expected EPS:DELTAS comma lists, e.g. 0.05,0.15:0.75,0.85"
        ) from None


def _train_one(cfg_doc: dict, seed: int, out_dir: str) -> str:
    """Worker: one full training run, written atomically via a .partial file."""
    from .config import parse_config

    cfg = parse_config(cfg_doc)
    out = Path(out_dir)
    final = out / run_filename(seed)
    partial = out / (run_filename(seed) + ".partial")
    if partial.exists():
        partial.unlink()
    run_id = f"{cfg.experiment}:{cfg.config_hash()}"
    env_factory = cfg.env_factory()
    ckpt_path = out / f"ckpt-{seed}.json"

    def _save(model) -> None:
        ckpt_path.write_text(json.dumps(model.to_doc()))

    every = cfg.checkpoint_every
    checkpoint_cb = (lambda epoch, model: _save(model) if epoch % every == 0 else None) if every else None

    if cfg.algorithm_name == "ddqn":
        _, model = ddqn_train(
            env_factory, cfg.model_factory(), cfg.algorithm, seed,
            run_id=run_id, log_path=partial, checkpoint_cb=checkpoint_cb,
        )
    else:
        _, model, _ = ppo_train(
            env_factory, cfg.model_factory(), cfg.model_factory(dim_out=1), cfg.algorithm,
            seed, run_id=run_id, log_path=partial, checkpoint_cb=checkpoint_cb,
        )
    _save(model)
    partial.replace(final)
    return str(final)


@click.group()
def main() -> None:
    """Beam-management RL benchmark tools."""


@main.command()
@click.option("-c", "--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seeds", "seed_range", default=None, help="Override sweep seeds as A..B.")
@click.option("--jobs", default=1, show_default=True, help="Concurrent training runs.")
def train(config_path: str, seed_range: str, jobs: int) -> None:
    """Run the config's multi-seed sweep; completed runs are skipped."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    out = cfg.run_dir(_output_root(cfg))
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.raw, indent=2))
    seeds = _parse_seed_range(seed_range) if seed_range else cfg.sweep.seeds()
    pending = [s for s in seeds if not (out / run_filename(s)).exists()]
    skipped = len(list(seeds)) - len(pending)
    if skipped:
        click.echo(f"skipping {skipped} completed run(s)")
    if not pending:
        click.echo(f"nothing to do; logs in {out}")
        return
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_train_one, cfg.raw, s, str(out)) for s in pending]
            for fut in futures:
                click.echo(f"wrote {fut.result()}")
    else:
        for s in pending:
            click.echo(f"wrote {_train_one(cfg.raw, s, str(out))}")


@main.command()
@click.option("-d", "--dir", "log_dir", required=True, type=click.Path(exists=True))
@click.option("--grid", default=None, help="EPS:DELTAS comma lists, e.g. 0.05,0.15:0.75,0.85.")
@click.option("--resamples", default=stats.DEFAULT_N_RESAMPLES, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Bootstrap RNG seed.")
@click.option("-o", "--out", default=None, help="CSV path (default: <dir>/complexity.csv).")
def complexity(log_dir: str, grid: str, resamples: int, seed: int, out: str) -> None:
    """Sample-complexity table for a directory of run logs."""
    matrix = stats.RunMatrix.from_log_dir(log_dir)
    eps_grid = _parse_grid(grid) if grid else stats.EpsDeltaGrid.default()
    cells = stats.complexity_table(matrix, eps_grid, resamples, np.random.default_rng(seed))
    path = Path(out) if out else Path(log_dir) / "complexity.csv"
    stats.write_complexity_csv(cells, path)
    for c in cells:
        sat = " (saturated)" if c.saturated else ""
        click.echo(
            f"eps={c.epsilon:.2f} delta={c.delta:.2f} "
            f"S={c.s_hat_checkpoints} ckpt = {c.s_hat_interactions} steps "
            f"[{c.p5:.1f}, {c.p95:.1f}]{sat}"
        )
    click.echo(f"wrote {path}")


@main.command()
@click.option("-a", "--dir-a", required=True, type=click.Path(exists=True))
@click.option("-b", "--dir-b", required=True, type=click.Path(exists=True))
@click.option("--grid", default=None, help="EPS:DELTAS comma lists.")
@click.option("--resamples", default=stats.DEFAULT_N_RESAMPLES, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--out", default="compare.csv", show_default=True)
def compare(dir_a: str, dir_b: str, grid: str, resamples: int, seed: int, out: str) -> None:
    """Definition-style comparison of two sweeps (A vs B)."""
    matrix_a = stats.RunMatrix.from_log_dir(dir_a)
    matrix_b = stats.RunMatrix.from_log_dir(dir_b)
    eps_grid = _parse_grid(grid) if grid else stats.EpsDeltaGrid.default()
    try:
        verdict, table = stats.outperforms(
            matrix_a, matrix_b, eps_grid, resamples, np.random.default_rng(seed)
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))
    stats.write_compare_csv(table, out)
    click.echo(verdict.value)
    click.echo(f"wrote {out}")


@main.command()
@click.option("-c", "--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("-r", "--resolution", default=50, show_default=True)
@click.option("-o", "--out", default="render.csv", show_default=True)
def render(config_path: str, resolution: int, out: str) -> None:
    """Ground-truth (best antenna, best intensity) map on a regular grid."""
    from .beam import AntennaConfig, ground_truth_grid

    text = Path(config_path).read_text()
    doc = json.loads(text)
    if "environment" in doc:
        antenna_config = load_config(config_path).environment.resolve_config()
    else:
        antenna_config = AntennaConfig.from_json(text)
    points, antenna, best = ground_truth_grid(antenna_config, resolution)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "antenna", "intensity"])
        for (x, y), a, v in zip(points, antenna, best):
            writer.writerow([x, y, int(a), v])
    click.echo(f"wrote {out} ({len(points)} rows)")


@main.command()
@click.option("-N", "n_runs", default=100, show_default=True)
@click.option("--delta", "deltas", default="0.25,0.5,0.75", show_default=True)
@click.option("--trials", default=10**4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--out", default="bias.csv", show_default=True)
def biascheck(n_runs: int, deltas: str, trials: int, seed: int, out: str) -> None:
    """Empirical estimator bias curves against the CLT reference."""
    rng = np.random.default_rng(seed)
    curves = {}
    for delta in (float(d) for d in deltas.split(",")):
        curves[delta] = stats.bias_curve(n_runs, delta, DEFAULT_P_GRID, trials, rng)
    stats.write_bias_csv(curves, out)
    for delta, rows in sorted(curves.items()):
        worst = float(np.max(np.abs(rows[:, 1] - rows[:, 2])))
        click.echo(f"delta={delta:.2f}: sup |empirical - CLT| = {worst:.4f}")
    click.echo(f"wrote {out}")


@main.command()
@click.option("-m", "--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("-c", "--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("-n", "--episodes", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--out", default="evaluate.csv", show_default=True)
def evaluate(model_path: str, config_path: str, episodes: int, seed: int, out: str) -> None:
    """Greedy-policy evaluation with random and brute-force baselines."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    model = model_from_doc(json.loads(Path(model_path).read_text()))
    antenna_config = cfg.environment.resolve_config()
    if model.dim_out != antenna_config.n_antennas:
        raise click.ClickException(
            f"checkpoint has {model.dim_out} outputs but the scene has "
            f"{antenna_config.n_antennas} antennas"
        )
    env = BeamEnv(
        antenna_config,
        trajectory_degree=cfg.environment.trajectory_degree,
        horizon=cfg.environment.horizon,
    )
    rng = np.random.default_rng(seed)
    rows = []
    for episode in range(episodes):
        traj = sample_trajectory(
            cfg.environment.trajectory_degree,
            np.random.default_rng(draw_seed(rng)),
            antenna_config.domain_size,
        )
        obs = env.reset_with_trajectory(traj)
        for _ in range(env.horizon):
            q, _ = model.forward(obs)
            obs, _, _ = env.step(int(np.argmax(q[0])))
        policy = float(np.sum(env.record.rewards))
        optimal = float(np.sum(env.record.optima))
        env.reset_with_trajectory(traj)
        for _ in range(env.horizon):
            env.step(int(rng.integers(0, env.n_actions)))
        random_return = float(np.sum(env.record.rewards))
        rows.append((episode, policy, random_return, optimal))
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "policy_return", "random_return", "optimal_return"])
        writer.writerows(rows)
    arr = np.asarray(rows, dtype=float)
    click.echo(f"mean relative return (policy):  {np.mean(arr[:, 1] / arr[:, 3]):.4f}")
    click.echo(f"mean relative return (random):  {np.mean(arr[:, 2] / arr[:, 3]):.4f}")
    click.echo(f"mean optimal return:            {np.mean(arr[:, 3]):.4f}")
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
