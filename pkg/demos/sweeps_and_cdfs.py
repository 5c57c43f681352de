"""Aggregate metrics the way the experiment harness does: sweeps and CDFs.

Sweeps the element count for the descent equalizer and the inverse-phase
baseline, prints the summary table, then builds the empirical CDF of
converged scores over repeated coherence blocks and writes both to CSV.
"""

from pathlib import Path

import numpy as np

from riseq import FadingParams, Geometry
from riseq.arise import AriseConfig
from riseq.env import EpisodeConfig
from riseq.experiments import (
    ScenarioConfig,
    emit_csv,
    empirical_cdf,
    run_scenario,
    sweep,
    SweepRecord,
)

out = Path("demo_out")
out.mkdir(exist_ok=True)

cfg = ScenarioConfig(
    geometry=Geometry(n_elements=16),
    fading=FadingParams(kappa=10.0, n_delayed=4),
    episode=EpisodeConfig(n_steps=100),
    arise=AriseConfig(target_scale=0.10),
    algorithm="arise",
    episodes=10,
    seed=3,
)

print("Element-count sweep (mean / std of the last-10-step scores per episode):")
rows = sweep(cfg, "M", [8, 16, 32], algorithms=("arise", "inverse"))
print(f"  {'M':>4s} {'algorithm':>10s} {'mean':>8s} {'std':>8s}")
for row in rows:
    print(f"  {row.value:4.0f} {row.algorithm:>10s} "
          f"{row.mean_objective_norm:8.3f} {row.std_objective_norm:8.3f}")
emit_csv(rows, out / "sweep.csv", record_type=SweepRecord)

print("\nConverged-score CDF over 40 coherence blocks (M=32):")
cfg40 = ScenarioConfig(
    geometry=Geometry(n_elements=32),
    fading=cfg.fading, episode=cfg.episode, arise=cfg.arise,
    algorithm="arise", episodes=40, seed=4)
records = run_scenario(cfg40)
finals = [max(r.objective_norm for r in records if r.episode == ep)
          for ep in range(40)]
cdf = empirical_cdf(finals)
for q in (0.1, 0.5, 0.9):
    value = next(v for v, p in cdf if p >= q)
    print(f"  {int(q * 100):3d}th percentile: {value:+.3f}")

with open(out / "cdf.csv", "w", encoding="utf-8") as fh:
    fh.write("value,probability\n")
    for value, prob in cdf:
        fh.write(f"{value!r},{prob!r}\n")
print(f"\nWrote {out / 'sweep.csv'} and {out / 'cdf.csv'} "
      "(plot with any CSV tool; nothing here depends on a plotting library).")
