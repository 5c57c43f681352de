"""Train the three learning agents on a small surface and compare.

Desk-scale setting (16 elements, short episodes) so the script finishes in
about a minute while still showing the characteristic behavior: SAC adapts
quickly and stays high, DDPG restarts from scratch every episode, TD3
converges more slowly.
"""

import time

import numpy as np

from riseq import FadingParams, Geometry
from riseq.agents import AgentHyperparams
from riseq.env import EpisodeConfig
from riseq.experiments import ScenarioConfig, run_scenario

EPISODES = 2
STEPS = 600

for algorithm in ("sac", "td3", "ddpg"):
    cfg = ScenarioConfig(
        geometry=Geometry(n_elements=16),
        fading=FadingParams(kappa=10.0, n_delayed=4),
        episode=EpisodeConfig(n_steps=STEPS),
        agent=AgentHyperparams(hidden_width=64),
        algorithm=algorithm,
        episodes=EPISODES,
        seed=1,
    )
    start = time.time()
    records = run_scenario(cfg)
    print(f"{algorithm.upper()} ({time.time() - start:.0f}s):")
    for episode in range(EPISODES):
        tail = np.array([r.objective_norm for r in records
                         if r.episode == episode])
        chunks = [f"{tail[i:i + STEPS // 4].mean():+.2f}"
                  for i in range(0, STEPS, STEPS // 4)]
        print(f"  episode {episode}: mean reward by quarter {chunks}, "
              f"last-50 mean {tail[-50:].mean():+.3f}")

print("\nRewards are the normalized pulse score in [-1, 1]; each episode is"
      "\na fresh coherence block, so the within-episode climb is the agent"
      "\nre-discovering a good surface for channels it has never seen.")
