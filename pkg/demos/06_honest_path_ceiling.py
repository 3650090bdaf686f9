"""How much delivery is there to win back?

A protocol that routes around selfish relays can only deliver a packet when some
path of honest relays joins the two ends at that moment. This demo samples the
topology every 5 s of a PDSR run and reports, per seed, the share of flow-time
with any path and with an all-honest path. The second number is a ceiling for
MDSR delivery.

Run: python demos/06_honest_path_ceiling.py [FRACTION] [SEED ...]
"""
# %%
import sys

import numpy as np

from mirrorsim import RunConfig, Simulation
from mirrorsim.radio import max_range


def reachable(adj: np.ndarray, src: int, allowed: np.ndarray) -> np.ndarray:
    seen = np.zeros(len(adj), bool)
    seen[src] = True
    frontier = seen.copy()
    while frontier.any():
        nxt = adj[frontier].any(axis=0) & allowed & ~seen
        seen |= nxt
        frontier = nxt
    return seen


fraction = float(sys.argv[1]) if len(sys.argv) > 1 else 0.4
seeds = [int(s) for s in sys.argv[2:]] or [1, 2, 3]

# %% Sample connectivity while the flows are active
print(f"selfish fraction {fraction}")
print(f"{'seed':>4} {'any path':>9} {'honest path':>12}")
for seed in seeds:
    cfg = RunConfig(seed=seed).replace(**{"scenario.selfish_fraction": fraction})
    sim = Simulation(cfg)
    r2 = max_range(cfg.radio) ** 2
    honest = np.array([not sim.policies[i].selfish for i in range(sim.n)])
    everyone = np.ones(sim.n, bool)
    total = any_path = honest_path = 0
    for t in np.arange(cfg.scenario.flow_start + 5, cfg.scenario.flow_stop, 5.0):
        sim.engine.run_until(t)
        pos = sim.positions()
        adj = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(-1) <= r2
        for flow in sim.flows:
            allowed = honest.copy()
            allowed[flow.dst] = True
            total += 1
            any_path += reachable(adj, flow.src, everyone)[flow.dst]
            honest_path += reachable(adj, flow.src, allowed)[flow.dst]
    print(f"{seed:>4} {any_path / total:9.3f} {honest_path / total:12.3f}")
