"""A selfish relay gets exactly what it gave.

Nodes A and C can only reach each other through M, which drops every packet it
should relay. After one round both ends grade M at 0 and owe it 10 drops. M's
own traffic is then dropped ten times at each end, and the eleventh packet goes
through with no explicit re-admission.

Run: python demos/03_punishing_a_selfish_relay.py
"""
# %%
from mirrorsim import RunConfig, Simulation
from mirrorsim.scenario import HONEST, Behavior, BehaviorPolicy, TrafficFlow

A, M, C = 0, 1, 2
cfg = RunConfig(sim_time=20.0, terrain=(200.0, 200.0), nodes=3, mobility="NONE",
                protocol="MDSR", event_log=True)
R, W = cfg.mirror.round_length, cfg.mirror.window
after = R + 2 * W + 0.2
flows = [TrafficFlow(A, C, 0.25, 64, 0.5, R - 0.5), TrafficFlow(C, A, 0.25, 64, 0.6, R - 0.5),
         TrafficFlow(M, A, 0.05, 64, after, after + 0.54),
         TrafficFlow(M, C, 0.05, 64, after + 0.01, after + 0.55)]
sim = Simulation(cfg, positions=[(0, 100), (100, 100), (200, 100)], flows=flows,
                 policies={A: HONEST, M: BehaviorPolicy(Behavior.SELFISH, 1.0), C: HONEST})
sim.agents[M].cache.add((M, A), 0)
sim.agents[M].cache.add((M, C), 0)

# %% Round 1: A and C talk, M drops
sim.engine.run_until(after - 0.1)
for end in (A, C):
    e = sim.mirrors[end].ni[M]
    print(f"node {end} on M: grade {e.g}, bonus points {e.bp}")
print("selfish drops so far:", sim.counters.drops_by_cause["selfish"])

# %% M sends 11 packets to each end
result = sim.run()
for line in sim.log.lines:
    kind = line.split()[1]
    if kind in ("drop", "recv") and f" D:{M}:" in line:
        print("  ", line)
print("punishment drops:", result.counters.drops_by_cause["punishment"])
