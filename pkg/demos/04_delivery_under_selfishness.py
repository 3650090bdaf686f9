"""Packet delivery as the share of selfish relays grows.

The full experiment is 121 nodes for 900 s over 10 seeds; this demo defaults to
a shorter horizon and 2 seeds so it finishes in a few minutes. Pass
``--full`` for the real thing.

Run: python demos/04_delivery_under_selfishness.py [--full]
"""
# %%
import sys

from mirrorsim import RunConfig
from mirrorsim.harness import SweepSpec, aggregate, run_sweep
from mirrorsim.metrics import csv_row

full = "--full" in sys.argv
base = RunConfig() if full else RunConfig(sim_time=300.0).replace(**{"scenario.flow_stop": 290.0})
seeds = list(range(1, 11)) if full else [1, 2]
spec = SweepSpec("selfish_fraction", [0.0, 0.1, 0.2, 0.3, 0.4], seeds, ["PDSR", "MDSR"])

# %% Run and tabulate
results = run_sweep(base, spec)
rows = [dict(csv_row(r), pdr=r.pdr, total_packets=r.total_packets) for r in results]
for r in rows:
    r["selfish_fraction"] = float(r["selfish_fraction"])
table = {(e["protocol"], e["selfish_fraction"]): e for e in aggregate(rows, "selfish_fraction")}
print(f"{'selfish':>8} {'PDSR':>8} {'MDSR':>8} {'gain':>7}")
for f in spec.values:
    p, m = table[("PDSR", f)]["pdr_mean"], table[("MDSR", f)]["pdr_mean"]
    print(f"{f:8.1f} {p:8.3f} {m:8.3f} {100 * (m - p):+7.1f}")
