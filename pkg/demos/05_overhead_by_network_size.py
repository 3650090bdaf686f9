"""What the reputation layer costs in transmissions.

In an all-honest network the protocol with reputation sends exactly the same
routing and data traffic as plain DSR, plus one PFR and one LBP broadcast per
node per round. This script shows that decomposition for each network size.

Run: python demos/05_overhead_by_network_size.py
"""
# %%
from mirrorsim import RunConfig
from mirrorsim.harness import SweepSpec, run_sweep
from mirrorsim.metrics import mirror_transmissions

spec = SweepSpec("nodes", [25, 49, 81, 121], [1], ["PDSR", "MDSR"])
results = run_sweep(RunConfig(), spec)
by = {(r.nodes, r.protocol): r for r in results}

print(f"{'nodes':>6} {'PDSR':>9} {'MDSR':>9} {'ratio':>7} {'PFR+LBP':>8} {'rest':>5}")
for n in spec.values:
    p, m = by[(n, "PDSR")], by[(n, "MDSR")]
    extra = mirror_transmissions(m.counters)
    rest = m.total_packets - p.total_packets - extra
    print(f"{n:6d} {p.total_packets:9d} {m.total_packets:9d} {m.total_packets / p.total_packets:7.3f} "
          f"{extra:8d} {rest:5d}")
