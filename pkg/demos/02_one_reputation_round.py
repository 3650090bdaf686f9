"""One round of the reputation protocol, by hand.

Three observers watch suspect 9. They report forwarding ratios 0.6, 0.8 and 0.7,
agree on grade 0.7, and each ends up owing the suspect 3 dropped packets.

Run: python demos/02_one_reputation_round.py
"""
# %%
from mirrorsim.mirror import MirrorAgent, MirrorConfig, compute_bp, compute_grade, compute_lbp

US = 1_000_000
cfg = MirrorConfig()
observers = {n: MirrorAgent(n, cfg) for n in (1, 2, 3)}
seen = {1: (6, 10), 2: (8, 10), 3: (7, 10)}  # forwarded, received-for-forwarding

# %% Watchdog phase: record receptions and the forwards that follow
for n, (fwd, got) in seen.items():
    a = observers[n]
    for k in range(got):
        a.observe_receive(9, (n, k), k * 1000)
        if k < fwd:
            a.observe_forward(9, (n, k), k * 1000 + 500)
    e = a.ni[9]
    print(f"observer {n}: NPF {e.npf} / NPRF {e.nprf}")

# %% Expiry: each observer broadcasts its (ip, PFR x 1000) pairs
pfr = {n: a.round_expiry(cfg.round_length * US) for n, a in observers.items()}
print("PFR broadcasts:", pfr)
for n, a in observers.items():
    for m, pairs in pfr.items():
        if m != n:
            a.receive_pfr(m, pairs)

# %% Grade phase: mean of the PFR list, local bonus points = (1 - g) * 10
lbp = {n: a.grade_phase() for n, a in observers.items()}
print("LBP broadcasts:", lbp)
for n, a in observers.items():
    for m, pairs in lbp.items():
        if m != n:
            a.receive_lbp(m, pairs)
    a.update_phase()

for n, a in observers.items():
    print(f"observer {n}: grade {a.ni[9].g}, bonus points {a.ni[9].bp}")

# %% The same numbers through the plain functions
g = compute_grade([0.6, 0.8, 0.7])
print("compute_grade ->", g, " compute_bp ->", compute_bp([compute_lbp(g)] * 3))
