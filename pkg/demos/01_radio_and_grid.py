"""Where does the 125 m neighbourhood come from?

Run: python demos/01_radio_and_grid.py
"""
# %% Path loss and the reception threshold
import numpy as np

from mirrorsim.mobility import grid_place
from mirrorsim.radio import RadioParams, max_range, receivers, rx_power

p = RadioParams()
print(f"wavelength      {p.wavelength:.4f} m")
print(f"crossover       {p.crossover:.2f} m")
print(f"range           {max_range(p):.4f} m")

# Received power falls 20 dB per decade up to the crossover, then 40 dB.
for d in (1, 10, 50, 100, 125, 125.227, 126, 200, 300):
    print(f"  {d:8.3f} m  {rx_power(p, d):7.2f} dBm")

# %% The 11 x 11 grid
# Grid spacing is 125 m, just inside the range, so each node hears exactly its
# orthogonal neighbours. Diagonals (176.8 m) are out of reach.
pos = grid_place(121, (1250.0, 1250.0))
degree = np.array([len(receivers(p, i, pos)) for i in range(121)])
print("\nneighbour count on the initial grid:")
print(degree.reshape(11, 11))

# %% Lower the threshold and the neighbourhood grows
for thr in (-81, -84, -87, -90):
    q = RadioParams(rx_threshold=thr)
    deg = np.mean([len(receivers(q, i, pos)) for i in range(121)])
    print(f"threshold {thr} dBm: range {max_range(q):6.1f} m, mean degree {deg:.2f}")
