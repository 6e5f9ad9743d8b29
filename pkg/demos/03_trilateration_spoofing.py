"""
Spoofing tower intensities
==========================

Each tower's received strength is turned into a distance through the
inverse-square law.  Raising one tower's transmit power shrinks the
distance the receiver infers, and with enough towers the readings stop
agreeing on a common point.
"""

# %%
import math

import numpy as np

from perceng import instantiate_scenario
from perceng.metrics import margin_field
from perceng.scenarios.trilateration import (
    circles_consistent,
    observe_distances,
    trilateration_spoof_intensity,
)

towers = ((0.0, 0.0), (4.0, 0.0), (0.0, 4.0))
receiver = (2.0, 0.0)
honest = observe_distances(receiver, towers, (1.0,) * 3, (1.0,) * 3)
print("honest distances:", np.round(honest, 4), "consistent:", circles_consistent(towers, honest))

# %%
# Make the first tower look like it is at sqrt(2).
r = trilateration_spoof_intensity(math.dist(receiver, towers[0]), math.sqrt(2), 1.0)
spoofed = observe_distances(receiver, towers, (r, 1.0, 1.0), (1.0,) * 3)
print(f"spoof intensity {r:.3f} ->", np.round(spoofed, 4),
      "consistent:", circles_consistent(towers, spoofed))

# %%
# Robustness of the two-tower receiver across a grid of intensity pairs.
# Plausible pairs form a band; ``pr`` is the distance to its edge.
sc = instantiate_scenario("trilateration", {"n": 2, "receiver": "0.5,3.0", "towers": "0,0; 1,0",
                                            "sweep_lo": 0.5, "sweep_hi": 1.5, "sweep_points": 11})
space, member = sc.sweep("u")
field = margin_field(space, member)
grid = np.array([m.pr if m.in_plausible_set else -m.ffm for m in field]).reshape(11, 11)
print("signed margin (rows: u1, columns: u2)")
print(np.array2string(grid, precision=2, suppress_small=True, max_line_width=120))
