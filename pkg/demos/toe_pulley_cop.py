"""Where the foot presses: centre of pressure vs toe pulley radius.

A one-segment leg-length-coupled foot is pushed over wood with four toe
pulleys.  Without a pulley the toe carries no torque and the pressure stays
at the toe joint; larger pulleys pull the pressure toward the toe tip.
"""

import numpy as np

from birdfoot import cop_sweep
from birdfoot.harness import max_cop_excursion
from birdfoot.params import MM

radii_mm = [0.0, 1.0, 3.2, 9.0]
traj = cop_sweep([r * MM for r in radii_mm])
peaks = max_cop_excursion(traj)

print("toe pulley   stations   max CoP from toe joint   mean CoP")
for r in radii_mm:
    hip, cop = traj[r * MM]
    loaded = cop[~np.isnan(cop)]
    print(f"{r:6.1f} mm {len(hip):10d} {peaks[r * MM] * 1e3:18.2f} mm {np.mean(loaded) * 1e3:10.2f} mm")
print("\nsole length 78 mm; every CoP stays on the sole")
