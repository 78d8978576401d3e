"""One leg pushed across all four substrates.

Runs the LL2SC3 leg (large toe pulley) with the default 2 N*m hip torque and
prints, per substrate, how the stance ended and the forces at toe-off.

    python demos/push_trial.py [LEG]
"""

import sys

import numpy as np

from birdfoot import ProtocolParams, preset_configuration, run_trial, substrate_preset
from birdfoot.substrate import SUBSTRATE_NAMES


def main(leg="LL2SC3"):
    config = preset_configuration(leg)
    print(f"{leg}: pushed from touch-down until the foot slides or lifts off\n")
    print(f"{'substrate':<9} {'stations':>8} {'F_hTO [N]':>9} {'F_v@TO [N]':>10} {'sink [mm]':>9} {'LL_TO [mm]':>10}  end")
    for name in SUBSTRATE_NAMES:
        trace, res = run_trial(config, substrate_preset(name), ProtocolParams())
        to = res.events.to
        end = "sliding" if res.slid else "lift-off"
        print(
            f"{name:<9} {len(trace):>8d} {res.F_hTO:>9.2f} {trace.F_v[to]:>10.2f} "
            f"{res.max_sink * 1e3:>9.1f} {res.LL_TO * 1e3:>10.1f}  {end}"
        )

    # the vertical force over stance has a single hump near mid-stance
    trace, res = run_trial(config, substrate_preset("wood"), ProtocolParams())
    ev = res.events
    peak = int(np.argmax(trace.F_v))
    print(f"\nwood: TD={ev.td} MS={ev.ms} TO={ev.to}, F_v peaks at station {peak} ({trace.F_v[peak]:.1f} N)")


if __name__ == "__main__":
    main(*sys.argv[1:])
