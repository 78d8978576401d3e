"""From plate and marker files back to toe-off.

A simulated trial is written out as a 250 Hz force-plate file and a marker
file, then analysed as if it were a recording.  A second, hand-made force
profile with a sudden simultaneous drop shows how toe-off is found in data
that has no sliding flag.
"""

import tempfile
from pathlib import Path

import numpy as np

from birdfoot import ProtocolParams, io, preset_configuration, run_trial, substrate_preset
from birdfoot.harness import analyze_recordings
from birdfoot.params import LegGeometry

tmp = Path(tempfile.mkdtemp())
trace, sim = run_trial(preset_configuration("TJ2SC1"), substrate_preset("sand"), ProtocolParams())
io.export_recordings(trace, tmp / "plate.csv", tmp / "markers.csv")

t, F_h, F_v = io.read_forces(tmp / "plate.csv")
mt, markers = io.read_markers(tmp / "markers.csv")
rec = analyze_recordings(LegGeometry(), t, F_h, F_v, mt, markers)
print("simulated:", sim.events, f"F_hTO={sim.F_hTO:.3f} N LL_TO={sim.LL_TO:.4f} m")
print("recorded: ", rec.events, f"F_hTO={rec.F_hTO:.3f} N LL_TO={rec.LL_TO:.4f} m")

# a slipping foot: both force channels collapse between two samples
n = len(t)
drop = 2 * n // 3
ramp = np.minimum(np.arange(n), drop) / drop
F_h = 12.0 * ramp
F_v = 25.0 + 10.0 * ramp
F_h[drop + 1 :] *= 0.2
F_v[drop + 1 :] *= 0.4
rec = analyze_recordings(LegGeometry(), t, F_h, F_v, mt, markers)
print(f"\nforce drop after sample {drop} (t={t[drop]:.3f} s): TO={rec.events.to}, F_hTO={rec.F_hTO:.1f} N")
