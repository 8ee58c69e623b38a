"""
Running the named presets from Python and saving CSV.

The same presets are available from the shell, e.g.
``symradio ber --preset spreading_gain --out sg.csv``.
"""

import sys
import tempfile
from pathlib import Path

from symradio.harness import PRESETS, preset_config, read_results, run_experiment, write_results

print("presets:", ", ".join(PRESETS))

rows = run_experiment(preset_config("secondary_slope"))
for r in rows:
    print(f"{r.metric} at {r.snr_db:.0f} dB: {r.value:.3f} +/- {r.stderr:.3f}")
print("slope per 10 dB:", round(rows[1].value - rows[0].value, 3))

rows = run_experiment(preset_config("ris_scaling"))
out = Path(tempfile.gettempdir()) / "ris_scaling.csv"
write_results(rows, out)
assert read_results(out) == rows
print(f"wrote {len(rows)} rows to {out}")
if "-v" in sys.argv:
    write_results(rows[:4], None)
