"""Market values with and without storage on a two-week summer window.

A full year takes minutes per solve, so this uses 336 hours of the bundled
reference year. Capacity costs stay annual, which makes the window an
expensive "year": capacities come out larger than they would be.

    python demos/storage_fortnight.py [output-dir]
"""

import sys
from pathlib import Path

import numpy as np

from vrelab.cli import reference_config_path, reference_data_path
from vrelab.plots import plot
from vrelab.report import write_sweep
from vrelab.scenarios import SweepGrid, compare_storage, sweep
from vrelab.techconfig import load_config
from vrelab.timeseries import load_profiles, slice_hours

out = Path(sys.argv[1] if len(sys.argv) > 1 else "fortnight-demo")

cfg = load_config(reference_config_path())
year = load_profiles(reference_data_path(), cfg.profiles)
window = slice_hours(year, 3600, 336)  # late May / early June
print(f"{window.hours} hours, peak load {window.demand.max():.0f} MW")

grid = (0.2, 0.4, 0.6, 0.8)
with_storage = sweep(SweepGrid("vre_share", grid, True), cfg, window)
without = sweep(SweepGrid("vre_share", grid, False), cfg, window)

# Every point is checked for primal/dual optimality before it is reported
for e in with_storage.entries:
    print(e.scenario.label, e.status, e.duality)

print("\nshare  VF_solar(+sto)  VF_solar(-sto)  storage MW")
for a, b in zip(with_storage.ok(), without.ok()):
    print(f"{a.scenario.value:5.1f}  {a.values['solar'].value_factor:14.3f}"
          f"  {b.values['solar'].value_factor:14.3f}  {a.storage.power:10.0f}")

# System value of storage: how much cheaper the optimum gets
delta = compare_storage(with_storage, without)
print("\nstorage value [MEUR]:", np.round(delta.storage_values() / 1e6, 1))

# Negative prices only happen while VRE is curtailed; there the price
# equals minus the dual of the share constraint.
hi = with_storage.ok()[-1].solution
print(f"at share {hi.scenario.value}: support {hi.vre_support:.1f} EUR/MWh, "
      f"min price {hi.price.min():.1f} EUR/MWh")

# Persist both sweeps and draw the figures. Files are reproducible.
write_sweep(out / "with", with_storage, force=True)
write_sweep(out / "without", without, force=True)
for kind in ("rldc", "pdc", "dispatch-rldc", "market-values"):
    print("wrote", plot(out / "with", kind))
print("wrote", plot(out / "with", "deltas", out, pair_dir=out / "without"))
