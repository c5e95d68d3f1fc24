"""The built-in revised simplex next to HiGHS on a small model.

The reference solver is slow but small enough to read. It is used in the
tests as an oracle for the production backend.

    python demos/reference_solver.py
"""

import numpy as np

from vrelab.cli import reference_config_path, reference_data_path
from vrelab.model import Scenario, build_lp, describe_blocks
from vrelab.solver import check_optimality, solve
from vrelab.techconfig import load_config
from vrelab.timeseries import load_profiles, slice_hours

cfg = load_config(reference_config_path())
day = slice_hours(load_profiles(reference_data_path(), cfg.profiles), 3600, 48)
lp = build_lp(cfg, day, Scenario.share(0.5))
print(f"{lp.num_rows} rows x {lp.num_cols} columns")
print(describe_blocks(lp))

ref = solve(lp, "reference")
prod = solve(lp, "highs")
print(f"reference: {ref.status} obj {ref.objective:.6f}, {ref.iterations} pivots, "
      f"{ref.wall_time:.2f}s")
print(f"highs:     {prod.status} obj {prod.objective:.6f}, {prod.wall_time:.3f}s")
print("relative difference", abs(ref.objective - prod.objective) / abs(prod.objective))

# Primal and dual residuals, gap and complementary slackness
print("reference check:", check_optimality(lp, ref))
print("highs check:    ", check_optimality(lp, prod))

# The hourly prices are the energy-balance duals. They can differ between
# solvers when the dual is degenerate; the objective cannot.
lam_ref = lp.rows["balance"].view(ref.dual)
lam_prod = lp.rows["balance"].view(prod.dual)
print("max price difference", np.abs(lam_ref - lam_prod).max().round(6), "EUR/MWh")
