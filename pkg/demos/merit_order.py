"""Prices from a merit order, and what VRE does to them.

Run with ``python demos/merit_order.py``. Nothing is optimized here: the
point is to see the pricing rule the LP reproduces through its duals.
"""

import numpy as np

from vrelab.metrics import (base_price, duration_curve, market_value, merit_order_price,
                            value_factor)

# A toy fleet as (capacity MW, marginal cost EUR/MWh), cheapest first
steps = [(20.0, 5.0), (30.0, 35.0), (25.0, 80.0)]

# the price is the cost of the unit that serves the last MW
for load in (10.0, 20.0, 45.0, 70.0):
    print(f"net load {load:5.1f} MW -> price {merit_order_price(steps, load):5.1f} EUR/MWh")

# One day with a solar bump. Solar shifts the residual load left,
# so midday prices fall: the merit-order effect.
hours = np.arange(24)
demand = 50 + 15 * np.sin((hours - 12) / 24 * 2 * np.pi)  # evening peak
solar = 60 * np.clip(np.sin((hours - 6) / 12 * np.pi), 0, None)

price_before = np.array([merit_order_price(steps, d) for d in demand])
price_after = np.array([merit_order_price(steps, max(d - s, 0.0))
                        for d, s in zip(demand, solar)])
print("mean price without solar", price_before.mean().round(2))
print("mean price with solar   ", price_after.mean().round(2))

# Solar sells mostly in the cheap hours it creates. Its market value
# relative to the average price is the value factor.
mv = market_value(price_after, solar)
print(f"solar market value {mv:.2f} EUR/MWh, "
      f"value factor {value_factor(mv, price_after, demand):.3f}, "
      f"base price {base_price(price_after, demand):.2f}")

# Duration curves sort hours from highest to lowest
rl = duration_curve(demand - solar)
print("residual load, sorted:", np.round(rl.values[:5], 1), "...", np.round(rl.values[-3:], 1))
print("hours with negative residual load:", int(np.sum(rl.values < 0)))
