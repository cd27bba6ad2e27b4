"""Viscous Burgers runs approach the entropy solution as nu shrinks.

At a fixed number of modes the approach stops once the viscous layer is
thinner than the grid can represent; the sweep flags that saturation.
"""
import numpy as np

from gus.entropy import SineEntropySolution, viscosity_sweep

nus = [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001]
result = viscosity_sweep(np.sin, nus, K=64, dt=1e-3, T=2.0, comparison_times=[2.0],
                         reference=SineEntropySolution(), n_eval=2048)
print("L1 distance to the entropy solution at t = 2, K = 64")
for nu, err, flag in zip(result.nus(2.0), result.errors(2.0), result.flags(2.0)):
    print(f"  nu = {nu:<6g} error {err:.4e}{'   saturated' if flag else ''}")
