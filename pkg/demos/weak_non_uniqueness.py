"""Weak solutions are not unique; the viscous limit picks one.

For data 0 on the left and 1 on the right, both the rarefaction fan and a
jump moving at speed 1/2 pass the weak-form test against smooth bumps.
Only the fan is the limit of viscous solutions.
"""
import numpy as np

from gus.entropy import RiemannData, RiemannField, riemann_test_suite, viscous_states, weak_residual

data = RiemannData(0.0, 1.0)
suite = riemann_test_suite()
for label, field in (("rarefaction fan", RiemannField(data)),
                     ("expansion shock", RiemannField(data, entropy=False))):
    rep = weak_residual(field, field.initial, suite, T=1.0)
    print(f"{label:16s} max weak residual {rep.max_abs:.1e}")

# a smoothed step on a wide periodic box, run with a small viscosity
beta = 8.0
u0 = lambda x: 0.5 * (np.tanh(x / 0.05) + 1) * (np.abs(x) < 4)  # noqa: E731
S, states, _ = viscous_states(u0, nu=0.01, K=256, dt=1e-3, times=[1.0], beta=beta)
x = np.linspace(-1.0, 1.5, 11)
u = S.synth_at(states[0], x)
fan = RiemannField(data)(1.0, x)
jump = RiemannField(data, entropy=False)(1.0, x)
print("\n   x     viscous   fan   jump")
for xi, a, b, c in zip(x, u, fan, jump):
    print(f"  {xi:+.2f}  {a:7.4f}  {b:5.2f}  {c:4.1f}")
