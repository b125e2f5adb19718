"""The squaring network on [-4, 4] with four tent levels.

It interpolates x**2 at the nodes k/4, so the value error is h**2/4 with
h = 1/4 and the derivative error stays below h. The script writes the
values and derivatives to ``squaring.csv`` for plotting elsewhere.
"""

import numpy as np

from relucalc import build_square, net_derivative, realize, size_metrics
from relucalc.verify import breakpoint_scan

net = build_square(4, 4.0)
print(size_metrics(net))

x = np.linspace(-4, 4, 4001)
y = realize(net, x[:, None])[:, 0]
dy = net_derivative(net, x[:, None])[:, 0, 0]
h = 4 / 2 ** 4
print(f"value error {np.max(np.abs(y - x**2)):.6f}  (h^2/4 = {h * h / 4})")
off_kink = np.abs(x / h - np.round(x / h)) > 1e-9
print(f"derivative error {np.max(np.abs(dy - 2 * x)[off_kink]):.4f}  (h = {h})")

# the breakpoints sit exactly on the interpolation nodes
scan = breakpoint_scan(net, np.array([0.0]), np.array([1.0]), (0.0, 4.0), 4001)
print("breakpoints on (0, 4):", np.round(scan.breakpoints, 12))

np.savetxt("squaring.csv", np.column_stack([x, y, x**2, dy, 2 * x]), delimiter=",",
           header="x,net_value,true_value,net_deriv,true_deriv", comments="", fmt="%.17g")
