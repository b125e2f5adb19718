"""A global approximator of x**2 on the whole real line.

A bump network that equals 1 on [-B, B] gates an inner squaring network
through an approximate multiplication. Errors then grow only polynomially
away from the origin. The check samples the interior, the shell between B
and B + 1, and the far field, and reports the worst ratio of error to bound.
"""

import numpy as np

from relucalc import build_global_square, realize, size_metrics
from relucalc.constructors import square_target
from relucalc.verify import global_bound_check, measure_global_constants

target = square_target(1)
eps_values = [1e-1, 1e-2]
nets = {e: build_global_square(e) for e in eps_values}

C, r, sups = measure_global_constants(target, lambda e: nets[e], eps_values)
print(f"derivative constants: C = {C:.3f}, r = {r:.3f}")

for e, net in nets.items():
    sm = size_metrics(net)
    check = global_bound_check(net, target, e, samples=1000, seed=0, C=C, r=r)
    print(f"eps={e:g}: depth {sm.depth}, connectivity {sm.connectivity}"
          f" (inner {net.meta['inner_connectivity']})")
    for regime in check.value_ratio:
        print(f"  {regime:9s} value ratio {check.value_ratio[regime]:.3f}"
              f"  derivative ratio {check.deriv_ratio[regime]:.3f}")

# beyond B_eps + 1 the gate is closed and the network returns 0; the bound
# eps (1 + |x|^3) still dominates x^2 there
x = np.array([[0.0], [5.0], [50.0], [500.0]])
print("values at", x[:, 0], ":", realize(nets[1e-2], x)[:, 0])
