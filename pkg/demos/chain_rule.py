"""Why the network derivative needs its own chain rule.

Take phi(x) = 0 and psi(y) = ReLU(y). The composition is the zero function.
A "derivative" of psi at 0 could be anything in [0, 1]. Only the convention
ReLU'(0) = 0, applied inside the masked product, makes the derivative of the
composed network equal the product of the two network derivatives at every
point, kinks included.
"""

import numpy as np

from relucalc import Network, compose, net_derivative, realize
from relucalc.calculus import chain_rule_residual, stability_probe
from relucalc.netcore import random_network

relu1 = Network([([[1.0]], [0.0]), ([[1.0]], [0.0])])
zero = Network([([[0.0]], [0.0])])

x = np.array([0.7])
print("R(psi o phi)(x) =", realize(compose(relu1, zero), x))
print("D psi at R phi(x) =", net_derivative(relu1, realize(zero, x)))
print("chain rule residual:", chain_rule_residual(relu1, zero, x))

# the stability probe measures how much D psi moves near R phi(x), seen through D phi
radii = 10.0 ** -np.arange(1, 9)
print("probe on the zero-map pair:", stability_probe(relu1, zero, x, radii))

# random composable pairs
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(200):
    phi = random_network(rng)
    psi = random_network(rng, in_dim=phi.out_dim)
    for _ in range(5):
        worst = max(worst, chain_rule_residual(psi, phi, rng.uniform(-2, 2, phi.in_dim)))
print(f"worst residual over 1000 random points: {worst:.2e}")
