"""Lipschitz and linear-growth certificates on a box.

L_B is the largest operator norm of the network derivative over the box.
For a piecewise-linear realization the derivative takes finitely many
values, so sampling those values densely enough gives the exact constant.
Random pairs of points check that no difference quotient exceeds it.
"""

import numpy as np

from relucalc import build_square
from relucalc.netcore import random_network
from relucalc.verify import lipschitz_certificate

for m in range(2, 7):
    cert = lipschitz_certificate(build_square(m, 4.0), 4.0, resolution=201, seed=m)
    print(f"squaring m={m}: L_B = {cert.L_B:.5f} (2B - h = {8 - 4 / 2**m:.5f}),"
          f" max quotient {cert.empirical_quotient_max:.5f}, sound {cert.sound}")

rng = np.random.default_rng(1)
net = random_network(rng, in_dim=2, out_dim=3)
cert = lipschitz_certificate(net, 1.5, resolution=61, seed=1)
print(cert)
