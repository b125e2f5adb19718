import numpy as np
import pytest

from relucalc import netcore


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def naive_realize(net, x):
    """Layer-by-layer evaluation with Python loops; independent of numpy matmul."""
    z = [float(v) for v in np.atleast_1d(x)]
    L = net.depth
    for k, (A, b) in enumerate(net.layers):
        z = [sum(A[i, j] * z[j] for j in range(len(z))) + b[i] for i in range(A.shape[0])]
        if k < L - 1:
            z = [float(net.activation.rho(np.array(v))) for v in z]
    return np.array(z)


def composable_pair(rng, activation=None, max_width=8, max_depth=5):
    phi = netcore.random_network(rng, max_width=max_width, max_depth=max_depth,
                                 activation=activation)
    psi = netcore.random_network(rng, in_dim=phi.out_dim, max_width=max_width,
                                 max_depth=max_depth, activation=activation)
    return psi, phi
