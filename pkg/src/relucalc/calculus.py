"""Everywhere-defined network derivative and its chain rule.

The derivative of a network is the masked matrix product

    A_L . H(z_{L-1}) . A_{L-1} . ... . H(z_1) . A_1

where z_k are the pre-activations at the evaluation point and H applies the
activation's convention-completed derivative (0 on kinks) on the diagonal.
It agrees with the classical Jacobian of the realization almost everywhere,
and, unlike the classical Jacobian, it satisfies the chain rule at every
point.
"""

from __future__ import annotations

import numpy as np

from .netcore import NetworkError, _as_input, check, compose, forward, realize


def mask(spec, v):
    """Diagonal matrix ``diag(dbar(v_1), ..., dbar(v_N))``."""
    return np.diag(mask_diagonal(spec, v))


def mask_diagonal(spec, v):
    v = np.asarray(v, dtype=float)
    if spec.is_relu:
        return (v > 0).astype(float)
    return spec.dbar(v)


def _backward(net, pre, diag):
    J = net.layers[-1][0]
    if not pre:
        return np.array(J, copy=True)
    batched = pre[0].ndim == 2
    if batched:
        J = np.broadcast_to(J, (pre[0].shape[0],) + J.shape)
    for k in range(len(pre) - 1, -1, -1):
        A = net.layers[k][0]
        h = diag(net.activation, pre[k])
        if batched:
            J = (J * h[:, None, :]) @ A
        else:
            J = (J * h) @ A
    return J


def net_derivative(net, x):
    """Network derivative at ``x``: an (N_L, N_0) matrix, or (n, N_L, N_0) for a batch.

    One forward pass caches the pre-activations, then the masked product is
    accumulated from the output layer backwards.
    """
    check(net)
    x = _as_input(net, x)
    _, pre = forward(net, x)
    return _backward(net, pre, mask_diagonal)


def net_derivative_general(net, x):
    """Same as :func:`net_derivative` but always through ``spec.dbar``.

    Exists so the generic activation path can be compared against the
    dedicated ReLU path.
    """
    check(net)
    x = _as_input(net, x)
    _, pre = forward(net, x)
    return _backward(net, pre, lambda spec, v: spec.dbar(v))


def activation_pattern(net, x):
    """Concatenated dbar values of all hidden pre-activations at ``x``."""
    x = _as_input(net, x)
    _, pre = forward(net, x)
    if not pre:
        return np.zeros(x.shape[:-1] + (0,))
    return np.concatenate([mask_diagonal(net.activation, z) for z in pre], axis=-1)


def min_kink_distance(net, x):
    """Smallest |z - s| over hidden pre-activations z and kinks s (inf if none)."""
    x = _as_input(net, x)
    _, pre = forward(net, x)
    kinks = net.activation.kinks
    if not pre or not kinks:
        return np.full(x.shape[:-1], np.inf)
    z = np.concatenate(pre, axis=-1)
    return np.min(np.stack([np.abs(z - s) for s in kinks]), axis=(0, -1))


def chain_rule_residual(psi, phi, x):
    """Max-abs gap between D(psi . phi)(x) and D psi(R phi(x)) . D phi(x)."""
    composed = compose(psi, phi)
    lhs = net_derivative(composed, x)
    rhs = net_derivative(psi, realize(phi, x)) @ net_derivative(phi, x)
    return float(np.max(np.abs(lhs - rhs), initial=0.0))


chain_rule_check = chain_rule_residual


def _ball_samples(rng, center, radius, n):
    dim = center.size
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(n, 1)) ** (1.0 / dim)
    return center + r * g


def stability_probe(psi, phi, x, radii, samples_per_radius=64, seed=0):
    """Per radius r, sup over y in the r-ball around R phi(x) of
    ``||[D psi(y) - D psi(R phi(x))] . D phi(x)||_2``.

    Returns an array aligned with ``radii``. Only data is returned; the
    caller decides what counts as converged.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be positive and strictly decreasing")
    check(psi)
    check(phi)
    if psi.in_dim != phi.out_dim:
        raise NetworkError("psi and phi are not composable")
    rng = np.random.default_rng(seed)
    y0 = realize(phi, x)
    Dphi = net_derivative(phi, x)
    base = net_derivative(psi, y0) @ Dphi
    out = np.empty(radii.size)
    for i, r in enumerate(radii):
        ys = _ball_samples(rng, y0, r, samples_per_radius)
        prods = net_derivative(psi, ys) @ Dphi - base
        out[i] = max(np.linalg.norm(P, 2) for P in prods)
    return out
