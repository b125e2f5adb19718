"""Explicit ReLU networks from constructive approximation theory.

All builders return plain :class:`~relucalc.netcore.Network` objects; the
ones with a known error guarantee record it in ``net.meta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import activations
from .netcore import (Network, affine_network, compose, parallelize, realize,
                      size_metrics)


class InnerContractError(ValueError):
    """The inner approximation network misses its error budget."""


@dataclass(frozen=True)
class ApproxParams:
    epsilon: float
    B: float
    d: int = 1
    b: float = 1.0
    kappa: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.epsilon > 0 and self.B > 0 and self.b > 0 and self.c > 0):
            raise ValueError("epsilon, B, b and c must be positive")
        if self.d < 1 or self.kappa < 0:
            raise ValueError("need d >= 1 and kappa >= 0")


@dataclass(frozen=True)
class GrowthTarget:
    """Scalar function with derivative oracle and growth bound
    ``||df(x)||_2 <= c (1 + ||x||_2^kappa)``.

    ``f`` maps a batch (n, d) to (n,), ``df`` maps (n, d) to (n, d).
    """

    f: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    df: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    c: float
    kappa: float
    d: int = 1
    name: str = "custom"

    def growth_violations(self, X):
        """Number of sample rows where the derivative growth bound fails."""
        X = np.atleast_2d(X)
        lhs = np.linalg.norm(self.df(X), axis=1)
        rhs = self.c * (1 + np.linalg.norm(X, axis=1) ** self.kappa)
        return int(np.sum(lhs > rhs * (1 + 1e-12)))


def square_target(d=1):
    """``f(x) = ||x||_2^2``; growth constants c=2, kappa=1."""
    return GrowthTarget(lambda X: np.sum(X * X, axis=1), lambda X: 2 * X,
                        c=2.0, kappa=1.0, d=d, name="square")


def product_target():
    """``f(x, y) = x y`` on R^2."""
    return GrowthTarget(lambda X: X[:, 0] * X[:, 1], lambda X: X[:, ::-1].copy(),
                        c=1.0, kappa=1.0, d=2, name="product")


def identity_target():
    return GrowthTarget(lambda X: X[:, 0], lambda X: np.ones_like(X),
                        c=1.0, kappa=0.0, d=1, name="identity")


TARGETS = {"square": square_target, "product": product_target,
           "identity": identity_target}


def _tent_hidden(a_row, bias):
    # rows computing ReLU(t) and ReLU(t - 1/2) of the same affine form t
    return np.vstack([a_row, a_row]), np.array([bias, bias - 0.5])


def build_sawtooth(m):
    """ReLU network realizing the m-fold composed tent map on [0, 1].

    ``g(u) = 2 ReLU(u) - 4 ReLU(u - 1/2)``, which is the tent peaking at
    1/2 for u in [0, 1]; the result has 2**(m-1) teeth.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    layers = []
    A, b = _tent_hidden(np.array([1.0]), 0.0)
    layers.append((A, b))
    tent = np.array([2.0, -4.0])
    for _ in range(m - 1):
        A, b = _tent_hidden(tent, 0.0)
        layers.append((A, b))
    layers.append((tent.reshape(1, 2), np.zeros(1)))
    return Network(layers, activations.relu(), {"kind": "sawtooth", "m": m})


def sawtooth_reference(m, u):
    """Closed-form m-fold tent composition on [0, 1]."""
    u = np.asarray(u, dtype=float)
    frac = (2.0 ** (m - 1) * u) % 1.0
    return 1.0 - np.abs(2.0 * frac - 1.0)


def build_square(m, B):
    """ReLU network for the piecewise-linear interpolant of x**2 on [-B, B].

    Nodes are ``k * B / 2**m`` (k = -2**m..2**m). Layout: one layer of
    ``ReLU(x), ReLU(-x)`` giving ``|x|``, then m tent layers evaluating

        B**2 * (u - sum_{s=1..m} g_s(u) / 4**s),   u = |x| / B,

    with a running accumulator neuron. The accumulator is stored scaled by
    B so every weight stays below max(4, B); depth is m + 2.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    B = float(B)
    if not B > 0:
        raise ValueError("B must be positive")
    sigma = B
    layers = [(np.array([[1.0], [-1.0]]), np.zeros(2))]
    # hidden 2: ReLU(u), ReLU(u - 1/2), acc = sigma * u
    row = np.array([1.0, 1.0]) / B
    A = np.vstack([row, row, sigma * row])
    layers.append((A, np.array([0.0, -0.5, 0.0])))
    for s in range(1, m):
        # g_s = 2 a - 4 c from the previous tent pair; acc -= sigma * g_s / 4**s
        w = sigma / 4.0 ** s
        A = np.array([[2.0, -4.0, 0.0],
                      [2.0, -4.0, 0.0],
                      [-2.0 * w, 4.0 * w, 1.0]])
        layers.append((A, np.array([0.0, -0.5, 0.0])))
    w = B * B / 4.0 ** m
    layers.append((np.array([[-2.0 * w, 4.0 * w, B * B / sigma]]), np.zeros(1)))
    h = B / 2 ** m
    meta = {"kind": "square", "m": m, "B": B, "grid_step": h,
            "value_bound": h * h / 4, "deriv_bound": h}
    return Network(layers, activations.relu(), meta)


def square_levels_for(eps, B):
    """Smallest m >= 1 with (B / 2**m)**2 / 4 <= eps."""
    m = max(1, math.ceil(math.log2(B / (2.0 * math.sqrt(eps)))))
    while (B / 2 ** m) ** 2 / 4 > eps:
        m += 1
    return m


def build_square_eps(eps, B):
    return build_square(square_levels_for(eps, B), B)


def build_mult(epsilon, b):
    """ReLU network R^2 -> R with sup error <= epsilon for xy on [-b, b]^2.

    Uses ``xy = ((x + y)**2 - x**2 - y**2) / 2`` with three identical
    squaring networks on [-2b, 2b]. Each squaring error lies in [0, h**2/4],
    so the combination is off by at most h**2/4.
    """
    if not (epsilon > 0 and b > 0):
        raise ValueError("epsilon and b must be positive")
    m = square_levels_for(epsilon, 2.0 * b)
    sq = build_square(m, 2.0 * b)
    units = [compose(sq, affine_network(row)) for row in ([1.0, 1.0], [1.0, 0.0], [0.0, 1.0])]
    net = compose(affine_network([[0.5, -0.5, -0.5]]), parallelize(units))
    h = 2.0 * b / 2 ** m
    net.meta.update({"kind": "mult", "epsilon": epsilon, "b": b, "m": m,
                     "value_bound": h * h / 4})
    return net


def _min_tree(width):
    """Layers that reduce ``width`` nonnegative hidden values to their minimum.

    Returns (hidden layers, output row): each hidden layer takes the previous
    hidden layer's outputs; the output row is the final linear functional.
    Pairs use ``min(a, b) = (a + b - ReLU(a - b) - ReLU(b - a)) / 2``; an odd
    leftover is carried through ``ReLU(a) = a``.
    """
    # each current value is a linear functional of the current hidden layer
    forms = list(np.eye(width))
    layers = []
    while len(forms) > 1:
        rows, new_forms = [], []
        i = 0
        while i + 1 < len(forms):
            a, c = forms[i], forms[i + 1]
            base = len(rows)
            rows += [a, c, a - c, c - a]
            new_forms.append((base, np.array([0.5, 0.5, -0.5, -0.5])))
            i += 2
        if i < len(forms):
            new_forms.append((len(rows), np.array([1.0])))
            rows.append(forms[i])
        A = np.vstack(rows)
        layers.append((A, np.zeros(A.shape[0])))
        n = A.shape[0]
        forms = []
        for start, coef in new_forms:
            f = np.zeros(n)
            f[start:start + coef.size] = coef
            forms.append(f)
    return layers, forms[0]


def build_char(B, d):
    """ReLU network equal to 1 on [-B, B]^d, 0 outside [-(B+1), B+1]^d.

    Per coordinate ``t(x_i) = ReLU(1 - ReLU(x_i - B) - ReLU(-x_i - B))``,
    which is ``clamp(B + 1 - |x_i|, 0, 1)``; the coordinates are combined
    by a tree of exact ReLU minimum gadgets. Plateau values are exact.
    """
    if not B > 0 or d < 1:
        raise ValueError("need B > 0 and d >= 1")
    B = float(B)
    I = np.eye(d)
    first = (np.vstack([I, -I]), np.full(2 * d, -B))
    trap = (np.hstack([-I, -I]), np.ones(d))
    tree, out_row = _min_tree(d)
    layers = [first, trap]
    # the min tree's first layer reads the trapezoid neurons directly
    layers += tree
    layers.append((out_row.reshape(1, -1), np.zeros(1)))
    return Network(layers, activations.relu(), {"kind": "char", "B": B, "d": d})


def global_radius(epsilon):
    """B_eps = ceil(1 / eps)."""
    return math.ceil(1.0 / epsilon - 1e-12)


def _validation_grid(B, d, per_dim=None):
    per_dim = per_dim or max(3, int(round(2001 ** (1.0 / d))))
    axes = [np.linspace(-B, B, per_dim)] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def build_global(target, inner, epsilon, check_points=None):
    """Global approximator ``mult o (char, inner)``.

    ``inner(eps, B)`` must return a network approximating ``target.f`` to
    within eps on [-B, B]^d; it is called with (epsilon/2, B_eps + 1) and
    checked on a validation grid. The multiplication network works on
    [-b_eps, b_eps]^2 where b_eps is the smallest power of two with
    ``b_eps >= 1 + sup|f| + epsilon`` over the validation grid.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    d = target.d
    B_eps = global_radius(epsilon)
    inner_net = inner(epsilon / 2, B_eps + 1)
    X = _validation_grid(B_eps + 1, d) if check_points is None else check_points
    fx = target.f(X)
    gap = float(np.max(np.abs(realize(inner_net, X)[:, 0] - fx)))
    if gap > epsilon / 2 * (1 + 1e-9):
        raise InnerContractError(
            f"inner contract breach: sup error {gap:.3e} > {epsilon / 2:.3e} on I_{B_eps + 1}")
    sup_f = float(np.max(np.abs(fx)))
    b_eps = 2.0 ** math.ceil(math.log2(1.0 + sup_f + epsilon))
    char = build_char(B_eps, d)
    mult = build_mult(epsilon / 2, b_eps)
    net = compose(mult, parallelize([char, inner_net]))
    net.meta.update({
        "kind": "global", "epsilon": epsilon, "B_eps": B_eps, "b_eps": b_eps,
        "target": target.name, "d": d, "kappa": target.kappa, "c": target.c,
        "inner_connectivity": size_metrics(inner_net).connectivity,
        "inner_depth": inner_net.depth,
    })
    return net


def build_squared_norm(eps, B, d=1):
    """Network for ``||x||_2^2`` on [-B, B]^d with sup error <= eps."""
    sq = build_square_eps(eps / d, B)
    if d == 1:
        return sq
    units = [compose(sq, affine_network(np.eye(d)[i:i + 1])) for i in range(d)]
    net = compose(affine_network(np.ones((1, d))), parallelize(units))
    net.meta.update({"kind": "squared_norm", "B": B, "d": d})
    return net


def build_global_square(epsilon, d=1):
    """Global approximator of ``||x||^2`` built from :func:`build_squared_norm`."""
    return build_global(square_target(d), lambda e, B: build_squared_norm(e, B, d), epsilon)
