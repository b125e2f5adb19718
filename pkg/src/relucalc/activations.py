"""Pointwise activation functions with a convention-completed derivative.

An activation is described by the scalar function ``rho``, the finite set of
points ``kinks`` where ``rho`` is not differentiable, and ``dbar``, which
equals ``rho'`` away from the kinks and 0 on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

KINK_ATOL = 1e-12


@dataclass(frozen=True)
class ActivationSpec:
    """Component-wise activation ``rho`` with kink set and derivative rule.

    ``drho`` only has to be correct off the kink set; :meth:`dbar` overrides
    it with 0 exactly on the kinks. ``params`` holds the serializable
    parameters of named activations (e.g. the leaky slope).
    """

    name: str
    rho: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False)
    drho: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False)
    kinks: tuple[float, ...] = ()
    params: tuple[tuple[str, float], ...] = ()
    locally_lipschitz: bool = True
    piecewise_linear: bool = False

    def __call__(self, v):
        return self.rho(np.asarray(v, dtype=float))

    def dbar(self, v):
        v = np.asarray(v, dtype=float)
        out = np.asarray(self.drho(v), dtype=float)
        if self.kinks:
            out = np.where(np.isin(v, self.kinks), 0.0, out)
        return out

    def on_kink(self, v, atol=KINK_ATOL):
        """Boolean mask of entries within ``atol`` of a kink."""
        v = np.asarray(v, dtype=float)
        hit = np.zeros(v.shape, dtype=bool)
        for s in self.kinks:
            hit |= np.abs(v - s) <= atol
        return hit

    @property
    def is_relu(self):
        return self.name == "relu"

    def to_json(self):
        if self.name not in _NAMED:
            raise ValueError(f"activation {self.name!r} is not serializable")
        return {"name": self.name, **dict(self.params)}


def _relu_rho(v):
    return np.maximum(v, 0.0)


def _relu_drho(v):
    return (v > 0).astype(float)


def relu():
    return ActivationSpec("relu", _relu_rho, _relu_drho, kinks=(0.0,),
                          piecewise_linear=True)


def leaky_relu(alpha=0.01):
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    return ActivationSpec(
        "leaky_relu",
        lambda v: np.where(v > 0, v, alpha * v),
        lambda v: np.where(v > 0, 1.0, alpha),
        kinks=(0.0,),
        params=(("alpha", alpha),),
        piecewise_linear=True,
    )


def abs_activation():
    return ActivationSpec("abs", np.abs, np.sign, kinks=(0.0,),
                          piecewise_linear=True)


def custom(name, rho, drho, kinks=(), piecewise_linear=False):
    """Wrap user callables as an in-memory (non-serializable) activation.

    Only finite kink sets are representable.
    """
    kinks = tuple(float(s) for s in kinks)
    return ActivationSpec(name, rho, drho, kinks=kinks,
                          piecewise_linear=piecewise_linear)


_NAMED = {"relu": relu, "leaky_relu": leaky_relu, "abs": abs_activation}


def from_json(obj):
    name = obj.get("name")
    if name not in _NAMED:
        raise ValueError(f"unknown activation {name!r}")
    kwargs = {k: v for k, v in obj.items() if k != "name"}
    return _NAMED[name](**kwargs)


def identity_slope(spec: ActivationSpec):
    """Return s such that ``v = (rho(v) - rho(-v)) / s`` for every v, or None."""
    if spec.name == "relu":
        return 1.0
    if spec.name == "leaky_relu":
        alpha = dict(spec.params)["alpha"]
        if alpha != -1.0:
            return 1.0 + alpha
    return None
