"""Weight-level representation of feed-forward networks.

A network is a finite sequence of affine layers ``(A_k, b_k)``, k = 1..L,
together with one activation applied component-wise between consecutive
layers (never after the last one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import activations
from .activations import ActivationSpec


class NetworkError(ValueError):
    """Invalid network or incompatible operands."""


class ActivationMismatch(NetworkError):
    pass


class NoIdentityGadget(NetworkError):
    pass


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class Network:
    """Sequence of ``(A, b)`` pairs plus an activation spec.

    Arrays are copied and made read-only on construction. The constructor
    does not validate; call :func:`validate` (or any operation, which does
    it for you) to get a diagnostic.
    """

    __slots__ = ("layers", "activation", "meta")

    def __init__(self, layers, activation=None, meta=None):
        pairs = []
        for A, b in layers:
            A = np.array(A, dtype=float)
            if A.ndim == 1:
                A = A.reshape(1, -1)
            pairs.append((_frozen(A), _frozen(np.ravel(b))))
        self.layers = tuple(pairs)
        self.activation = activation if activation is not None else activations.relu()
        self.meta = dict(meta or {})

    @property
    def depth(self):
        return len(self.layers)

    @property
    def widths(self):
        """Layer dimensions N_0, ..., N_L."""
        if not self.layers:
            return ()
        return (self.layers[0][0].shape[1],) + tuple(A.shape[0] for A, _ in self.layers)

    @property
    def in_dim(self):
        return self.layers[0][0].shape[1]

    @property
    def out_dim(self):
        return self.layers[-1][0].shape[0]

    def __call__(self, x):
        return realize(self, x)

    def __repr__(self):
        w = "-".join(str(n) for n in self.widths)
        return f"Network(widths={w}, activation={self.activation.name})"


@dataclass(frozen=True)
class SizeMetrics:
    depth: int
    connectivity: int
    weight_bound: float

    def to_json(self):
        return {"depth": self.depth, "connectivity": self.connectivity,
                "weight_bound": self.weight_bound}


def validate(net):
    """Return None if ``net`` is well formed, else a message naming the layer.

    Layers are reported one-based.
    """
    if not isinstance(net, Network):
        return "not a Network"
    if net.depth < 1:
        return "network has no layers"
    prev_rows = None
    for k, (A, b) in enumerate(net.layers, start=1):
        if A.ndim != 2:
            return f"layer {k}: A is not a matrix"
        if b.shape != (A.shape[0],):
            return f"layer {k}: bias length {b.size} != rows of A ({A.shape[0]})"
        if prev_rows is not None and A.shape[1] != prev_rows:
            return f"layer {k}: A has {A.shape[1]} columns, previous layer has {prev_rows} rows"
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            return f"layer {k}: non-finite entries"
        prev_rows = A.shape[0]
    return None


def check(net):
    msg = validate(net)
    if msg is not None:
        raise NetworkError(msg)
    return net


def _as_input(net, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (net.in_dim,) and not (x.ndim == 0 and net.in_dim == 1):
        raise NetworkError(f"input has shape {x.shape}, network expects {net.in_dim} inputs")
    if x.ndim == 0:
        x = x.reshape(1)
    return x


def _affine(A, b, z):
    # same expression for single points and batches so that compose() and
    # the layer-by-layer evaluation round identically on single points
    if z.ndim == 1:
        return A @ z + b
    return z @ A.T + b


def forward(net, x, K=None):
    """Evaluate the first K layers; return (output, list of pre-activations).

    Pre-activations are recorded for layers 1..K-1, i.e. exactly the vectors
    that pass through the activation.
    """
    K = net.depth if K is None else K
    rho = net.activation.rho
    z = x
    pre = []
    for k in range(K):
        A, b = net.layers[k]
        z = _affine(A, b, z)
        if k < K - 1:
            pre.append(z)
            z = rho(z)
    return z, pre


def realize(net, x):
    """Realization of ``net`` at ``x`` (a point of shape (N_0,) or a batch (n, N_0))."""
    check(net)
    x = _as_input(net, x)
    return forward(net, x)[0]


def realize_partial(net, K, x):
    """Realization of the truncated network ``((A_k, b_k))_{k=1..K}``."""
    check(net)
    if not 1 <= K <= net.depth:
        raise NetworkError(f"K={K} outside 1..{net.depth}")
    x = _as_input(net, x)
    return forward(net, x, K)[0]


def truncate(net, K):
    return Network(net.layers[:K], net.activation)


def compose(psi, phi):
    """Weight-level composition: the realization is ``psi(phi(x))``.

    The last layer of ``phi`` and the first layer of ``psi`` are merged, so
    depth(result) = depth(psi) + depth(phi) - 1.
    """
    check(psi)
    check(phi)
    if psi.in_dim != phi.out_dim:
        raise NetworkError(f"outer network takes {psi.in_dim} inputs, inner produces {phi.out_dim}")
    if psi.activation != phi.activation:
        raise ActivationMismatch(f"{psi.activation.name} vs {phi.activation.name}")
    A_last, b_last = phi.layers[-1]
    A_first, b_first = psi.layers[0]
    merged = (A_first @ A_last, A_first @ b_last + b_first)
    return Network(phi.layers[:-1] + (merged,) + psi.layers[1:], phi.activation)


def affine_network(A, b=None, activation=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(A.shape[0]) if b is None else b
    return Network([(A, b)], activation)


def identity_network(dim, depth, activation=None):
    """Network of the given depth realizing the identity on R^dim.

    Uses ``x = (rho(x) - rho(-x)) / s`` with hidden width 2*dim; only
    activations with such a gadget (ReLU, leaky ReLU) are supported.
    """
    if dim < 1 or depth < 1:
        raise ValueError("dim and depth must be >= 1")
    activation = activation if activation is not None else activations.relu()
    I = np.eye(dim)
    if depth == 1:
        return Network([(I, np.zeros(dim))], activation)
    s = activations.identity_slope(activation)
    if s is None:
        raise NoIdentityGadget(f"no identity gadget for activation {activation.name!r}")
    first = (np.vstack([I, -I]), np.zeros(2 * dim))
    last = (np.hstack([I, -I]) / s, np.zeros(dim))
    if activation.is_relu:
        # both halves are nonnegative after ReLU, so they pass through unchanged
        mid = np.eye(2 * dim)
    else:
        mid = np.vstack([last[0], -last[0]])
    hidden = [(mid, np.zeros(2 * dim)) for _ in range(depth - 2)]
    return Network([first, *hidden, last], activation)


def pad_to_depth(net, depth):
    """Extend ``net`` to ``depth`` layers without changing its realization."""
    check(net)
    if depth < net.depth:
        raise NetworkError(f"cannot shrink depth {net.depth} to {depth}")
    if depth == net.depth:
        return net
    gadget = identity_network(net.out_dim, depth - net.depth + 1, net.activation)
    return compose(gadget, net)


def _block_diag(mats):
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def parallelize(nets):
    """Network computing ``x -> (R phi_1(x), ..., R phi_n(x))`` on a shared input.

    Shorter networks are padded with identity gadgets to the largest depth;
    the first layers are stacked, later layers are block-diagonal.
    """
    nets = list(nets)
    if not nets:
        raise NetworkError("parallelize needs at least one network")
    for n in nets:
        check(n)
    d = nets[0].in_dim
    act = nets[0].activation
    for i, n in enumerate(nets):
        if n.in_dim != d:
            raise NetworkError(f"network {i} takes {n.in_dim} inputs, expected {d}")
        if n.activation != act:
            raise ActivationMismatch(f"network {i} uses {n.activation.name}, expected {act.name}")
    L = max(n.depth for n in nets)
    nets = [pad_to_depth(n, L) for n in nets]
    layers = [(np.vstack([n.layers[0][0] for n in nets]),
               np.concatenate([n.layers[0][1] for n in nets]))]
    for k in range(1, L):
        layers.append((_block_diag([n.layers[k][0] for n in nets]),
                       np.concatenate([n.layers[k][1] for n in nets])))
    return Network(layers, act)


def size_metrics(net):
    check(net)
    nnz = 0
    bound = 0.0
    for A, b in net.layers:
        nnz += int(np.count_nonzero(A) + np.count_nonzero(b))
        bound = max(bound, float(np.max(np.abs(A), initial=0.0)),
                    float(np.max(np.abs(b), initial=0.0)))
    return SizeMetrics(net.depth, nnz, bound)


def random_network(rng, in_dim=None, out_dim=None, depth=None, max_width=8,
                   max_depth=5, scale=2.0, activation=None):
    """Random network with entries uniform in [-scale, scale].

    Unspecified widths are drawn from 1..max_width, depth from 1..max_depth.
    """
    depth = int(rng.integers(1, max_depth + 1)) if depth is None else depth
    widths = rng.integers(1, max_width + 1, size=depth + 1)
    if in_dim is not None:
        widths[0] = in_dim
    if out_dim is not None:
        widths[-1] = out_dim
    layers = [(rng.uniform(-scale, scale, size=(widths[k + 1], widths[k])),
               rng.uniform(-scale, scale, size=widths[k + 1]))
              for k in range(depth)]
    return Network(layers, activation)


def to_json(net):
    check(net)
    obj = {
        "version": 1,
        "activation": net.activation.to_json(),
        "layers": [{"A": A.tolist(), "b": b.tolist()} for A, b in net.layers],
    }
    if net.meta:
        obj["meta"] = net.meta
    return obj


def from_json(obj):
    if obj.get("version") != 1:
        raise NetworkError(f"unsupported network format version {obj.get('version')!r}")
    act = activations.from_json(obj["activation"])
    layers = []
    for k, layer in enumerate(obj["layers"], start=1):
        A = np.array(layer["A"], dtype=float)
        if A.ndim != 2:
            # an empty row list or ragged rows cannot be told apart from a bad file
            raise NetworkError(f"layer {k}: A must be a list of equal-length rows")
        layers.append((A, layer["b"]))
    return check(Network(layers, act, obj.get("meta")))


def dumps(net):
    return json.dumps(to_json(net))


def loads(text):
    return from_json(json.loads(text))


def save(net, path):
    with open(path, "w") as fh:
        json.dump(to_json(net), fh)
        fh.write("\n")


def load(path):
    with open(path) as fh:
        return from_json(json.load(fh))
