"""Numerical oracles and certificates for network realizations and derivatives.

Everything random takes an explicit ``seed``; reports embed it so that a
report is a deterministic function of its inputs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .calculus import net_derivative
from .netcore import check, realize

FD_STEP = 1e-6
KINK_RADIUS = 10 * FD_STEP
SPECTRAL_MAX_OUT = 8


def fd_jacobian(f, x, h=FD_STEP):
    """Central-difference Jacobian; column j is (f(x + h e_j) - f(x - h e_j)) / 2h."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        fp = np.atleast_1d(np.asarray(f(x + e), dtype=float))
        fm = np.atleast_1d(np.asarray(f(x - e), dtype=float))
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise FloatingPointError(f"non-finite function value near x along coordinate {j}")
        cols.append((fp - fm) / (2 * h))
    return np.stack(cols, axis=-1)


def kink_adjacent(net, X, radius=KINK_RADIUS):
    """True for points with a kink of the realization within ``radius`` along
    some coordinate.

    Detected as a change of the network derivative between x and
    x +- radius e_j. Neurons sitting on a kink without affecting the
    derivative (e.g. behind a zero weight) are not flagged.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    J = net_derivative(net, X)
    tol = 1e-9 * (1 + np.max(np.abs(J), axis=(-2, -1)))
    flagged = np.zeros(len(X), dtype=bool)
    for j in range(X.shape[1]):
        for sign in (1.0, -1.0):
            Y = X.copy()
            Y[:, j] += sign * radius
            flagged |= np.max(np.abs(net_derivative(net, Y) - J), axis=(-2, -1)) > tol
    return flagged


def operator_norms(J):
    """Spectral norms of a stack of Jacobians (Frobenius for wide outputs).

    Returns (norms, kind).
    """
    J = np.asarray(J)
    if J.shape[-2] == 1:
        return np.linalg.norm(J[..., 0, :], axis=-1), "spectral"
    if J.shape[-2] <= SPECTRAL_MAX_OUT:
        return np.linalg.norm(J, ord=2, axis=(-2, -1)), "spectral"
    return np.linalg.norm(J, ord="fro", axis=(-2, -1)), "frobenius"


def box_grid(B, d, resolution):
    axes = [np.linspace(-B, B, resolution)] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class ErrorReport:
    B: float
    d: int
    resolution: int
    value_sup_error: float
    deriv_sup_error: float
    worst_value_point: list
    worst_deriv_point: list
    excluded_points: int
    n_points: int
    measured_rate: float | None = None
    points: dict | None = field(default=None, repr=False)

    @property
    def excluded_fraction(self):
        return self.excluded_points / self.n_points

    def to_json(self):
        out = asdict(self)
        out.pop("points")
        return _jsonable(out)

    def write_csv(self, path):
        if self.points is None:
            raise ValueError("report was built without per-point data")
        P = self.points
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.d)] + ["value_error", "deriv_error", "kink"])
            for x, ve, de, k in zip(P["x"], P["value_error"], P["deriv_error"], P["kink"]):
                w.writerow([f"{v:.17g}" for v in x] + [f"{ve:.17g}", f"{de:.17g}", int(k)])


def grid_error_report(net, target, B, resolution, h=FD_STEP, keep_points=False):
    """Sup-norm value and derivative errors of ``net`` against ``target`` on a
    uniform grid of [-B, B]^d (``resolution`` points per axis).

    Derivative errors skip kink-adjacent grid points.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    check(net)
    d = target.d
    X = box_grid(B, d, resolution)
    val_err = np.abs(realize(net, X)[:, 0] - target.f(X))
    J = net_derivative(net, X)[:, 0, :]
    der_err = np.linalg.norm(J - target.df(X), axis=1)
    kink = kink_adjacent(net, X, radius=10 * h)
    masked = np.where(kink, -np.inf, der_err)
    iv = int(np.argmax(val_err))
    idr = int(np.argmax(masked))
    points = None
    if keep_points:
        points = {"x": X, "value_error": val_err, "deriv_error": der_err, "kink": kink}
    return ErrorReport(
        B=float(B), d=d, resolution=resolution,
        value_sup_error=float(val_err[iv]),
        deriv_sup_error=float(masked[idr]) if np.isfinite(masked[idr]) else 0.0,
        worst_value_point=X[iv].tolist(), worst_deriv_point=X[idr].tolist(),
        excluded_points=int(kink.sum()), n_points=len(X), points=points,
    )


def measure_rate(eps, errors):
    """Fit ``error ~ C eps^r`` in log-log space.

    r is the least-squares slope; C is the smallest constant with
    ``errors <= C eps^r`` at every measured point.
    """
    eps = np.asarray(eps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    r = float(np.polyfit(np.log(eps), np.log(errors), 1)[0])
    C = float(np.max(errors / eps ** r))
    return C, r


# -- global estimates --------------------------------------------------------


def _directions(rng, n, d):
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def regime_samples(B, d, n, seed=0, far_factor=3.0):
    """Samples for the interior [-B, B]^d, the shell I_{B+1} minus I_B, and
    the far field ``B + 1 <= ||x||_inf <= far_factor * B``.

    Interior and far-field radii are log-spaced in sup-norm.
    """
    if n < 1 or B <= 0 or d < 1:
        raise ValueError("degenerate sample spec")
    rng = np.random.default_rng(seed)

    def at_sup_norm(radii):
        u = _directions(rng, len(radii), d)
        return u / np.max(np.abs(u), axis=1, keepdims=True) * radii[:, None]

    inner = np.exp(rng.uniform(np.log(1e-3 * B), np.log(B), n))
    interior = at_sup_norm(inner)
    interior[0] = 0.0
    shell = at_sup_norm(rng.uniform(B, B + 1, n))
    shell = shell[np.max(np.abs(shell), axis=1) > B]
    far = at_sup_norm(np.exp(rng.uniform(np.log(B + 1), np.log(far_factor * max(B, 1.0)), n)))
    return {"interior": interior, "shell": shell, "far": far}


def _normalized_deriv_errors(net, target, X):
    kappa = target.kappa
    weight = 1 + np.linalg.norm(X, axis=1) ** (kappa + 2)
    J = net_derivative(net, X)[:, 0, :]
    err = np.linalg.norm(target.df(X) - J, axis=1) / weight
    keep = ~kink_adjacent(net, X)
    return err, keep


def _jump_sup(net, target, x, iters=45):
    # bisect each grid interval whose activation pattern changes, then take the
    # derivative's one-sided limits at the located jump
    from .calculus import activation_pattern

    P = activation_pattern(net, x[:, None])
    idx = np.nonzero(np.any(P[1:] != P[:-1], axis=1))[0]
    if idx.size == 0:
        return 0.0
    lo, hi = x[idx].copy(), x[idx + 1].copy()
    plo = P[idx]
    for _ in range(iters):
        mid = (lo + hi) / 2
        same = np.all(activation_pattern(net, mid[:, None]) == plo, axis=1)
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    best = 0.0
    at = hi[:, None]
    weight = 1 + np.abs(hi) ** (target.kappa + 2)
    step = 1e-9 * np.maximum(1.0, np.abs(hi))
    for side in (lo - step, hi + step):
        slope = net_derivative(net, side[:, None])[:, 0, 0]
        err = np.abs(target.df(at)[:, 0] - slope) / weight
        best = max(best, float(err.max()))
    return best


def measure_global_constants(target, builder, eps_values, resolution=20001):
    """Measure (C, r) for ``||Df - D Phi_eps|| <= C eps^r (1 + ||x||^(kappa+2))``
    from kink-free points of a grid of the interior box I_{B_eps}.

    ``builder(eps)`` returns the global network for ``eps``. Returns
    (C, r, per-eps sup errors).
    """
    from .constructors import global_radius

    sups = []
    for eps in eps_values:
        net = builder(eps)
        B = global_radius(eps)
        per_dim = resolution if target.d == 1 else max(3, int(round(resolution ** (1 / target.d))))
        X = box_grid(B, target.d, per_dim)
        err, keep = _normalized_deriv_errors(net, target, X)
        sup = float(np.max(err[keep]))
        if target.d == 1:
            sup = max(sup, _jump_sup(net, target, X[:, 0]))
        sups.append(sup)
    C, r = measure_rate(eps_values, sups)
    return C, r, sups


@dataclass
class GlobalCheck:
    epsilon: float
    B_eps: int
    C: float | None
    r: float | None
    seed: int
    value_ratio: dict
    deriv_ratio: dict
    excluded: dict
    passed: bool

    def to_json(self):
        return _jsonable(asdict(self))


def global_bound_check(net, target, epsilon, samples=1000, seed=0, C=None, r=None):
    """Check the global pointwise bounds of a global approximator.

    Values: ``|f(x) - R Phi(x)| <= eps (1 + ||x||^(kappa+2))``.
    Derivatives (only when C and r are given, at kink-free samples):
    ``||Df(x) - D Phi(x)|| <= C eps^r (1 + ||x||^(kappa+2))``.
    Returns the worst ratio (error / bound) per regime.
    """
    from .constructors import global_radius

    check(net)
    B = global_radius(epsilon)
    regimes = regime_samples(B, target.d, samples, seed)
    kappa = target.kappa
    value_ratio, deriv_ratio, excluded = {}, {}, {}
    for name, X in regimes.items():
        weight = 1 + np.linalg.norm(X, axis=1) ** (kappa + 2)
        err = np.abs(target.f(X) - realize(net, X)[:, 0])
        value_ratio[name] = float(np.max(err / (epsilon * weight)))
        if C is not None and r is not None:
            derr, keep = _normalized_deriv_errors(net, target, X)
            excluded[name] = int((~keep).sum())
            deriv_ratio[name] = float(np.max(derr[keep], initial=0.0) / (C * epsilon ** r))
    passed = all(v <= 1 for v in value_ratio.values()) and all(v <= 1 for v in deriv_ratio.values())
    return GlobalCheck(epsilon, B, C, r, seed, value_ratio, deriv_ratio, excluded, passed)


# -- Lipschitz certificates --------------------------------------------------


def segment_pieces(net, x, y, min_step=1e-12, max_pieces=100000):
    """Affine pieces of ``t -> R Phi(x + t (y - x))`` on [0, 1].

    Only for piecewise-linear activations. Returns an array of breakpoints
    ``0 = t_0 < t_1 < ... < t_n = 1``; pieces shorter than ``min_step`` may
    be merged into a neighbour.
    """
    if not net.activation.piecewise_linear:
        raise ValueError("segment_pieces needs a piecewise-linear activation")
    x = np.asarray(x, dtype=float)
    v = np.asarray(y, dtype=float) - x
    kinks = np.array(net.activation.kinks)
    ts = [0.0]
    t = 0.0
    while t < 1.0 and len(ts) <= max_pieces:
        # evaluate just inside the current piece
        te = min(t + min_step, 1.0)
        z = x + te * v
        dz = v
        nxt = 1.0
        for k, (A, b) in enumerate(net.layers[:-1]):
            z = A @ z + b
            dz = A @ dz
            with np.errstate(divide="ignore", invalid="ignore"):
                for s in kinks:
                    cross = te + (s - z) / dz
                    cand = cross[(cross > te) & np.isfinite(cross)]
                    if cand.size:
                        nxt = min(nxt, float(cand.min()))
            h = net.activation.dbar(z)
            z = net.activation.rho(z)
            dz = h * dz
        t = max(nxt, te)
        ts.append(min(t, 1.0))
    return np.array(ts)


@dataclass
class LipschitzCertificate:
    B: float
    L_B: float
    empirical_quotient_max: float
    growth_constants: tuple
    growth_ok: bool
    resolution: int
    norm: str
    seed: int
    refinements: int = 0

    @property
    def sound(self):
        return self.empirical_quotient_max <= self.L_B * (1 + 1e-9) + 1e-12

    def to_json(self):
        out = _jsonable(asdict(self))
        out["sound"] = self.sound
        return out


def lipschitz_certificate(net, B, resolution=101, pair_samples=1000, seed=0,
                          max_refinements=3):
    """Certified Lipschitz constant of ``R Phi`` on the open box (-B, B)^d.

    L_B is the largest operator norm of the network derivative over a grid
    of [-B, B]^d, enlarged by its values on the affine pieces of every
    sampled segment (for piecewise-linear activations). Difference quotients
    of random pairs in the open box must not exceed it; if they do the grid
    resolution is doubled up to ``max_refinements`` times.
    """
    check(net)
    d = net.in_dim
    rng = np.random.default_rng(seed)
    X = rng.uniform(-B, B, size=(pair_samples, d))
    Y = rng.uniform(-B, B, size=(pair_samples, d))
    X = np.clip(X, np.nextafter(-B, 0), np.nextafter(B, 0))
    Y = np.clip(Y, np.nextafter(-B, 0), np.nextafter(B, 0))
    fx, fy = realize(net, X), realize(net, Y)
    dist = np.linalg.norm(X - Y, axis=1)
    ok = dist > 0
    quot = np.linalg.norm(fx - fy, axis=1)[ok] / dist[ok]
    qmax = float(quot.max(initial=0.0))

    seg_max = 0.0
    if net.activation.piecewise_linear:
        mids = []
        for x, y in zip(X, Y):
            ts = segment_pieces(net, x, y)
            tm = 0.5 * (ts[1:] + ts[:-1])
            mids.append(x + tm[:, None] * (y - x))
        norms, kind = operator_norms(net_derivative(net, np.vstack(mids)))
        seg_max = float(norms.max(initial=0.0))

    res = resolution
    for refinement in range(max_refinements + 1):
        per_dim = res if d <= 2 else max(3, int(round(res ** (2.0 / d))))
        norms, kind = operator_norms(net_derivative(net, box_grid(B, d, per_dim)))
        L_B = max(float(norms.max()), seg_max)
        if qmax <= L_B * (1 + 1e-9) + 1e-12 or refinement == max_refinements:
            break
        res *= 2

    f0 = float(np.linalg.norm(realize(net, np.zeros(d))))
    Z = rng.uniform(-B, B, size=(pair_samples, d))
    growth = np.linalg.norm(realize(net, Z), axis=1) <= (f0 + L_B) * (1 + np.linalg.norm(Z, axis=1)) * (1 + 1e-12)
    return LipschitzCertificate(float(B), L_B, qmax, (f0, L_B), bool(growth.all()),
                                res, kind, seed, refinement)


# -- breakpoints along a line ------------------------------------------------


@dataclass
class BreakpointScan:
    breakpoints: np.ndarray
    slopes: np.ndarray
    derivative_slopes: np.ndarray

    @property
    def max_slope_mismatch(self):
        if len(self.slopes) == 0:
            return 0.0
        return float(np.max(np.abs(self.slopes - self.derivative_slopes)))


def breakpoint_scan(net, x, v, t_range=(-1.0, 1.0), resolution=10001):
    """Detect slope changes of ``t -> R Phi(x + t v)`` on a uniform t-grid.

    A breakpoint is reported where the cell slopes change; its position is
    the intersection of the neighbouring clean segments. For every segment
    between breakpoints the measured slope is paired with the network
    derivative times v at the segment midpoint.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ValueError("direction v must be nonzero")
    check(net)
    t = np.linspace(t_range[0], t_range[1], resolution)
    F = realize(net, x + t[:, None] * v)
    dt = t[1] - t[0]
    s = np.diff(F, axis=0) / dt
    scale = 1.0 + np.max(np.abs(F))
    tol = 1e-9 + 256 * np.finfo(float).eps * scale / dt
    change = np.max(np.abs(np.diff(s, axis=0)), axis=1) > tol
    # a cell is dirty if its slope differs from a neighbour's
    dirty = np.zeros(len(s), dtype=bool)
    dirty[:-1] |= change
    dirty[1:] |= change
    # runs of clean cells form segments
    segments = []
    start = None
    for i, d in enumerate(dirty):
        if not d and start is None:
            start = i
        if d and start is not None:
            segments.append((start, i))
            start = None
    if start is not None:
        segments.append((start, len(s)))
    segments = [seg for seg in segments if seg[1] > seg[0]]

    slopes = [(F[b] - F[a]) / (t[b] - t[a]) for a, b in segments]
    # neighbours with equal slopes were split by noise, not by a kink
    merged, mslopes = [], []
    for seg, sl in zip(segments, slopes):
        if merged and np.max(np.abs(sl - mslopes[-1])) <= tol:
            a = merged[-1][0]
            merged[-1] = (a, seg[1])
            mslopes[-1] = (F[seg[1]] - F[a]) / (t[seg[1]] - t[a])
        else:
            merged.append(seg)
            mslopes.append(sl)
    segments, slopes = merged, mslopes
    dslopes = [net_derivative(net, x + 0.5 * (t[a] + t[b]) * v) @ v for a, b in segments]
    bps = []
    for (a0, b0), (a1, b1), s0, s1 in zip(segments, segments[1:], slopes, slopes[1:]):
        # intersect the two affine pieces along the component that changes most
        k = int(np.argmax(np.abs(s1 - s0)))
        c0 = F[a0, k] - s0[k] * t[a0]
        c1 = F[a1, k] - s1[k] * t[a1]
        tb = (c0 - c1) / (s1[k] - s0[k])
        bps.append(float(np.clip(tb, t[b0], t[a1])))
    return BreakpointScan(np.array(bps), np.array(slopes).reshape(-1, F.shape[1]),
                          np.array(dslopes).reshape(-1, F.shape[1]))


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
