"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import time

import numpy as np
import pytest

from relucalc import activations, netcore, verify
from relucalc import constructors as C
from relucalc.calculus import chain_rule_residual, net_derivative, stability_probe
from relucalc.netcore import Network, compose, realize, size_metrics

from conftest import composable_pair


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        return ok
    return emit


# -- shared sweeps -------------------------------------------------------------


def adversarial_pair(rng, activation, dead_region=False):
    """Inner network constant near every x, its value sitting on a kink of the outer one."""
    phi = netcore.random_network(rng, activation=activation)
    y0 = rng.uniform(-2, 2, phi.out_dim)
    layers = list(phi.layers)
    A_last = np.zeros_like(layers[-1][0])
    if dead_region and phi.depth > 1:
        # kill the last hidden layer instead of zeroing the output matrix
        A_prev, b_prev = layers[-2]
        layers[-2] = (A_prev, b_prev - 1e3)
        A_last = layers[-1][0]
    layers[-1] = (A_last, y0)
    phi = Network(layers, activation)
    psi = netcore.random_network(rng, in_dim=phi.out_dim, activation=activation)
    A1, b1 = psi.layers[0]
    b1 = b1.copy()
    hit = rng.random(b1.size) < 0.5
    hit[int(rng.integers(b1.size))] = True
    b1[hit] = activation.kinks[0] - (A1 @ y0)[hit]
    psi = Network([(A1, b1)] + list(psi.layers[1:]), activation)
    return psi, phi


def chain_rule_sweep(activation, seed, pairs=1000, points=10, adversarial=100):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        psi, phi = composable_pair(rng, activation)
        net = compose(psi, phi)
        for _ in range(points):
            x = rng.uniform(-2, 2, phi.in_dim)
            J = net_derivative(net, x)
            worst = max(worst, chain_rule_residual(psi, phi, x) / (1 + np.max(np.abs(J))))
    adv_worst = 0.0
    on_kink = 0
    for i in range(adversarial):
        psi, phi = adversarial_pair(rng, activation, dead_region=activation.is_relu and i % 2 == 1)
        x = rng.uniform(-2, 2, phi.in_dim)
        pre = psi.layers[0][0] @ realize(phi, x) + psi.layers[0][1]
        on_kink += bool(np.any(pre == activation.kinks[0]))
        adv_worst = max(adv_worst, chain_rule_residual(psi, phi, x))
    return worst, adv_worst, on_kink


def rel_err(J, Jfd):
    return np.max(np.abs(J - Jfd)) / max(1.0, np.max(np.abs(Jfd)))


def fd_sweep(activation, seed, draws=10000):
    rng = np.random.default_rng(seed)
    failures = unattributed = 0
    for _ in range(draws):
        net = netcore.random_network(rng, activation=activation)
        x = rng.uniform(-2, 2, net.in_dim)
        J = net_derivative(net, x)
        Jfd = verify.fd_jacobian(lambda z: netcore.forward(net, z)[0], x)
        if rel_err(J, Jfd) > 1e-5:
            failures += 1
            if not verify.kink_adjacent(net, x[None])[0]:
                unattributed += 1
    return failures, unattributed


# -- criteria ------------------------------------------------------------------


def test_c01_exact_chain_rule(report):
    t0 = time.perf_counter()
    worst, adv, on_kink = chain_rule_sweep(activations.relu(), seed=1)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and adv <= 1e-10 and dt < 30 and on_kink == 100
    report(1, ok, f"random residual {worst:.2e}, adversarial residual {adv:.2e} "
                  f"({on_kink}/100 exactly on an outer kink), {dt:.1f}s")
    assert ok


def test_c02_fd_agreement(report):
    t0 = time.perf_counter()
    failures, unattributed = fd_sweep(activations.relu(), seed=2)
    dt = time.perf_counter() - t0
    rate = 1 - failures / 10000
    ok = rate >= 0.999 and unattributed == 0 and dt < 60
    report(2, ok, f"agreement {rate:.4%}, {failures} failures, {unattributed} not kink-adjacent, {dt:.1f}s")
    assert ok


def test_c03_figure1(report):
    m, B = 4, 4.0
    net = C.build_square(m, B)
    sm = size_metrics(net)
    rep = verify.grid_error_report(net, C.square_target(1), B, 4001)
    h = B / 2 ** m
    v_ok = abs(rep.value_sup_error - h * h / 4) <= 0.05 * h * h / 4
    d_ok = abs(rep.deriv_sup_error - h) <= 0.10 * h and rep.deriv_sup_error <= h
    ok = sm.depth == 6 and sm.connectivity <= 52 and sm.weight_bound <= 4 and v_ok and d_ok
    report(3, ok, f"depth {sm.depth}, connectivity {sm.connectivity}, weight bound {sm.weight_bound}, "
                  f"value err {rep.value_sup_error:.6f} (h^2/4={h * h / 4:.6f}), "
                  f"deriv err {rep.deriv_sup_error:.4f} (h={h})")
    assert ok


def test_c04_squaring_rate(report):
    ms = np.arange(2, 9)
    errs = [verify.grid_error_report(C.build_square(int(m), 1.0), C.square_target(1), 1.0, 20001)
            .value_sup_error for m in ms]
    slope = np.polyfit(ms, np.log2(errs), 1)[0]
    ok = abs(slope + 2) <= 0.1
    report(4, ok, f"log2 value error slope vs m = {slope:.4f}")
    assert ok


def test_c05_multiplication(report):
    eps = np.array([1e-1, 1e-2, 1e-3])
    g = np.linspace(-1, 1, 101)
    X = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    errs, depths = [], []
    for e in eps:
        net = C.build_mult(e, 1.0)
        errs.append(np.max(np.abs(realize(net, X)[:, 0] - X[:, 0] * X[:, 1])))
        depths.append(net.depth)
    slope, icpt = np.polyfit(np.log(1 / eps), depths, 1)
    resid = np.max(np.abs(np.array(depths) - (slope * np.log(1 / eps) + icpt)))
    ok = all(er <= e for er, e in zip(errs, eps)) and slope > 0 and resid <= 1.0
    report(5, ok, f"errors {[f'{v:.2e}' for v in errs]}, depths {depths}, "
                  f"depth ~ {icpt:.2f} + {slope:.3f} log(1/eps) (max residual {resid:.2f})")
    assert ok


def test_c06_characteristic(report):
    rng = np.random.default_rng(6)
    B = 1.5
    worst = {"inside": 0.0, "outside": 0.0, "range": 0.0}
    for d in (1, 2, 3):
        net = C.build_char(B, d)
        inside = rng.uniform(-B, B, (1000, d))
        worst["inside"] = max(worst["inside"], np.max(np.abs(realize(net, inside) - 1)))
        out = rng.uniform(-(B + 3), B + 3, (1000, d))
        j = rng.integers(d, size=1000)
        sign = rng.choice([-1.0, 1.0], 1000)
        out[np.arange(1000), j] = sign * rng.uniform(B + 1, B + 3, 1000)
        worst["outside"] = max(worst["outside"], np.max(np.abs(realize(net, out))))
        y = realize(net, rng.uniform(-(B + 2), B + 2, (100000, d)))
        worst["range"] = max(worst["range"], max(-y.min(), y.max() - 1, 0.0))
    ok = all(v <= 1e-12 for v in worst.values())
    report(6, ok, f"max |R-1| on I_B {worst['inside']:.1e}, max |R| outside I_B+1 "
                  f"{worst['outside']:.1e}, range excess {worst['range']:.1e}")
    assert ok


def test_c07_global_approximator(report):
    target = C.square_target(1)
    eps_check = [1e-1, 1e-2]
    nets = {e: C.build_global_square(e) for e in [1e-1, 1e-2, 1e-3]}
    Cm, r, _ = verify.measure_global_constants(target, lambda e: nets[e], eps_check)
    checks = [verify.global_bound_check(nets[e], target, e, 1000, seed=7, C=Cm, r=r)
              for e in eps_check]
    eps = np.array(sorted(nets))
    overhead = np.array([size_metrics(nets[e]).connectivity - nets[e].meta["inner_connectivity"]
                         for e in eps])
    b, _ = np.polyfit(np.log(1 / eps), overhead, 1)
    a = np.max(overhead - b * np.log(1 / eps))
    envelope_gap = np.max(a + b * np.log(1 / eps) - overhead) / overhead.max()
    ok = all(c.passed and len(c.deriv_ratio) == 3 for c in checks) and b > 0 and envelope_gap <= 0.1
    ratios = "; ".join(
        f"eps={c.epsilon:g}: value {max(c.value_ratio.values()):.3f}, deriv {max(c.deriv_ratio.values()):.3f}"
        for c in checks)
    report(7, ok, f"measured C={Cm:.3f}, r={r:.3f}; worst ratios {ratios}; "
                  f"overhead {overhead.tolist()} <= {a:.1f} + {b:.1f} log(1/eps)")
    assert ok


def test_c08_lipschitz(report):
    rng = np.random.default_rng(8)
    worst_excess = -np.inf
    growth_ok = True
    for i in range(100):
        net = netcore.random_network(rng, in_dim=int(rng.integers(1, 4)), max_depth=4)
        cert = verify.lipschitz_certificate(net, float(rng.uniform(0.5, 3)), 41, 200, seed=i)
        worst_excess = max(worst_excess, cert.empirical_quotient_max - cert.L_B)
        growth_ok &= cert.growth_ok
    for m in range(2, 7):
        cert = verify.lipschitz_certificate(C.build_square(m, 4.0), 4.0, 201, 1000, seed=m)
        worst_excess = max(worst_excess, cert.empirical_quotient_max - cert.L_B)
        growth_ok &= cert.growth_ok
    ok = worst_excess <= 1e-9 and growth_ok
    report(8, ok, f"max(quotient - L_B) = {worst_excess:.2e}, growth bound holds: {growth_ok}")
    assert ok


def test_c09_stability(report):
    rng = np.random.default_rng(9)
    radii = 10.0 ** -np.arange(1, 9)
    finals = []
    for i in range(500):
        psi, phi = composable_pair(rng)
        x = rng.uniform(-2, 2, phi.in_dim)
        finals.append(stability_probe(psi, phi, x, radii, 16, seed=i)[-1])
    frac = np.mean(np.array(finals) <= 1e-8)
    relu1 = Network([([[1.0]], [0.0]), ([[1.0]], [0.0])])
    zero = Network([([[0.0]], [0.0])])
    eq7 = stability_probe(relu1, zero, [0.7], radii, 64, seed=0)
    ok = frac >= 0.99 and np.all(eq7 == 0)
    report(9, ok, f"final-radius probe <= 1e-8 in {frac:.1%} of trials; zero-map pair max {eq7.max()}")
    assert ok


@pytest.mark.parametrize("activation", [activations.leaky_relu(0.1), activations.abs_activation()],
                         ids=["leaky_relu", "abs"])
def test_c10_general_activations(report, activation):
    worst, adv, _ = chain_rule_sweep(activation, seed=10)
    failures, unattributed = fd_sweep(activation, seed=11)
    rate = 1 - failures / 10000
    ok = worst <= 1e-10 and adv <= 1e-10 and rate >= 0.999 and unattributed == 0
    report(10, ok, f"{activation.name}: chain residual {max(worst, adv):.2e}, FD agreement {rate:.4%} "
                   f"({unattributed} unattributed)")
    assert ok
