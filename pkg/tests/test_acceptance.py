"""Acceptance gate: one test per criterion, each at its pinned tolerance.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""

import itertools
import time

import numpy as np
import pytest

from coqec import channels as ch
from coqec import experiments as exp
from coqec._linalg import random_isometry
from coqec.codes import repetition_code
from coqec.metrics import (Encoding, Recovery, channel_fidelity, fidelity_from_distance,
                           indirect_distance, kl_condition)
from coqec.optim import (GammaProblem, OptimizeOptions, algorithm1, algorithm2, optimal_delta,
                         optimize_gamma)

from conftest import random_unitary

RESULTS = []
ANCILLA_OPTIONS = exp.ANCILLA_OPTIONS


def record(number, ok, detail):
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {detail}")
    assert ok, detail


def standard(p):
    return (1 - p) ** 3 + 3 * p * (1 - p) ** 2


def flip_all(p):
    return p**3 + 3 * p**2 * (1 - p)


def test_criterion_01_low_noise_coincidence():
    t0 = time.perf_counter()
    grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    errs = [abs(algorithm2(ch.bit_flip_channel(3, p), n_ca=4).fidelity - standard(p)) for p in grid]
    dt = time.perf_counter() - t0
    record(1, max(errs) <= 1e-4 and dt < 60,
           f"p<=0.5 max |f - closed form| = {max(errs):.2e} (tol 1e-4), runtime {dt:.1f}s (< 60s)")


def test_criterion_02_high_noise_flip_all():
    ps = [0.6, 0.7, 0.8]
    fs = [algorithm2(ch.bit_flip_channel(3, p), n_ca=4).fidelity for p in ps]
    errs = [abs(f - flip_all(p)) for f, p in zip(fs, ps)]
    record(2, max(errs) <= 1e-4 and abs(fs[1] - 0.784) <= 1e-4,
           f"p in 0.6..0.8 max |f - flip-all form| = {max(errs):.2e}, f(0.7) = {fs[1]:.6f}")


def test_criterion_03_dominance():
    res = exp.sweep_bitflip()
    worst = min(min(r["f_optimal"] - r["f_standard"], r["f_optimal"] - r["f_no_recovery"]) for r in res.rows)
    record(3, worst >= -1e-6, f"min over sweep of f_optimal - max(baselines) = {worst:.2e} (>= -1e-6)")


def test_criterion_04_descent():
    opts = OptimizeOptions(restarts=0)
    worst = -np.inf
    for seed in range(100):
        c = ch.random_channel(4, 4, exp.derive_seed(404, seed))
        for alg in (algorithm1, algorithm2):
            rep = alg(c, n_ca=2, n_ra=2, options=opts)
            worst = max(worst, rep.max_ascent)
    record(4, worst <= 1e-10, f"largest d_ind increase over 200 runs = {worst:.2e} (<= 1e-10)")


def test_criterion_05_fidelity_distance_relation():
    worst = 0.0
    dims = itertools.cycle([(2, 1, 2, 1), (2, 2, 4, 1), (2, 2, 4, 2), (2, 4, 3, 1), (3, 2, 5, 2)])
    for seed, (n_s, n_ca, m_e, n_ra) in zip(range(100), dims):
        rng = np.random.default_rng(exp.derive_seed(505, seed))
        n_c = n_s * n_ca
        c = ch.random_channel(n_c, m_e, rng)
        C = Encoding(random_isometry(rng, n_c, n_s), n_ca)
        R = Recovery.from_stacked(random_isometry(rng, n_ca * n_ra * n_s, n_c), n_s, n_ra)
        d = indirect_distance(R, c, C, optimal_delta(R, c, C))
        worst = max(worst, abs(channel_fidelity(R, c, C) - fidelity_from_distance(d, n_s)))
    record(5, worst <= 1e-8, f"max |f - (1 - d/2n_S)^2| over 100 triples = {worst:.2e} (<= 1e-8)")


def test_criterion_06_algorithm_equivalence():
    diffs = []
    for seed in range(50):
        c = ch.random_channel(4, 4, exp.derive_seed(606, seed))
        diffs.append(abs(algorithm1(c, n_ca=2, n_ra=2).fidelity - algorithm2(c, n_ca=2, n_ra=2).fidelity))
    record(6, max(diffs) <= 1e-4, f"max |f_alg1 - f_alg2| over 50 channels = {max(diffs):.2e} (<= 1e-4)")


def test_criterion_07_gamma_rank_two():
    t0 = time.perf_counter()
    res = exp.rank_study(100, n_s=2, n_ca=2, m_e=4, n_ra=2, seed=7)
    dt = time.perf_counter() - t0
    res.validate()
    good = 0
    smallest = np.inf
    for r in res.records:
        spec = np.asarray(r["gamma_spectrum"])
        nonzero = spec[spec > 1e-6]
        smallest = min(smallest, nonzero.min())
        good += r["gamma_rank"] == 2 and r["converged"] and nonzero.min() > 1e-3
    record(7, good >= 95 and dt < 600,
           f"{good}/100 trials converge with rank 2 and eigenvalues > 1e-3 "
           f"(smallest nonzero {smallest:.3f}), runtime {dt:.1f}s (< 600s)")


@pytest.fixture(scope="module")
def redundancy():
    return exp.ancilla_distribution_study(None, [(4, 0), (4, 1), (4, 2)], [0.1, 0.3], ANCILLA_OPTIONS)


def test_criterion_08_recovery_ancilla_redundancy(redundancy):
    res = redundancy
    spread = max(np.ptp([res.fidelity(4, ra, p) for ra in (0, 1, 2)]) for p in (0.1, 0.3))
    conv = [r for r in res.rows if r["converged"]]
    ranks_ok = bool(conv) and all(r["gamma_rank"] == 16 for r in conv)
    record(8, spread <= 1e-4 and ranks_ok,
           f"n_RA in 1,2,4 fidelity spread = {spread:.2e} (<= 1e-4); "
           f"converged runs {len(conv)}/{len(res.rows)}, ranks {sorted({r['gamma_rank'] for r in conv})} (== 16)")


def test_criterion_09_ancilla_distribution():
    grid = [0.1, 0.2, 0.3]
    t0 = time.perf_counter()
    big = exp.ancilla_distribution_study(6, [(6, 0)], grid, ANCILLA_OPTIONS)
    dt7 = time.perf_counter() - t0
    rest = exp.ancilla_distribution_study(6, [(4, 2), (5, 1)], grid, ANCILLA_OPTIONS)
    worst = np.inf
    for p in grid:
        f60, f51, f42 = big.fidelity(6, 0, p), rest.fidelity(5, 1, p), rest.fidelity(4, 2, p)
        worst = min(worst, f60 - f51 + 1e-6, f51 - f42 + 1e-6)
    record(9, worst >= 0 and dt7 < 1800,
           f"min slack in f(6,0) >= f(5,1) >= f(4,2) - 1e-6 = {worst:.2e}; "
           f"7-qubit runs {dt7:.0f}s (< 1800s)")


def test_criterion_10_kl_perfect_correction():
    p = 0.2
    x, i = ch.PAULI["X"], ch.PAULI["I"]
    flips = [np.kron(np.kron(x, i), i), np.kron(np.kron(i, x), i), np.kron(np.kron(i, i), x)]
    c = ch.new_channel([np.sqrt(1 - p) * np.eye(8)] + [np.sqrt(p / 3) * f for f in flips])
    kl = kl_condition(c, repetition_code(3))
    f = algorithm2(c, n_ca=4).fidelity
    record(10, kl.satisfied and kl.residual <= 1e-8 and f >= 1 - 1e-6,
           f"KL residual {kl.residual:.1e} (<= 1e-8), satisfied={kl.satisfied}, alg2 fidelity 1 - {1 - f:.1e}")


def test_criterion_11_unitary_freedom():
    rng = np.random.default_rng(1111)
    gamma_err = 0.0
    for _ in range(20):
        d = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        d /= np.linalg.norm(d)
        u = random_unitary(rng, 4)
        gamma_err = max(gamma_err, np.abs(d.conj().T @ d - (u @ d).conj().T @ (u @ d)).max())
    fid_err = 0.0
    for seed in range(5):
        c = ch.random_channel(4, 4, exp.derive_seed(1111, seed))
        mixed = ch.mix_elements(c, random_unitary(rng, 4))
        fid_err = max(fid_err, abs(algorithm2(c, n_ca=2, n_ra=2).fidelity
                                   - algorithm2(mixed, n_ca=2, n_ra=2).fidelity))
    bf = ch.bit_flip_channel(3, 0.3)
    fid_err = max(fid_err, abs(algorithm2(bf, n_ca=4).fidelity
                               - algorithm2(ch.mix_elements(bf, random_unitary(rng, 8)), n_ca=4).fidelity))
    record(11, gamma_err <= 1e-10 and fid_err <= 1e-6,
           f"Gamma(U Delta) - Gamma(Delta) = {gamma_err:.1e} (<= 1e-10); "
           f"mixed-representation fidelity gap {fid_err:.1e} (<= 1e-6)")


def units(n):
    for a, b in itertools.product(range(n), repeat=2):
        e = np.zeros((n, n), dtype=complex)
        e[a, b] = 1
        yield e


def test_criterion_12_average_channel():
    rng = np.random.default_rng(1212)
    members = [ch.random_channel(4, m, rng) for m in (2, 3, 4)]
    probs = rng.dirichlet(np.ones(3))
    avg = ch.average_channel(ch.ensemble(members, probs))
    lin_err = 0.0
    for _ in range(10):
        C = Encoding(random_isometry(rng, 4, 2), 2)
        R = Recovery.from_stacked(random_isometry(rng, 4, 4), 2)
        mix = sum(p * channel_fidelity(R, m, C) for p, m in zip(probs, members))
        lin_err = max(lin_err, abs(channel_fidelity(R, avg, C) - mix))
    red = ch.reduce_kraus(avg)
    act_err = max(np.abs(ch.apply(red, e) - ch.apply(avg, e)).max() for e in units(4))
    record(12, lin_err <= 1e-8 and red.m_e <= 16 and act_err <= 1e-10,
           f"|f_avg - sum p f| = {lin_err:.1e} (<= 1e-8); reduced {avg.m_e} -> {red.m_e} elements (<= 16), "
           f"action error {act_err:.1e} (<= 1e-10)")


def test_criterion_13_robust_coincidence():
    lo = exp.robust_average_design([0.0, 0.1, 0.2, 0.3, 0.4])
    hi = exp.robust_average_design([0.5, 0.6, 0.7, 0.8, 0.9])
    gap = max(abs(r["f_average_case"] - r["f_optimal"]) for r in lo.rows + hi.rows)
    record(13, gap <= 1e-3, f"max |f_average_case - f_optimal| over both ranges = {gap:.2e} (<= 1e-3)")


def bloch_grid_max(prob, n=22, zooms=4):
    """Brute-force maximum over Gamma = (I + r.sigma)/2, |r| <= 1.

    A cube of n^3 (about 10^4) points is pulled radially into the ball; each
    zoom re-centres a cube two cells wide on the best point found so far.
    """
    sig = [ch.PAULI[k] for k in "XYZ"]

    def value(r):
        g = (np.eye(2) + sum(ri * s for ri, s in zip(r, sig))) / 2
        return prob.value(g)

    centre, half = np.zeros(3), 1.0
    best_val, best_r = -np.inf, centre
    for _ in range(zooms + 1):
        axis = np.linspace(-half, half, n)
        for d in itertools.product(axis, repeat=3):
            r = centre + np.array(d)
            nr = np.linalg.norm(r)
            if nr > 1:
                r = r / nr
            v = value(r)
            if v > best_val:
                best_val, best_r = v, r
        centre, half = best_r, 2 * half / (n - 1)
    return best_val


def test_criterion_14_gamma_micro_oracle():
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(exp.derive_seed(1414, seed))
        c = ch.random_channel(2, 2, rng)
        C = Encoding(random_isometry(rng, 2, 2), 1)
        oracle = bloch_grid_max(GammaProblem(c, C))
        worst = max(worst, abs(optimize_gamma(c, C).objective - oracle))
    record(14, worst <= 1e-4, f"max |optimize_gamma - grid search| over 5 instances = {worst:.1e} (<= 1e-4)")
