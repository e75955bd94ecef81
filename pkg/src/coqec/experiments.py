"""Seeded numerical studies: bit-flip sweeps, robust designs, Gamma-rank and ancilla studies.

Every function is deterministic given its arguments. Per-row and per-trial
seeds are derived from one base seed with :func:`derive_seed`, so adding rows
or trials never changes the ones already there, and results do not depend
on the number of worker processes.
"""

import csv
import dataclasses
import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import channels as chan
from .codes import no_recovery_blocks, repetition_code, standard_recovery
from .metrics import channel_fidelity
from .optim import OptimizeOptions, algorithm1, algorithm2

ALGORITHMS = {"alg1": algorithm1, "alg2": algorithm2}
RANK_STUDY_OPTIONS = OptimizeOptions(restarts=0, max_outer=2000)
ANCILLA_OPTIONS = OptimizeOptions(restarts=1, max_outer=3000)
DEFAULT_P_GRID = tuple(round(0.1 * k, 10) for k in range(10))
FIDELITY_SLACK = 1e-6
ASCENT_TOL = 1e-10


def derive_seed(seed, index):
    """Counter-based child seed: the ``index``-th spawn of ``seed``, as a 63-bit int."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _pmap(fn, args, jobs):
    if jobs is None or jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*args)))


class InvariantViolation(RuntimeError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


# --------------------------------------------------------------------------
# bit-flip sweeps


@dataclasses.dataclass
class SweepResult:
    rows: list
    config: dict

    FIELDS = ("p", "f_standard", "f_optimal", "f_average_case", "f_no_recovery", "gamma_rank", "seed")

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def validate(self):
        for i, r in enumerate(self.rows):
            fids = [r[k] for k in ("f_standard", "f_optimal", "f_average_case", "f_no_recovery")]
            if any(not -FIDELITY_SLACK <= f <= 1 + FIDELITY_SLACK for f in fids):
                raise InvariantViolation(f"row {i} (p={r['p']}): fidelity outside [0, 1]", i)
            if r["f_optimal"] < max(r["f_standard"], r["f_no_recovery"]) - FIDELITY_SLACK:
                raise InvariantViolation(
                    f"row {i} (p={r['p']}): optimized fidelity {r['f_optimal']:.9f} below a baseline", i)
            _check_descent(r, f"row {i} (p={r['p']})", i)
        return self


def _check_descent(r, where, i):
    if r.get("max_ascent", 0.0) > ASCENT_TOL:
        raise InvariantViolation(f"{where}: indirect distance increased by {r['max_ascent']:.2e}", i)


def _baselines(q, p):
    ch = chan.bit_flip_channel(q, p)
    code = repetition_code(q)
    f_std = channel_fidelity(standard_recovery(q), ch, code)
    f_none = channel_fidelity(no_recovery_blocks(code, code.n_ca), ch, code)
    return f_std, f_none


def _optimal_point(q, p, options, algorithm):
    ch = chan.bit_flip_channel(q, p)
    rep = ALGORITHMS[algorithm](ch, n_ca=2 ** (q - 1), n_ra=1, options=options)
    return rep.fidelity, rep.gamma_rank, rep.max_ascent


def average_case_design(p_list, weights=None, ca_qubits=2, options=None, algorithm="alg2"):
    """Optimize one (R, C) on the reduced average of bit-flip channels and score it on each member.

    Returns ``(report, fidelities)`` with one fidelity per entry of ``p_list``.
    """
    q = ca_qubits + 1
    members = [chan.bit_flip_channel(q, p) for p in p_list]
    avg = chan.reduce_kraus(chan.average_channel(chan.ensemble(members, weights)))
    rep = ALGORITHMS[algorithm](avg, n_ca=2**ca_qubits, n_ra=1, options=options)
    fids = [channel_fidelity(rep.recovery, m, rep.encoding) for m in members]
    return rep, fids


def sweep_bitflip(p_grid=DEFAULT_P_GRID, ca_qubits=2, options=None, weights=None,
                  algorithm="alg2", jobs=1):
    """Fidelity of the standard code, the per-p optimum, the average-case design and no recovery.

    ``ca_qubits`` encoding ancilla qubits protect one system qubit, so the
    codespace has ``q = ca_qubits + 1`` qubits (odd ``q`` for the baseline).
    The average-case column scores a single design optimized for the
    ``weights``-average of all channels in ``p_grid``.
    """
    options = options or OptimizeOptions()
    p_grid = sorted(float(p) for p in p_grid)
    q = ca_qubits + 1
    seeds = [derive_seed(options.seed, i) for i in range(len(p_grid))]
    opt_args = [(q, p, dataclasses.replace(options, seed=s), algorithm) for p, s in zip(p_grid, seeds)]
    optimal = _pmap(_optimal_point, opt_args, jobs)
    _, avg_fids = average_case_design(p_grid, weights, ca_qubits, options, algorithm)
    rows = []
    for p, s, (f_opt, rank, ascent), f_avg in zip(p_grid, seeds, optimal, avg_fids):
        f_std, f_none = _baselines(q, p)
        rows.append({"p": p, "f_standard": f_std, "f_optimal": f_opt, "f_average_case": f_avg,
                     "f_no_recovery": f_none, "gamma_rank": rank, "seed": s, "max_ascent": ascent})
    config = {"experiment": "sweep_bitflip", "p_grid": p_grid, "ca_qubits": ca_qubits,
              "weights": None if weights is None else list(map(float, weights)),
              "algorithm": algorithm, "options": options.to_dict(), "row_seeds": seeds}
    return SweepResult(rows, config)


def robust_average_design(p_list, weights=None, ca_qubits=2, options=None, algorithm="alg2", jobs=1):
    """Sweep rows over ``p_list`` whose average-case column comes from a design for that list only."""
    res = sweep_bitflip(p_list, ca_qubits, options, weights, algorithm, jobs)
    res.config["experiment"] = "robust_average_design"
    return res


# --------------------------------------------------------------------------
# Gamma rank on random channels


@dataclasses.dataclass
class RankStudyResult:
    records: list
    histogram: dict
    config: dict

    FIELDS = ("seed", "iterations", "gamma_spectrum", "gamma_rank", "fidelity_trace")

    def final_ranks(self):
        return np.array([r["gamma_rank"] for r in self.records])

    def validate(self):
        for i, r in enumerate(self.records):
            spec = np.asarray(r["gamma_spectrum"])
            if (spec < 0).any() or abs(spec.sum() - 1) > 1e-8:
                raise InvariantViolation(f"trial {i}: Gamma spectrum not a probability vector", i)
            if r["gamma_rank"] > min(r["m_r"], len(spec)):
                raise InvariantViolation(f"trial {i}: rank {r['gamma_rank']} exceeds the Delta row count", i)
            _check_descent(r, f"trial {i}", i)
        return self


def _rank_trial(index, n_s, n_ca, m_e, n_ra, seed, options, algorithm):
    s = derive_seed(seed, index)
    ch = chan.random_channel(n_s * n_ca, m_e, s)
    rep = ALGORITHMS[algorithm](ch, n_ca=n_ca, n_ra=n_ra, options=options)
    return {
        "seed": s,
        "iterations": rep.n_iterations,
        "gamma_spectrum": rep.gamma_spectrum.tolist(),
        "gamma_rank": rep.gamma_rank,
        "fidelity_trace": [it["fidelity"] for it in rep.iterations],
        "rank_trace": [it["gamma_rank"] for it in rep.iterations],
        "converged": rep.converged,
        "m_r": n_ca * n_ra,
        "max_ascent": rep.max_ascent,
    }


def rank_study(trials=100, n_s=2, n_ca=2, m_e=4, n_ra=2, seed=0, options=None, algorithm="alg1", jobs=1):
    """Run the optimizer on ``trials`` random channels and tabulate the rank of Gamma per iteration.

    The histogram maps an outer-iteration number to a ``{rank: count}`` table;
    trials that stopped earlier contribute their final rank. Default options
    use no random restarts, so each trial follows a single trajectory, and
    allow 2000 outer iterations because a few random channels converge slowly.
    """
    options = options or RANK_STUDY_OPTIONS
    args = [(t, n_s, n_ca, m_e, n_ra, seed, options, algorithm) for t in range(trials)]
    records = _pmap(_rank_trial, args, jobs)
    horizon = max(r["iterations"] for r in records)
    histogram = {}
    for k in range(horizon):
        histogram[k + 1] = dict(sorted(Counter(
            r["rank_trace"][min(k, r["iterations"] - 1)] for r in records).items()))
    config = {"experiment": "rank_study", "trials": trials, "n_S": n_s, "n_CA": n_ca, "m_E": m_e,
              "n_RA": n_ra, "seed": seed, "algorithm": algorithm, "options": options.to_dict(),
              "trial_seeds": [r["seed"] for r in records]}
    return RankStudyResult(records, histogram, config)


# --------------------------------------------------------------------------
# ancilla distribution


@dataclasses.dataclass
class AncillaStudyResult:
    rows: list
    config: dict

    FIELDS = ("n_ca_qubits", "n_ra_qubits", "p", "fidelity", "gamma_rank", "converged", "seed")

    def fidelity(self, n_ca_qubits, n_ra_qubits, p):
        for r in self.rows:
            if (r["n_ca_qubits"], r["n_ra_qubits"]) == (n_ca_qubits, n_ra_qubits) and abs(r["p"] - p) < 1e-12:
                return r["fidelity"]
        raise KeyError((n_ca_qubits, n_ra_qubits, p))

    def validate(self):
        for i, r in enumerate(self.rows):
            if not -FIDELITY_SLACK <= r["fidelity"] <= 1 + FIDELITY_SLACK:
                raise InvariantViolation(f"row {i}: fidelity outside [0, 1]", i)
            _check_descent(r, f"row {i}", i)
        return self


def default_distributions(total):
    return [(total - 2, 2), (total - 1, 1), (total, 0)]


def _ancilla_point(ca, ra, p, pauli, max_weight, options):
    ch = chan.weighted_pauli_channel(1 + ca, p, pauli, min(max_weight, 1 + ca))
    rep = algorithm2(ch, n_ca=2**ca, n_ra=2**ra, options=options)
    return rep.fidelity, rep.gamma_rank, rep.converged, rep.max_ascent


def ancilla_distribution_study(total_ancillas=6, distributions=None, p_grid=(0.1, 0.2, 0.3),
                               options=None, pauli="Y", max_weight=3, jobs=1):
    """Optimized fidelity for each split of ancilla qubits between encoding and recovery.

    Only the ``1 + n_ca_qubits`` codespace qubits are exposed to the
    weight-truncated Pauli channel; recovery ancillas enter through
    ``n_RA = 2^n_ra_qubits``. ``total_ancillas=None`` skips the sum check.
    Default options allow 3000 outer iterations: the larger codespaces
    approach their optimum slowly and the splits differ by less than 1e-6.
    """
    options = options or ANCILLA_OPTIONS
    if distributions is None:
        distributions = default_distributions(total_ancillas)
    distributions = [tuple(int(x) for x in d) for d in distributions]
    for d in distributions:
        if min(d) < 0 or (total_ancillas is not None and sum(d) != total_ancillas):
            raise ValueError(f"distribution {d} does not split {total_ancillas} ancillas")
    p_grid = sorted(float(p) for p in p_grid)
    keys = [(ca, ra, p) for ca, ra in distributions for p in p_grid]
    seeds = [derive_seed(options.seed, i) for i in range(len(keys))]
    args = [(ca, ra, p, pauli, max_weight, dataclasses.replace(options, seed=s))
            for (ca, ra, p), s in zip(keys, seeds)]
    out = _pmap(_ancilla_point, args, jobs)
    rows = [{"n_ca_qubits": ca, "n_ra_qubits": ra, "p": p, "fidelity": f, "gamma_rank": rank,
             "converged": conv, "seed": s, "max_ascent": ascent}
            for (ca, ra, p), s, (f, rank, conv, ascent) in zip(keys, seeds, out)]
    config = {"experiment": "ancilla_distribution_study", "total_ancillas": total_ancillas,
              "distributions": [list(d) for d in distributions], "p_grid": p_grid, "pauli": pauli,
              "max_weight": max_weight, "options": options.to_dict(), "row_seeds": seeds}
    return AncillaStudyResult(rows, config)


# --------------------------------------------------------------------------
# output


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(_cell(x) for x in v)
    return str(v)


def write_csv(path, fields, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_cell(r[f]) for f in fields])


def write_sidecar(path, config):
    with open(path, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")


def histogram_rows(histogram):
    return [{"iteration": k, "gamma_rank": rank, "count": n}
            for k, table in histogram.items() for rank, n in table.items()]
