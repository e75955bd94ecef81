"""Command-line entry point: ``coqec <command> [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure or a
violated row invariant. Every command writes its fully resolved
configuration next to its output.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import channels as chan
from . import experiments as exp
from . import serialize
from .errors import QECError, RankOverflow
from .optim import OptimizeOptions, algorithm1, algorithm2

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

OVERVIEW = """\
Channel-optimized quantum error correction.

Studies (defaults reproduce each one with a single command):
  rank-study                      Gamma rank and fidelity per iteration on random channels
  sweep                           bit-flip fidelity vs p: standard code, optimal, average-case, no recovery
  robust --p-grid 0:0.1:0.4       average-case design over a narrower p range (also 0.5:0.1:0.9)
  ancilla-study --distributions "4,0;4,1;4,2"
                                  5-qubit code with 1, 2 or 4 dimensional recovery ancillas
  ancilla-study --total 6         six ancilla qubits split between encoding and recovery
  optimize                        a single algorithm run on one channel
"""


class ConfigError(Exception):
    pass


def parse_grid(text):
    """``start:step:stop`` (inclusive) or a comma-separated list of values."""
    try:
        if ":" in text:
            start, step, stop = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 12) for k in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:step:stop or a,b,c") from None


def parse_distributions(text):
    try:
        out = [tuple(int(v) for v in part.split(",")) for part in text.split(";") if part.strip()]
    except ValueError:
        out = None
    if not out or any(len(d) != 2 for d in out):
        raise argparse.ArgumentTypeError(f"bad distributions {text!r}; use 'ca,ra;ca,ra;...'")
    return out


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _add_options(p, d=OptimizeOptions()):
    g = p.add_argument_group("optimizer")
    g.add_argument("--alg", choices=("alg1", "alg2"), default="alg2")
    g.add_argument("--seed", type=_seed, default=d.seed)
    g.add_argument("--inner-tol", type=float, default=d.inner_tol)
    g.add_argument("--outer-tol", type=float, default=d.outer_tol)
    g.add_argument("--max-outer", type=int, default=d.max_outer)
    g.add_argument("--max-inner", type=int, default=d.max_inner)
    g.add_argument("--rank-tol", type=float, default=d.rank_tol)
    g.add_argument("--gap-tol", type=float, default=d.gap_tol)
    g.add_argument("--max-gamma-iter", type=int, default=d.max_gamma_iter)
    g.add_argument("--restarts", type=int, default=d.restarts, help="random encoding restarts after the trivial start")


def _add_jobs(p):
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker processes (output does not depend on this)")


def build_parser():
    parser = argparse.ArgumentParser(prog="coqec", description=OVERVIEW,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="optimize encoding and recovery for one channel")
    p.add_argument("--channel", choices=("bitflip", "identity", "random", "pauli", "file"), default="bitflip")
    p.add_argument("--qubits", type=int, help="codespace qubits (default 3, or from --n-ca)")
    p.add_argument("--p", type=float, default=0.1, help="error probability for bitflip/pauli")
    p.add_argument("--pauli", choices=("X", "Y", "Z"), default="X")
    p.add_argument("--max-weight", type=int, help="truncate the pauli channel at this error weight")
    p.add_argument("--m-e", type=int, default=4, help="elements of a random channel")
    p.add_argument("--channel-file", help="serialized channel for --channel file")
    p.add_argument("--n-ca", type=int, help="encoding ancilla dimension (default: whole codespace)")
    p.add_argument("--n-ra", type=int, default=1, help="recovery ancilla dimension")
    p.add_argument("--out", default="report.json")
    _add_options(p)

    for name, helptext in (("sweep", "bit-flip fidelity sweep"), ("robust", "average-case robust design")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--channel", choices=("bitflip",), default="bitflip")
        p.add_argument("--p-grid", type=parse_grid, default=list(exp.DEFAULT_P_GRID))
        p.add_argument("--weights", type=parse_grid, help="ensemble weights for the average-case design")
        p.add_argument("--ca-qubits", type=int, default=2, help="encoding ancilla qubits")
        p.add_argument("--out", default=f"{name}.csv")
        _add_options(p)
        _add_jobs(p)

    p = sub.add_parser("rank-study", help="Gamma rank on random channels")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--n-s", type=int, default=2)
    p.add_argument("--n-ca", type=int, default=2)
    p.add_argument("--m-e", type=int, default=4)
    p.add_argument("--n-ra", type=int, default=2)
    p.add_argument("--out", default="rank_study.csv", help="trial table; the histogram goes to *_histogram.csv")
    _add_options(p, exp.RANK_STUDY_OPTIONS)
    p.set_defaults(alg="alg1")
    _add_jobs(p)

    p = sub.add_parser("ancilla-study", help="ancilla split between encoding and recovery")
    p.add_argument("--total", type=int, default=6)
    p.add_argument("--distributions", type=parse_distributions,
                   help="'ca,ra;...' qubit splits; skips the --total check when given")
    p.add_argument("--p-grid", type=parse_grid, default=[0.1, 0.2, 0.3])
    p.add_argument("--pauli", choices=("X", "Y", "Z"), default="Y")
    p.add_argument("--max-weight", type=int, default=3)
    p.add_argument("--out", default="ancilla_study.csv")
    _add_options(p, exp.ANCILLA_OPTIONS)
    _add_jobs(p)
    return parser


def _options(args):
    return OptimizeOptions(
        inner_tol=args.inner_tol, outer_tol=args.outer_tol, max_outer=args.max_outer,
        max_inner=args.max_inner, rank_tol=args.rank_tol, gap_tol=args.gap_tol,
        max_gamma_iter=args.max_gamma_iter, restarts=args.restarts, seed=args.seed)


def _validate(args):
    for name in ("max_outer", "max_inner", "max_gamma_iter"):
        if getattr(args, name) < 1:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")
    for name in ("inner_tol", "outer_tol", "rank_tol", "gap_tol"):
        if not getattr(args, name) > 0:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")
    if args.restarts < 0:
        raise ConfigError("--restarts must be non-negative")
    for name in ("p_grid", "p"):
        vals = getattr(args, name, None)
        vals = [vals] if isinstance(vals, float) else vals
        if vals is not None and any(not 0 <= v <= 1 for v in vals):
            raise ConfigError(f"--{name.replace('_', '-')} values must lie in [0, 1]")
    if getattr(args, "jobs", 1) < 1:
        raise ConfigError("--jobs must be positive")


def _resolved(args):
    # worker count does not affect results, so it stays out of the record
    d = {k: v for k, v in vars(args).items() if k != "jobs"}
    return json.loads(json.dumps(d, default=list))


def _sidecar(path):
    root, _ = os.path.splitext(path)
    return root + ".config.json"


def _build_channel(args):
    if args.channel == "file":
        if not args.channel_file:
            raise ConfigError("--channel file needs --channel-file")
        try:
            return serialize.load_channel(args.channel_file)
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read channel file: {exc}") from None
    q = args.qubits
    if args.n_ca is not None:
        if args.n_ca < 1 or args.n_ca & (args.n_ca - 1):
            raise ConfigError("--n-ca must be a power of two for qubit channels")
        from_ca = args.n_ca.bit_length()
        if q is not None and q != from_ca:
            raise ConfigError(f"--qubits {q} disagrees with --n-ca {args.n_ca}")
        q = from_ca
    q = 3 if q is None else q
    if q < 1:
        raise ConfigError("--qubits must be positive")
    args.qubits = q
    if args.channel == "pauli" and args.max_weight is None:
        args.max_weight = q
    if args.channel == "identity":
        return chan.identity_channel(2**q)
    if args.channel == "bitflip":
        return chan.bit_flip_channel(q, args.p)
    if args.channel == "pauli":
        return chan.weighted_pauli_channel(q, args.p, args.pauli, args.max_weight)
    return chan.random_channel(2**q, args.m_e, args.seed)


def cmd_optimize(args):
    channel = _build_channel(args)
    n_ca = args.n_ca if args.n_ca is not None else channel.n_c // 2
    if n_ca < 1 or channel.n_c % n_ca:
        raise ConfigError(f"--n-ca {n_ca} does not divide n_C = {channel.n_c}")
    if args.n_ra < 1:
        raise ConfigError("--n-ra must be positive")
    args.n_ca = n_ca
    alg = algorithm1 if args.alg == "alg1" else algorithm2
    try:
        report = alg(channel, n_ca=n_ca, n_ra=args.n_ra, options=_options(args))
    except (RankOverflow, ArithmeticError) as exc:
        best = getattr(exc, "report", None)
        if best is not None:
            serialize.dump_report(best, args.out, {"config": _resolved(args), "error": str(exc)})
            print(f"best iterate (fidelity {best.fidelity:.12g}) written to {args.out}", file=sys.stderr)
        raise
    serialize.dump_report(report, args.out, {"config": _resolved(args)})
    print(f"fidelity    {report.fidelity:.12g}")
    print(f"d_ind       {report.d_ind:.12g}")
    print(f"gamma_rank  {report.gamma_rank}")
    print(f"iterations  {report.n_iterations}")
    if report.max_ascent > exp.ASCENT_TOL:
        print(f"error: indirect distance increased by {report.max_ascent:.2e}; best iterate written to {args.out}",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _finish(result, fields, rows, args, extra=None):
    try:
        result.validate()
    finally:
        exp.write_csv(args.out, fields, rows)
        for path, (f, r) in (extra or {}).items():
            exp.write_csv(path, f, r)
        exp.write_sidecar(_sidecar(args.out), {"cli": _resolved(args), "run": result.config})
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_sweep(args):
    if args.ca_qubits < 2 or args.ca_qubits % 2:
        raise ConfigError("--ca-qubits must be even and at least 2 (odd repetition code)")
    runner = exp.sweep_bitflip if args.command == "sweep" else exp.robust_average_design
    if args.weights is not None and len(args.weights) != len(args.p_grid):
        raise ConfigError("--weights needs one entry per grid point")
    res = runner(args.p_grid, ca_qubits=args.ca_qubits, options=_options(args), weights=args.weights,
                 algorithm=args.alg, jobs=args.jobs)
    return _finish(res, res.FIELDS, res.rows, args)


def cmd_rank_study(args):
    if args.trials < 1 or min(args.n_s, args.n_ca, args.m_e, args.n_ra) < 1:
        raise ConfigError("--trials, --n-s, --n-ca, --m-e and --n-ra must be positive")
    res = exp.rank_study(args.trials, args.n_s, args.n_ca, args.m_e, args.n_ra, args.seed,
                         _options(args), args.alg, args.jobs)
    hist_path = os.path.splitext(args.out)[0] + "_histogram.csv"
    extra = {hist_path: (("iteration", "gamma_rank", "count"), exp.histogram_rows(res.histogram))}
    code = _finish(res, res.FIELDS, res.records, args, extra)
    ranks = res.final_ranks()
    for r, n in sorted(zip(*np.unique(ranks, return_counts=True))):
        print(f"final rank {r}: {n}/{len(ranks)}")
    return code


def cmd_ancilla_study(args):
    total = None if args.distributions else args.total
    res = exp.ancilla_distribution_study(total, args.distributions, args.p_grid, _options(args),
                                         args.pauli, args.max_weight, args.jobs)
    return _finish(res, res.FIELDS, res.rows, args)


COMMANDS = {"optimize": cmd_optimize, "sweep": cmd_sweep, "robust": cmd_sweep,
            "rank-study": cmd_rank_study, "ancilla-study": cmd_ancilla_study}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        _validate(args)
        return COMMANDS[args.command](args)
    except exp.InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RankOverflow, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QECError, RuntimeError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
