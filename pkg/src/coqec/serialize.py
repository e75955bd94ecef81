"""JSON encodings of channels and optimization reports.

Matrices are written row-major as nested lists of ``[re, im]`` pairs. Every
float is printed in scientific notation with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

import json

import numpy as np

from .channels import Mode, new_channel
from .metrics import Encoding, Recovery


def _num(x):
    return format(float(x), ".16e")


def _matrix_text(m, indent):
    rows = []
    for row in np.asarray(m, dtype=complex):
        rows.append("[" + ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in row) + "]")
    pad = " " * indent
    return "[\n" + ",\n".join(pad + "  " + r for r in rows) + "\n" + pad + "]"


def _to_text(obj, indent=0):
    """json-like rendering where ndarray leaves become fixed-precision matrices or vectors."""
    pad = " " * indent
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and np.iscomplexobj(obj):
            return _matrix_text(obj, indent)
        if obj.ndim == 1 and np.isrealobj(obj):
            return "[" + ", ".join(_num(x) for x in obj) + "]"
        return _to_text(list(obj), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_to_text(v, indent + 2)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer, str, bool)) for v in obj):
            return "[" + ", ".join(_to_text(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + "  " + _to_text(v, indent + 2) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if obj is None:
        return "null"
    return json.dumps(obj)


def dumps(obj):
    return _to_text(obj) + "\n"


def _matrix_from(lst):
    a = np.asarray(lst, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def channel_to_dict(channel):
    return {"n_C": channel.n_c, "mode": channel.mode.value, "elements": list(channel.elements)}


def channel_from_dict(d):
    els = [_matrix_from(m) for m in d["elements"]]
    ch = new_channel(els, Mode(d["mode"]))
    if ch.n_c != d["n_C"]:
        raise ValueError(f"n_C field {d['n_C']} disagrees with element shape {ch.n_c}")
    return ch


def dump_channel(channel, path):
    with open(path, "w") as fh:
        fh.write(dumps(channel_to_dict(channel)))


def load_channel(path):
    with open(path) as fh:
        return channel_from_dict(json.load(fh))


def report_to_dict(report, extra=None):
    """Everything in a report except wall time, so identical runs give identical files."""
    d = {
        "algorithm": report.algorithm,
        "fidelity": report.fidelity,
        "d_ind": report.d_ind,
        "gamma_rank": report.gamma_rank,
        "gamma_spectrum": np.asarray(report.gamma_spectrum, dtype=float),
        "converged": report.converged,
        "restart": report.restart,
        "restart_fidelities": [None if f is None else float(f) for f in report.restart_fidelities],
        "flags": list(report.flags),
        "options": report.options.to_dict(),
        "iterations": [
            {"d_ind": it["d_ind"], "fidelity": it["fidelity"], "gamma_rank": it["gamma_rank"],
             "gamma_spectrum": np.asarray(it["gamma_spectrum"], dtype=float)}
            for it in report.iterations
        ],
        "encoding": {"n_CA": report.encoding.n_ca, "C": report.encoding.C},
        "recovery": {"n_RA": report.recovery.n_ra, "blocks": list(report.recovery.blocks)},
        "delta": report.delta,
    }
    if extra:
        d.update(extra)
    return d


def dump_report(report, path, extra=None):
    with open(path, "w") as fh:
        fh.write(dumps(report_to_dict(report, extra)))


def load_operators(path):
    """Read back ``(Encoding, Recovery, delta)`` from a report file."""
    with open(path) as fh:
        d = json.load(fh)
    enc = Encoding(_matrix_from(d["encoding"]["C"]), d["encoding"]["n_CA"])
    rec = Recovery(np.stack([_matrix_from(b) for b in d["recovery"]["blocks"]]), d["recovery"]["n_RA"])
    return enc, rec, _matrix_from(d["delta"])
