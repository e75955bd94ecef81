"""Kraus-form noise channels: construction, validation, averaging and reduction.

Tensor products follow a fixed ordering: the leftmost factor is the most
significant index. In the codespace the encoding ancillas come first and the
system qubit last, so basis index ``a * n_S + s`` is ancilla ``a``, system ``s``.
"""

import enum
import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from ._linalg import dagger
from .errors import (CompletenessViolation, DimensionMismatch, InvalidProbability,
                     InvalidWeight, MixedDimensions)

COMPLETENESS_TOL = 1e-10
REDUCE_TOL = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class Mode(str, enum.Enum):
    TRACE_PRESERVING = "TracePreserving"
    SUB_NORMALIZED = "SubNormalized"


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """An ordered set of ``m_E`` square operation elements.

    ``elements`` is stored as a read-only array of shape ``(m_E, n_C, n_C)``.
    Use :func:`new_channel` to build one; it validates completeness.
    """

    elements: np.ndarray
    mode: Mode
    residual: float = field(default=0.0)

    @property
    def n_c(self):
        return self.elements.shape[1]

    @property
    def m_e(self):
        return self.elements.shape[0]

    @property
    def error_matrix(self):
        """The ``n_C x (m_E n_C)`` matrix ``[E_1 ... E_mE]``."""
        return np.concatenate(list(self.elements), axis=1)

    def completeness(self):
        """``sum_e E_e^H E_e``."""
        return np.einsum("eji,ejk->ik", self.elements.conj(), self.elements)

    def __len__(self):
        return self.m_e

    def __repr__(self):
        return f"KrausChannel(n_C={self.n_c}, m_E={self.m_e}, mode={self.mode.value})"


def _completeness_residual(elements, mode):
    s = np.einsum("eji,ejk->ik", elements.conj(), elements)
    gap = np.eye(elements.shape[1]) - s
    if mode is Mode.TRACE_PRESERVING:
        return float(np.linalg.norm(gap))
    # distance below zero of the smallest eigenvalue of I - sum E^H E
    return float(max(0.0, -np.linalg.eigvalsh((gap + dagger(gap)) / 2).min()))


def new_channel(elements, mode=Mode.TRACE_PRESERVING, tol=COMPLETENESS_TOL):
    """Validate a list of Kraus elements and wrap them in a :class:`KrausChannel`.

    Raises DimensionMismatch for an empty list or non-square / unequal shapes,
    and CompletenessViolation when the residual exceeds ``tol`` for ``mode``.
    """
    mode = Mode(mode)
    mats = [np.asarray(e, dtype=complex) for e in elements]
    if not mats:
        raise DimensionMismatch("a channel needs at least one element")
    n = mats[0].shape[0] if mats[0].ndim == 2 else -1
    for m in mats:
        if m.ndim != 2 or m.shape != (n, n):
            raise DimensionMismatch(f"expected {n}x{n} elements, got shape {m.shape}")
    arr = np.stack(mats)
    res = _completeness_residual(arr, mode)
    if res > tol:
        raise CompletenessViolation(f"completeness residual {res:.3e} exceeds {tol:.1e} for mode {mode.value}")
    arr.setflags(write=False)
    return KrausChannel(arr, mode, res)


def identity_channel(n_c):
    return new_channel([np.eye(n_c)])


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise InvalidProbability(f"probability must lie in [0, 1], got {p}")


def weighted_pauli_channel(q, p, pauli="X", max_weight=None):
    """Independent single-qubit Pauli errors on ``q`` qubits truncated at ``max_weight``.

    Elements are tensor products with at most ``max_weight`` non-identity
    factors, each carrying the amplitude ``sqrt(p^w (1-p)^(q-w))``. Truncated
    channels are left sub-normalized. Element order is that of
    ``itertools.product`` over per-qubit (identity, error) choices.
    """
    _check_p(p)
    if q < 1:
        raise InvalidWeight(f"need at least one qubit, got {q}")
    if max_weight is None:
        max_weight = q
    if not 0 <= max_weight <= q:
        raise InvalidWeight(f"max_weight must lie in [0, {q}], got {max_weight}")
    err = PAULI[pauli.upper()]
    factors = (np.sqrt(1 - p) * PAULI["I"], np.sqrt(p) * err)
    elements = [reduce(np.kron, (factors[i] for i in idx))
                for idx in itertools.product((0, 1), repeat=q) if sum(idx) <= max_weight]
    mode = Mode.TRACE_PRESERVING if max_weight == q else Mode.SUB_NORMALIZED
    return new_channel(elements, mode)


def bit_flip_channel(q, p):
    """The ``2^q``-element independent bit-flip channel on ``q`` qubits."""
    return weighted_pauli_channel(q, p, "X", q)


def random_hermitian(rng, dim, scale=1.0):
    """Gaussian Hermitian matrix: unit-variance real diagonal, (a + ib)/sqrt(2) above it."""
    h = np.diag(rng.standard_normal(dim)).astype(complex)
    iu = np.triu_indices(dim, 1)
    a = rng.standard_normal(len(iu[0]))
    b = rng.standard_normal(len(iu[0]))
    h[iu] = (a + 1j * b) / np.sqrt(2)
    h[(iu[1], iu[0])] = np.conj(h[iu])
    return scale * h


def random_channel(n_c, m_e, seed=None, scale=1.0):
    """Random channel from the first ``n_C`` columns of ``exp(-i H)``.

    ``H`` is an ``(m_E n_C)``-dimensional Gaussian Hermitian matrix; the
    columns are cut into ``m_E`` stacked ``n_C x n_C`` blocks. ``seed`` may be
    an int, a SeedSequence or a Generator.
    """
    if n_c < 1 or m_e < 1:
        raise DimensionMismatch("n_C and m_E must be positive")
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, n_c * m_e, scale)
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w)) @ dagger(v[:n_c])
    # u[:, :n_C] of exp(-iH) == v diag(e^{-iw}) v^H restricted to the first n_C columns
    return new_channel(list(u.reshape(m_e, n_c, n_c)))


@dataclass(frozen=True, eq=False)
class ChannelEnsemble:
    members: tuple
    probabilities: np.ndarray

    def __post_init__(self):
        if len(self.members) != len(self.probabilities) or not self.members:
            raise MixedDimensions("members and probabilities must be non-empty and of equal length")
        if len({m.n_c for m in self.members}) != 1:
            raise MixedDimensions("all ensemble members must share n_C")
        p = np.asarray(self.probabilities, dtype=float)
        if (p < 0).any() or abs(p.sum() - 1) > 1e-12:
            raise InvalidProbability("ensemble probabilities must be non-negative and sum to 1")


def ensemble(members, probabilities=None):
    members = tuple(members)
    if probabilities is None:
        probabilities = np.full(len(members), 1 / len(members))
    return ChannelEnsemble(members, np.asarray(probabilities, dtype=float))


def average_channel(ens):
    """Average-case channel ``{sqrt(p_a) E_{a,k}}`` of an ensemble.

    Members with fewer than ``kappa`` elements are padded with zero matrices
    so the result has exactly ``len(members) * kappa`` elements, member-major.
    """
    kappa = max(m.m_e for m in ens.members)
    n = ens.members[0].n_c
    out = []
    for p, m in zip(ens.probabilities, ens.members):
        els = np.zeros((kappa, n, n), dtype=complex)
        els[:m.m_e] = m.elements
        out.extend(np.sqrt(p) * els)
    tp = all(m.mode is Mode.TRACE_PRESERVING for m in ens.members)
    return new_channel(out, Mode.TRACE_PRESERVING if tp else Mode.SUB_NORMALIZED)


def choi_matrix(channel):
    """``sum_e vec(E_e) vec(E_e)^H`` with row-major vectorization."""
    v = channel.elements.reshape(channel.m_e, -1)
    return v.T @ v.conj()


def reduce_kraus(channel, tol=REDUCE_TOL):
    """Equivalent channel with at most ``n_C^2`` elements, via the Choi eigendecomposition.

    Elements come out in descending eigenvalue order, each rotated so its
    largest-magnitude entry is real and positive.
    """
    n = channel.n_c
    w, v = np.linalg.eigh(choi_matrix(channel))
    keep = np.flatnonzero(w > tol)[::-1]
    if keep.size == 0:
        return new_channel([np.zeros((n, n))], channel.mode)
    els = []
    for i in keep:
        vec = v[:, i]
        k = np.argmax(np.abs(vec))
        vec = vec * (abs(vec[k]) / vec[k])
        els.append(np.sqrt(w[i]) * vec.reshape(n, n))
    return new_channel(els, channel.mode)


def apply(channel, rho):
    """``sum_e E_e rho E_e^H``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (channel.n_c, channel.n_c):
        raise DimensionMismatch(f"state must be {channel.n_c}x{channel.n_c}, got {rho.shape}")
    return np.einsum("eij,jk,elk->il", channel.elements, rho, channel.elements.conj())


def mix_elements(channel, w):
    """Unitarily mixed representation ``F_i = sum_j W_ij E_j`` of the same map."""
    w = np.asarray(w, dtype=complex)
    if w.shape != (channel.m_e, channel.m_e):
        raise DimensionMismatch("mixing matrix must be m_E x m_E")
    return new_channel(list(np.einsum("ij,jkl->ikl", w, channel.elements)), channel.mode)
