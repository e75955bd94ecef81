"""Channel fidelity, indirect distance and the perfect-correction condition.

An encoding is an ``n_C x n_S`` isometry ``C``; a recovery is a stack of
``m_R`` blocks ``R_r`` of shape ``n_S x n_C`` whose stacked matrix is an
isometry. ``L`` is the target logic gate (identity when omitted).
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import dagger, isometry_residual, psd_sqrt
from .errors import DimensionMismatch, OutOfRange

ISOMETRY_TOL = 1e-10
KL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Encoding:
    C: np.ndarray
    n_ca: int

    def __post_init__(self):
        c = np.asarray(self.C, dtype=complex)
        object.__setattr__(self, "C", c)
        if c.ndim != 2 or c.shape[0] != c.shape[1] * self.n_ca:
            raise DimensionMismatch(f"encoding of shape {c.shape} is not n_S*n_CA x n_S with n_CA={self.n_ca}")
        res = isometry_residual(c)
        if res > ISOMETRY_TOL:
            raise DimensionMismatch(f"encoding columns are not orthonormal (residual {res:.2e})")

    @property
    def n_s(self):
        return self.C.shape[1]

    @property
    def n_c(self):
        return self.C.shape[0]

    @classmethod
    def trivial(cls, n_s, n_ca):
        """First ``n_S`` columns of the identity: the system is left unencoded."""
        return cls(np.eye(n_s * n_ca, n_s, dtype=complex), n_ca)


@dataclass(frozen=True, eq=False)
class Recovery:
    """Recovery operation elements, ``blocks`` of shape ``(m_R, n_S, n_C)``."""

    blocks: np.ndarray
    n_ra: int = 1

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=complex)
        object.__setattr__(self, "blocks", b)
        if b.ndim != 3:
            raise DimensionMismatch("recovery blocks must have shape (m_R, n_S, n_C)")
        res = isometry_residual(self.stacked)
        if res > ISOMETRY_TOL:
            raise DimensionMismatch(f"stacked recovery is not an isometry (residual {res:.2e})")

    @property
    def m_r(self):
        return self.blocks.shape[0]

    @property
    def stacked(self):
        return self.blocks.reshape(-1, self.blocks.shape[2])

    @classmethod
    def from_stacked(cls, r, n_s, n_ra=1):
        r = np.asarray(r, dtype=complex)
        return cls(r.reshape(-1, n_s, r.shape[1]), n_ra)


def _blocks(R):
    return R.blocks if isinstance(R, Recovery) else np.asarray(R, dtype=complex)


def _mat(C):
    return C.C if isinstance(C, Encoding) else np.asarray(C, dtype=complex)


def _gate(L, n_s):
    if L is None:
        return np.eye(n_s, dtype=complex)
    L = np.asarray(L, dtype=complex)
    if L.shape != (n_s, n_s):
        raise DimensionMismatch(f"target gate must be {n_s}x{n_s}")
    if np.linalg.norm(dagger(L) @ L - np.eye(n_s)) > ISOMETRY_TOL:
        raise DimensionMismatch("target gate is not unitary")
    return L


def _check(R, channel, C):
    b, c = _blocks(R), _mat(C)
    if c.shape[0] != channel.n_c or b.shape[2] != channel.n_c or b.shape[1] != c.shape[1]:
        raise DimensionMismatch(
            f"incompatible shapes: recovery {b.shape}, channel n_C={channel.n_c}, encoding {c.shape}")
    return b, c


def trace_table(R, channel, C, L=None):
    """``T[r, e] = Tr(L^H R_r E_e C)``, the quantity shared by fidelity and the optimal delta."""
    b, c = _check(R, channel, C)
    n_s = c.shape[1]
    L = _gate(L, n_s)
    p = _products(b, channel, c)
    return np.tensordot(p, dagger(L).T, axes=([2, 3], [0, 1])).T


def _products(b, channel, c):
    """``P[e, r] = R_r E_e C`` as an array of shape ``(m_E, m_R, n_S, n_S)``."""
    m_r, n_s, n_c = b.shape
    p = b.reshape(m_r * n_s, n_c) @ (channel.elements @ c)
    return p.reshape(channel.m_e, m_r, n_s, n_s)


def channel_fidelity(R, channel, C, L=None):
    """``(1/n_S^2) sum_{r,e} |Tr(L^H R_r E_e C)|^2``."""
    t = trace_table(R, channel, C, L)
    n_s = _mat(C).shape[1]
    return float(np.sum(np.abs(t) ** 2)) / n_s**2


def _check_delta(delta, m_r, m_e):
    delta = np.asarray(delta, dtype=complex)
    if delta.shape != (m_r, m_e):
        raise DimensionMismatch(f"delta must be {m_r}x{m_e}, got {delta.shape}")
    return delta


def indirect_distance(R, channel, C, delta, L=None):
    """``||R E (I_E (x) C) - Delta (x) L||_F^2`` evaluated block by block."""
    b, c = _check(R, channel, C)
    L = _gate(L, c.shape[1])
    delta = _check_delta(delta, b.shape[0], channel.m_e)
    blocks = _products(b, channel, c)
    return float(np.sum(np.abs(blocks - delta.T[:, :, None, None] * L) ** 2))


def indirect_distance_expanded(R, channel, C, delta, L=None):
    """Same distance through the trace expansion.

    ``n_S ||Delta||^2 + Tr E (I_E (x) C C^H) E^H - 2 Re Tr R E (Delta^H (x) C L^H)``,
    built from the explicit error matrix and Kronecker products. For unit-norm
    ``Delta`` the first term is ``n_S``.
    """
    b, c = _check(R, channel, C)
    n_s = c.shape[1]
    L = _gate(L, n_s)
    delta = _check_delta(delta, b.shape[0], channel.m_e)
    E = channel.error_matrix
    r = b.reshape(-1, channel.n_c)
    middle = np.real(np.trace(E @ np.kron(np.eye(channel.m_e), c @ dagger(c)) @ dagger(E)))
    cross = np.real(np.trace(r @ E @ np.kron(dagger(delta), c @ dagger(L))))
    return float(n_s * np.linalg.norm(delta) ** 2 + middle - 2 * cross)


def fidelity_from_distance(d_hat, n_s):
    """``(1 - d_hat / 2 n_S)^2``; exact for trace-preserving channels at the optimal delta."""
    if not 0.0 <= d_hat <= 2 * n_s + 1e-12:
        raise OutOfRange(f"distance {d_hat} outside [0, {2 * n_s}]")
    return (1 - d_hat / (2 * n_s)) ** 2


@dataclass(frozen=True)
class KLResult:
    satisfied: bool
    residual: float
    gamma: np.ndarray
    delta: np.ndarray


def kl_condition(channel, C, tol=KL_TOL):
    """Check ``C^H E_e^H E_f C = gamma_ef I_S`` for every pair of elements.

    ``residual`` is the largest Frobenius deviation of a block from its scalar
    part. ``delta`` is ``sqrt(gamma / Tr gamma)``, a witness with
    ``delta^H delta`` equal to the normalized error Gram matrix.
    """
    c = _mat(C)
    if c.shape[0] != channel.n_c:
        raise DimensionMismatch(f"encoding has {c.shape[0]} rows, channel n_C={channel.n_c}")
    n_s = c.shape[1]
    ec = channel.elements @ c
    gram = np.einsum("eji,fjk->efik", ec.conj(), ec)
    gamma = np.einsum("efii->ef", gram) / n_s
    dev = gram - gamma[:, :, None, None] * np.eye(n_s)
    residual = float(np.sqrt(np.sum(np.abs(dev) ** 2, axis=(2, 3))).max())
    tr = np.real(np.trace(gamma))
    ok = residual <= tol and tr > tol
    if tr > 0:
        g = gamma / tr
        ok = ok and np.linalg.eigvalsh((g + dagger(g)) / 2).min() >= -tol
        witness = psd_sqrt(g)
    else:
        witness = np.zeros_like(gamma)
    return KLResult(bool(ok), residual, gamma, witness)
