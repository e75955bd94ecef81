"""Textbook repetition code and its majority-vote recovery, used as baselines."""

import itertools
from functools import reduce

import numpy as np

from .channels import PAULI
from .errors import DimensionMismatch
from .metrics import Encoding, Recovery


def repetition_code(q=3):
    """``|0_L> = |0...0>``, ``|1_L> = |1...1>`` on ``q`` qubits (one system, ``q-1`` ancillas)."""
    n_c = 2**q
    c = np.zeros((n_c, 2), dtype=complex)
    c[0, 0] = c[-1, 1] = 1
    return Encoding(c, n_c // 2)


def standard_recovery(q=3):
    """Syndrome projection plus correction for the bit-flip repetition code.

    One block ``C^H X_pattern`` per bit-flip pattern of weight at most
    ``(q-1)/2``; for odd ``q`` that is ``2^(q-1) = n_CA`` blocks and the
    stacked matrix is unitary.
    """
    if q % 2 == 0:
        raise DimensionMismatch("majority-vote recovery needs an odd number of qubits")
    c = repetition_code(q).C
    blocks = []
    for idx in itertools.product((0, 1), repeat=q):
        if sum(idx) <= (q - 1) // 2:
            x = reduce(np.kron, (PAULI["X"] if i else PAULI["I"] for i in idx))
            blocks.append(c.conj().T @ x)
    return Recovery(np.stack(blocks))


def no_recovery_blocks(C, m_r):
    """Blocks ``[C^H, 0, ..., 0]``: decode by the encoder's inverse without any correction.

    Not an isometry, so it is returned as a raw array rather than a Recovery.
    """
    c = C.C if isinstance(C, Encoding) else np.asarray(C)
    out = np.zeros((m_r,) + c.T.shape, dtype=complex)
    out[0] = c.conj().T
    return out
