"""Small dense linear-algebra helpers with deterministic conventions."""

import numpy as np

EIG_CLAMP = 1e-12


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def psd_sqrt(m):
    """Square root of a Hermitian PSD matrix, clamping rounding-level negative eigenvalues."""
    w, v = np.linalg.eigh((m + dagger(m)) / 2)
    w = np.where(w > EIG_CLAMP * max(1.0, abs(w).max(initial=0.0)), w, 0.0)
    return (v * np.sqrt(w)) @ dagger(v)


def psd_sqrt_and_inv_sqrt(m, floor=EIG_CLAMP):
    """Return (Tr sqrt(m), m^(-1/2)) with eigenvalues floored at ``floor`` for the inverse."""
    w, v = np.linalg.eigh((m + dagger(m)) / 2)
    tr = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    inv = (v / np.sqrt(np.maximum(w, floor))) @ dagger(v)
    return tr, inv


def trace_sqrt(m):
    w = np.linalg.eigvalsh((m + dagger(m)) / 2)
    return float(np.sqrt(np.clip(w, 0.0, None)).sum())


def canonical_svd(a, tol=1e-12):
    """Thin SVD with a fixed phase and tie order for singular vectors.

    Each left singular vector is rotated so its largest-magnitude entry is real
    and positive (the right vector absorbs the conjugate phase, so U S V^H is
    unchanged). Singular values equal within ``tol * s_max`` are ordered by
    lexicographic comparison of the left vectors' (real, imag) entries.
    """
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    k = np.argmax(np.abs(u), axis=0)
    ph = u[k, np.arange(u.shape[1])]
    ph = np.where(np.abs(ph) > 0, ph / np.where(np.abs(ph) > 0, np.abs(ph), 1), 1.0)
    u = u / ph
    vh = vh * ph[:, None]

    scale = tol * (s[0] if s.size else 0.0)
    order = list(range(s.size))
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and s[i] - s[j + 1] <= scale:
            j += 1
        if j > i:
            keys = {c: tuple(np.column_stack([u[:, c].real, u[:, c].imag]).ravel()) for c in range(i, j + 1)}
            order[i:j + 1] = sorted(range(i, j + 1), key=keys.__getitem__)
        i = j + 1
    return u[:, order], s[order], vh[order]


def polar_isometry(a):
    """Nearest isometry U V^H to a tall matrix (the unitary factor of its polar decomposition)."""
    u, _, vh = canonical_svd(a)
    return u @ vh


def isometry_residual(a):
    return float(np.linalg.norm(dagger(a) @ a - np.eye(a.shape[1])))


def random_isometry(rng, rows, cols):
    z = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
