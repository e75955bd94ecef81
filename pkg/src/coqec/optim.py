"""Recovery, encoding and Gamma kernels plus the two alternating algorithms.

Both algorithms alternate an optimal-recovery step and an optimal-encoding
step, each an exact minimizer of the indirect distance in its own block of
variables. They differ only in the recovery step:

* ``algorithm1`` maximizes ``Tr sqrt(E (Gamma (x) C C^H) E^H)`` over the
  spectrahedron, factors Gamma into Delta and reads off R from an SVD;
* ``algorithm2`` alternates the closed-form Delta and the SVD recovery until
  the distance stops decreasing.
"""

import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ._linalg import (canonical_svd, dagger, polar_isometry, psd_sqrt, psd_sqrt_and_inv_sqrt,
                      random_isometry, trace_sqrt)
from .errors import DimensionMismatch, RankDeficientWarning, RankOverflow, ZeroDelta
from .metrics import (Encoding, Recovery, _gate, _mat, channel_fidelity, indirect_distance,
                      trace_table)

ZERO_DELTA_TOL = 1e-14
CBAR_RANK_TOL = 1e-12


@dataclass
class OptimizeOptions:
    inner_tol: float = 1e-9
    outer_tol: float = 1e-9
    max_outer: int = 200
    max_inner: int = 500
    rank_tol: float = 1e-6
    gap_tol: float = 1e-7
    max_gamma_iter: int = 5000
    restarts: int = 3
    seed: int = 0

    def to_dict(self):
        return asdict(self)


# --------------------------------------------------------------------------
# kernels


def unconstrained_delta(R, channel, C, L=None):
    """Least-squares coefficients ``Tr(R_r E_e C L^H) / n_S``."""
    return trace_table(R, channel, C, L) / _mat(C).shape[1]


def optimal_delta(R, channel, C, L=None):
    """Unit-norm Delta minimizing the indirect distance for fixed R and C."""
    dbar = unconstrained_delta(R, channel, C, L)
    nrm = np.linalg.norm(dbar)
    if nrm < ZERO_DELTA_TOL:
        raise ZeroDelta(f"||Delta_bar||_F = {nrm:.2e}: the fidelity is numerically zero")
    return dbar / nrm


def _n_ca(channel, C):
    c = _mat(C)
    n_c, n_s = c.shape
    if n_c != channel.n_c or n_c % n_s:
        raise DimensionMismatch(f"encoding {c.shape} does not fit channel n_C={channel.n_c}")
    return n_c // n_s


def recovery_operand(delta, channel, C, L=None):
    """``W = E (Delta^H (x) C L^H)`` as an ``n_C x (m_R n_S)`` matrix."""
    c = _mat(C)
    L = _gate(L, c.shape[1])
    delta = np.asarray(delta, dtype=complex)
    if delta.shape[1] != channel.m_e:
        raise DimensionMismatch(f"delta has {delta.shape[1]} columns, channel has {channel.m_e} elements")
    ecl = channel.elements @ (c @ dagger(L))
    w = np.tensordot(delta.conj(), ecl, axes=([1], [0]))
    return w.transpose(1, 0, 2).reshape(channel.n_c, -1)


def optimal_recovery(delta, channel, C, L=None, n_ra=1):
    """Isometric recovery ``R = V U^H`` from the SVD ``W = U S V^H``; maximizes Re Tr(R W)."""
    n_ca = _n_ca(channel, C)
    n_s = _mat(C).shape[1]
    if np.shape(delta)[0] != n_ca * n_ra:
        raise DimensionMismatch(f"delta has {np.shape(delta)[0]} rows, expected n_CA*n_RA = {n_ca * n_ra}")
    u, _, vh = canonical_svd(recovery_operand(delta, channel, C, L))
    return Recovery.from_stacked(dagger(vh) @ dagger(u), n_s, n_ra)


def encoding_operand(R, delta, channel, L=None):
    """``C_bar = sum_{r,e} delta_re (R_r E_e)^H L``, the unconstrained least-squares encoding."""
    b = R.blocks if isinstance(R, Recovery) else np.asarray(R)
    n_s = b.shape[1]
    L = _gate(L, n_s)
    # B_e = sum_r delta_re R_r^H, then C_bar = sum_e E_e^H B_e L
    bsum = np.tensordot(np.asarray(delta), dagger(b), axes=([0], [0]))
    e_stack = channel.elements.reshape(-1, channel.n_c)
    return dagger(e_stack) @ bsum.reshape(-1, n_s) @ L


def optimal_encoding(R, delta, channel, L=None):
    """Isometry ``C = U V^H`` from the SVD of ``C_bar``.

    Emits RankDeficientWarning when the smallest singular value of ``C_bar``
    is below 1e-12; the deterministic SVD convention then picks the factor.
    """
    cbar = encoding_operand(R, delta, channel, L)
    u, s, vh = canonical_svd(cbar)
    if s[-1] < CBAR_RANK_TOL:
        warnings.warn(f"C_bar is rank deficient (sigma_min = {s[-1]:.2e})", RankDeficientWarning, stacklevel=2)
    return Encoding(u @ vh, cbar.shape[0] // cbar.shape[1])


def gamma_rank(gamma, threshold=1e-6):
    return int(np.sum(np.linalg.eigvalsh((gamma + dagger(gamma)) / 2) > threshold))


def gamma_spectrum(gamma):
    w = np.linalg.eigvalsh((gamma + dagger(gamma)) / 2)[::-1]
    return np.clip(w, 0.0, None)


def gamma_to_delta(gamma, n_ca, n_ra, tol=1e-6):
    """Factor Gamma as ``Delta^H Delta`` with ``m_R = n_CA n_RA`` rows.

    With ``m_R >= m_E`` this is ``sqrt(Gamma)`` padded by zero rows. With fewer
    rows the top ``m_R`` eigenpairs are kept (``D^(1/2) V^H``) and the result
    is renormalized; RankOverflow if a discarded eigenvalue exceeds ``tol``.
    """
    gamma = np.asarray(gamma, dtype=complex)
    m_e = gamma.shape[0]
    m_r = n_ca * n_ra
    if m_r >= m_e:
        delta = np.zeros((m_r, m_e), dtype=complex)
        delta[:m_e] = psd_sqrt(gamma)
        return delta
    w, v = np.linalg.eigh((gamma + dagger(gamma)) / 2)
    w, v = w[::-1], v[:, ::-1]
    if w[m_r] > tol:
        raise RankOverflow(f"Gamma eigenvalue {w[m_r]:.2e} beyond the {m_r} rows available (n_RA={n_ra})")
    delta = np.sqrt(np.clip(w[:m_r], 0, None))[:, None] * dagger(v[:, :m_r])
    return delta / np.linalg.norm(delta)


# --------------------------------------------------------------------------
# Gamma problem


@dataclass
class GammaSolution:
    gamma: np.ndarray
    objective: float
    gap: float
    iterations: int
    converged: bool


class GammaProblem:
    """``phi(Gamma) = Tr sqrt(E (Gamma (x) C C^H) E^H)`` and its gradient.

    With ``K = [E_1 C ... E_mE C]`` the inner matrix is ``K (Gamma (x) I_S) K^H``
    and the gradient is ``grad_ab = (1/2) Tr((E_a C)^H M^(-1/2) E_b C)``, so
    that ``d phi = Re Tr(grad dGamma)``.
    """

    def __init__(self, channel, C):
        c = _mat(C)
        ec = channel.elements @ c
        self.m_e, self.n_c, self.n_s = ec.shape
        self.K = ec.transpose(1, 0, 2).reshape(self.n_c, -1)
        self._eye = np.eye(self.n_s)

    def inner(self, gamma):
        return self.K @ np.kron(gamma, self._eye) @ dagger(self.K)

    def value(self, gamma):
        return trace_sqrt(self.inner(gamma))

    def value_and_grad(self, gamma):
        phi, inv_sqrt = psd_sqrt_and_inv_sqrt(self.inner(gamma))
        q = dagger(self.K) @ inv_sqrt @ self.K
        g = np.einsum("aibi->ab", q.reshape(self.m_e, self.n_s, self.m_e, self.n_s)) / 2
        return phi, (g + dagger(g)) / 2

    @staticmethod
    def gap(gamma, grad):
        """Conditional-gradient gap ``lambda_max(grad) - Tr(grad Gamma)``; bounds the suboptimality."""
        return float(np.linalg.eigvalsh(grad)[-1] - np.real(np.vdot(grad, gamma)))


def _project_simplex(w):
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, w.size + 1)
    r = np.flatnonzero(u - css / k > 0)[-1]
    return np.maximum(w - css[r] / (r + 1), 0.0)


def project_spectrahedron(y):
    """Frobenius-nearest ``Gamma >= 0, Tr Gamma = 1`` to a Hermitian matrix."""
    w, v = np.linalg.eigh((y + dagger(y)) / 2)
    return (v * _project_simplex(w)) @ dagger(v)


def optimize_gamma(channel, C, gamma0=None, gap_tol=1e-7, max_iter=5000):
    """Maximize ``Tr sqrt(E (Gamma (x) C C^H) E^H)`` over the spectrahedron.

    Spectral projected gradient ascent: Barzilai-Borwein trial steps, exact
    projection onto the spectrahedron and Armijo backtracking, so the objective
    never decreases from ``gamma0`` (default ``I / m_E``). Stops when the
    conditional-gradient gap drops below ``gap_tol``; otherwise the last
    iterate is returned with ``converged=False``.
    """
    prob = GammaProblem(channel, C)
    g = np.eye(prob.m_e, dtype=complex) / prob.m_e if gamma0 is None else project_spectrahedron(gamma0)
    phi, grad = prob.value_and_grad(g)
    alpha = 1.0
    gap = prob.gap(g, grad)
    it = 0
    while gap > gap_tol and it < max_iter:
        it += 1
        d = project_spectrahedron(g + alpha * grad) - g
        slope = float(np.real(np.vdot(grad, d)))
        if slope <= 0:
            break
        lam = 1.0
        while True:
            trial = g + lam * d
            phi_t, grad_t = prob.value_and_grad(trial)
            if phi_t >= phi + 1e-4 * lam * slope:
                break
            lam *= 0.5
            if lam < 1e-14:
                phi_t = None
                break
        if phi_t is None:
            break
        s = trial - g
        sy = -float(np.real(np.vdot(s, grad_t - grad)))
        alpha = float(np.clip(np.real(np.vdot(s, s)) / sy, 1e-10, 1e10)) if sy > 0 else 1e10
        g, phi, grad = trial, phi_t, grad_t
        gap = prob.gap(g, grad)
    return GammaSolution((g + dagger(g)) / 2, phi, gap, it, gap <= gap_tol)


# --------------------------------------------------------------------------
# algorithms


@dataclass
class OptimizationReport:
    algorithm: str
    iterations: list
    recovery: Recovery
    encoding: Encoding
    delta: np.ndarray
    gamma_spectrum: np.ndarray
    gamma_rank: int
    converged: bool
    wall_time: float
    steps: list = field(default_factory=list)
    restart: int = 0
    restart_fidelities: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    options: OptimizeOptions = field(default_factory=OptimizeOptions)

    @property
    def fidelity(self):
        return self.iterations[-1]["fidelity"]

    @property
    def d_ind(self):
        return self.iterations[-1]["d_ind"]

    @property
    def n_iterations(self):
        return len(self.iterations)

    @property
    def max_ascent(self):
        """Largest increase of the distance between consecutive kernel steps (<= 0 means monotone)."""
        if len(self.steps) < 2:
            return 0.0
        return float(np.max(np.diff(self.steps)))


def initial_recovery(C, n_ra=1, L=None):
    """Polar factor of the stack ``[L C^H; 0; ...; 0]`` with ``n_CA n_RA`` blocks.

    Without noise this recovery applies the target gate exactly, so the
    starting fidelity is nonzero even when ``Tr L = 0``.
    """
    c = _mat(C)
    n_c, n_s = c.shape
    m_r = (n_c // n_s) * n_ra
    stack = np.zeros((m_r * n_s, n_c), dtype=complex)
    stack[:n_s] = _gate(L, n_s) @ dagger(c)
    return Recovery.from_stacked(polar_isometry(stack), n_s, n_ra)


def _starts(n_s, n_ca, n_ra, options):
    yield Encoding.trivial(n_s, n_ca)
    for k in range(options.restarts):
        rng = np.random.default_rng(np.random.SeedSequence(options.seed, spawn_key=(k,)))
        yield Encoding(random_isometry(rng, n_s * n_ca, n_s), n_ca)


class _Run:
    def __init__(self, channel, L, n_ra, options):
        self.channel, self.L, self.n_ra, self.opt = channel, L, n_ra, options
        self.steps = []
        self.flags = []

    def distance(self, R, C, delta):
        d = indirect_distance(R, self.channel, C, delta, self.L)
        self.steps.append(d)
        return d

    def recovery_alg2(self, R, C):
        d_prev = np.inf
        for _ in range(self.opt.max_inner):
            delta = optimal_delta(R, self.channel, C, self.L)
            self.distance(R, C, delta)
            R = optimal_recovery(delta, self.channel, C, self.L, self.n_ra)
            d = self.distance(R, C, delta)
            if d_prev - d < self.opt.inner_tol:
                break
            d_prev = d
        else:
            self.flags.append("inner_max_iterations")
        return R, delta

    def recovery_alg1(self, R, C):
        try:
            dh = optimal_delta(R, self.channel, C, self.L)
            g0 = dagger(dh) @ dh
        except ZeroDelta:
            g0 = None
        sol = optimize_gamma(self.channel, C, g0, self.opt.gap_tol, self.opt.max_gamma_iter)
        if not sol.converged:
            self.flags.append("gamma_not_converged")
        n_ca = C.n_ca
        delta = gamma_to_delta(sol.gamma, n_ca, self.n_ra, self.opt.rank_tol)
        R = optimal_recovery(delta, self.channel, C, self.L, self.n_ra)
        self.distance(R, C, delta)
        return R, delta

    def run(self, C, step):
        R = initial_recovery(C, self.n_ra, self.L)
        iterations = []
        converged = False
        d_prev = np.inf
        for _ in range(self.opt.max_outer):
            try:
                R_next, delta = step(R, C)
            except (RankOverflow, ZeroDelta) as exc:
                # keep the last complete iterate so the caller can report it
                exc.partial = (iterations, R, C, iterations[-1]["delta"] if iterations else None)
                raise
            R = R_next
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", RankDeficientWarning)
                C = optimal_encoding(R, delta, self.channel, self.L)
            if caught and "rank_deficient_cbar" not in self.flags:
                self.flags.append("rank_deficient_cbar")
            d = self.distance(R, C, delta)
            spec = gamma_spectrum(dagger(delta) @ delta)
            iterations.append({
                "d_ind": d,
                "fidelity": channel_fidelity(R, self.channel, C, self.L),
                "gamma_spectrum": spec,
                "gamma_rank": int(np.sum(spec > self.opt.rank_tol)),
                "delta": delta,
            })
            if d_prev - d < self.opt.outer_tol:
                converged = True
                break
            d_prev = d
        return iterations, R, C, delta, converged


def _optimize(name, channel, L, n_ca, n_ra, options):
    """Run every start; kernel errors propagate with ``.report`` set to the best complete iterate."""
    options = options or OptimizeOptions()
    if n_ca < 1 or n_ra < 1 or channel.n_c % n_ca:
        raise DimensionMismatch(f"n_CA={n_ca} does not divide n_C={channel.n_c}")
    n_s = channel.n_c // n_ca
    t0 = time.perf_counter()
    best = None
    finals = []
    error = None
    failed = []
    for k, C0 in enumerate(_starts(n_s, n_ca, n_ra, options)):
        run = _Run(channel, L, n_ra, options)
        step = run.recovery_alg1 if name == "alg1" else run.recovery_alg2
        try:
            iterations, R, C, delta, conv = run.run(C0, step)
        except (RankOverflow, ZeroDelta) as exc:
            error = error or exc
            iterations, R, C, delta = exc.partial
            conv = False
            failed.append(f"restart {k}: {type(exc).__name__}")
            if not iterations:
                finals.append(None)
                continue
        finals.append(iterations[-1]["fidelity"])
        if best is None or finals[-1] > best[0] + 1e-12:
            best = (finals[-1], k, iterations, R, C, delta, conv, run)
    report = None
    if best is not None:
        _, k, iterations, R, C, delta, conv, run = best
        report = OptimizationReport(
            algorithm=name, iterations=iterations, recovery=R, encoding=C, delta=delta,
            gamma_spectrum=iterations[-1]["gamma_spectrum"], gamma_rank=iterations[-1]["gamma_rank"],
            converged=conv, wall_time=time.perf_counter() - t0, steps=run.steps, restart=k,
            restart_fidelities=finals, flags=run.flags + failed, options=options)
    if error is not None:
        error.report = report
        raise error
    return report


def algorithm1(channel, L=None, n_ca=1, n_ra=1, options=None):
    """Alternate the Gamma-based optimal recovery and the optimal encoding."""
    return _optimize("alg1", channel, L, n_ca, n_ra, options)


def algorithm2(channel, L=None, n_ca=1, n_ra=1, options=None):
    """Alternate the iterated least-squares recovery and the optimal encoding."""
    return _optimize("alg2", channel, L, n_ca, n_ra, options)
