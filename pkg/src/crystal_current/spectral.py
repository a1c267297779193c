"""Per-fiber eigenstructure, projectors, topology and linear response.

Everything here is exact finite-matrix spectral calculus: ground-state
projectors from eigendecompositions, the Liouvillian L_H A = [H, A] and its
partial inverse (off-diagonal blocks divided by eigenvalue differences),
Chern numbers by the link-variable plaquette method, and the spectral form
of the first-order (Kubo) current response.
"""

from dataclasses import dataclass, replace

import numpy as np

from .lattice import cross2
from .models import quasi_period_unitary

__all__ = [
    "FiberSpectrum", "GroundProjector", "eigensystem", "with_occupation",
    "ground_projector", "berry_chern", "liouvillian_apply",
    "liouvillian_pinv", "kubo_fiber_trace", "kubo_current",
]

DEGENERACY_RTOL = 1e-10


@dataclass(frozen=True)
class FiberSpectrum:
    """Eigenvalues/eigenvectors of one Bloch fiber.

    lambdas ascending; vectors[:, n] is the n-th eigencolumn with the
    deterministic phase convention (largest-|component| entry real positive).
    n_occ/gap are filled in by `with_occupation`.
    """

    k: np.ndarray
    lambdas: np.ndarray
    vectors: np.ndarray
    n_occ: int | None = None
    gap: float | None = None


@dataclass(frozen=True)
class GroundProjector:
    P: np.ndarray
    rank: int


def _fix_phases(vecs):
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    phases = lead / np.abs(lead)
    return vecs * np.conj(phases)[None, :]


def eigensystem(H, k=(0.0, 0.0)):
    """Diagonalize a Hermitian fiber; deterministic eigenvector phases."""
    H = np.asarray(H)
    scale = max(np.linalg.norm(H), 1.0)
    if np.max(np.abs(H - H.conj().T)) > 1e-8 * scale:
        raise ValueError("non-Hermitian fiber passed to eigensystem")
    lam, vecs = np.linalg.eigh(H)
    return FiberSpectrum(np.asarray(k, dtype=float), lam, _fix_phases(vecs))


def occupation_count(lambdas, mu_F):
    return int(np.searchsorted(lambdas, mu_F, side="right"))


def with_occupation(s, mu_F, insulator=False):
    """Attach N_k = #{lambda_n <= mu_F} and the gap above it.

    With insulator=True a Fermi level within 1e-10*||H|| of an eigenvalue is
    rejected (legitimate in metal runs, a classification error otherwise).
    """
    scale = max(float(np.max(np.abs(s.lambdas))), 1.0)
    if insulator and np.min(np.abs(s.lambdas - mu_F)) <= DEGENERACY_RTOL * scale:
        raise ValueError("Fermi level collides with an eigenvalue "
                         "in an insulator-classified run")
    n = occupation_count(s.lambdas, mu_F)
    gap = float(s.lambdas[n] - s.lambdas[n - 1]) if 0 < n < len(s.lambdas) \
        else np.inf
    return replace(s, n_occ=n, gap=gap)


def ground_projector(s, mu_F):
    """Spectral projector onto eigenvalues <= mu_F."""
    n = occupation_count(s.lambdas, mu_F)
    V = s.vectors[:, :n]
    return GroundProjector(V @ V.conj().T, n)


def liouvillian_apply(H, A):
    """L_H A = [H, A]."""
    return H @ A - A @ H


def liouvillian_pinv(s, n_occ, A):
    """Partial inverse of the Liouvillian at occupation split n_occ.

    In the eigenbasis, the (m, n) component (m unoccupied, n occupied) is
    divided by lambda_m - lambda_n and the (n, m) component by
    lambda_n - lambda_m; diagonal blocks are mapped to zero. Satisfies
    L L+ A = L+ L A = P A (1-P) + (1-P) A P and ||L+|| = 1/gap.
    """
    lam, V = s.lambdas, s.vectors
    M = len(lam)
    if n_occ <= 0 or n_occ >= M:
        return np.zeros_like(np.asarray(A, dtype=complex))
    if lam[n_occ] - lam[n_occ - 1] <= DEGENERACY_RTOL * max(np.max(np.abs(lam)), 1.0):
        raise ValueError("zero gap: partial inverse undefined")
    Ae = V.conj().T @ A @ V
    out = np.zeros_like(Ae)
    dif = lam[n_occ:, None] - lam[None, :n_occ]  # lambda_m - lambda_n > 0
    out[n_occ:, :n_occ] = Ae[n_occ:, :n_occ] / dif
    out[:n_occ, n_occ:] = -Ae[:n_occ, n_occ:] / dif.T
    return V @ out @ V.conj().T


def _kernel(delta, t, averaged):
    """kappa(Delta) = e^{-i Delta t} - 1, or its running average over [0, t].

    The average of t' -> e^{-i Delta t'} - 1 is
    (e^{-i Delta t} - 1)/(-i Delta t) - 1, -> 0 as t -> 0; a series branch
    handles |Delta t| < 1e-4.
    """
    x = np.asarray(delta, dtype=float) * t
    if not averaged:
        return np.exp(-1j * x) - 1.0
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = (-0.5j * xs - xs ** 2 / 6.0 + 1j * xs ** 3 / 24.0
                  + xs ** 4 / 120.0)
    xl = x[~small]
    out[~small] = (np.exp(-1j * xl) - 1.0) / (-1j * xl) - 1.0
    return out


def kubo_fiber_trace(s, dHa, dHb, mu_F, t, averaged=False):
    """Complex trace Tr(dHa (e^{-i t L} - 1) L+ d_beta gamma) at one fiber.

    dHa/dHb are the directional derivatives of H along e_alpha/e_beta;
    d_beta gamma = L+[P, dHb] is evaluated spectrally. Purely imaginary up
    to roundoff; the physical per-fiber response is i times this.
    """
    s = with_occupation(s, mu_F)
    lam, V, N = s.lambdas, s.vectors, s.n_occ
    M = len(lam)
    if N == 0 or N == M:
        return 0.0 + 0.0j
    scale = max(float(np.max(np.abs(lam))), 1.0)
    if lam[N] - lam[N - 1] <= DEGENERACY_RTOL * scale:
        raise ValueError("zero gap in kubo_fiber_trace")
    Vo, Vu = V[:, :N], V[:, N:]
    a = Vu.conj().T @ dHa @ Vo          # a_mn = <u_m| dHa |u_n>
    b = Vu.conj().T @ dHb @ Vo
    dlt = lam[N:, None] - lam[None, :N]  # Delta = lambda_m - lambda_n > 0
    w = np.conj(a) * b * _kernel(dlt, t, averaged) / dlt ** 2
    # Tr = sum (conj(w) - w) = -2i Im(w)
    return complex(-2j * np.sum(np.imag(w)))


def kubo_current(s, dHa, dHb, mu_F, t, averaged=False):
    """Real per-fiber linear-response contribution i*Tr(...); see kubo_fiber_trace."""
    tr = kubo_fiber_trace(s, dHa, dHb, mu_F, t, averaged)
    val = 1j * tr
    if abs(val.imag) > 1e-10 * max(abs(val.real), 1.0):
        raise FloatingPointError("kubo_current: imaginary residual too large")
    return val.real


def berry_chern(model, mu_F, grid):
    """Berry curvature field and Chern number of the occupied bundle.

    Link-variable plaquette method: overlaps of occupied frames on the grid,
    seam links closed with the quasi-periodicity unitaries, plaquette phase
    = Arg of the link product. The total is 2 pi x integer by construction.
    Plaquette loops run in (b1, b2) order, so the raw sum carries the
    handedness of the reciprocal basis; it is multiplied by
    sign((b1 x b2)_z) to report curvature in the standard (k1, k2)
    orientation, consistent with hall_sigma and the simulated transverse
    current. Returns (F, chern) where F[i, j] is the (oriented) Berry phase
    of plaquette (i, j) (sums to 2 pi chern).
    """
    n = grid.n
    lat = model.lattice
    orient = float(np.sign(cross2(lat.b1, lat.b2)))
    pts = grid.points.reshape(n, n, 2)
    M = model.dim
    frames = None
    n_occ = None
    for i in range(n):
        for j in range(n):
            s = eigensystem(model.fiber(pts[i, j]), pts[i, j])
            nk = occupation_count(s.lambdas, mu_F)
            if nk == 0 or nk == M or s.lambdas[nk] - s.lambdas[nk - 1] < 1e-8:
                raise ValueError(f"gap closure at k={pts[i, j]}: "
                                 "grid not insulating")
            if n_occ is None:
                n_occ = nk
                frames = np.empty((n, n, M, n_occ), dtype=complex)
            elif nk != n_occ:
                raise ValueError("occupation count varies over the grid")
            frames[i, j] = s.vectors[:, :nk]
    T1 = quasi_period_unitary(model, lat.b1)
    T2 = quasi_period_unitary(model, lat.b2)

    def frame(i, j):
        f = frames[i % n, j % n]
        if i == n:
            f = T1 @ f
        if j == n:
            f = T2 @ f
        return f

    link1 = np.empty((n, n), dtype=complex)
    link2 = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            link1[i, j] = np.linalg.det(frames[i, j].conj().T @ frame(i + 1, j))
            link2[i, j] = np.linalg.det(frames[i, j].conj().T @ frame(i, j + 1))
    link1 /= np.abs(link1)
    link2 /= np.abs(link2)
    ip1 = (np.arange(n) + 1) % n
    jp1 = (np.arange(n) + 1) % n
    prod = link1 * link2[ip1, :] * np.conj(link1[:, jp1]) * np.conj(link2)
    F = orient * np.angle(prod)
    total = float(np.sum(F))
    chern = int(round(total / (2.0 * np.pi)))
    if abs(total / (2.0 * np.pi) - chern) > 1e-6:
        raise FloatingPointError("plaquette phases do not sum to an integer "
                                 "multiple of 2 pi")
    return F, chern
