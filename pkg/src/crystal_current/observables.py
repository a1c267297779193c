"""Brillouin-zone integrated current and its closed-form predictors.

The observable is the current per unit volume

    j(t) = -(2 pi)^-2 Int_BZ Tr(dH_alpha(k - eps e_beta t) phi phi^dag) dk,

discretized on a uniform grid with fixed-k-order compensated (Kahan)
summation so results are bitwise independent of the worker thread count.
Predictors: transverse (Hall) conductivity from the Chern number, the
ballistic coefficient D of metals, the Bloch-oscillation waveform, the
per-cone universal conductivity of semimetals, the spectral linear-response
(Kubo) trace, the adiabatic three-term decomposition, and the local Dirac
time average.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import IntegratorOptions, default_dt, propagate_frame
from .lattice import cross2
from .spectral import (berry_chern, eigensystem, kubo_current,
                       liouvillian_pinv, occupation_count, with_occupation)

__all__ = [
    "CurrentTrace", "PredictorReport", "current_integrand", "current_trace",
    "running_average", "hall_sigma", "ballistic_D", "bloch_predictor",
    "semimetal_sigma", "kubo_trace", "adiabatic_decomposition",
    "dirac_timeavg", "classify_phase",
]

CHUNK = 2048  # fixed chunk size: reduction order never depends on threads


@dataclass(frozen=True)
class CurrentTrace:
    """Time series of the instantaneous current and its running average."""

    times: np.ndarray
    j_inst: np.ndarray
    j_runavg: np.ndarray
    eps: float
    e_alpha: np.ndarray
    e_beta: np.ndarray
    mu_F: float
    grid_n: int


@dataclass(frozen=True)
class PredictorReport:
    kind: str
    value: object
    provenance: str = ""


def resolve_threads(threads=None):
    if threads in (None, "auto"):
        threads = os.environ.get("CRYSTAL_CURRENT_THREADS", "auto")
    if threads == "auto":
        return os.cpu_count() or 1
    return max(1, int(threads))


def running_average(times, j_inst):
    """Trapezoidal running average (1/t) Int_0^t j; avg(0) = j(0)."""
    times = np.asarray(times, dtype=float)
    j = np.asarray(j_inst, dtype=float)
    avg = np.empty_like(j)
    avg[0] = j[0]
    if len(j) > 1:
        cum = np.concatenate([[0.0], np.cumsum(
            0.5 * (j[1:] + j[:-1]) * np.diff(times))])
        nz = times != 0
        avg[nz] = cum[nz] / times[nz]
    return avg


def _trace_with_avg(times, j, eps, e_alpha, e_beta, mu_F, grid_n):
    j_runavg = running_average(times, j)
    return CurrentTrace(np.asarray(times, dtype=float), np.asarray(j),
                        np.asarray(j_runavg), float(eps),
                        np.asarray(e_alpha, dtype=float),
                        np.asarray(e_beta, dtype=float), float(mu_F),
                        int(grid_n))


def current_integrand(model, k, t, eps, e_alpha, e_beta, frame):
    """-Tr(dH_alpha(k - eps e_beta t) phi phi^dagger) for one fiber."""
    k = np.asarray(k, dtype=float)
    kt = k - eps * t * np.asarray(e_beta, dtype=float)
    dHa = model.deriv(kt, e_alpha)
    phi = frame.phi if hasattr(frame, "phi") else frame
    val = -np.trace(phi.conj().T @ dHa @ phi)
    if abs(val.imag) > 1e-10 * max(abs(val.real), 1.0):
        raise FloatingPointError("current integrand not real")
    return float(val.real)


def _kahan_reduce(acc, comp, rows, weight):
    """Add weight*rows[k] into acc (per-time Kahan), fixed k order."""
    for row in rows:
        y = weight * row - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return acc, comp


def current_trace(model, grid, eps, e_alpha, e_beta, mu_F, times,
                  opts=None, threads=None):
    """Simulated current per unit volume on the grid, at the sample times.

    Dispatches 2-band lattice models to the compiled/vectorized sweep
    kernel in fixed chunks of k-points; other models take the generic
    per-fiber propagation path. Output is bitwise independent of the
    thread count (fixed-order compensated reduction).
    """
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0:
        raise ValueError("times must start at 0")
    e_alpha = np.asarray(e_alpha, dtype=float)
    e_beta = np.asarray(e_beta, dtype=float)
    pts = grid.points
    w = grid.weight / (2.0 * np.pi) ** 2
    opts = opts or IntegratorOptions()
    dt_base = opts.dt if opts.dt is not None else default_dt(model, pts[0])
    terms = model.planewave_terms()

    nt = len(times)
    acc = np.zeros(nt)
    comp = np.zeros(nt)
    if terms is not None and opts.scheme == "exp-midpoint":
        arrs = terms.arrays()
        occ = _kernels.occupation_2band(arrs, pts, mu_F)
        chunks = [slice(i, min(i + CHUNK, len(pts)))
                  for i in range(0, len(pts), CHUNK)]

        def work(sl):
            return _kernels.sweep_chunk(arrs, pts[sl], occ[sl], eps,
                                        e_beta, e_alpha, times, dt_base)

        n_workers = resolve_threads(threads)
        if n_workers > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                results = pool.map(work, chunks)
                for rows in results:  # consumed in chunk order
                    acc, comp = _kahan_reduce(acc, comp, rows, w)
        else:
            for sl in chunks:
                acc, comp = _kahan_reduce(acc, comp, work(sl), w)
    else:
        for k in pts:
            try:
                frames = propagate_frame(model, k, eps, e_beta, mu_F,
                                         times, opts)
            except FloatingPointError as exc:
                raise FloatingPointError(f"at k={k}: {exc}") from exc
            row = np.array([current_integrand(model, k, f.t, eps, e_alpha,
                                              e_beta, f) for f in frames])
            acc, comp = _kahan_reduce(acc, comp, row[None, :], w)
    return _trace_with_avg(times, acc, eps, e_alpha, e_beta, mu_F, grid.n)


def hall_sigma(model, mu_F, grid, e_alpha=None, e_beta=None):
    """Transverse conductivity matrix sigma_perp and optional contraction.

    sigma_perp_12 = Chern/(2 pi); returns (sigma, value) where value =
    e_alpha^T sigma_perp e_beta (None when directions are omitted).
    """
    _, chern = berry_chern(model, mu_F, grid)
    s12 = chern / (2.0 * np.pi)
    sigma = np.array([[0.0, s12], [-s12, 0.0]])
    value = None
    if e_alpha is not None and e_beta is not None:
        value = s12 * cross2(np.asarray(e_alpha, dtype=float),
                             np.asarray(e_beta, dtype=float))
    return sigma, value


def _band_grid(model, pts, band):
    terms = model.planewave_terms()
    if terms is not None:
        # closed-form 2-band eigenvalues, vectorized over k
        d00, a00, d11, a11, d10, a10 = terms.arrays()
        pts = np.asarray(pts, dtype=float)
        h00 = (np.exp(1j * (pts @ d00.T)) @ a00).real
        h11 = (np.exp(1j * (pts @ d11.T)) @ a11).real
        c = np.exp(1j * (pts @ d10.T)) @ a10
        d0 = 0.5 * (h00 + h11)
        nrm = np.sqrt(0.25 * (h00 - h11) ** 2 + np.abs(c) ** 2)
        lam = np.stack([d0 - nrm, d0 + nrm], axis=1)
    else:
        lam = np.array([np.linalg.eigvalsh(model.fiber(k)) for k in pts])
    return lam[:, band] if band is not None else lam


def _metal_band(model, grid, mu_F):
    """Index of the single partially filled band; checks it is isolated."""
    lam = _band_grid(model, grid.points, None)
    n_occ = np.sum(lam <= mu_F, axis=1)
    lo, hi = int(n_occ.min()), int(n_occ.max())
    if lo == hi:
        raise ValueError("no Fermi surface on the grid: not metal-classified")
    if hi != lo + 1:
        raise ValueError("more than one band crosses the Fermi level")
    band = hi - 1
    if band + 1 < lam.shape[1] and np.min(lam[:, band + 1] - lam[:, band]) < 1e-8:
        raise ValueError("band at the Fermi level touches the band above")
    if band > 0 and np.min(lam[:, band] - lam[:, band - 1]) < 1e-8:
        raise ValueError("band at the Fermi level touches the band below")
    if np.min(np.abs(lam[:, band] - mu_F)) < 1e-10:
        raise ValueError("a grid point sits exactly on the Fermi surface")
    return band, lam[:, band]


def bloch_predictor(model, mu_F, grid, eps, e_beta, e_alpha, t):
    """Adiabatic metal predictor: the occupied region rigidly drifts.

    -(2 pi)^-2 sum_k w 1(lambda_N,k <= mu_F) d_alpha lambda_N(k - eps e_beta t);
    periodic in t with period 1/eps when e_beta is a reciprocal-lattice
    vector. Scalar t or array of t accepted.
    """
    band, lam0 = _metal_band(model, grid, mu_F)
    occ = lam0 <= mu_F
    pts = grid.points[occ]
    w = grid.weight / (2.0 * np.pi) ** 2
    e_alpha = np.asarray(e_alpha, dtype=float)
    e_beta = np.asarray(e_beta, dtype=float)
    h = np.linalg.norm(model.lattice.b1) / (8.0 * grid.n)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(len(ts))
    for i, tv in enumerate(ts):
        sh = pts - eps * tv * e_beta
        lp = _band_grid(model, sh + h * e_alpha, band)
        lm = _band_grid(model, sh - h * e_alpha, band)
        dlam = (lp - lm) / (2.0 * h)
        out[i] = -w * np.sum(dlam)
    return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out


def _ballistic_volume(model, mu_F, grid, e_alpha, e_beta):
    band, lam0 = _metal_band(model, grid, mu_F)
    occ = lam0 <= mu_F
    pts = grid.points[occ]
    w = grid.weight / (2.0 * np.pi) ** 2
    h = np.linalg.norm(model.lattice.b1) / (8.0 * grid.n)
    a = h * np.asarray(e_alpha, dtype=float)
    b = h * np.asarray(e_beta, dtype=float)
    dd = (_band_grid(model, pts + a + b, band)
          - _band_grid(model, pts + a - b, band)
          - _band_grid(model, pts - a + b, band)
          + _band_grid(model, pts - a - b, band)) / (4.0 * h * h)
    return w * np.sum(dd)


def ballistic_D(model, mu_F, grid, e_alpha, e_beta):
    """Ballistic coefficient D: j ~ D eps t in the metallic linear regime.

    Computed as the occupied-volume integral (2 pi)^-2 Int 1(lambda <= mu_F)
    d_alpha d_beta lambda dk (finite differences, h = |b1|/(8 n)) and
    cross-checked against the small-drift slope of the Bloch predictor;
    disagreement beyond 3x the grid-refinement error estimate raises.
    Fully filled or empty bands contribute 0 (periodic integral of a
    derivative), so an insulator returns exactly 0.
    """
    from .lattice import make_grid

    lam = _band_grid(model, grid.points, None)
    n_occ = np.sum(lam <= mu_F, axis=1)
    if n_occ.min() == n_occ.max():
        return 0.0

    d_vol = _ballistic_volume(model, mu_F, grid, e_alpha, e_beta)
    # slope route: predictor(t) ~ D * (eps t); differentiate at drift 0
    delta = 1e-3 / max(np.linalg.norm(e_beta), 1e-12)
    p_plus = bloch_predictor(model, mu_F, grid, 1.0, e_beta, e_alpha, delta)
    p_minus = bloch_predictor(model, mu_F, grid, 1.0, e_beta, e_alpha, -delta)
    d_slope = (p_plus - p_minus) / (2.0 * delta)
    # refinement error estimate (discontinuous integrand: O(1/n) quadrature)
    coarse = make_grid(model.lattice, max(grid.n // 2, 8), grid.shift)
    err_est = abs(d_vol - _ballistic_volume(model, mu_F, coarse,
                                            e_alpha, e_beta))
    tol = 3.0 * max(err_est, 1e-8 * max(abs(d_vol), 1.0))
    if abs(d_vol - d_slope) > tol:
        raise FloatingPointError(
            f"ballistic_D cross-check failed: volume {d_vol:.6g} vs "
            f"slope {d_slope:.6g} (tol {tol:.2g})")
    return float(d_vol)


def semimetal_sigma(n_dirac, e_alpha, e_beta):
    """Each conical crossing contributes 1/16 e_alpha . e_beta."""
    if n_dirac < 0:
        raise ValueError("n_dirac must be >= 0")
    return (n_dirac / 16.0) * float(np.dot(e_alpha, e_beta))


def kubo_trace(model, grid, mu_F, e_alpha, e_beta, times, averaged=False):
    """First-order-in-eps (linear response) current trace, no dynamics.

    j_inst holds the coefficient j^LR(t) (multiply by eps for the predicted
    current): the instantaneous response, or, with averaged=True, the
    analytic per-mode time-average of the response over [0, t]. As in every
    CurrentTrace, j_runavg is the trapezoid running average of j_inst.
    Every grid fiber must be gapped (use a shifted grid for semimetals).
    """
    from .spectral import _kernel

    times = np.asarray(times, dtype=float)
    w = grid.weight / (2.0 * np.pi) ** 2
    nt = len(times)
    acc = np.zeros(nt)
    comp = np.zeros(nt)
    for k in grid.points:
        s = eigensystem(model.fiber(k), k)
        lam, V = s.lambdas, s.vectors
        n = occupation_count(lam, mu_F)
        M = len(lam)
        if n == 0 or n == M:
            continue
        if lam[n] - lam[n - 1] < 1e-12:
            raise ValueError(f"zero gap at grid point k={k}")
        dHa = model.deriv(k, e_alpha)
        dHb = model.deriv(k, e_beta)
        # per-fiber spectral data once; the whole times-row vectorized
        # (same sum as spectral.kubo_current at each t)
        Vo, Vu = V[:, :n], V[:, n:]
        a = Vu.conj().T @ dHa @ Vo
        b = Vu.conj().T @ dHb @ Vo
        dlt = lam[n:, None] - lam[None, :n]
        w0 = np.conj(a) * b / dlt ** 2
        ker = _kernel(np.multiply.outer(times, dlt), 1.0, averaged)
        # kubo_current = 2 sum Im(w); the current carries the overall minus
        row = -2.0 * np.sum(np.imag(w0[None, :, :] * ker), axis=(1, 2))
        acc, comp = _kahan_reduce(acc, comp, row[None, :], w)
    return _trace_with_avg(times, acc, 0.0, e_alpha, e_beta, mu_F, grid.n)


def adiabatic_decomposition(model, k, eps, e_alpha, e_beta, mu_F, t, frame):
    """Split one fiber's current integrand into adiabatic/static/oscillatory.

    `frame` must be the *full* M-column eigenframe of H_k propagated to
    time t (propagate_frame with mu_F above the spectrum), so the full
    propagator U-tilde = phi V_k^dagger is available. All terms carry the
    current's overall minus sign, so
    adiabatic + static + oscillatory + residual = current_integrand.
    """
    k = np.asarray(k, dtype=float)
    e_beta_v = np.asarray(e_beta, dtype=float)
    ks = k - eps * t * e_beta_v

    def static_parts(kk):
        s = with_occupation(eigensystem(model.fiber(kk), kk), mu_F)
        if s.n_occ in (0, model.dim) or s.gap < 1e-12:
            if not 0 < s.n_occ < model.dim:
                return s, None
            raise ValueError(f"zero gap on path at k={kk}")
        dHb = model.deriv(kk, e_beta)
        P = s.vectors[:, :s.n_occ] @ s.vectors[:, :s.n_occ].conj().T
        dP = liouvillian_pinv(s, s.n_occ, P @ dHb - dHb @ P)
        return s, dP

    s_sh, dP_sh = static_parts(ks)
    dHa_sh = model.deriv(ks, e_alpha)
    P_sh = (s_sh.vectors[:, :s_sh.n_occ]
            @ s_sh.vectors[:, :s_sh.n_occ].conj().T)
    adiabatic = -np.trace(dHa_sh @ P_sh).real
    if dP_sh is None:
        static = 0.0
    else:
        static = eps * (1j * np.trace(
            dHa_sh @ liouvillian_pinv(s_sh, s_sh.n_occ, dP_sh))).real

    s0, dP0 = static_parts(k)
    if dP0 is None:
        oscillatory = 0.0
    else:
        X0 = liouvillian_pinv(s0, s0.n_occ, dP0)
        phi = frame.phi if hasattr(frame, "phi") else frame
        U = phi @ s0.vectors.conj().T  # full propagator
        oscillatory = -eps * (1j * np.trace(dHa_sh @ U @ X0
                                            @ U.conj().T)).real
    phi_occ = (frame.phi if hasattr(frame, "phi") else frame)[:, :s0.n_occ]
    full = current_integrand(model, k, t, eps, e_alpha, e_beta, phi_occ)
    residual = full - (adiabatic + static + oscillatory)
    return adiabatic, static, oscillatory, residual


def dirac_timeavg(delta, vF, t, n_radial=512, n_angular=16):
    """Time-averaged local linear response of the Dirac model on B(0, delta).

    Entries I_ij = (1/t) Int_0^t Int_{|k|<delta}
    Tr(dH_i (e^{-i t' L} - 1) L+ d_j gamma) dk dt' by Gauss-Legendre (radial)
    x trapezoid (angular) quadrature with the analytic per-mode average;
    the interband matrix elements of vF sigma_i between u_+(theta) and
    u_-(theta) are used in closed form (only harmonics up to e^{2i theta}
    appear, so a modest angular rule is exact to roundoff).
    Diagonal -> i pi^2/4 + O(1/(delta vF t)); off-diagonal -> 0.
    """
    from .spectral import _kernel

    if delta <= 0 or t <= 0:
        raise ValueError("delta and t must be positive")
    xs, wgl = np.polynomial.legendre.leggauss(n_radial)
    rs = 0.5 * delta * (xs + 1.0)
    wr = 0.5 * delta * wgl
    th = np.arange(n_angular) * (2.0 * np.pi / n_angular)
    wth = 2.0 * np.pi / n_angular
    # <u_+ | vF sigma_i | u_-> at angle theta
    A = np.stack([0.5 * vF * (1.0 - np.exp(-2j * th)),
                  -0.5j * vF * (1.0 + np.exp(-2j * th))])  # (2, n_angular)
    dlt = 2.0 * vF * rs  # lambda_+ - lambda_-
    kappa = _kernel(dlt, t, averaged=True)  # (n_radial,)
    radial = (wr * rs * kappa / dlt ** 2)  # weights x Jacobian x kernel/Delta^2
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            ang = wth * np.sum(np.conj(A[i]) * A[j])
            w_sum = np.sum(radial) * ang
            # Tr = conj(w) - w summed over modes
            out[i, j] = np.conj(w_sum) - w_sum
    return out


def classify_phase(model, mu_F, grid, gap_tol=1e-6):
    """'insulator', 'metal' or 'semimetal' judged on the given grid."""
    lam = _band_grid(model, grid.points, None)
    n_occ = np.sum(lam <= mu_F, axis=1)
    if n_occ.min() != n_occ.max():
        return "metal"
    n = int(n_occ[0])
    if n == 0 or n == lam.shape[1]:
        return "insulator"
    gap = np.min(lam[:, n] - lam[:, n - 1])
    return "semimetal" if gap < gap_tol else "insulator"
