"""Time propagation of occupied Bloch frames under H_{k - eps*e_beta*t}.

The switched-on uniform field eps*e_beta is equivalent, after the gauge
transform, to evolving each fiber under the time-dependent Hamiltonian
H(k - eps*e_beta*t). Only the N_k occupied eigencolumns are propagated
(the current needs only phi phi^dagger). Default scheme: exponential
midpoint, phi <- exp(-i dt H(t + dt/2)) phi, with steps landing exactly
on the requested sample times; a classical RK4 ('rk-check') is provided
purely as a cross-check oracle.

This module is the generic (any matrix size, any model) path; large
Brillouin-zone sweeps of 2-band lattice models go through the compiled
kernels instead (see observables.current_trace).
"""

from dataclasses import dataclass

import numpy as np

from .spectral import eigensystem, occupation_count

__all__ = ["PropagationFrame", "IntegratorOptions", "default_dt",
           "step_exp_midpoint", "propagate_frame"]


@dataclass(frozen=True)
class PropagationFrame:
    """Propagated occupied states at one time: phi is M x N, phi^dag phi = I."""

    k: np.ndarray
    t: float
    phi: np.ndarray


@dataclass(frozen=True)
class IntegratorOptions:
    dt: float | None = None          # None -> default_dt(model, k)
    scheme: str = "exp-midpoint"     # or "rk-check"
    unitarity_tol: float = 1e-9

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.scheme not in ("exp-midpoint", "rk-check"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


def default_dt(model, k):
    """min(0.01, 0.1/||H||-estimate): ample for the slow drift rate eps."""
    try:
        scale = model.norm_estimate()
    except NotImplementedError:
        scale = np.linalg.norm(model.fiber(k), 2)
    return min(0.01, 0.1 / max(scale, 1e-12))


def step_exp_midpoint(H_mid, dt, phi):
    """One exponential-midpoint step: exp(-i dt H_mid) phi (exactly unitary)."""
    lam, V = np.linalg.eigh(H_mid)
    return V @ (np.exp(-1j * dt * lam)[:, None] * (V.conj().T @ phi))


def _step_rk4(model, k, eps, e_beta, t, dt, phi):
    def rhs(tt, y):
        H = model.fiber(k - eps * tt * e_beta)
        return -1j * (H @ y)

    k1 = rhs(t, phi)
    k2 = rhs(t + dt / 2, phi + dt / 2 * k1)
    k3 = rhs(t + dt / 2, phi + dt / 2 * k2)
    k4 = rhs(t + dt, phi + dt * k3)
    return phi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def propagate_frame(model, k, eps, e_beta, mu_F, times, opts=None):
    """Propagate the occupied eigenframe of H_k through the listed times.

    times must start at 0; returns one PropagationFrame per entry. Raises
    on unitarity defect beyond opts.unitarity_tol (dt too large).
    """
    opts = opts or IntegratorOptions()
    k = np.asarray(k, dtype=float)
    e_beta = np.asarray(e_beta, dtype=float)
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0:
        raise ValueError("times must start at 0")
    s = eigensystem(model.fiber(k), k)
    N = occupation_count(s.lambdas, mu_F)
    phi = s.vectors[:, :N].astype(complex)
    dt_base = opts.dt if opts.dt is not None else default_dt(model, k)
    frames = [PropagationFrame(k, 0.0, phi.copy())]
    eye = np.eye(N)
    for t0, t1 in zip(times[:-1], times[1:]):
        span = t1 - t0
        n_sub = max(1, int(np.ceil(span / dt_base - 1e-12)))
        h = span / n_sub
        for j in range(n_sub):
            t = t0 + j * h
            if opts.scheme == "exp-midpoint":
                H_mid = model.fiber(k - eps * (t + h / 2) * e_beta)
                phi = step_exp_midpoint(H_mid, h, phi)
            else:
                phi = _step_rk4(model, k, eps, e_beta, t, h, phi)
        defect = np.max(np.abs(phi.conj().T @ phi - eye)) if N else 0.0
        if defect > opts.unitarity_tol:
            raise FloatingPointError(
                f"unitarity defect {defect:.2e} at t={t1} (k={k}): "
                "decrease dt")
        frames.append(PropagationFrame(k, float(t1), phi.copy()))
    return frames
