"""Eigenstructure, projector, Liouvillian, Chern and Kubo-response tests."""

import numpy as np
import pytest

from crystal_current import HaldaneModel, make_grid
from crystal_current.spectral import (berry_chern, eigensystem,
                                      ground_projector, kubo_current,
                                      kubo_fiber_trace, liouvillian_apply,
                                      liouvillian_pinv, with_occupation)

SX = np.array([[0, 1], [1, 0]], dtype=complex)


def _random_hermitian(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (A + A.conj().T) / 2


# -------------------------------------------------------------- eigensystem

def test_eigensystem_pauli_z():
    s = eigensystem(np.diag([1.0, -1.0]))
    np.testing.assert_allclose(s.lambdas, [-1.0, 1.0], atol=1e-14)


def test_eigensystem_haldane_gamma():
    s = eigensystem(HaldaneModel(1.0, 0.0).fiber((0.0, 0.0)))
    np.testing.assert_allclose(s.lambdas, [-np.sqrt(10), np.sqrt(10)],
                               atol=1e-12)


def test_eigensystem_dirac_radial():
    from crystal_current.models import dirac_fiber
    s = eigensystem(dirac_fiber((0.7, 0.0), 1.0))
    np.testing.assert_allclose(s.lambdas, [-0.7, 0.7], atol=1e-12)


def test_eigensystem_quality(rng):
    for _ in range(50):
        H = _random_hermitian(rng, rng.integers(2, 7))
        s = eigensystem(H)
        n = len(s.lambdas)
        assert np.all(np.diff(s.lambdas) >= 0)
        assert np.max(np.abs(s.vectors.conj().T @ s.vectors - np.eye(n))) < 1e-10
        res = H @ s.vectors - s.vectors * s.lambdas[None, :]
        assert np.max(np.abs(res)) < 1e-10 * max(np.linalg.norm(H), 1.0)
        # deterministic phase: largest-|component| entry real positive
        for col in s.vectors.T:
            lead = col[np.argmax(np.abs(col))]
            assert abs(lead.imag) < 1e-12 and lead.real > 0


def test_eigensystem_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eigensystem(np.array([[0.0, 1.0], [0.0, 0.0]]))


# ---------------------------------------------------------------- projector

def test_projector_empty_below_spectrum():
    s = eigensystem(np.diag([1.0, 2.0]))
    p = ground_projector(s, 0.0)
    assert p.rank == 0 and np.max(np.abs(p.P)) == 0.0


def test_projector_properties(rng):
    for _ in range(100):
        H = _random_hermitian(rng, 4)
        s = eigensystem(H)
        mu = rng.uniform(s.lambdas[0], s.lambdas[-1])
        p = ground_projector(s, mu)
        assert np.max(np.abs(p.P @ p.P - p.P)) < 1e-10
        assert np.max(np.abs(p.P - p.P.conj().T)) < 1e-12
        assert abs(np.trace(p.P).real - p.rank) < 1e-10


def test_projector_gauge_invariance(rng):
    H = _random_hermitian(rng, 4)
    s = eigensystem(H)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=4))
    from dataclasses import replace
    s2 = replace(s, vectors=s.vectors * phases[None, :])
    mu = float(np.mean(s.lambdas[1:3]))
    assert np.max(np.abs(ground_projector(s, mu).P
                         - ground_projector(s2, mu).P)) < 1e-10


def test_insulator_mu_on_eigenvalue_rejected():
    s = eigensystem(np.diag([0.0, 1.0]))
    with pytest.raises(ValueError):
        with_occupation(s, 1.0, insulator=True)
    assert with_occupation(s, 1.0).n_occ == 2  # legitimate in metal runs


# --------------------------------------------------------------- Liouvillian

def test_liouvillian_apply_examples(rng):
    H = _random_hermitian(rng, 3)
    assert np.max(np.abs(liouvillian_apply(H, np.eye(3)))) < 1e-14
    assert np.max(np.abs(liouvillian_apply(H, H))) < 1e-14
    Hd = np.diag([0.0, 1.0])
    A = np.array([[0, 0], [1, 0]], dtype=complex)  # |e2><e1|
    np.testing.assert_allclose(liouvillian_apply(Hd, A), A, atol=1e-14)


def test_liouvillian_pinv_two_level():
    delta = 0.7
    s = eigensystem(np.diag([0.0, delta]))
    out = liouvillian_pinv(s, 1, SX)
    np.testing.assert_allclose(out, [[0, -1 / delta], [1 / delta, 0]],
                               atol=1e-12)
    # operator norm 1/gap
    assert abs(np.linalg.norm(out, 2) - 1 / delta) < 1e-12
    # block-diagonal input maps to zero
    assert np.max(np.abs(liouvillian_pinv(s, 1, np.diag([2.0, -3.0])))) == 0.0


def test_liouvillian_partial_inverse_identity(rng):
    """L L+ A = L+ L A = P A (1-P) + (1-P) A P on 1000 random gapped fibers."""
    for _ in range(1000):
        n = int(rng.integers(2, 6))
        H = _random_hermitian(rng, n)
        s = eigensystem(H)
        n_occ = int(rng.integers(1, n))
        if s.lambdas[n_occ] - s.lambdas[n_occ - 1] < 1e-3:
            continue
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        V = s.vectors
        P = V[:, :n_occ] @ V[:, :n_occ].conj().T
        off = P @ A @ (np.eye(n) - P) + (np.eye(n) - P) @ A @ P
        lhs1 = liouvillian_apply(H, liouvillian_pinv(s, n_occ, A))
        lhs2 = liouvillian_pinv(s, n_occ, liouvillian_apply(H, A))
        assert np.max(np.abs(lhs1 - off)) < 1e-10
        assert np.max(np.abs(lhs2 - off)) < 1e-10
        # rank of L+ A is at most 2 n_occ
        rank = np.sum(np.linalg.svd(liouvillian_pinv(s, n_occ, A),
                                    compute_uv=False) > 1e-10)
        assert rank <= 2 * n_occ


def test_liouvillian_self_adjoint_hilbert_schmidt(rng):
    H = _random_hermitian(rng, 5)
    for _ in range(20):
        A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        B = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        lhs = np.trace(liouvillian_apply(H, A).conj().T @ B)
        rhs = np.trace(A.conj().T @ liouvillian_apply(H, B))
        assert abs(lhs - rhs) < 1e-10 * max(abs(lhs), 1.0)


def test_liouvillian_pinv_zero_gap_rejected():
    s = eigensystem(np.diag([1.0, 1.0]))
    with pytest.raises(ValueError):
        liouvillian_pinv(s, 1, SX)


# ---------------------------------------------------------------------- Kubo

def test_kubo_zero_time_and_full_occupation(rng):
    H = _random_hermitian(rng, 3)
    s = eigensystem(H)
    dHa = _random_hermitian(rng, 3)
    dHb = _random_hermitian(rng, 3)
    mu = float(np.mean(s.lambdas[:2]))
    assert kubo_current(s, dHa, dHb, mu, 0.0) == 0.0
    assert kubo_current(s, dHa, dHb, s.lambdas[-1] + 1.0, 5.0) == 0.0


def test_kubo_two_level_closed_form(rng):
    """One interband mode: the trace oscillates at the gap frequency."""
    delta = 1.3
    s = eigensystem(np.diag([0.0, delta]))
    dHa = _random_hermitian(rng, 2)
    dHb = _random_hermitian(rng, 2)
    a = dHa[1, 0]
    b = dHb[1, 0]
    for t in (0.3, 1.0, 4.7):
        w = np.conj(a) * b * (np.exp(-1j * delta * t) - 1.0) / delta ** 2
        expect = (1j * (np.conj(w) - w)).real
        got = kubo_current(s, dHa, dHb, 0.5, t)
        assert abs(got - expect) < 1e-12
    # averaged kernel tends to -kappa_infinity = -1 per mode as t grows
    tr_late = kubo_fiber_trace(s, dHa, dHb, 0.5, 1e6, averaged=True)
    w_inf = np.conj(a) * b * (-1.0) / delta ** 2
    assert abs(tr_late - (np.conj(w_inf) - w_inf)) < 1e-3


# --------------------------------------------------------------------- Chern

def test_chern_trivial_and_topological(insulator, chern_insulator):
    lat = insulator[0].lattice
    grid = make_grid(lat, 24)
    _, c_a = berry_chern(insulator[0], 0.0, grid)
    _, c_b = berry_chern(chern_insulator[0], 0.0, grid)
    assert c_a == 0
    assert c_b == 1
    # stability under grid refinement
    _, c_b2 = berry_chern(chern_insulator[0], 0.0, make_grid(lat, 25))
    assert c_b2 == 1


def test_berry_curvature_odd_without_t2(insulator):
    model, mu = insulator
    n = 24
    grid = make_grid(model.lattice, n)
    F, chern = berry_chern(model, mu, grid)
    assert chern == 0
    # the plaquette with corner (i, j) maps to the one with corner
    # (n-1-i, n-1-j) under k -> -k (centers are negatives mod R*)
    assert np.max(np.abs(F + F[::-1, ::-1])) < 1e-10


def test_chern_rejects_gapless_grid(semimetal):
    model, mu = semimetal
    grid = make_grid(model.lattice, 12)  # unshifted: hits the cones
    with pytest.raises(ValueError):
        berry_chern(model, mu, grid)
