from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given

import oracles
from conftest import random_op, skew_ops
from qfmgeom.linalg import (BranchCutError, EigenError, NotHermitianError, dist_su, expm_skew,
                            expm_skew_dense, herm_eig, herm_eig_batch, is_unitary,
                            jacobi_eigh_batch, logm_unitary, su_distances)
from qfmgeom.pauli import SkewHermitianOp


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def in_branch(rng, n, margin=0.2):
    """Random Pauli-sum generator whose eigenphases stay inside (-pi, pi)."""
    a = random_op(rng, n)
    radius = np.max(np.abs(np.linalg.eigvalsh(1j * a.to_dense())))
    return a * ((math.pi - margin) * rng.uniform(0.05, 1.0) / radius)


# -- Hermitian eigensolver ------------------------------------------------------

def test_identity_and_pauli_x_spectra():
    for n in (1, 3, 8):
        w, _ = herm_eig(np.eye(n))
        np.testing.assert_allclose(w, np.ones(n), atol=1e-15)
    w, _ = herm_eig(oracles.SIGMA["X"])
    np.testing.assert_allclose(w, [-1.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16, 32, 64])
def test_reconstruction_and_orthonormality(rng, n):
    h = random_hermitian(rng, n)
    w, v = herm_eig(h)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-10)
    err = np.linalg.norm(v @ np.diag(w) @ v.conj().T - h) / np.linalg.norm(h)
    assert err < 1e-9
    np.testing.assert_allclose(w, np.linalg.eigvalsh(h), atol=1e-9 * max(1, np.linalg.norm(h)))


def test_degenerate_spectrum(rng):
    u = random_unitary(rng, 6)
    h = u @ np.diag([1, 1, 1, -2, -2, 5.0]) @ u.conj().T
    w, v = herm_eig(h)
    np.testing.assert_allclose(w, [-2, -2, 1, 1, 1, 5], atol=1e-12)
    np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-12)


def test_batch_agrees_with_single(rng):
    hs = np.stack([random_hermitian(rng, 4) for _ in range(10)])
    w, v = herm_eig_batch(hs)
    for k in range(10):
        w1, _ = herm_eig(hs[k])
        np.testing.assert_allclose(w[k], w1, atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(NotHermitianError):
        herm_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_iteration_cap_reports_residual(rng):
    with pytest.raises(EigenError, match="residual"):
        jacobi_eigh_batch(random_hermitian(rng, 12)[None], max_sweeps=1)


# -- exponential ------------------------------------------------------------------

def test_zero_generator_gives_identity():
    np.testing.assert_allclose(expm_skew(SkewHermitianOp.zero(2)), np.eye(4), atol=1e-15)


def test_pi_rotation():
    np.testing.assert_allclose(expm_skew(SkewHermitianOp(1, {"X": math.pi})), -np.eye(2), atol=1e-14)


def test_small_rotation_closed_form():
    theta = 0.3
    want = math.cos(theta) * np.eye(2) - 1j * math.sin(theta) * oracles.SIGMA["X"]
    np.testing.assert_allclose(expm_skew(SkewHermitianOp(1, {"X": theta})), want, atol=1e-12)


@given(skew_ops())
def test_exponential_matches_taylor_oracle(a):
    u = expm_skew(a)
    np.testing.assert_allclose(u, oracles.expm_taylor(a.to_dense()), atol=1e-10)
    assert is_unitary(u)
    assert abs(np.linalg.det(u) - 1) < 1e-8


def test_batched_exponential(rng):
    ops = [random_op(rng, 2) for _ in range(5)]
    us = expm_skew_dense(np.stack([a.to_dense() for a in ops]))
    for a, u in zip(ops, us):
        np.testing.assert_allclose(u, oracles.expm_taylor(a.to_dense()), atol=1e-10)


# -- logarithm and distance ---------------------------------------------------------

def test_log_examples():
    np.testing.assert_allclose(logm_unitary(np.eye(4)), np.zeros((4, 4)), atol=1e-15)
    a = SkewHermitianOp(1, {"X": 0.4})
    np.testing.assert_allclose(logm_unitary(expm_skew(a)), a.to_dense(), atol=1e-9)
    d = np.diag([np.exp(3j), np.exp(-3j)])
    np.testing.assert_allclose(logm_unitary(d), np.diag([3j, -3j]), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_exp_log_roundtrip(rng, n):
    for _ in range(30):
        a = in_branch(rng, n)
        err = np.linalg.norm(logm_unitary(expm_skew(a)) - a.to_dense())
        assert err < 1e-8


def test_roundtrip_with_repeated_phases(rng):
    # e^{i t} and e^{-i t} share a cosine; equal phases form clusters
    v = random_unitary(rng, 4)
    for phases in ([0.7, 0.7, -0.7, 0.1], [2.5, -2.5, 2.5, -2.5], [1.0, 1.0, 1.0, 1.0]):
        a = v @ np.diag(1j * np.array(phases)) @ v.conj().T
        u = oracles.expm_taylor(a)
        np.testing.assert_allclose(logm_unitary(u), a, atol=1e-9)


def test_branch_cut_raises():
    with pytest.raises(BranchCutError):
        logm_unitary(-np.eye(2, dtype=complex))
    with pytest.raises(BranchCutError):
        dist_su(np.eye(2), expm_skew(SkewHermitianOp(1, {"Z": math.pi})))


def test_non_unitary_log_rejected():
    with pytest.raises(ValueError):
        logm_unitary(np.array([[2, 0], [0, 1]], dtype=complex))


def test_distance_examples():
    u = expm_skew(SkewHermitianOp(1, {"X": 0.5}))
    assert dist_su(u, u) == pytest.approx(0, abs=1e-12)
    assert dist_su(np.eye(2), u) == pytest.approx(0.5 * math.sqrt(2), abs=1e-12)


def test_distance_properties(rng):
    for _ in range(20):
        u1, u2 = expm_skew(in_branch(rng, 2, 0.5)), expm_skew(in_branch(rng, 2, 0.5))
        w = random_unitary(rng, 4)
        d = dist_su(u1, u2)
        try:
            assert dist_su(u2, u1) == pytest.approx(d, abs=1e-9)
            assert dist_su(w @ u1, w @ u2) == pytest.approx(d, abs=1e-9)
        except BranchCutError:
            continue
        assert d >= 0


def test_strict_false_marks_branch_cut_with_nan():
    u = np.stack([np.eye(2, dtype=complex), np.eye(2, dtype=complex)])
    v = np.stack([np.eye(2, dtype=complex), -np.eye(2, dtype=complex)])
    d = su_distances(u, v, strict=False)
    assert d[0] == 0 and math.isnan(d[1])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        dist_su(np.eye(2), np.eye(4))
