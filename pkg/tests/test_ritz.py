"""The Rayleigh-Ritz engine: quotients, residuals, refinement, ordering."""

import numpy as np
import pytest

from dmdkit.errors import ConditioningError, DataError
from dmdkit.pod import RankPolicy, truncated_svd
from dmdkit.ritz import (
    QrStack,
    action_on_basis,
    data_driven_residuals,
    koopman_log_map,
    order_pairs,
    qr_stack,
    rayleigh_from_qr,
    refine_ritz,
    refined_rayleigh_value,
    residuals_from_stack,
    ritz_pairs,
)


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def _random_instance(seed, n=20, m=8):
    """Small decomposition context: orthonormal U, its image B, the stack."""
    rng = _rng(seed)
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    X = rng.standard_normal((n, m))
    basis = truncated_svd(X, RankPolicy.fixed(m))
    B = action_on_basis(A @ X, basis.V, basis.sigma)
    stack = qr_stack(basis.U, B)
    return A, basis.U, B, stack


def test_action_on_basis_identity_columns():
    n, m = 6, 3
    A = np.diag(np.arange(1.0, n + 1))
    Y = A[:, :m]  # image of the leading identity columns
    B = action_on_basis(Y, np.eye(m), np.ones(m))
    assert np.array_equal(B, A[:, :m])


def test_action_on_basis_equals_operator_image():
    A, U, B, _ = _random_instance(3)
    assert np.linalg.norm(B - A @ U, 2) <= 1e-11 * np.linalg.norm(A, 2)


def test_action_on_basis_truncated_rank_still_exact():
    # truncation discards X-directions, not the identity B = A U on the
    # retained ones
    rng = _rng(5)
    n, m, k = 25, 10, 4
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    X = rng.standard_normal((n, m))
    basis = truncated_svd(X, RankPolicy.fixed(k))
    B = action_on_basis(A @ X, basis.V, basis.sigma)
    assert np.linalg.norm(B - A @ basis.U, 2) <= 1e-11 * np.linalg.norm(A, 2)


def test_action_on_basis_guards_zero_sigma():
    with pytest.raises(ConditioningError):
        action_on_basis(np.eye(3), np.eye(3), np.array([1.0, 0.0, 1.0]))


def test_qr_stack_duplicated_isometry():
    Q, _ = np.linalg.qr(_rng(7).standard_normal((10, 4)))
    stack = qr_stack(Q, Q)
    assert np.allclose(stack.r11, np.eye(4), atol=1e-13)
    assert np.allclose(stack.r12, np.eye(4), atol=1e-13)
    assert np.allclose(stack.r22, 0.0, atol=1e-13)


def test_qr_stack_gram_identity_and_phase_convention():
    # R is a genuine triangular factor: (U B)*(U B) = R*R, with the
    # diagonal of the first block row rotated to the nonnegative reals
    _, U, B, stack = _random_instance(11)
    k = stack.k
    top = np.hstack([stack.r11, stack.r12])
    bottom = np.hstack([np.zeros((stack.r22.shape[0], k)), stack.r22])
    R = np.vstack([top, bottom])
    stacked = np.hstack([U, B])
    assert np.allclose(stacked.conj().T @ stacked, R.conj().T @ R, atol=1e-12)
    d = np.diagonal(stack.r11)
    assert np.all(d.real >= 0) and np.allclose(d.imag if np.iscomplexobj(d) else 0.0, 0.0)
    assert np.allclose(np.abs(stack.phi), 1.0)


def test_qr_stack_square_basis_has_empty_tail():
    # n = k leaves no room below the span; refinement must still work
    rng = _rng(13)
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    B = rng.standard_normal((4, 4))
    stack = qr_stack(Q, B)
    assert stack.r22.shape[0] == 0
    w, sigma = refine_ritz(stack, 0.3 + 0.1j)
    assert w.shape == (4,) and sigma >= 0.0


def test_rayleigh_from_qr_matches_direct_product():
    _, U, B, stack = _random_instance(17)
    S = rayleigh_from_qr(stack)
    direct = U.conj().T @ B
    assert np.abs(S - direct).max() <= 1e-12 * np.linalg.norm(B, 2)


def test_ritz_pairs_diagonal_quotient():
    S = np.diag([2.0, 3.0])
    lambdas, W, Z = ritz_pairs(S, np.eye(2))
    assert sorted(lambdas.real) == [2.0, 3.0]
    assert np.allclose(S @ W, W * lambdas[None, :], atol=1e-14)
    assert np.allclose(np.linalg.norm(Z, axis=0), 1.0)


def test_ritz_pairs_companion_against_root_oracle():
    # oracle first: brute-force roots of z^3 - 2z^2 - 5z + 6 = (z-1)(z+2)(z-3)
    oracle = np.sort_complex(np.roots([1.0, -2.0, -5.0, 6.0]))
    C = np.array([[0.0, 0.0, -6.0], [1.0, 0.0, 5.0], [0.0, 1.0, 2.0]])
    lambdas, _, _ = ritz_pairs(C, np.eye(3))
    assert np.allclose(np.sort_complex(lambdas), oracle, atol=1e-8)


def test_ritz_pairs_defective_quotient_does_not_fail():
    J = np.array([[1.0, 1.0], [0.0, 1.0]])
    lambdas, W, _ = ritz_pairs(J, np.eye(2))
    assert np.allclose(lambdas, 1.0)
    assert np.allclose(np.linalg.norm(W, axis=0), 1.0)


def test_scalar_pipeline_recovers_multiplier():
    x = _rng(19).standard_normal((7, 1))
    basis = truncated_svd(x, RankPolicy.fixed(1))
    B = action_on_basis(2.0 * x, basis.V, basis.sigma)
    S = basis.U.conj().T @ B
    lambdas, W, _ = ritz_pairs(S, basis.U)
    r = data_driven_residuals(B, basis.U, W, lambdas)
    assert lambdas[0] == pytest.approx(2.0, abs=1e-13)
    assert r[0] <= 1e-13


def test_residuals_from_stack_match_ambient_norms():
    _, U, B, stack = _random_instance(23)
    S = rayleigh_from_qr(stack)
    lambdas, W, _ = ritz_pairs(S, np.eye(stack.k))
    ambient = data_driven_residuals(B, U, W, lambdas)
    packed = residuals_from_stack(stack, lambdas, W)
    assert np.allclose(packed, ambient, atol=1e-12)


def test_invariant_subspace_residual_vanishes():
    rng = _rng(29)
    n, m = 12, 4
    Q, _ = np.linalg.qr(rng.standard_normal((n, m)))
    T = rng.standard_normal((m, m))
    A = Q @ T @ Q.T  # range(Q) is invariant
    basis = truncated_svd(Q, RankPolicy.fixed(m))
    B = action_on_basis(A @ Q, basis.V, basis.sigma)
    S = basis.U.conj().T @ B
    lambdas, W, _ = ritz_pairs(S, basis.U)
    r = data_driven_residuals(B, basis.U, W, lambdas)
    assert r.max() <= 1e-12 * np.linalg.norm(A, 2)


def test_refine_scalar_closed_form():
    # k=1 oracle: the only unit vector is w = 1, so
    # sigma = sqrt(|r12 - lam*r11|^2 + |r22|^2)
    stack = QrStack(
        r11=np.array([[0.8]]),
        r12=np.array([[0.3 + 0.2j]]),
        r22=np.array([[0.45]]),
        phi=np.array([1.0 + 0j]),
    )
    lam = 0.6 - 0.1j
    _, sigma = refine_ritz(stack, lam)
    want = np.sqrt(abs(0.3 + 0.2j - lam * 0.8) ** 2 + 0.45**2)
    assert sigma == pytest.approx(want, abs=1e-14)


def test_refinement_never_worse_than_plain_residual():
    _, _, B, stack = _random_instance(31)
    S = rayleigh_from_qr(stack)
    lambdas, W, _ = ritz_pairs(S, np.eye(stack.k))
    plain = residuals_from_stack(stack, lambdas, W)
    slack = 1e-12 * np.linalg.norm(B, 2)
    for i, lam in enumerate(lambdas):
        _, sigma = refine_ritz(stack, lam)
        assert sigma <= plain[i] + slack


def test_refine_exact_eigenvalue_in_span():
    rng = _rng(37)
    n, m = 10, 3
    Q, _ = np.linalg.qr(rng.standard_normal((n, m)))
    T = rng.standard_normal((m, m))
    A = Q @ T @ Q.T
    basis = truncated_svd(Q, RankPolicy.fixed(m))
    B = action_on_basis(A @ Q, basis.V, basis.sigma)
    stack = qr_stack(basis.U, B)
    lam = np.linalg.eigvals(T)[0]
    _, sigma = refine_ritz(stack, lam)
    assert sigma <= 1e-12 * np.linalg.norm(B, 2)


def test_refined_rayleigh_value_of_exact_eigenvector():
    S = np.diag([2.0, 5.0]).astype(complex)
    assert refined_rayleigh_value(S, np.array([0.0, 1.0])) == pytest.approx(5.0)


def test_rayleigh_value_is_real_for_hermitian_quotient():
    rng = _rng(41)
    H = rng.standard_normal((5, 5))
    H = H + H.T
    w = rng.standard_normal(5)
    w = w / np.linalg.norm(w)
    assert abs(refined_rayleigh_value(H, w).imag) <= 1e-14 * np.abs(H).max()


def test_swapping_lambda_for_rho_never_hurts():
    _, _, _, stack = _random_instance(43)
    S = rayleigh_from_qr(stack)
    lambdas = np.linalg.eigvals(S)
    for lam in lambdas:
        w, sigma = refine_ritz(stack, lam)
        rho = refined_rayleigh_value(S, w)
        with_rho = residuals_from_stack(stack, np.array([rho]), w.reshape(-1, 1))[0]
        assert with_rho <= sigma + 1e-12


def test_koopman_log_map_values():
    assert koopman_log_map(np.array([1.0]), 0.5)[0] == 0.0
    got = koopman_log_map(np.array([np.exp(1j * np.pi / 4)]), 0.1)[0]
    assert got == pytest.approx(1.25j, abs=1e-12)
    got = koopman_log_map(np.array([-1.0]), 0.25)[0]
    assert got == pytest.approx(1j / (2 * 0.25), abs=1e-12)


def test_koopman_log_map_domain_errors():
    with pytest.raises(DataError):
        koopman_log_map(np.array([0.0]), 0.1)
    with pytest.raises(DataError):
        koopman_log_map(np.array([1.0]), 0.0)
    with pytest.raises(DataError):
        koopman_log_map(np.array([1.0]), np.nan)


def test_order_pairs_sorts_and_breaks_ties_deterministically():
    residuals = np.array([0.5, 0.1, 0.5, 0.5])
    lambdas = np.array([2.0 + 0j, 9.0, 1.0 + 1.0j, 1.0 + 0.5j])
    perm = order_pairs(residuals, lambdas)
    assert perm[0] == 1  # smallest residual first
    tied = lambdas[perm[1:]]
    assert np.all(np.diff(np.abs(tied)) >= -1e-15)  # then ascending modulus
    assert np.abs(tied[0]) == np.abs(lambdas[3])
