"""Rayleigh-Ritz extraction with data-driven residuals and refinement.

Everything here works on a rank-k POD basis U_k and the matrix
B_k = Y V_k Sigma_k^{-1}, which equals the image A U_k of the basis under
the (unknown) data-generating operator in exact arithmetic.  That identity
is what makes residuals computable without access to the operator:

    || A u - lambda u ||  =  || B_k w - lambda U_k w ||   for u = U_k w.

A thin QR factorization of the stacked matrix (U_k  B_k) compresses the
residual computation into 2k-dimensional triangular blocks; the smallest
singular value of the shifted block matrix is at once the optimal residual
achievable in the POD subspace and the certificate for the refined vector.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BackendError, ConditioningError, DataError, ShapeError
from .inner import InnerProduct

__all__ = [
    "QrStack",
    "RefinedPair",
    "RitzDecomposition",
    "action_on_basis",
    "qr_stack",
    "rayleigh_from_qr",
    "ritz_pairs",
    "data_driven_residuals",
    "residuals_from_stack",
    "refine_ritz",
    "refined_rayleigh_value",
    "koopman_log_map",
    "order_pairs",
]


@dataclass(frozen=True)
class QrStack:
    """Triangular blocks of the thin QR of (U_k  B_k); Q is never formed.

    The first block row is scaled so the diagonal of ``r11`` is nonnegative
    real; ``phi`` records the unimodular diagonal factors that were taken
    out.  ``r22`` has min(n - k, k) rows and is empty when the basis spans
    the whole space.
    """

    r11: np.ndarray
    r12: np.ndarray
    r22: np.ndarray
    phi: np.ndarray

    @property
    def k(self):
        return self.r11.shape[0]


@dataclass(frozen=True)
class RefinedPair:
    """Refined Ritz vector coefficients with their residual certificate."""

    w: np.ndarray
    sigma_min: float
    rho: complex


@dataclass(frozen=True)
class RitzDecomposition:
    """Ritz pairs ordered by ascending residual.

    ``vectors`` columns are unit norm in the ambient inner product; a
    column of NaNs marks a pair whose vector is undefined (zero eigenvalue
    in the exact-vector variant).  ``residuals`` may be NaN for variants
    whose vectors admit no data-driven residual.  ``refined[i]`` carries
    the refinement record of pair i when refinement ran for it.
    ``ordering`` is the permutation from eigensolver order to stored order.
    """

    lambdas: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    refined: tuple
    ordering: np.ndarray
    variant: str
    rank: int
    weight: InnerProduct | None = None

    @property
    def k(self):
        return self.lambdas.shape[0]

    @property
    def vector_present(self):
        return ~np.any(np.isnan(self.vectors.real) | np.isnan(self.vectors.imag), axis=0)


def action_on_basis(Y, V_k, sigma_k):
    """B_k = Y V_k Sigma_k^{-1}, the image of the POD basis in the data.

    Requires strictly positive retained singular values; the division is
    applied to the small factor first.
    """
    sigma_k = np.asarray(sigma_k, dtype=np.float64)
    if np.any(sigma_k <= 0.0) or not np.all(np.isfinite(sigma_k)):
        raise ConditioningError(
            "action_on_basis: retained singular values must be strictly positive",
            sigma_min=float(sigma_k.min()) if sigma_k.size else 0.0,
        )
    Y = np.asarray(Y)
    V_k = np.asarray(V_k)
    if Y.shape[1] != V_k.shape[0]:
        raise ShapeError(
            "Y has %d columns but V_k has %d rows" % (Y.shape[1], V_k.shape[0])
        )
    return Y @ (V_k / sigma_k[None, :])


def qr_stack(U_k, B_k):
    """Compress (U_k  B_k) into triangular blocks by one thin QR.

    Returns the blocks R11 (k x k, nonnegative real diagonal after
    normalization), R12 (k x k) and R22 (min(n-k, k) x k) together with
    the extracted unimodular diagonal ``phi``.
    """
    U_k = np.asarray(U_k)
    B_k = np.asarray(B_k)
    if U_k.shape != B_k.shape:
        raise ShapeError("U_k and B_k must have equal shapes, got %r and %r" % (U_k.shape, B_k.shape))
    n, k = U_k.shape
    stacked = np.hstack([U_k, B_k])
    try:
        (R,) = scipy.linalg.qr(stacked, mode="r")
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise BackendError("QR backend failed: %s" % exc) from exc
    R = R[: min(n, 2 * k), :]
    diag = np.diagonal(R)
    phases = np.ones(diag.shape[0], dtype=R.dtype if np.iscomplexobj(R) else np.float64)
    nz = np.abs(diag) > 0.0
    phases[nz] = diag[nz] / np.abs(diag[nz])
    R = R * phases.conj()[:, None]
    return QrStack(
        r11=R[:k, :k],
        r12=R[:k, k:],
        r22=R[k:, k:],
        phi=phases[:k],
    )


def rayleigh_from_qr(stack):
    """Rayleigh quotient U_k* B_k read off the normalized QR blocks.

    No additional large product is formed; the phase-corrected R12 block
    already equals U_k* B_k up to roundoff because the leading triangular
    block of an orthonormal matrix is diagonal unimodular.
    """
    return stack.r12.copy()


def _eig(S):
    try:
        lambdas, W = np.linalg.eig(S)
    except np.linalg.LinAlgError as exc:
        raise BackendError("eigensolver failed to converge: %s" % exc) from exc
    W = W / np.linalg.norm(W, axis=0)[None, :]
    return lambdas.astype(complex), W


def ritz_pairs(S_k, U_k):
    """Eigenpairs of the Rayleigh quotient lifted through the basis.

    Returns (lambdas, W, Z) with unit-norm coefficient columns W and
    Z = U_k W; Z columns are unit norm because the basis is orthonormal.
    """
    lambdas, W = _eig(np.asarray(S_k))
    Z = np.asarray(U_k) @ W
    return lambdas, W, Z


def data_driven_residuals(B_k, U_k, W, lambdas):
    """|| B_k w_i - lambda_i U_k w_i || for unit-norm coefficient columns."""
    W = np.asarray(W)
    R = np.asarray(B_k) @ W - np.asarray(U_k) @ (W * np.asarray(lambdas)[None, :])
    return np.linalg.norm(R, axis=0)


def residuals_from_stack(stack, lambdas, W):
    """Same residuals as :func:`data_driven_residuals`, in 2k dimensions.

    Uses || R_lambda w || with R_lambda stacked from the QR blocks, which
    equals the ambient residual norm exactly because Q has orthonormal
    columns.
    """
    W = np.asarray(W)
    lambdas = np.asarray(lambdas)
    top = stack.r12 @ W - (stack.r11 @ W) * lambdas[None, :]
    bottom = stack.r22 @ W
    return np.sqrt(np.linalg.norm(top, axis=0) ** 2 + np.linalg.norm(bottom, axis=0) ** 2)


def refine_ritz(stack, lam):
    """Optimal unit vector of the POD subspace for the Ritz value ``lam``.

    Minimizes the data-driven residual over all unit vectors in the span:
    the minimizer is the right singular vector belonging to the smallest
    singular value of the stacked shifted blocks.  The reported residual
    is re-evaluated as || R_lambda w ||, which never exceeds the backend's
    smallest singular value estimate in quality and is trusted instead of
    it.
    """
    R_lam = np.vstack([stack.r12 - lam * stack.r11, stack.r22])
    try:
        _, _, Vh = np.linalg.svd(R_lam)
    except np.linalg.LinAlgError as exc:
        raise BackendError("refinement SVD failed to converge: %s" % exc) from exc
    w = Vh[-1, :].conj()
    w = w / np.linalg.norm(w)
    sigma = float(np.linalg.norm(R_lam @ w))
    return w, sigma


def refined_rayleigh_value(S_k, w):
    """Rayleigh quotient w* S_k w of a unit coefficient vector.

    For a refined vector this value is at least as good an eigenvalue
    estimate as the Ritz value it started from: the residual with it never
    exceeds the residual with the original value.
    """
    w = np.asarray(w)
    return complex(w.conj() @ (np.asarray(S_k) @ w))


def koopman_log_map(lambdas, dt):
    """Continuous-time exponents (log|l| + i arg l) / (2 pi dt).

    Principal branch of the argument; a zero Ritz value has no finite
    logarithm and is a domain error.
    """
    if not (dt > 0.0) or not np.isfinite(dt):
        raise DataError("koopman_log_map: dt must be positive and finite")
    lambdas = np.asarray(lambdas, dtype=complex)
    if np.any(lambdas == 0):
        raise DataError("koopman_log_map: zero Ritz value has no logarithm")
    return (np.log(np.abs(lambdas)) + 1j * np.angle(lambdas)) / (2.0 * np.pi * dt)


def order_pairs(residuals, lambdas):
    """Permutation sorting pairs by ascending residual.

    Ties (and all-NaN residual variants) fall back to ascending modulus,
    then ascending argument, so the ordering is deterministic.
    """
    residuals = np.asarray(residuals, dtype=np.float64)
    lambdas = np.asarray(lambdas, dtype=complex)
    return np.lexsort((np.angle(lambdas), np.abs(lambdas), residuals))
