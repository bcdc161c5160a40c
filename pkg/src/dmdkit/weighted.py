"""Modal decomposition in elliptic inner products, with error bounds.

The weighted pipelines never build the weighted basis explicitly: all
linear algebra runs on the transformed data (L* X for geometry M, or
L^{-1} X for the inverse orientation), where ordinary Euclidean tools
apply, and vectors are lifted back through factor solves at the end.
Residuals are therefore reported in the weighted norm by construction.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .inner import InnerProduct
from .pod import PodBasis, _pod_core
from .variants import VariantConfig, _check_pair_arrays, _rrr_pipeline

__all__ = [
    "BoundReport",
    "weighted_dmd",
    "two_sided_weighted_dmd",
    "two_sided_pod",
    "weighted_bauer_fike",
]


@dataclass(frozen=True)
class BoundReport:
    """Evaluated eigenvalue perturbation bound in a weighted geometry.

    ``bound`` caps the distance from a perturbed eigenvalue to the true
    spectrum: sqrt(mu2) * kappa * residual.  ``mu2_estimate`` is the
    condition number of the weight after unit-diagonal equilibration, an
    upper proxy for the infimum over all diagonal equilibrations; exactly
    1 for diagonal weights.  ``kappa_M_S`` is the weighted eigenbasis
    condition number; it cannot be observed from data, so when no value
    is supplied it is taken as 1 (weighted-normal operator) and the
    ``kappa_assumed`` flag says so.
    """

    residual_M: float
    mu2_estimate: float
    kappa_M_S: float
    kappa_assumed: bool
    bound: float
    relative_residual_M: float | None = None
    relative_bound: float | None = None


def _require_weight(weight, name):
    if not isinstance(weight, InnerProduct):
        raise DataError("%s must be an InnerProduct" % name)
    return weight


def weighted_dmd(X, Y, M, config=VariantConfig()):
    """Refined decomposition in the geometry induced by ``M``.

    The SVD runs on the transformed snapshots; the Rayleigh quotient is
    the transformed-basis compression and the residuals are weighted
    norms.  Returned vectors are lifted to ambient coordinates and have
    unit weighted norm.  Column scaling, when enabled, equilibrates the
    transformed matrix, which is the one entering the SVD.
    """
    X, Y = _check_pair_arrays(X, Y)
    M = _require_weight(M, "M")
    Gx = M.transform(X)
    Gy = M.transform(Y)
    return _rrr_pipeline(Gx, Gy, config, "weighted", weight=M)


def two_sided_weighted_dmd(X, Y, M, N, config=VariantConfig()):
    """Decomposition weighted on both the state and the snapshot index.

    ``M`` acts on state space (rows), ``N`` on the snapshot index space
    (columns, e.g. forgetting factors).  The pipeline is ordinary DMD of
    the doubly transformed pair; with ``N = I`` it reduces exactly to
    :func:`weighted_dmd`.
    """
    X, Y = _check_pair_arrays(X, Y)
    M = _require_weight(M, "M")
    N = _require_weight(N, "N")
    Gx = N.transform_right(M.transform(X))
    Gy = N.transform_right(M.transform(Y))
    return _rrr_pipeline(Gx, Gy, config, "weighted2", weight=M)


def two_sided_pod(X, M, N, policy=None):
    """POD of the doubly weighted data, exposing both lifted factors.

    The left basis is M-orthonormal, the right factor N-orthonormal; both
    are materialized lazily from the transformed singular vectors.
    """
    M = _require_weight(M, "M")
    N = _require_weight(N, "N")
    H = N.transform_right(M.transform(np.asarray(X)))
    U_tilde, sk, Vk, k, s = _pod_core(H, policy)
    return PodBasis(
        U_tilde=U_tilde,
        weight=M,
        sigma=sk,
        V=Vk,
        rank=k,
        sigma_all=s,
        right_weight=N,
    )


def weighted_bauer_fike(residual_M, M, kappa_assumption=None, relative_residual_M=None):
    """Evaluate the weighted eigenvalue perturbation bound.

    ``residual_M`` is the weighted residual norm of the pair being
    audited.  The weight's contribution enters through mu2, the condition
    number of the unit-diagonal equilibrated Gram matrix; the infimum over
    all positive diagonal equilibrations is not computed, so the reported
    value is an upper estimate (exact, and equal to 1, for diagonal
    weights).  Supplying ``relative_residual_M`` additionally evaluates
    the relative-form bound with the same conditioning factors.
    """
    residual_M = float(residual_M)
    if not (residual_M >= 0.0) or not np.isfinite(residual_M):
        raise DataError("residual_M must be a finite nonnegative real")
    M = _require_weight(M, "M")

    if M.structure == "diagonal":
        mu2 = 1.0
    else:
        G = M.gram_matrix()
        d = np.real(np.diagonal(G)).copy()
        if np.any(d <= 0.0):
            raise DataError("invalid weight: non-positive diagonal after equilibration")
        scale = 1.0 / np.sqrt(d)
        C = G * scale[:, None] * scale[None, :]
        try:
            ev = np.linalg.eigvalsh(0.5 * (C + C.conj().T))
        except np.linalg.LinAlgError as exc:
            raise DataError("invalid weight: equilibrated matrix has no eigendecomposition") from exc
        if ev[0] <= 0.0:
            raise DataError("invalid weight: equilibrated matrix is not positive definite")
        mu2 = float(ev[-1] / ev[0])

    if kappa_assumption is None:
        kappa, assumed = 1.0, True
    else:
        kappa = float(kappa_assumption)
        if not (kappa >= 1.0):
            raise DataError("kappa_assumption must be >= 1")
        assumed = False

    bound = float(np.sqrt(mu2) * kappa * residual_M)
    rel = None
    rel_bound = None
    if relative_residual_M is not None:
        rel = float(relative_residual_M)
        if not (rel >= 0.0) or not np.isfinite(rel):
            raise DataError("relative_residual_M must be a finite nonnegative real")
        rel_bound = float(np.sqrt(mu2) * kappa * rel)
    return BoundReport(
        residual_M=residual_M,
        mu2_estimate=mu2,
        kappa_M_S=kappa,
        kappa_assumed=assumed,
        bound=bound,
        relative_residual_M=rel,
        relative_bound=rel_bound,
    )
