"""Truncated singular value decompositions with explicit rank policies.

The numerical rank is a policy decision, not a property of the data
alone, so every decomposition states which rule produced its rank:

* ``spectral``: keep sigma_i strictly above epsilon * sigma_1,
* ``energy``: keep the head whose discarded tail energy stays at or
  below epsilon^2 times the total,
* ``fixed``: a caller-chosen dimension.

One code path computes singular values and vectors together; there is
deliberately no values-only shortcut, because mixing two SVD routines in
one decomposition is exactly the failure mode the residual diagnostics
of this package are designed to expose.
"""

import numpy as np
import scipy.linalg

from .errors import BackendError, ConditioningError, DataError, ShapeError
from .inner import InnerProduct

__all__ = [
    "RankPolicy",
    "PodBasis",
    "default_epsilon",
    "numerical_rank",
    "truncated_svd",
    "weighted_pod",
]

_EPS = float(np.finfo(np.float64).eps)

# Column-norm spread above which a pivoted QR preprocessing step is applied
# before the SVD, so heavily graded columns do not poison the backend.
_QR_PREPROCESS_SPREAD = 1e8


def default_epsilon(n, m):
    """Spectral truncation threshold max(n, m+1) * unit roundoff."""
    return max(n, m + 1) * _EPS


class RankPolicy:
    """Rule mapping a singular value profile to a truncation rank."""

    def __init__(self, kind, epsilon=None, k=None):
        if kind not in ("spectral", "energy", "fixed"):
            raise DataError("unknown rank policy kind %r" % (kind,))
        if kind in ("spectral", "energy"):
            if epsilon is None or not (0.0 < float(epsilon) < 1.0):
                raise DataError("threshold policies need 0 < epsilon < 1, got %r" % (epsilon,))
            epsilon = float(epsilon)
        if kind == "fixed":
            if k is None or int(k) < 1:
                raise DataError("fixed rank policy needs k >= 1, got %r" % (k,))
            k = int(k)
        self.kind = kind
        self.epsilon = epsilon
        self.k = k

    @classmethod
    def spectral(cls, epsilon):
        return cls("spectral", epsilon=epsilon)

    @classmethod
    def energy(cls, epsilon):
        return cls("energy", epsilon=epsilon)

    @classmethod
    def fixed(cls, k):
        return cls("fixed", k=k)

    def __repr__(self):
        if self.kind == "fixed":
            return "RankPolicy.fixed(%d)" % self.k
        return "RankPolicy.%s(%g)" % (self.kind, self.epsilon)


def numerical_rank(sigma, policy):
    """Apply a rank policy to a descending singular value profile."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.size == 0 or sigma[0] <= 0.0:
        raise ConditioningError("numerical_rank: zero matrix has no positive rank", sigma_min=0.0)
    if policy.kind == "spectral":
        return int(np.count_nonzero(sigma > policy.epsilon * sigma[0]))
    if policy.kind == "energy":
        tail = np.cumsum((sigma**2)[::-1])[::-1]
        return int(np.count_nonzero(tail > policy.epsilon**2 * tail[0]))
    if policy.k > sigma.size or sigma[policy.k - 1] <= 0.0:
        raise ConditioningError(
            "numerical_rank: data cannot support fixed rank %d (only %d positive singular values)"
            % (policy.k, int(np.count_nonzero(sigma > 0.0))),
            sigma_min=float(sigma[min(policy.k, sigma.size) - 1]),
            sigma_max=float(sigma[0]),
        )
    return policy.k


class PodBasis:
    """Rank-k orthonormal basis with its singular data.

    For a weighted geometry the stored basis ``U_tilde`` is orthonormal in
    transformed coordinates and the ambient basis ``U`` is materialized
    lazily, by factor solves, only when actually requested.
    """

    def __init__(self, *, sigma, V, rank, sigma_all, U=None, U_tilde=None, weight=None,
                 right_weight=None, V_tilde=None):
        self.sigma = sigma
        self.V = V
        self.rank = int(rank)
        self.sigma_all = sigma_all
        self.weight = weight
        self.right_weight = right_weight
        self.U_tilde = U_tilde
        self.V_tilde = V_tilde
        self._U = U
        self._V_hat = None
        if U is None and (U_tilde is None or weight is None):
            raise ShapeError("PodBasis needs either an ambient basis or a transformed one with a weight")

    @property
    def U(self):
        """Ambient POD basis; triggers factor solves in the weighted case."""
        if self._U is None:
            self._U = self.weight.lift(self.U_tilde)
        return self._U

    @property
    def V_hat(self):
        """Right factor in the column geometry, for two-sided weighting."""
        if self.right_weight is None:
            return self.V
        if self._V_hat is None:
            self._V_hat = self.right_weight.lift_right(self.V_tilde if self.V_tilde is not None else self.V)
        return self._V_hat


def _thin_svd(G):
    """Single SVD path: values and vectors from one backend call."""
    try:
        U, s, Vh = scipy.linalg.svd(G, full_matrices=False, lapack_driver="gesvd")
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise BackendError("SVD backend failed to converge: %s" % exc) from exc
    return U, s, Vh


def _svd_for_pod(G):
    """Thin SVD, with a pivoted QR first when column norms are badly graded."""
    norms = np.linalg.norm(G, axis=0)
    positive = norms[norms > 0.0]
    if positive.size and positive.max() > _QR_PREPROCESS_SPREAD * positive.min():
        Q, R, piv = scipy.linalg.qr(G, mode="economic", pivoting=True)
        Ur, s, Vh_p = _thin_svd(R)
        U = Q @ Ur
        V = np.empty((G.shape[1], Vh_p.shape[0]), dtype=Vh_p.dtype)
        V[piv, :] = Vh_p.conj().T
        return U, s, V
    U, s, Vh = _thin_svd(G)
    return U, s, Vh.conj().T


def _pod_core(G, policy):
    G = np.asarray(G)
    if G.ndim != 2:
        raise ShapeError("POD input must be a 2-D array, got ndim=%d" % G.ndim)
    if not np.all(np.isfinite(G)):
        raise DataError("POD input contains non-finite entries")
    if policy is None:
        policy = RankPolicy.spectral(default_epsilon(*G.shape))
    U, s, V = _svd_for_pod(G)
    if s.size == 0 or s[0] <= 0.0:
        raise ConditioningError("truncated_svd: input matrix is numerically zero", sigma_min=0.0)
    k = numerical_rank(s, policy)
    return U[:, :k], s[:k].copy(), V[:, :k], k, s


def truncated_svd(X, policy=None):
    """POD basis of X under the given rank policy (default: spectral).

    Returns a :class:`PodBasis` whose retained singular values are all
    strictly positive and whose basis satisfies U*U = I to roundoff.
    """
    U, sk, Vk, k, s = _pod_core(X, policy)
    return PodBasis(U=U, sigma=sk, V=Vk, rank=k, sigma_all=s)


def weighted_pod(X, weight, policy=None):
    """POD of X in the geometry of ``weight``.

    The SVD runs on the transformed matrix (L* X, or L^{-1} X for the
    inverse orientation); the ambient basis, orthonormal in the weighted
    inner product, is available lazily through the returned object.
    """
    if not isinstance(weight, InnerProduct):
        raise DataError("weighted_pod needs an InnerProduct weight")
    G = weight.transform(np.asarray(X))
    U_tilde, sk, Vk, k, s = _pod_core(G, policy)
    return PodBasis(U_tilde=U_tilde, weight=weight, sigma=sk, V=Vk, rank=k, sigma_all=s)
