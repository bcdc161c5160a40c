"""End-to-end modal decomposition pipelines.

Each variant composes the same stages: optional column scaling, truncated
POD of X, the basis image B_k = Y V_k Sigma_k^{-1}, a Rayleigh quotient,
an eigensolve, and residual-ordered packaging.  They differ in how the
quotient is formed, whether vectors are refined, and where the vectors
live (POD subspace vs range of Y).
"""

import concurrent.futures
import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import BackendError, ConditioningError, DataError, ShapeError
from .pod import RankPolicy, default_epsilon, truncated_svd, _pod_core
from .ritz import (
    RefinedPair,
    RitzDecomposition,
    action_on_basis,
    data_driven_residuals,
    order_pairs,
    qr_stack,
    rayleigh_from_qr,
    refine_ritz,
    refined_rayleigh_value,
    residuals_from_stack,
    ritz_pairs,
)
from .snapshots import SequentialTrajectory, SnapshotPair, _scale_arrays, companion_decomposition

__all__ = [
    "VariantConfig",
    "FbSpectrum",
    "SequentialDiagnostic",
    "dmd",
    "ddmd_rrr",
    "ddmd_rrr_compressed",
    "ddmd_rrr_auto",
    "exact_dmd",
    "exact_dmd_sequential_diagnostic",
    "fb_dmd_mrf",
    "select_pairs",
]

_EPS = float(np.finfo(np.float64).eps)

# Ambient dimension over snapshot count beyond which the QR-compressed
# route is cheaper than working on the full-height data.
_COMPRESS_CROSSOVER = 4


@dataclass(frozen=True)
class VariantConfig:
    """Shared knobs of all pipelines.

    ``policy=None`` resolves to the spectral threshold max(n, m+1) * eps
    of the matrix actually decomposed.  ``refine`` is ``'none'``,
    ``'all'``, a residual cap, or a predicate ``f(lambda, residual) ->
    bool`` selecting which pairs get the refinement treatment.  ``dt`` is
    only consumed by report writers that request the Koopman log map.
    ``workers`` parallelizes the per-eigenvalue refinement loop; results
    are merged by index and do not depend on the worker count.
    """

    policy: RankPolicy | None = None
    scale: bool = True
    refine: str | float | Callable = "all"
    dt: float | None = None
    compress: bool | None = None
    workers: int | None = None

    def __post_init__(self):
        if isinstance(self.refine, str) and self.refine not in ("none", "all"):
            raise DataError("refine must be 'none', 'all', a residual cap, or a predicate")
        if self.dt is not None and not (self.dt > 0):
            raise DataError("dt must be positive when given")


@dataclass(frozen=True)
class FbSpectrum:
    """Square roots taken in the forward-backward variant.

    ``omegas`` are the eigenvalues of the product quotient, ``lambdas``
    the signed square roots actually reported, and ``sign_evidence`` the
    Rayleigh values w* S_k w that arbitrated each sign.
    """

    omegas: np.ndarray
    lambdas: np.ndarray
    sign_evidence: np.ndarray


@dataclass(frozen=True)
class SequentialDiagnostic:
    """Computable factors of the exact-vector residual identity.

    The true residual of an exact-DMD eigenpair from sequential data
    equals |eta_m| times the norm of the image of the companion residual;
    only eta_m (last expansion coefficient of the vector in the columns of
    Y) and the companion residual norm are observable without the
    operator.
    """

    eta_m: complex | None
    r_norm: float


def _check_pair_arrays(X, Y):
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.ndim != 2 or Y.ndim != 2:
        raise ShapeError("snapshot matrices must be 2-D")
    if X.shape != Y.shape:
        raise ShapeError("X and Y must have equal shapes, got %r and %r" % (X.shape, Y.shape))
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise DataError("snapshot matrices contain non-finite entries")
    return X, Y


def _resolve_policy(config, shape):
    if config.policy is not None:
        return config.policy
    n, m = shape
    return RankPolicy.spectral(default_epsilon(n, m))


def _maybe_scale(X, Y, config):
    if config.scale:
        return _scale_arrays(X, Y)
    return X, Y, None


def _refine_indices(config, lambdas, residuals):
    mode = config.refine
    k = len(lambdas)
    if mode == "none":
        return []
    if mode == "all":
        return list(range(k))
    if callable(mode):
        return [i for i in range(k) if mode(lambdas[i], residuals[i])]
    cap = float(mode)
    return [i for i in range(k) if residuals[i] <= cap]


def _refine_many(stack, S, lambdas, indices, workers):
    """Refine the selected eigenvalues; deterministic merge by index."""

    def one(i):
        w, sigma = refine_ritz(stack, lambdas[i])
        rho = refined_rayleigh_value(S, w)
        return i, RefinedPair(w=w, sigma_min=sigma, rho=rho)

    if workers is not None and workers > 1 and len(indices) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, indices))
    else:
        results = [one(i) for i in indices]
    return dict(results)


def _package(lambdas, Z, residuals, refined, variant, rank, weight=None):
    lambdas = np.asarray(lambdas, dtype=complex)
    Z = np.asarray(Z, dtype=complex)
    residuals = np.asarray(residuals, dtype=np.float64)
    perm = order_pairs(residuals, lambdas)
    refined = refined if refined is not None else [None] * len(lambdas)
    return RitzDecomposition(
        lambdas=lambdas[perm],
        vectors=Z[:, perm],
        residuals=residuals[perm],
        refined=tuple(refined[i] for i in perm),
        ordering=perm,
        variant=variant,
        rank=int(rank),
        weight=weight,
    )


def dmd(X, Y, config=VariantConfig()):
    """Classic projected DMD with data-driven residuals appended.

    The Rayleigh quotient is assembled in the historical order
    ((U_k* Y) V_k) Sigma_k^{-1}; vectors are the plain Ritz vectors.
    Refinement is the business of :func:`ddmd_rrr` and is not applied
    here regardless of the config.
    """
    X, Y = _check_pair_arrays(X, Y)
    Xs, Ys, _ = _maybe_scale(X, Y, config)
    basis = truncated_svd(Xs, _resolve_policy(config, Xs.shape))
    S = ((basis.U.conj().T @ Ys) @ basis.V) / basis.sigma[None, :]
    lambdas, W, Z = ritz_pairs(S, basis.U)
    B = action_on_basis(Ys, basis.V, basis.sigma)
    residuals = data_driven_residuals(B, basis.U, W, lambdas)
    return _package(lambdas, Z, residuals, None, "dmd", basis.rank)


def _rrr_pipeline(Gx, Gy, config, variant, weight=None):
    """Shared refined Rayleigh-Ritz engine in transformed coordinates.

    ``Gx``/``Gy`` are already in the Euclidean coordinates of the target
    geometry; ``weight`` only tags the output and lifts the vectors back.
    """
    Gxs, Gys, _ = _maybe_scale(Gx, Gy, config)
    U, sigma, V, k, _sigma_all = _pod_core(Gxs, _resolve_policy(config, Gxs.shape))
    B = action_on_basis(Gys, V, sigma)
    stack = qr_stack(U, B)
    S = rayleigh_from_qr(stack)

    if config.refine == "all":
        try:
            lambdas = np.linalg.eigvals(S)
        except np.linalg.LinAlgError as exc:
            raise BackendError("eigensolver failed on the Rayleigh quotient: %s" % exc) from exc
        refined_map = _refine_many(stack, S, lambdas, range(k), config.workers)
        W = np.column_stack([refined_map[i].w for i in range(k)])
        residuals = np.array([refined_map[i].sigma_min for i in range(k)])
        refined = [refined_map[i] for i in range(k)]
    else:
        lambdas, W, _ = ritz_pairs(S, np.eye(k))
        residuals = residuals_from_stack(stack, lambdas, W)
        refined = [None] * k
        indices = _refine_indices(config, lambdas, residuals)
        if indices:
            refined_map = _refine_many(stack, S, lambdas, indices, config.workers)
            W = W.astype(complex)
            residuals = residuals.copy()
            for i, rec in refined_map.items():
                W[:, i] = rec.w
                residuals[i] = rec.sigma_min
                refined[i] = rec

    Z_tilde = U @ W
    Z = weight.lift(Z_tilde) if weight is not None else Z_tilde
    return _package(lambdas, Z, residuals, refined, variant, k, weight=weight)


def ddmd_rrr(X, Y, config=VariantConfig()):
    """Refined Rayleigh-Ritz decomposition with certified residuals.

    Column scaling (on by default), POD of the scaled data, Rayleigh
    quotient read off the QR stack, then a per-eigenvalue refinement loop
    that replaces each Ritz vector by the residual-optimal unit vector of
    the subspace.  Reported residuals are the refinement certificates.
    """
    X, Y = _check_pair_arrays(X, Y)
    return _rrr_pipeline(X, Y, config, "rrr")


def _compress(data):
    """Thin QR compression of the input data onto its column span.

    Returns (Q, R_x, R_y).  For a trajectory the two R-blocks share
    columns of one QR; for a general pair the stacked two-block matrix is
    factored instead.
    """
    if isinstance(data, SnapshotPair):
        X, Y = data.X, data.Y
        m = X.shape[1]
        Q, R = scipy.linalg.qr(np.hstack([X, Y]), mode="economic")
        return Q, R[:, :m], R[:, m:]
    traj = data if isinstance(data, SequentialTrajectory) else SequentialTrajectory(np.asarray(data))
    Q, R = scipy.linalg.qr(traj.F, mode="economic")
    return Q, R[:, :-1], R[:, 1:]


def ddmd_rrr_compressed(data, config=VariantConfig()):
    """Refined decomposition after QR compression of the raw data.

    Works on the triangular factor of a thin QR (of the trajectory, or of
    the stacked pair for general data), then lifts the vectors back with
    the orthonormal factor.  Residuals and Ritz values are unchanged by
    the unitary change of basis.
    """
    if not isinstance(data, (SnapshotPair, SequentialTrajectory)):
        data = SequentialTrajectory(np.asarray(data))
    if config.policy is None:
        # Default threshold from the ambient shape, not the compressed one,
        # so compressed and direct runs truncate identically.
        policy = RankPolicy.spectral(default_epsilon(data.n, data.m))
        config = dataclasses.replace(config, policy=policy)
    Q, Rx, Ry = _compress(data)
    inner = _rrr_pipeline(Rx, Ry, config, "rrr-compressed")
    return RitzDecomposition(
        lambdas=inner.lambdas,
        vectors=Q @ inner.vectors,
        residuals=inner.residuals,
        refined=inner.refined,
        ordering=inner.ordering,
        variant="rrr-compressed",
        rank=inner.rank,
        weight=None,
    )


def ddmd_rrr_auto(data, config=VariantConfig()):
    """Refined decomposition, compressed automatically when it pays.

    Sequential or paired data routes through the QR-compressed pipeline
    when the ambient dimension exceeds four times the column count, unless
    the config forces the choice.
    """
    if isinstance(data, SnapshotPair):
        n, cols = data.n, 2 * data.m
    else:
        data = data if isinstance(data, SequentialTrajectory) else SequentialTrajectory(np.asarray(data))
        n, cols = data.n, data.m + 1
    use_compressed = config.compress if config.compress is not None else n > _COMPRESS_CROSSOVER * cols
    if use_compressed:
        return ddmd_rrr_compressed(data, config)
    if isinstance(data, SnapshotPair):
        return ddmd_rrr(data.X, data.Y, config)
    return ddmd_rrr(data.F[:, :-1], data.F[:, 1:], config)


def exact_dmd(X, Y, config=VariantConfig()):
    """DMD with vectors rebuilt inside range(Y).

    Shares Ritz values with :func:`dmd`; each vector is the normalized
    image B_k w / lambda.  Ritz values too close to zero (below a spectral
    guard of 1e3 ulp) have no exact vector and are flagged absent.  The
    decomposition carries NaN residuals: residuals of exact vectors are
    not computable from data alone, only via the sequential diagnostic or
    an explicit-operator audit.
    """
    X, Y = _check_pair_arrays(X, Y)
    Xs, Ys, _ = _maybe_scale(X, Y, config)
    basis = truncated_svd(Xs, _resolve_policy(config, Xs.shape))
    S = ((basis.U.conj().T @ Ys) @ basis.V) / basis.sigma[None, :]
    lambdas, W, _ = ritz_pairs(S, basis.U)
    B = action_on_basis(Ys, basis.V, basis.sigma)
    guard = 1e3 * _EPS * float(np.linalg.norm(S, 2))
    alive = np.abs(lambdas) > guard
    if not np.any(alive):
        raise ConditioningError(
            "exact_dmd: all Ritz values are numerically zero; no exact vectors exist",
            sigma_min=float(np.abs(lambdas).max(initial=0.0)),
        )
    Z = np.full((X.shape[0], len(lambdas)), np.nan, dtype=complex)
    BW = B @ W
    for i in np.flatnonzero(alive):
        z = BW[:, i] / lambdas[i]
        nrm = np.linalg.norm(z)
        if nrm > 0:
            Z[:, i] = z / nrm
    residuals = np.full(len(lambdas), np.nan)
    return _package(lambdas, Z, residuals, None, "exact", basis.rank)


def exact_dmd_sequential_diagnostic(F, decomposition):
    """Computable residual factors for exact vectors of sequential data.

    For each returned pair: the last coefficient eta_m of the vector
    expanded in the columns of Y, and the companion residual norm.  The
    unobservable true residual is |eta_m| times the norm of the operator
    image of the companion residual.  Pairs with absent vectors yield a
    record with ``eta_m=None``.
    """
    if isinstance(F, SnapshotPair):
        raise DataError("sequential trajectory required; general pairs carry no companion residual")
    traj = F if isinstance(F, SequentialTrajectory) else SequentialTrajectory(np.asarray(F))
    comp = companion_decomposition(traj)
    Y = traj.F[:, 1:]
    if decomposition.vectors.shape[0] != traj.n:
        raise ShapeError(
            "decomposition vectors have %d rows but the trajectory has %d"
            % (decomposition.vectors.shape[0], traj.n)
        )
    out = []
    present = decomposition.vector_present
    for i in range(decomposition.k):
        if not present[i]:
            out.append(SequentialDiagnostic(eta_m=None, r_norm=comp.r_norm))
            continue
        eta, *_ = scipy.linalg.lstsq(Y, decomposition.vectors[:, i])
        out.append(SequentialDiagnostic(eta_m=complex(eta[-1]), r_norm=comp.r_norm))
    return tuple(out)


def fb_dmd_mrf(X, Y, config=VariantConfig()):
    """Forward-backward DMD without any matrix square root.

    Forms the forward Rayleigh quotient S_k, the backward quotient of the
    swapped pair at the same fixed rank, and the product
    M_k = S_k S_back^{-1} by a linear solve.  Eigenvalues of M_k are the
    squares of the reported Ritz values; each square root's sign is chosen
    to minimize the distance to the Rayleigh value w* S_k w, which keeps
    conjugate pairs closed for real data.  Residuals use the forward data
    with the chosen eigenvalues.
    """
    X, Y = _check_pair_arrays(X, Y)
    policy = _resolve_policy(config, X.shape)

    Xf, Yf, _ = _maybe_scale(X, Y, config)
    Uf, sf, Vf, k, _ = _pod_core(Xf, policy)
    Bf = action_on_basis(Yf, Vf, sf)
    stack_f = qr_stack(Uf, Bf)
    S_fwd = rayleigh_from_qr(stack_f)

    Xb, Yb, _ = _maybe_scale(Y, X, config)
    try:
        Ub, sb, Vb, _, sb_all = _pod_core(Xb, RankPolicy.fixed(k))
    except ConditioningError as exc:
        raise ConditioningError(
            "fb_dmd_mrf: backward POD cannot support the forward rank %d (%s)" % (k, exc),
            sigma_min=exc.sigma_min,
            sigma_max=exc.sigma_max,
        ) from exc
    if policy.kind in ("spectral", "energy") and sb_all[k - 1] <= policy.epsilon * sb_all[0]:
        raise ConditioningError(
            "fb_dmd_mrf: backward POD cannot support the forward rank %d "
            "(backward sigma_%d/sigma_1 = %.3e below threshold %.3e)"
            % (k, k, sb_all[k - 1] / sb_all[0], policy.epsilon),
            sigma_min=float(sb_all[k - 1]),
            sigma_max=float(sb_all[0]),
        )
    Bb = action_on_basis(Yb, Vb, sb)
    stack_b = qr_stack(Ub, Bb)
    S_back = rayleigh_from_qr(stack_b)

    sv = scipy.linalg.svdvals(S_back)
    if sv[0] <= 0.0 or sv[-1] <= k * _EPS * sv[0]:
        raise ConditioningError(
            "fb_dmd_mrf: S_back is singular to working precision (sigma_min(S_back) = %.3e)"
            % (float(sv[-1]),),
            sigma_min=float(sv[-1]),
            sigma_max=float(sv[0]),
        )
    M = np.linalg.solve(S_back.T, S_fwd.T).T

    omegas, W = np.linalg.eig(M)
    W = W / np.linalg.norm(W, axis=0)[None, :]
    omegas = omegas.astype(complex)
    evidence = np.einsum("ij,ij->j", W.conj(), S_fwd @ W)
    roots = np.sqrt(omegas)
    d_plus = np.abs(roots - evidence)
    d_minus = np.abs(-roots - evidence)
    lambdas = np.where(d_plus <= d_minus, roots, -roots)
    tied = np.flatnonzero(d_plus == d_minus)
    if tied.size:
        # A real eigenvector makes the evidence real, so for a negative real
        # omega both imaginary roots are equidistant from it and the rule
        # above cannot decide.  A conjugate pair of imaginary Ritz values
        # shares one such omega; alternating signs over the tied columns in
        # omega order keeps that pair closed for real data.
        order = tied[np.lexsort((omegas[tied].imag, omegas[tied].real))]
        lambdas[order[1::2]] = -roots[order[1::2]]

    residuals = residuals_from_stack(stack_f, lambdas, W)
    Z = Uf @ W
    perm = order_pairs(residuals, lambdas)
    dec = RitzDecomposition(
        lambdas=np.asarray(lambdas, dtype=complex)[perm],
        vectors=np.asarray(Z, dtype=complex)[:, perm],
        residuals=np.asarray(residuals, dtype=np.float64)[perm],
        refined=tuple([None] * k),
        ordering=perm,
        variant="fb",
        rank=k,
        weight=None,
    )
    fb = FbSpectrum(
        omegas=omegas[perm],
        lambdas=np.asarray(lambdas, dtype=complex)[perm],
        sign_evidence=np.asarray(evidence, dtype=complex)[perm],
    )
    return dec, fb


def select_pairs(decomposition, residual_cap):
    """Keep the pairs whose residual is at or below the cap.

    Ascending order is preserved.  NaN residuals (exact-vector variant)
    survive only an infinite cap, since they certify nothing.
    """
    cap = float(residual_cap)
    if cap < 0:
        raise DataError("residual cap must be nonnegative")
    r = decomposition.residuals
    mask = (r <= cap) | (np.isnan(r) & np.isinf(cap))
    keep = np.flatnonzero(mask)
    return RitzDecomposition(
        lambdas=decomposition.lambdas[keep],
        vectors=decomposition.vectors[:, keep],
        residuals=r[keep],
        refined=tuple(decomposition.refined[i] for i in keep),
        ordering=decomposition.ordering[keep],
        variant=decomposition.variant,
        rank=decomposition.rank,
        weight=decomposition.weight,
    )
