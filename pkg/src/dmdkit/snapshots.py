"""Snapshot containers, column scaling and the Krylov companion form.

A sequential trajectory holds m+1 states of one orbit f_{i+1} = A f_i in
its columns.  A snapshot pair (X, Y) holds m matched input/output columns
Y(:, i) = A X(:, i); pairs arise from a trajectory by dropping the last or
first column, from interleaved samples, or directly from experiments.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConditioningError, DataError, ShapeError

__all__ = [
    "SequentialTrajectory",
    "SnapshotPair",
    "ColumnScaling",
    "KrylovCompanion",
    "from_sequential",
    "odd_even_split",
    "scale_columns",
    "companion_decomposition",
]

_EPS = float(np.finfo(np.float64).eps)


def _check_matrix(a, name):
    a = np.asarray(a)
    if a.ndim != 2:
        raise ShapeError("%s must be a 2-D array, got ndim=%d" % (name, a.ndim))
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError("%s must be non-empty, got shape %r" % (name, a.shape))
    if not np.all(np.isfinite(a)):
        raise DataError("%s contains non-finite entries" % (name,))
    return a


@dataclass(frozen=True)
class SequentialTrajectory:
    """States of a single orbit, one per column, at least two columns."""

    F: np.ndarray

    def __post_init__(self):
        F = _check_matrix(self.F, "trajectory")
        if F.shape[1] < 2:
            raise ShapeError("trajectory needs at least 2 columns, got %d" % F.shape[1])
        object.__setattr__(self, "F", F)

    @property
    def n(self):
        return self.F.shape[0]

    @property
    def m(self):
        """Number of snapshot pairs the trajectory induces."""
        return self.F.shape[1] - 1


@dataclass(frozen=True)
class ColumnScaling:
    """Column 2-norms of X recorded by :func:`scale_columns`.

    A zero entry marks a column that was left in place (pseudoinverse
    semantics: no finite factor restores a zero column).
    """

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        if d.ndim != 1:
            raise ShapeError("scaling factors must be a vector")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise DataError("scaling factors must be finite and nonnegative")
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class SnapshotPair:
    """Matched input/output snapshot columns driven by one operator."""

    X: np.ndarray
    Y: np.ndarray
    provenance: str = "general"
    scaling: ColumnScaling | None = None

    def __post_init__(self):
        X = _check_matrix(self.X, "X")
        Y = _check_matrix(self.Y, "Y")
        if X.shape != Y.shape:
            raise ShapeError("X and Y must have equal shapes, got %r and %r" % (X.shape, Y.shape))
        if self.provenance not in ("sequential", "general"):
            raise DataError("provenance must be 'sequential' or 'general'")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class KrylovCompanion:
    """Least-squares companion form of a trajectory.

    ``C`` is m-by-m with unit subdiagonal and last column ``c``; ``r`` is
    the least-squares residual of fitting the final state in the span of
    the earlier ones, orthogonal to that span.
    """

    c: np.ndarray
    C: np.ndarray
    r: np.ndarray
    r_norm: float


def _as_trajectory(F):
    return F if isinstance(F, SequentialTrajectory) else SequentialTrajectory(np.asarray(F))


def from_sequential(F):
    """Split a trajectory into the pair X = F(:, 1:m), Y = F(:, 2:m+1)."""
    traj = _as_trajectory(F)
    return SnapshotPair(traj.F[:, :-1], traj.F[:, 1:], provenance="sequential")


def odd_even_split(F):
    """Pair interleaved samples: X takes odd-indexed, Y even-indexed columns.

    Requires an even column count; Y(:, i) is the successor of X(:, i) but
    consecutive pairs need not be adjacent states of one orbit, so the
    result is a general pair.
    """
    F = _check_matrix(F.F if isinstance(F, SequentialTrajectory) else F, "interleaved samples")
    if F.shape[1] % 2 != 0:
        raise ShapeError("odd_even_split needs an even column count, got %d" % F.shape[1])
    if F.shape[1] < 2:
        raise ShapeError("odd_even_split needs at least one pair of columns")
    return SnapshotPair(F[:, 0::2], F[:, 1::2], provenance="general")


def _scale_arrays(X, Y):
    """Divide matched columns of X and Y by the column norms of X.

    Zero columns get factor 0 and are left untouched.  Returns the scaled
    copies and the recorded norms.
    """
    d = np.linalg.norm(X, axis=0)
    inv = np.ones_like(d)
    nz = d > 0.0
    inv[nz] = 1.0 / d[nz]
    return X * inv, Y * inv, ColumnScaling(np.where(nz, d, 0.0))


def scale_columns(pair):
    """Rescale a pair to unit X-columns; near optimal spectral conditioning.

    The scaled X has condition number within sqrt(m) of the best achievable
    by any positive diagonal column scaling.
    """
    Xs, Ys, scaling = _scale_arrays(pair.X, pair.Y)
    return SnapshotPair(Xs, Ys, provenance=pair.provenance, scaling=scaling), scaling


def companion_decomposition(F):
    """Fit the last state of a trajectory in the span of the earlier ones.

    Solves min ||f_{m+1} - X v||_2 by a column-pivoted orthogonal
    factorization (never the normal equations) and assembles the companion
    matrix C with unit subdiagonal and the coefficients as last column.
    X must have numerically full column rank; otherwise a
    :class:`ConditioningError` reports the singular-value ratio.
    """
    traj = _as_trajectory(F)
    n, m = traj.n, traj.m
    X = traj.F[:, :m]
    f_next = traj.F[:, m]
    sigma = scipy.linalg.svdvals(X)
    tol = max(n, m) * _EPS * sigma[0] if sigma[0] > 0 else 0.0
    if sigma[0] == 0.0 or sigma[-1] <= tol:
        raise ConditioningError(
            "companion_decomposition: X is numerically rank deficient "
            "(sigma_min/sigma_1 = %.3e, tolerance %.3e)"
            % (sigma[-1] / sigma[0] if sigma[0] > 0 else 0.0, max(n, m) * _EPS),
            sigma_min=float(sigma[-1]),
            sigma_max=float(sigma[0]),
        )
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    z = scipy.linalg.solve_triangular(R, Q.conj().T @ f_next)
    c = np.empty_like(z)
    c[piv] = z
    r = f_next - X @ c
    C = np.zeros((m, m), dtype=c.dtype)
    if m > 1:
        C[np.arange(1, m), np.arange(m - 1)] = 1.0
    C[:, -1] = c
    return KrylovCompanion(c=c, C=C, r=r, r_norm=float(np.linalg.norm(r)))
