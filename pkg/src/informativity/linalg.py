"""Tolerance-aware rank decisions and subspace arithmetic.

Every subspace is carried as an orthonormal basis (columns). Set operations
reduce to SVD-based rank decisions on stacked bases, so the results do not
depend on which basis a caller happened to supply.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InputError(ValueError):
    """Raised for malformed matrices (non-finite entries, bad shapes)."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by all modules.

    ``rank_rtol`` is the relative singular-value cut-off. When left as
    ``None`` the cut-off for an ``r x c`` matrix is ``1e-10 * max(r, c)``.
    """

    rank_rtol: float | None = None
    boundary_delta: float = 1e-8
    containment_atol: float = 1e-8

    def __post_init__(self):
        if self.rank_rtol is not None and not (0.0 < self.rank_rtol < 1.0):
            raise InputError(f"rank_rtol must lie in (0, 1), got {self.rank_rtol}")
        if not self.boundary_delta > 0.0:
            raise InputError(f"boundary_delta must be positive, got {self.boundary_delta}")
        if not self.containment_atol > 0.0:
            raise InputError(f"containment_atol must be positive, got {self.containment_atol}")

    def rtol_for(self, shape) -> float:
        if self.rank_rtol is not None:
            return self.rank_rtol
        return 1e-10 * max(max(shape, default=1), 1)


DEFAULT_TOL = Tolerances()


def as_matrix(a, rows: int | None = None, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float array, optionally checking its shape."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(rows if rows is not None else 0, cols if cols is not None else 0)
    if arr.ndim != 2:
        raise InputError(f"{name}: expected a 2-D matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: entries must be finite")
    if rows is not None and arr.shape[0] != rows:
        raise InputError(f"{name}: expected {rows} rows, got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise InputError(f"{name}: expected {cols} columns, got {arr.shape[1]}")
    return arr


def _check_finite(a: np.ndarray):
    if not np.all(np.isfinite(a)):
        raise InputError("matrix entries must be finite")


def _svd(a: np.ndarray, tol: Tolerances, scale: float | None):
    """Full SVD plus the numerical rank under ``tol``.

    ``scale`` replaces the largest singular value as the reference magnitude;
    callers pass it when ``a`` is a product whose own norm may be pure
    round-off (e.g. an annihilator applied to a vector it annihilates).
    """
    _check_finite(a)
    r, c = a.shape
    if r == 0 or c == 0:
        return np.eye(r, dtype=a.dtype), np.zeros(0), np.eye(c, dtype=a.dtype), 0
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    ref = s[0] if scale is None else scale
    if ref <= 0.0:
        return u, s, vh, 0
    rank = int(np.sum(s > tol.rtol_for(a.shape) * ref))
    return u, s, vh, rank


def numerical_rank(a, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> int:
    a = np.asarray(a)
    if a.ndim != 2:
        raise InputError("numerical_rank expects a 2-D matrix")
    return _svd(a, tol, scale)[3]


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of ``R^ambient`` (or ``C^ambient``) given by an orthonormal basis."""

    basis: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        b = np.asarray(self.basis)
        if b.ndim != 2:
            raise InputError("Subspace basis must be 2-D")
        object.__setattr__(self, "basis", b)

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def full(cls, n: int, tol: Tolerances = DEFAULT_TOL) -> "Subspace":
        return cls(np.eye(n), tol)

    @classmethod
    def zero(cls, n: int, tol: Tolerances = DEFAULT_TOL) -> "Subspace":
        return cls(np.zeros((n, 0)), tol)

    def is_zero(self) -> bool:
        return self.dim == 0

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"


def image_basis(a, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> Subspace:
    a = np.asarray(a)
    u, _, _, rank = _svd(a, tol, scale)
    return Subspace(u[:, :rank].copy(), tol)


def kernel_basis(a, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> Subspace:
    a = np.asarray(a)
    _, _, vh, rank = _svd(a, tol, scale)
    return Subspace(vh[rank:].conj().T.copy(), tol)


def annihilator_of_image(v, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    """Orthonormal rows ``K`` with ``ker K = im v``."""
    v = np.asarray(v)
    u, _, _, rank = _svd(v, tol, scale)
    return u[:, rank:].conj().T.copy()


def complement(s: Subspace) -> Subspace:
    """Orthogonal complement of ``s`` in its ambient space."""
    return Subspace(annihilator_of_image(s.basis, s.tol, scale=1.0).conj().T, s.tol)


def inverse_image(a, s: Subspace, tol: Tolerances | None = None) -> Subspace:
    """``{x | a x in s}``."""
    tol = tol or s.tol
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != s.ambient:
        raise InputError(
            f"inverse_image: matrix with {a.shape[0] if a.ndim == 2 else '?'} rows "
            f"cannot map into a subspace of R^{s.ambient}"
        )
    k = annihilator_of_image(s.basis, tol, scale=1.0)
    scale = float(np.linalg.norm(a, 2)) if a.size else 0.0
    return kernel_basis(k @ a, tol, scale=scale)


def image_of(a, s: Subspace, tol: Tolerances | None = None) -> Subspace:
    """``a s``, the image of a subspace under a linear map."""
    tol = tol or s.tol
    a = np.asarray(a)
    if a.shape[1] != s.ambient:
        raise InputError("image_of: dimension mismatch")
    scale = float(np.linalg.norm(a, 2)) if a.size else 0.0
    return image_basis(a @ s.basis, tol, scale=scale)


def _same_ambient(s1: Subspace, s2: Subspace):
    if s1.ambient != s2.ambient:
        raise InputError(f"ambient dimensions differ: {s1.ambient} vs {s2.ambient}")


def subspace_sum(s1: Subspace, s2: Subspace) -> Subspace:
    _same_ambient(s1, s2)
    return image_basis(np.hstack([s1.basis, s2.basis]), s1.tol, scale=1.0)


def subspace_intersect(s1: Subspace, s2: Subspace) -> Subspace:
    _same_ambient(s1, s2)
    k = np.vstack([annihilator_of_image(s1.basis, s1.tol, scale=1.0),
                   annihilator_of_image(s2.basis, s1.tol, scale=1.0)])
    return kernel_basis(k, s1.tol, scale=1.0)


def subspace_contains(outer: Subspace, inner: Subspace) -> bool:
    _same_ambient(outer, inner)
    if inner.dim == 0:
        return True
    if outer.dim == outer.ambient:
        return True
    return numerical_rank(np.hstack([outer.basis, inner.basis]), outer.tol, scale=1.0) == outer.dim


def subspace_equal(s1: Subspace, s2: Subspace) -> bool:
    return s1.dim == s2.dim and subspace_contains(s1, s2) and subspace_contains(s2, s1)


def containment_residual(outer: Subspace, inner: Subspace) -> float:
    """Largest distance from a unit vector of ``inner`` to ``outer``."""
    _same_ambient(outer, inner)
    if inner.dim == 0:
        return 0.0
    resid = inner.basis - outer.basis @ (outer.basis.conj().T @ inner.basis)
    return float(np.linalg.norm(resid, 2))


def lstsq_solve(a, b) -> np.ndarray:
    """Minimum-norm least-squares solution of ``a x = b`` that tolerates empty shapes."""
    a = np.asarray(a)
    b = np.asarray(b)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if a.shape[0] == 0 or a.shape[1] == 0:
        x = np.zeros((a.shape[1], b.shape[1]), dtype=np.result_type(a, b))
    else:
        x = np.linalg.lstsq(a, b, rcond=None)[0]
    return x[:, 0] if squeeze else x
