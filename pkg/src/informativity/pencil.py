"""Uniform rank conditions for matrix pencils ``L(lam) = N0 - lam * N1``.

The pencils that arise here are usually singular (non-square or with
identically vanishing determinant), so the finite points where the rank
drops below the normal rank are found by compressing the pencil to a
square regular one with random orthonormal factors, solving the
generalized eigenproblem, and keeping only candidates that a direct rank
evaluation on the original pencil confirms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import DEFAULT_TOL, InputError, Tolerances, numerical_rank

DEFAULT_SEED = 20210406
_MATCH = 1e-4


class NumericalInstabilityError(RuntimeError):
    pass


class Region(enum.Enum):
    ALL_COMPLEX = "all-complex"
    CLOSED_UNIT_EXTERIOR = "closed-unit-exterior"

    def contains(self, lam: complex, delta: float = 0.0) -> bool:
        if self is Region.ALL_COMPLEX:
            return True
        return abs(lam) >= 1.0 - delta

    def sample_point(self) -> float:
        """A real point comfortably inside the region."""
        return 0.0 if self is Region.ALL_COMPLEX else 2.0


@dataclass(frozen=True, eq=False)
class Pencil:
    N0: np.ndarray
    N1: np.ndarray

    def __post_init__(self):
        N0 = np.asarray(self.N0, dtype=float)
        N1 = np.asarray(self.N1, dtype=float)
        if N0.ndim != 2 or N0.shape != N1.shape:
            raise InputError(f"pencil blocks must be 2-D with equal shapes, got {N0.shape} and {N1.shape}")
        if not (np.all(np.isfinite(N0)) and np.all(np.isfinite(N1))):
            raise InputError("pencil entries must be finite")
        object.__setattr__(self, "N0", N0)
        object.__setattr__(self, "N1", N1)
        # cached spectral norms; rank decisions query them at every lambda
        object.__setattr__(self, "_norms", (np.linalg.norm(N0, 2) if N0.size else 0.0,
                                            np.linalg.norm(N1, 2) if N1.size else 0.0))

    @property
    def shape(self):
        return self.N0.shape

    def at(self, lam: complex) -> np.ndarray:
        if np.imag(lam) == 0:
            return self.N0 - float(np.real(lam)) * self.N1
        return self.N0 - lam * self.N1

    def scale_at(self, lam: complex) -> float:
        """Reference magnitude for rank decisions at ``lam``."""
        n0, n1 = self._norms
        return float(n0 + abs(lam) * n1)

    def rank_at(self, lam: complex, tol: Tolerances = DEFAULT_TOL) -> int:
        if 0 in self.shape:
            return 0
        return numerical_rank(self.at(lam), tol, scale=self.scale_at(lam))

    def transpose(self) -> "Pencil":
        return Pencil(self.N0.T, self.N1.T)


@dataclass
class RankVerdict:
    holds: bool
    marginal: bool
    normal_rank: int
    target_rank: int
    region: Region
    witnesses: list[tuple[complex, int]] = field(default_factory=list)
    marginal_witnesses: list[tuple[complex, int]] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.holds:
            return "holds"
        return "marginal" if self.marginal else "fails"


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def _random_points(rng, k: int) -> np.ndarray:
    return rng.standard_normal(k) + 1j * rng.standard_normal(k)


def normal_rank(p: Pencil, tol: Tolerances = DEFAULT_TOL, seed=None, rounds: int = 3, k: int = 3) -> int:
    """Rank of ``N0 - lam N1`` at generic ``lam``.

    Evaluated at ``k`` random complex points; all must agree, with up to
    ``rounds`` fresh draws before giving up.
    """
    if 0 in p.shape:
        return 0
    if not np.any(p.N1):
        return numerical_rank(p.N0, tol, scale=p.scale_at(0.0))
    rng = _rng(seed)
    seen = []
    for _ in range(rounds):
        ranks = {p.rank_at(lam, tol) for lam in _random_points(rng, k)}
        if len(ranks) == 1:
            return ranks.pop()
        seen.append(sorted(ranks))
    raise NumericalInstabilityError(
        f"normal rank undetermined: sample ranks {seen} disagree; try a larger rank_rtol"
    )


def _random_orthonormal(rng, n: int, k: int) -> np.ndarray:
    z = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    q, _ = np.linalg.qr(z)
    return q[:, :k]


def _compressed_eigenvalues(p: Pencil, rho: int, rng) -> np.ndarray:
    U = _random_orthonormal(rng, p.shape[0], rho)
    V = _random_orthonormal(rng, p.shape[1], rho)
    a = U.conj().T @ p.N0 @ V
    b = U.conj().T @ p.N1 @ V
    alpha, beta = scipy.linalg.eigvals(a, b, homogeneous_eigvals=True)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), np.finfo(float).tiny)
    eps = np.finfo(float).eps
    out = []
    for al, be in zip(alpha, beta):
        if abs(al) <= 100 * eps * scale and abs(be) <= 100 * eps * scale:
            continue  # indeterminate 0/0: compression hit a singular direction
        if abs(be) <= 1e-13 * abs(al):
            continue  # infinite eigenvalue
        out.append(al / be)
    return np.asarray(out, dtype=complex)


def _cluster(points, radius: float) -> list[complex]:
    groups: list[list[complex]] = []
    for z in sorted(points, key=lambda c: (c.real, c.imag)):
        for g in groups:
            if abs(np.mean(g) - z) <= radius * max(1.0, abs(z)):
                g.append(z)
                break
        else:
            groups.append([z])
    return [complex(np.mean(g)) for g in groups]


def _clean(lam: complex, scale: float = 1.0) -> complex:
    re, im = lam.real, lam.imag
    mag = max(abs(lam), 1.0)
    if abs(im) <= 1e-9 * mag:
        im = 0.0
    if abs(re) <= 1e-12 * mag * scale:
        re = 0.0
    return complex(re, im)


def rank_drop_points(p: Pencil, tol: Tolerances = DEFAULT_TOL, seed=None,
                     rho: int | None = None) -> list[tuple[complex, int]]:
    """Finite ``lam`` where ``rank(N0 - lam N1)`` falls below the normal rank.

    Returns ``(lam, rank_at_lam)`` pairs; every pair has been re-verified by a
    direct rank evaluation. Candidates must appear in two independent random
    compressions before they are verified.
    """
    rng = _rng(seed)
    if rho is None:
        rho = normal_rank(p, tol, rng)
    if rho == 0 or not np.any(p.N1):
        return []
    first = _compressed_eigenvalues(p, rho, rng)
    second = _compressed_eigenvalues(p, rho, rng)
    # a true drop point is an eigenvalue of every compression; eigenvalues
    # perturbed off infinity land at compression-dependent places
    cands = []
    for z in first:
        near = [w for w in second if abs(w - z) <= _MATCH * max(1.0, abs(z))]
        if near:
            cands.append(z)
            cands.extend(near)
    # the blocks are real, so drop points come in conjugate pairs
    cands += [np.conj(c) for c in cands if np.imag(c) != 0]
    out = []
    for lam in _cluster(cands, _MATCH):
        lam = _clean(lam)
        rk = p.rank_at(lam, tol)
        if rk < rho:
            out.append((lam, rk))
    return out


def uniform_rank_test(p: Pencil, target: int, region: Region, tol: Tolerances = DEFAULT_TOL,
                      seed=None) -> RankVerdict:
    """Decide ``rank(N0 - lam N1) >= target`` for every ``lam`` in ``region``.

    Under the closed unit exterior, drop points within ``boundary_delta`` of the
    unit circle cannot be placed reliably on either side; they make the
    verdict marginal instead of false.
    """
    rng = _rng(seed)
    if target <= 0:
        return RankVerdict(True, False, normal_rank(p, tol, rng) if 0 not in p.shape else 0, target, region)
    rho = normal_rank(p, tol, rng)
    drops = rank_drop_points(p, tol, rng, rho=rho) if rho >= target else []
    return classify_drops(p, rho, drops, target, region, tol)


def classify_drops(p: Pencil, rho: int, drops, target: int, region: Region,
                   tol: Tolerances = DEFAULT_TOL) -> RankVerdict:
    """Verdict from a precomputed normal rank and drop-point list.

    Lets several targets and regions share one eigenvalue computation.
    """
    if target <= 0:
        return RankVerdict(True, False, rho, target, region)
    if rho < target:
        lam = region.sample_point()
        return RankVerdict(False, False, rho, target, region, witnesses=[(complex(lam), p.rank_at(lam, tol))])
    witnesses, marginal = [], []
    delta = tol.boundary_delta
    for lam, rk in drops:
        if rk >= target:
            continue
        if region is Region.ALL_COMPLEX or abs(lam) > 1.0 + delta:
            witnesses.append((lam, rk))
        elif abs(abs(lam) - 1.0) <= delta:
            marginal.append((lam, rk))
    witnesses.sort(key=lambda w: (abs(w[0]), w[0].real, w[0].imag))
    if witnesses:
        return RankVerdict(False, False, rho, target, region, witnesses, marginal)
    if marginal:
        return RankVerdict(False, True, rho, target, region, witnesses, marginal)
    return RankVerdict(True, False, rho, target, region)
