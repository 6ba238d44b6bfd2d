"""Subspace recursions: the largest subspaces J* and L* in data coordinates,
the weakly unobservable and unobservable subspaces of a known model, and the
geometric informativity tests built on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    Subspace,
    Tolerances,
    image_basis,
    image_of,
    inverse_image,
    kernel_basis,
    numerical_rank,
    subspace_contains,
    subspace_intersect,
)
from .problem import DataSet, Reduction, SystemStructure
from .properties import Property, Status, Verdict


@dataclass
class IterationTrace:
    iterates: list[Subspace] = field(default_factory=list)
    steps: int = 0
    converged: bool = False

    @property
    def dims(self) -> list[int]:
        return [s.dim for s in self.iterates]


def output_nulling_step(J: Subspace, P, Q, R, B, C, D, tol: Tolerances) -> Subspace:
    """``[R; CP]^{-1} (QP J x {0} + im [QB; D])``."""
    p = C.shape[0]
    top = Q @ P @ J.basis
    gens = np.hstack([
        np.vstack([top, np.zeros((p, J.dim))]),
        np.vstack([Q @ B, D]),
    ])
    scale = max(np.linalg.norm(Q @ P, 2) if (Q @ P).size else 0.0,
                np.linalg.norm(gens, 2) if gens.size else 0.0)
    target = image_basis(gens, tol, scale=scale if scale > 0 else None)
    return inverse_image(np.vstack([R, C @ P]), target, tol)


def largest_inclusion_subspace(P, Q, R, B, C, D, tol: Tolerances = DEFAULT_TOL):
    """Largest ``J`` with ``[R; CP] J in QP J x {0} + im [QB; D]``.

    Iterates from the full space; the dimension drops at every step until
    the fixed point, so at most ``P.shape[1]`` steps are needed.
    """
    P, Q, R = (np.asarray(x, float) for x in (P, Q, R))
    B, C, D = (np.asarray(x, float) for x in (B, C, D))
    r = P.shape[1]
    J = Subspace.full(r, tol)
    trace = IterationTrace([J])
    for _ in range(r + 1):
        nxt = output_nulling_step(J, P, Q, R, B, C, D, tol)
        if nxt.dim == J.dim and subspace_contains(nxt, J):
            trace.converged = True
            return J, trace
        if nxt.dim > J.dim:
            # the map is monotone, so this only happens through round-off
            nxt = subspace_intersect(nxt, J)
        J = nxt
        trace.iterates.append(J)
        trace.steps += 1
    return J, trace


def jstar(red: Reduction, sys: SystemStructure, tol: Tolerances | None = None):
    tol = tol or red.tol
    return largest_inclusion_subspace(red.P, red.Q, red.R, sys.B, sys.C, sys.D, tol)


def lstar(red: Reduction, sys: SystemStructure, tol: Tolerances | None = None):
    """Largest ``L`` with ``R L in QP L`` and ``CP L = 0``."""
    tol = tol or red.tol
    n, p = sys.n, sys.p
    return largest_inclusion_subspace(red.P, red.Q, red.R, np.zeros((n, 0)), sys.C, np.zeros((p, 0)), tol)


def weakly_unobservable(A, B, C, D, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Largest output-nulling controlled invariant subspace ``V(A, B, C, D)``."""
    return weakly_unobservable_trace(A, B, C, D, tol)[0]


def weakly_unobservable_trace(A, B, C, D, tol: Tolerances = DEFAULT_TOL):
    A = np.asarray(A, float)
    n = A.shape[0]
    eye = np.eye(n)
    return largest_inclusion_subspace(eye, eye, A, B, C, D, tol)


def unobservable_subspace(A, C, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    A, C = np.asarray(A, float), np.asarray(C, float)
    n = A.shape[0]
    return weakly_unobservable(A, np.zeros((n, 0)), C, np.zeros((C.shape[0], 0)), tol)


def is_output_nulling(V: Subspace, A, B, C, D, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Direct check of ``[A; C] V in V x {0} + im [B; D]``."""
    A, B, C, D = (np.asarray(x, float) for x in (A, B, C, D))
    if V.dim == 0:
        return True
    p = C.shape[0]
    gens = np.hstack([np.vstack([V.basis, np.zeros((p, V.dim))]), np.vstack([B, D])])
    target = image_basis(gens, tol, scale=max(1.0, np.linalg.norm(gens, 2) if gens.size else 0.0))
    if target.ambient == 0:
        return True
    img = np.vstack([A, C]) @ V.basis
    k = np.eye(target.ambient) - target.projector()
    return bool(np.linalg.norm(k @ img, 2) <= tol.containment_atol * max(1.0, np.linalg.norm(img, 2)))


def _dims(trace: IterationTrace) -> dict:
    return {"dims": trace.dims, "steps": trace.steps, "converged": trace.converged}


def geometric_test(sys: SystemStructure, data: DataSet, prop: Property,
                   tol: Tolerances = DEFAULT_TOL, reduction: Reduction | None = None) -> Verdict:
    """Subspace-based informativity test for strong observability, observability
    or left-invertibility.

    Left-invertibility is only decided when ``C^{-1} im D`` lies in ``im X_-``;
    otherwise the outcome is :attr:`Status.INCONCLUSIVE`, because that
    inclusion is sufficient for the characterization but not necessary for
    left-invertibility itself.
    """
    from .rank_tests import prepare, triple_precondition

    prop = Property(prop)
    if prop not in (Property.STRONG_OBSERVABILITY, Property.OBSERVABILITY, Property.LEFT_INVERTIBILITY):
        raise ValueError(f"no geometric test for {prop.value}")
    red = prepare(sys, data, tol, reduction)
    P = red.P
    pre_prop = Property.OBSERVABILITY if prop is Property.OBSERVABILITY else Property.STRONG_OBSERVABILITY
    ok, vec, reason = triple_precondition(P, red.Q, sys.B, sys.C, sys.D, pre_prop, tol)

    if prop is Property.OBSERVABILITY:
        S, trace = lstar(red, sys, tol)
        label = "L*"
    else:
        S, trace = jstar(red, sys, tol)
        label = "J*"
    PS = image_of(P, S, tol)
    details = {label: S.dim, f"X_- {label}": PS.dim, "trace": _dims(trace)}

    if prop is not Property.LEFT_INVERTIBILITY:
        if not ok:
            return Verdict(prop, Status.NOT_INFORMATIVE, False, "geometric",
                           witness={"kind": "subspace", "vector": vec.tolist()},
                           explanation=f"precondition fails: {reason}", details=details)
        if PS.dim == 0:
            return Verdict(prop, Status.INFORMATIVE, True, "geometric",
                           explanation=f"{label} is contained in ker X_-", details=details)
        return Verdict(prop, Status.NOT_INFORMATIVE, True, "geometric",
                       witness={"kind": "subspace", "vector": PS.basis[:, 0].tolist()},
                       explanation=f"{label} is not contained in ker X_- (dim X_- {label} = {PS.dim})",
                       details=details)

    BD = np.vstack([sys.B, sys.D])
    full_col = numerical_rank(BD, tol) == sys.m
    if not ok:
        return Verdict(prop, Status.INCONCLUSIVE, False, "geometric",
                       explanation=f"inconclusive: {reason}; the characterization needs this inclusion",
                       details=details)
    if not full_col:
        ker = kernel_basis(BD, tol)
        return Verdict(prop, Status.NOT_INFORMATIVE, True, "geometric",
                       witness={"kind": "input-direction", "vector": ker.basis[:, 0].tolist()},
                       explanation="[B; D] does not have full column rank", details=details)
    b_ker_d = image_of(sys.B, kernel_basis(sys.D, tol), tol)
    meet = subspace_intersect(PS, b_ker_d)
    details["X_- J* meet B ker D"] = meet.dim
    if meet.dim == 0:
        return Verdict(prop, Status.INFORMATIVE, True, "geometric",
                       explanation="X_- J* meets B ker D only in {0} and [B; D] has full column rank",
                       details=details)
    return Verdict(prop, Status.NOT_INFORMATIVE, True, "geometric",
                   witness={"kind": "subspace", "vector": meet.basis[:, 0].tolist()},
                   explanation="X_- J* intersects B ker D nontrivially", details=details)
