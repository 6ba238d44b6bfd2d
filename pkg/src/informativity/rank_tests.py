"""Informativity tests built from a subspace precondition and a uniform pencil rank test.

All eight observability/controllability-type properties share one pencil

    [ R - lam Q P   Q B ]
    [ C P           D   ]

after zeroing the blocks a property does not use: plain (non-strong)
observability drops the input columns, plain controllability drops the
output rows. Only the target rank and the precondition differ between the
observability and the controllability families.
"""

from __future__ import annotations

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    Subspace,
    Tolerances,
    complement,
    image_basis,
    image_of,
    inverse_image,
    kernel_basis,
    numerical_rank,
    subspace_contains,
)
from .pencil import Pencil, RankVerdict, Region, uniform_rank_test
from .problem import (
    DataSet,
    InconsistentDataError,
    NoisePattern,
    Reduction,
    SystemStructure,
    build_reduction,
    consistency_check,
)
from .properties import Property, Status, Verdict


class UnsupportedPropertyError(ValueError):
    pass


def effective_bcd(prop: Property, B, C, D):
    """The ``(B, C, D)`` a property actually sees."""
    B, C, D = np.asarray(B, float), np.asarray(C, float), np.asarray(D, float)
    if prop in (Property.OBSERVABILITY, Property.DETECTABILITY):
        return B[:, :0], C, D[:, :0]
    if prop in (Property.CONTROLLABILITY, Property.STABILIZABILITY):
        return B, C[:0], D[:0]
    return B, C, D


def _require_pencil_property(prop: Property):
    if not prop.is_pencil_property:
        raise UnsupportedPropertyError(
            f"{prop.value} has no pencil test; use geometric.geometric_test instead"
        )


def _violation(outer: Subspace, inner: Subspace) -> np.ndarray:
    """Unit vector of ``inner`` farthest from ``outer``."""
    perp = complement(outer)
    proj = perp.basis.T @ inner.basis
    _, _, vh = np.linalg.svd(proj)
    x = inner.basis @ vh[0]
    return x / np.linalg.norm(x)


def triple_precondition(P, Q, B, C, D, prop: Property, tol: Tolerances = DEFAULT_TOL):
    """Subspace precondition for the affine family ``{A | Q A P = R}``.

    Returns ``(holds, violating_vector, reason)``. Observability family:
    ``C^{-1} im D`` (or ``ker C``) inside ``im P``. Controllability family:
    ``ker Q`` inside ``im B``, and for the strong variants inside ``B ker D``.
    """
    _require_pencil_property(prop)
    B, C, D = effective_bcd(prop, B, C, D)
    n = P.shape[0]
    if not prop.is_control_family:
        im_p = image_basis(P, tol)
        lhs = inverse_image(C, image_basis(D, tol), tol) if C.shape[0] else Subspace.full(n, tol)
        name = "C^-1 im D" if prop.is_strong else "ker C"
        if subspace_contains(im_p, lhs):
            return True, None, ""
        return False, _violation(im_p, lhs), f"{name} is not contained in im X_-"
    ker_q = kernel_basis(Q, tol) if Q.shape[0] else Subspace.full(n, tol)
    im_b = image_basis(B, tol)
    if not subspace_contains(im_b, ker_q):
        return False, _violation(im_b, ker_q), "ker M is not contained in im B"
    if prop.is_strong:
        b_ker_d = image_of(B, kernel_basis(D, tol) if D.shape[0] else Subspace.full(B.shape[1], tol), tol)
        if not subspace_contains(b_ker_d, ker_q):
            return False, _violation(b_ker_d, ker_q), "ker M is not contained in B ker D"
    return True, None, ""


def triple_pencil(P, Q, R, B, C, D, prop: Property, tol: Tolerances = DEFAULT_TOL):
    """``(pencil, target_rank, region)`` for the family ``{A | Q A P = R}``."""
    _require_pencil_property(prop)
    B, C, D = effective_bcd(prop, B, C, D)
    QP, QB, CP = Q @ P, Q @ B, C @ P
    ell, r = R.shape
    p, m = D.shape
    N0 = np.block([[R, QB], [CP, D]]) if (ell + p) and (r + m) else np.zeros((ell + p, r + m))
    N1 = np.zeros_like(N0)
    N1[:ell, :r] = QP
    if prop.is_control_family:
        target = numerical_rank(Q, tol) + numerical_rank(np.hstack([CP, D]), tol)
    else:
        target = numerical_rank(P, tol) + numerical_rank(np.vstack([QB, D]), tol)
    return Pencil(N0, N1), target, prop.region


def build_property_pencil(red: Reduction, sys: SystemStructure, prop: Property,
                          data: DataSet | None = None, simplify: bool = True):
    """Pencil, target rank and region for a data problem.

    With ``data`` supplied and ``simplify`` set, controllability and
    stabilizability use the shortcut forms ``[X_+ - lam X_-, B]`` (target n)
    in the noiseless case and ``M [X_+ - lam X_-, B]`` (target rank M) for
    separable noise. The verdicts coincide with the general form.
    """
    _require_pencil_property(prop)
    plain_ctrb = prop in (Property.CONTROLLABILITY, Property.STABILIZABILITY)
    if simplify and plain_ctrb and data is not None and red.Q.shape[1] == data.X.shape[0]:
        if red.pattern is NoisePattern.NOISELESS:
            N0 = np.hstack([data.X_plus, sys.B])
            N1 = np.hstack([data.X_minus, np.zeros_like(sys.B)])
            return Pencil(N0, N1), sys.n, prop.region
        if red.pattern in (NoisePattern.PROCESS_ONLY, NoisePattern.INDEPENDENT_SPLIT):
            M = red.Q
            N0 = M @ np.hstack([data.X_plus, sys.B])
            N1 = M @ np.hstack([data.X_minus, np.zeros_like(sys.B)])
            return Pencil(N0, N1), numerical_rank(M, red.tol), prop.region
    return triple_pencil(red.P, red.Q, red.R, sys.B, sys.C, sys.D, prop, red.tol)


def precondition(red: Reduction, sys: SystemStructure, prop: Property, tol: Tolerances | None = None) -> bool:
    tol = tol or red.tol
    return triple_precondition(red.P, red.Q, sys.B, sys.C, sys.D, prop, tol)[0]


def _lambda_json(lam: complex) -> dict:
    return {"re": float(np.real(lam)), "im": float(np.imag(lam))}


def triple_test(P, Q, R, B, C, D, prop: Property, tol: Tolerances = DEFAULT_TOL, seed=None,
                pencil=None) -> Verdict:
    """Uniform test over ``{A | Q A P = R}``; the building block of :func:`informativity_test`."""
    ok, vec, reason = triple_precondition(P, Q, B, C, D, prop, tol)
    if pencil is None:
        pencil = triple_pencil(P, Q, R, B, C, D, prop, tol)
    pen, target, region = pencil
    rv = uniform_rank_test(pen, target, region, tol, seed)
    return _assemble(prop, ok, vec, reason, rv)


def _assemble(prop, ok, vec, reason, rv: RankVerdict) -> Verdict:
    details = {"normal_rank": rv.normal_rank, "target_rank": rv.target_rank, "region": rv.region.value}
    if not ok:
        return Verdict(prop, Status.NOT_INFORMATIVE, False, "pencil", rv,
                       witness={"kind": "subspace", "vector": vec.tolist()},
                       explanation=f"precondition fails: {reason}", details=details)
    if rv.holds:
        where = "all complex lambda" if rv.region is Region.ALL_COMPLEX else "all |lambda| >= 1"
        return Verdict(prop, Status.INFORMATIVE, True, "pencil", rv,
                       explanation=f"precondition holds and rank equals {rv.target_rank} for {where}",
                       details=details)
    if rv.marginal:
        lam = rv.marginal_witnesses[0][0]
        return Verdict(prop, Status.MARGINAL, True, "pencil", rv,
                       witness={"kind": "lambda", "lambda": _lambda_json(lam)},
                       explanation=(f"rank drop at lambda={lam:.6g} lies on the numerical unit circle; "
                                    "boundary membership cannot be certified"),
                       details=details)
    lam, rk = rv.witnesses[0]
    if rv.normal_rank < rv.target_rank:
        why = f"normal rank {rv.normal_rank} is below the target {rv.target_rank}"
    else:
        why = f"rank drops to {rk} < {rv.target_rank} at lambda={lam:.6g}"
    return Verdict(prop, Status.NOT_INFORMATIVE, True, "pencil", rv,
                   witness={"kind": "lambda", "lambda": _lambda_json(lam), "rank": rk},
                   explanation=f"rank condition fails: {why}", details=details)


def prepare(sys: SystemStructure, data: DataSet, tol: Tolerances = DEFAULT_TOL,
            reduction: Reduction | None = None) -> Reduction:
    """Build (or accept) the reduction and refuse inconsistent data."""
    red = reduction if reduction is not None else build_reduction(sys, data, tol)
    if not consistency_check(red, tol):
        raise InconsistentDataError(
            "no state matrix is compatible with the data and the given B, C, D, E, F"
        )
    return red


def informativity_test(sys: SystemStructure, data: DataSet, prop: Property,
                       tol: Tolerances = DEFAULT_TOL, seed=None,
                       reduction: Reduction | None = None, simplify: bool = True) -> Verdict:
    """Decide whether the data are informative for ``prop``.

    Left-invertibility has no pencil characterization and is delegated to the
    geometric test. Raises :class:`InconsistentDataError` when no system with
    the declared structure could have produced the data.
    """
    prop = Property(prop)
    red = prepare(sys, data, tol, reduction)
    if prop is Property.LEFT_INVERTIBILITY:
        from .geometric import geometric_test
        return geometric_test(sys, data, prop, tol, reduction=red)
    pen = build_property_pencil(red, sys, prop, data, simplify)
    return triple_test(red.P, red.Q, red.R, sys.B, sys.C, sys.D, prop, tol, seed, pencil=pen)
