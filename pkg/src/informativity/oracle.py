"""Independent cross-checks of informativity verdicts.

The compatible family ``{A | Q A P = R}`` is parametrized explicitly as

    A = A_p + U1 F1 + F2 U2,      Q U1 = 0,  U2 P = 0,

which lets us (i) sample members and test each one with a model-based
criterion, and (ii) build a member that violates a property whenever a test
says the data are not informative, following the constructive direction of
the rank theorem: pick a failing direction, then add a perturbation ``A0``
with ``Q A0 P = 0`` that makes it an actual eigen/zero direction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .geometric import jstar, largest_inclusion_subspace, weakly_unobservable
from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    annihilator_of_image,
    image_basis,
    image_of,
    kernel_basis,
    lstsq_solve,
    numerical_rank,
    subspace_contains,
    subspace_intersect,
)
from .pencil import _MATCH, DEFAULT_SEED, Region, _clean, _cluster, classify_drops, normal_rank, rank_drop_points, uniform_rank_test
from .problem import (
    DataSet,
    InconsistentDataError,
    Reduction,
    SystemStructure,
    build_reduction,
    consistency_check,
    membership_residual,
)
from .properties import Property, Status
from .rank_tests import effective_bcd, informativity_test, triple_pencil, triple_precondition, triple_test

_DUAL = {
    Property.STRONG_CONTROLLABILITY: Property.STRONG_OBSERVABILITY,
    Property.STRONG_STABILIZABILITY: Property.STRONG_DETECTABILITY,
    Property.CONTROLLABILITY: Property.OBSERVABILITY,
    Property.STABILIZABILITY: Property.DETECTABILITY,
}


@dataclass(eq=False)
class CompatibleFamily:
    A_particular: np.ndarray
    U1: np.ndarray  # columns span ker Q
    U2: np.ndarray  # rows span the left annihilator of P
    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    @property
    def free_dims(self) -> tuple[int, int]:
        return self.U1.shape[1], self.U2.shape[0]

    @property
    def n(self) -> int:
        return self.A_particular.shape[0]

    def member(self, F1, F2) -> np.ndarray:
        return self.A_particular + self.U1 @ F1 + F2 @ self.U2

    def residual(self, A) -> float:
        if self.R.size == 0:
            return 0.0
        return float(np.linalg.norm(self.Q @ A @ self.P - self.R, 2))

    def contains(self, A, tol: Tolerances = DEFAULT_TOL) -> bool:
        scale = max(1.0, np.linalg.norm(self.R, 2) if self.R.size else 0.0,
                    np.linalg.norm(A, 2) * _norm(self.P) * _norm(self.Q))
        return self.residual(A) <= tol.containment_atol * scale


def _norm(a) -> float:
    return float(np.linalg.norm(a, 2)) if np.size(a) else 0.0


def _pinv(a, tol: Tolerances) -> np.ndarray:
    a = np.asarray(a, float)
    if a.size == 0:
        return np.zeros(a.shape[::-1])
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    keep = s > tol.rtol_for(a.shape) * s[0] if s.size and s[0] > 0 else np.zeros_like(s, bool)
    return (vh[keep].T / s[keep]) @ u[:, keep].T


def family_from_triple(P, Q, R, tol: Tolerances = DEFAULT_TOL) -> CompatibleFamily:
    P, Q, R = (np.asarray(x, float) for x in (P, Q, R))
    n = P.shape[0]
    A_p = _pinv(Q, tol) @ R @ _pinv(P, tol) if Q.shape[0] else np.zeros((n, n))
    U1 = kernel_basis(Q, tol).basis if Q.shape[0] else np.eye(n)
    U2 = annihilator_of_image(P, tol)
    return CompatibleFamily(A_p, U1, U2, P, Q, R)


def parametrize(red: Reduction, tol: Tolerances | None = None) -> CompatibleFamily:
    tol = tol or red.tol
    if not consistency_check(red, tol):
        raise InconsistentDataError("the compatible family is empty")
    return family_from_triple(red.P, red.Q, red.R, tol)


def sample(fam: CompatibleFamily, count: int, magnitude: float = 10.0, seed=None,
           tol: Tolerances = DEFAULT_TOL) -> list[np.ndarray]:
    """``count`` members with free parameters uniform in ``[-magnitude, magnitude]``."""
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    n = fam.n
    k1, k2 = fam.free_dims
    out = []
    for _ in range(count):
        F1 = rng.uniform(-magnitude, magnitude, (k1, n))
        F2 = rng.uniform(-magnitude, magnitude, (n, k2))
        A = fam.member(F1, F2)
        if not fam.contains(A, tol):
            raise AssertionError("sampled matrix left the compatible family")
        out.append(A)
    return out


def solve_perturbation(fam: CompatibleFamily, directions, targets) -> tuple[np.ndarray, float]:
    """Real ``A0`` with ``Q A0 P = 0`` and ``A0 @ directions = targets`` (least squares).

    Returns ``(A0, residual)``.
    """
    X = np.asarray(directions, float)
    T = np.asarray(targets, float)
    if X.ndim == 1:
        X, T = X[:, None], T[:, None]
    n = fam.n
    k1, k2 = fam.free_dims
    blocks = []
    if k1:
        blocks.append(np.kron(X.T, fam.U1))
    if k2:
        blocks.append(np.kron((fam.U2 @ X).T, np.eye(n)))
    if not blocks:
        return np.zeros((n, n)), float(np.linalg.norm(T))
    G = np.hstack(blocks)
    g = lstsq_solve(G, T.reshape(-1, order="F"))
    G1 = g[: k1 * n].reshape((k1, n), order="F")
    G2 = g[k1 * n:].reshape((n, k2), order="F")
    A0 = fam.U1 @ G1 + G2 @ fam.U2
    return A0, float(np.linalg.norm(A0 @ X - T))


# --- model-based checks --------------------------------------------------------

def _pbh_fails(A, C, eig, region: Region, tol: Tolerances) -> bool | None:
    """Hautus test on ``(C, A)`` at the eigenvalues ``eig`` of ``A``.

    True if some eigenvalue in ``region`` is unobservable; None when the
    only offending eigenvalues sit on the numerical unit circle.
    """
    n = A.shape[0]
    if n == 0:
        return False
    marginal = False
    scale = _norm(A) + _norm(C)
    # a Jordan block splits its eigenvalue into a small cloud; the cloud's
    # centre is where the rank actually drops
    points = list(eig)
    centres = _cluster(points, _MATCH)
    if len(centres) < len(points):
        points += [_clean(z) for z in centres]
    for lam in points:
        if region is Region.CLOSED_UNIT_EXTERIOR and abs(lam) < 1.0 - tol.boundary_delta:
            continue
        M = np.vstack([A - lam * np.eye(n), C.astype(complex)])
        if numerical_rank(M, tol, scale=scale + abs(lam)) < n:
            if region is Region.CLOSED_UNIT_EXTERIOR and abs(abs(lam) - 1.0) <= tol.boundary_delta:
                marginal = True
                continue
            return True
    return None if marginal else False


def model_statuses(A, sys: SystemStructure, props, tol: Tolerances = DEFAULT_TOL, seed=None) -> dict:
    """'holds', 'fails' or 'marginal' per property for the known model ``(A, B, C, D)``.

    Plain variants use the Hautus test at the eigenvalues of ``A``; strong
    variants share one Rosenbrock pencil ``[A - lam I, B; C, D]``, whose
    drop points are computed once; left-invertibility uses ``V(A, B, C, D)``.
    """
    A = np.asarray(A, float)
    props = [Property(p) for p in props]
    n = A.shape[0]
    out = {}
    eig = None
    rosen = None
    for prop in props:
        if prop is Property.LEFT_INVERTIBILITY:
            BD = np.vstack([sys.B, sys.D])
            if numerical_rank(BD, tol) < sys.m:
                out[prop] = "fails"
                continue
            V = weakly_unobservable(A, sys.B, sys.C, sys.D, tol)
            b_ker_d = image_of(sys.B, kernel_basis(sys.D, tol), tol)
            out[prop] = "holds" if subspace_intersect(V, b_ker_d).dim == 0 else "fails"
        elif prop.is_strong:
            eye = np.eye(n)
            pen, target, region = triple_pencil(eye, eye, A, sys.B, sys.C, sys.D, prop, tol)
            if rosen is None:
                rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
                rho = normal_rank(pen, tol, rng)
                rosen = (rho, rank_drop_points(pen, tol, rng, rho=rho))
            out[prop] = classify_drops(pen, rosen[0], rosen[1], target, region, tol).status
        else:
            if eig is None:
                eig = np.linalg.eigvals(A) if n else np.zeros(0)
            if prop.is_control_family:
                res = _pbh_fails(A.T, sys.B.T, eig, prop.region, tol)
            else:
                res = _pbh_fails(A, sys.C, eig, prop.region, tol)
            out[prop] = "marginal" if res is None else ("fails" if res else "holds")
    return out


def model_status(A, sys: SystemStructure, prop: Property, tol: Tolerances = DEFAULT_TOL, seed=None) -> str:
    """'holds', 'fails' or 'marginal' for the known model ``(A, B, C, D)``."""
    prop = Property(prop)
    return model_statuses(A, sys, [prop], tol, seed)[prop]


def model_check(A, sys: SystemStructure, prop: Property, tol: Tolerances = DEFAULT_TOL, seed=None) -> bool:
    """Whether ``(A, B, C, D)`` has ``prop``; boundary cases count as not certified."""
    return model_status(A, sys, prop, tol, seed) == "holds"


# --- counterexamples -----------------------------------------------------------

@dataclass
class Counterexample:
    A_bad: np.ndarray
    property: Property
    certificate: dict[str, Any]
    verified: bool = False
    membership_residual: float = float("nan")
    method: str = "construction"

    def to_json(self) -> dict:
        return {
            "property": self.property.value,
            "A_bad": self.A_bad.tolist(),
            "certificate": _jsonable(self.certificate),
            "verified": self.verified,
            "membership_residual": self.membership_residual,
            "method": self.method,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [{"re": float(z.real), "im": float(z.imag)} for z in obj.ravel()]
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _project(U1: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto ``im U1`` (= ker Q)."""
    return U1 @ (U1.T @ v) if U1.shape[1] else np.zeros_like(v)


def _kernel_direction(pen, lam, P, tol: Tolerances):
    """Kernel vector ``(nu, eta)`` of ``pen(lam)`` maximizing ``|P nu|``."""
    L = pen.at(lam)
    ker = kernel_basis(L, tol, scale=pen.scale_at(lam)).basis
    r = P.shape[1]
    if ker.shape[1] == 0:
        return None
    PZ = P @ ker[:r]
    _, s, vh = np.linalg.svd(PZ)
    if s.size == 0 or s[0] <= 1e-10 * max(1.0, _norm(P)):
        return None
    z = ker @ vh[0].conj()
    if np.isrealobj(L):
        z = z.real
    return z[:r], z[r:]


def _single_direction(fam, A, B, xi, eta, mu, tol):
    # for xi in im P the target already lies in ker Q; outside im P the
    # U2 term reaches any target, so no projection is needed
    t = -(A - mu * np.eye(fam.n)) @ xi - B @ eta
    A0, res = solve_perturbation(fam, xi, t)
    return A + A0, res


def _construct_observability_type(P, Q, R, B, C, D, prop: Property, tol: Tolerances, seed):
    """Member of ``{A | QAP = R}`` violating an observability-family property, or None."""
    B, C, D = effective_bcd(prop, B, C, D)
    fam = family_from_triple(P, Q, R, tol)
    A = fam.A_particular
    n = fam.n
    mu = prop.region.sample_point()
    ok, xhat, _ = triple_precondition(P, Q, B, C, D, prop, tol)
    if not ok:
        uhat = -lstsq_solve(D, C @ xhat) if D.size else np.zeros(D.shape[1])
        A_bad, res = _single_direction(fam, A, B, xhat, uhat, mu, tol)
        return A_bad, {"kind": "precondition", "lambda": complex(mu), "xi": xhat, "eta": uhat}, res

    pen, target, region = triple_pencil(P, Q, R, B, C, D, prop, tol)
    rv = uniform_rank_test(pen, target, region, tol, seed)
    if rv.holds or not rv.witnesses:
        return None
    lam = rv.witnesses[0][0]
    real = abs(lam.imag) <= 1e-9 * max(1.0, abs(lam))
    if real:
        lam = lam.real
    kd = _kernel_direction(pen, lam, P, tol)
    if kd is None:
        return None
    nu, eta = kd
    xi = P @ nu
    if real:
        A_bad, res = _single_direction(fam, A, B, xi, eta, lam, tol)
        return A_bad, {"kind": "rank", "lambda": complex(lam), "xi": xi, "eta": eta}, res

    pair = np.column_stack([xi.real, xi.imag])
    sv = np.linalg.svd(pair, compute_uv=False)
    if sv[1] <= 1e-8 * sv[0]:
        # real and imaginary parts are parallel: move to a real point in the region
        _, _, vh = np.linalg.svd(pair)
        rvec = pair @ vh[0]
        rvec = rvec / np.linalg.norm(rvec)
        c = rvec @ xi
        rhat = (np.conj(c) * xi).real
        eta_c = np.conj(c) * eta
        a, b = lam.real, lam.imag
        xi2 = b * rhat
        eta2 = b * eta_c.real + (mu - a) * eta_c.imag
        A_bad, res = _single_direction(fam, A, B, xi2, eta2, mu, tol)
        return A_bad, {"kind": "rank-real-reduced", "lambda": complex(mu), "xi": xi2, "eta": eta2,
                       "pencil_lambda": complex(lam)}, res
    zeta = _project(fam.U1.astype(complex), (A - lam * np.eye(n)) @ xi + B @ eta)
    A0, res = solve_perturbation(fam, pair, -np.column_stack([zeta.real, zeta.imag]))
    return A + A0, {"kind": "rank-complex", "lambda": complex(lam), "xi": xi, "eta": eta}, res


def sandwich_matrix(P, Q, R, B, C, D, tol: Tolerances = DEFAULT_TOL):
    """A member ``A_bar`` of ``{A | QAP = R}`` with ``P J* in V(A_bar, B, C, D)``.

    Needs ``C^{-1} im D`` inside ``im P``. Returns ``(A_bar, P J*, residual)``.
    """
    P, Q, R = (np.asarray(x, float) for x in (P, Q, R))
    fam = family_from_triple(P, Q, R, tol)
    A = fam.A_particular
    J, _ = largest_inclusion_subspace(P, Q, R, B, C, D, tol)
    PJ = image_of(P, J, tol)
    if PJ.dim == 0:
        return A, PJ, 0.0
    # basis x_i = P j_i with j_i in J*
    coeff = lstsq_solve(P @ J.basis, PJ.basis)
    js = J.basis @ coeff
    xs = P @ js
    QPJ = Q @ P @ J.basis
    lhs = np.block([[QPJ, Q @ B], [np.zeros((C.shape[0], J.dim)), D]])
    zs = []
    for i in range(PJ.dim):
        rhs = np.concatenate([R @ js[:, i], C @ xs[:, i]])
        sol = lstsq_solve(lhs, rhs)
        c, w = sol[: J.dim], sol[J.dim:]
        u = -w
        y = P @ J.basis @ c
        zs.append(_project(fam.U1, A @ xs[:, i] + B @ u - y))
    A0, res = solve_perturbation(fam, xs, -np.column_stack(zs))
    return A + A0, PJ, res


def construct_counterexample(red: Reduction, sys: SystemStructure, prop: Property,
                             tol: Tolerances | None = None, seed=None,
                             data: DataSet | None = None) -> Counterexample | None:
    """Build a compatible ``A`` that lacks ``prop``; None when the data are informative
    (or the verdict is marginal/inconclusive).

    The result is self-verified: it must lie in the family (and, when ``data`` is
    given, explain the raw data) and fail the model-based check.
    """
    tol = tol or red.tol
    prop = Property(prop)
    P, Q, R = red.P, red.Q, red.R
    B, C, D = sys.B, sys.C, sys.D
    built = None

    if prop is Property.LEFT_INVERTIBILITY:
        ok, _, _ = triple_precondition(P, Q, B, C, D, Property.STRONG_OBSERVABILITY, tol)
        if not ok:
            return None
        if numerical_rank(np.vstack([B, D]), tol) < sys.m:
            ker = kernel_basis(np.vstack([B, D]), tol).basis[:, 0]
            built = (family_from_triple(P, Q, R, tol).A_particular,
                     {"kind": "input-direction", "eta": ker}, 0.0)
        else:
            A_bar, PJ, res = sandwich_matrix(P, Q, R, B, C, D, tol)
            meet = subspace_intersect(PJ, image_of(B, kernel_basis(D, tol), tol))
            if meet.dim == 0:
                return None
            built = (A_bar, {"kind": "subspace", "basis": meet.basis}, res)
    else:
        verdict = triple_test(P, Q, R, B, C, D, prop, tol, seed)
        if verdict.status is not Status.NOT_INFORMATIVE:
            return None
        if prop.is_control_family:
            out = _construct_observability_type(Q.T, P.T, R.T, C.T, B.T, D.T, _DUAL[prop], tol, seed)
            if out is not None:
                At, cert, res = out
                cert = dict(cert, dual=True)
                built = (At.T, cert, res)
        else:
            if prop is Property.STRONG_OBSERVABILITY and verdict.precondition_holds:
                A_bar, PJ, res = sandwich_matrix(P, Q, R, B, C, D, tol)
                if PJ.dim:
                    built = (A_bar, {"kind": "subspace", "basis": PJ.basis}, res)
            if built is None:
                built = _construct_observability_type(P, Q, R, B, C, D, prop, tol, seed)

    if built is None:
        return None
    A_bad, cert, _ = built
    cx = Counterexample(A_bad, prop, cert)
    return verify_counterexample(cx, red, sys, tol, data, seed)


def verify_counterexample(cx: Counterexample, red: Reduction, sys: SystemStructure,
                          tol: Tolerances, data: DataSet | None = None, seed=None) -> Counterexample:
    fam = family_from_triple(red.P, red.Q, red.R, tol)
    in_family = fam.contains(cx.A_bad, tol)
    cx.membership_residual = fam.residual(cx.A_bad)
    if data is not None:
        raw = membership_residual(cx.A_bad, sys, data, tol)
        cx.membership_residual = max(cx.membership_residual, raw)
        scale = max(1.0, _norm(data.X), _norm(cx.A_bad) * _norm(data.X))
        in_family = in_family and raw <= tol.containment_atol * scale
    cx.verified = bool(in_family and model_status(cx.A_bad, sys, cx.property, tol, seed) == "fails")
    return cx


def search_counterexample(red: Reduction, sys: SystemStructure, prop: Property, samples: int = 500,
                          magnitude: float = 10.0, seed=None, tol: Tolerances | None = None,
                          data: DataSet | None = None) -> Counterexample | None:
    tol = tol or red.tol
    fam = family_from_triple(red.P, red.Q, red.R, tol)
    for A in sample(fam, samples, magnitude, seed, tol):
        if model_status(A, sys, prop, tol, seed) == "fails":
            cx = verify_counterexample(Counterexample(A, prop, {"kind": "search"}, method="search"),
                                       red, sys, tol, data, seed)
            if cx.verified:
                return cx
    return None


# --- cross validation ------------------------------------------------------------

def cross_validate(sys: SystemStructure, data: DataSet, properties=None, samples: int = 500,
                   seed=None, tol: Tolerances = DEFAULT_TOL, magnitude: float = 10.0,
                   reduction: Reduction | None = None, geometric: bool = True) -> dict:
    """Check every verdict against the model-based criterion.

    INFORMATIVE verdicts must survive ``samples`` random members of the
    family; NOT_INFORMATIVE verdicts must come with a verified counterexample.
    Anything else is reported as a CRITICAL disagreement.
    """
    from .geometric import geometric_test

    props = [Property(p) for p in (properties or list(Property))]
    red = reduction if reduction is not None else build_reduction(sys, data, tol)
    if not consistency_check(red, tol):
        raise InconsistentDataError("no state matrix is compatible with the data")
    fam = family_from_triple(red.P, red.Q, red.R, tol)
    members = sample(fam, samples, magnitude, seed, tol) if samples else []
    verdicts, seconds = {}, {}
    for prop in props:
        t0 = time.perf_counter()
        verdicts[prop] = informativity_test(sys, data, prop, tol, seed, reduction=red)
        seconds[prop] = time.perf_counter() - t0

    # every informative verdict is checked on the same samples, sharing the
    # per-sample eigenvalue work between properties
    informative = [p for p in props if verdicts[p].status is Status.INFORMATIVE]
    failures: dict[Property, list[int]] = {p: [] for p in informative}
    t0 = time.perf_counter()
    if informative:
        for i, A in enumerate(members):
            for prop, st in model_statuses(A, sys, informative, tol, seed).items():
                if st == "fails":
                    failures[prop].append(i)
    sample_seconds = time.perf_counter() - t0

    entries = []
    critical = 0
    for prop in props:
        t0 = time.perf_counter()
        verdict = verdicts[prop]
        entry: dict[str, Any] = {"property": prop.value, "verdict": verdict.status.value,
                                 "explanation": verdict.explanation}
        if verdict.status is Status.INFORMATIVE:
            bad = failures[prop]
            entry["samples_checked"] = len(members)
            entry["sample_failures"] = bad[:10]
            entry["check"] = "critical" if bad else "agree"
        elif verdict.status is Status.NOT_INFORMATIVE:
            cx = construct_counterexample(red, sys, prop, tol, seed, data)
            if cx is None or not cx.verified:
                cx = search_counterexample(red, sys, prop, samples, magnitude, seed, tol, data) or cx
            entry["counterexample"] = cx.to_json() if cx is not None else None
            entry["check"] = "agree" if (cx is not None and cx.verified) else "critical"
        else:
            entry["check"] = "skipped"
        if geometric and prop in (Property.STRONG_OBSERVABILITY, Property.OBSERVABILITY):
            g = geometric_test(sys, data, prop, tol, reduction=red)
            entry["geometric_verdict"] = g.status.value
            if g.status is not verdict.status:
                entry["check"] = "critical"
                entry["geometric_disagrees"] = True
        if entry["check"] == "critical":
            critical += 1
        entry["seconds"] = seconds[prop] + time.perf_counter() - t0
        entries.append(entry)
    return {
        "schema_version": 1,
        "kind": "validate",
        "samples": samples,
        "sample_check_seconds": sample_seconds,
        "seed": DEFAULT_SEED if seed is None else seed,
        "properties": entries,
        "critical_disagreements": critical,
        "status": "ok" if critical == 0 else "CRITICAL",
    }
