"""Data, known structure matrices, and the reduction to ``{A | R = Q A P}``.

For data ``(U_-, X, Y_-)`` harvested from

    x(t+1) = A x(t) + B u(t) + E w(t)
    y(t)   = C x(t) + D u(t) + F w(t)

with unknown ``A`` and unknown noise ``w``, the set of state matrices that
explain the data is the affine set ``{A | R = M A X_-}`` where ``(M N)`` is any
matrix whose kernel is ``im [E; F]`` and
``R = (M N) [X_+ - B U_-; Y_- - C X_- - D U_-]``.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    InputError,
    Tolerances,
    annihilator_of_image,
    as_matrix,
    image_basis,
    kernel_basis,
)


class InconsistentDataError(ValueError):
    """No state matrix is compatible with the data and the declared structure."""


class NoisePattern(enum.Enum):
    GENERAL = "general"
    INDEPENDENT_SPLIT = "independent-split"
    PROCESS_ONLY = "process-only"
    NOISELESS = "noiseless"


@dataclass(frozen=True, eq=False)
class SystemStructure:
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        B = as_matrix(self.B, name="B")
        n, m = B.shape
        C = as_matrix(self.C, cols=n, name="C")
        p = C.shape[0]
        D = as_matrix(self.D, rows=p, cols=m, name="D")
        E = as_matrix(self.E, rows=n, name="E")
        F = as_matrix(self.F, rows=p, cols=E.shape[1], name="F")
        for k, v in zip("BCDEF", (B, C, D, E, F)):
            object.__setattr__(self, k, v)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def r_w(self) -> int:
        return self.E.shape[1]

    def replace(self, **kw) -> "SystemStructure":
        d = dict(B=self.B, C=self.C, D=self.D, E=self.E, F=self.F)
        d.update(kw)
        return SystemStructure(**d)


@dataclass(frozen=True, eq=False)
class DataSet:
    U_minus: np.ndarray
    X: np.ndarray
    Y_minus: np.ndarray

    def __post_init__(self):
        X = as_matrix(self.X, name="X")
        if X.shape[1] < 2:
            raise InputError("X: need at least two samples (T >= 1)")
        T = X.shape[1] - 1
        U = as_matrix(self.U_minus, cols=T, name="U")
        Y = as_matrix(self.Y_minus, cols=T, name="Y")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "U_minus", U)
        object.__setattr__(self, "Y_minus", Y)

    @property
    def T(self) -> int:
        return self.X.shape[1] - 1

    @property
    def X_minus(self) -> np.ndarray:
        return self.X[:, :-1]

    @property
    def X_plus(self) -> np.ndarray:
        return self.X[:, 1:]

    def check_against(self, sys: SystemStructure):
        if self.X.shape[0] != sys.n:
            raise InputError(f"X: expected {sys.n} rows (state dimension), got {self.X.shape[0]}")
        if self.U_minus.shape[0] != sys.m:
            raise InputError(f"U: expected {sys.m} rows (input dimension), got {self.U_minus.shape[0]}")
        if self.Y_minus.shape[0] != sys.p:
            raise InputError(f"Y: expected {sys.p} rows (output dimension), got {self.Y_minus.shape[0]}")


@dataclass(frozen=True, eq=False)
class Reduction:
    """``A`` is compatible with the data iff ``Q A P = R``.

    ``P`` is ``X_-``. ``Q``/``R`` may come from a simplified annihilator when
    the noise pattern allows it; ``MN``/``R_full`` always hold the general
    construction and carry the output-equation consistency rows.
    """

    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    MN: np.ndarray
    R_full: np.ndarray
    pattern: NoisePattern
    tol: Tolerances = field(default=DEFAULT_TOL)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def r(self) -> int:
        return self.P.shape[1]

    @property
    def M(self) -> np.ndarray:
        return self.Q

    def replace(self, **kw) -> "Reduction":
        d = {k: getattr(self, k) for k in ("P", "Q", "R", "MN", "R_full", "pattern", "tol")}
        d.update(kw)
        return Reduction(**d)


def classify_noise(sys: SystemStructure) -> NoisePattern:
    """Read the declared noise structure; exact zeros only, nothing inferred numerically."""
    e_zero = ~np.any(sys.E != 0, axis=0)
    f_zero = ~np.any(sys.F != 0, axis=0)
    if e_zero.all() and f_zero.all():
        return NoisePattern.NOISELESS
    if f_zero.all():
        return NoisePattern.PROCESS_ONLY
    if np.all(e_zero | f_zero):
        return NoisePattern.INDEPENDENT_SPLIT
    return NoisePattern.GENERAL


def data_residual(sys: SystemStructure, data: DataSet) -> np.ndarray:
    """Stacked ``[X_+ - B U_-; Y_- - C X_- - D U_-]``."""
    return np.vstack([
        data.X_plus - sys.B @ data.U_minus,
        data.Y_minus - sys.C @ data.X_minus - sys.D @ data.U_minus,
    ])


def _norm(a) -> float:
    return float(np.linalg.norm(a, 2)) if np.size(a) else 0.0


def _term_scale(K, sys: SystemStructure, data: DataSet) -> float:
    """Magnitude of the terms that cancel inside ``K [X_+ - B U_-; Y_- - C X_- - D U_-]``."""
    u, x, y = _norm(data.U_minus), _norm(data.X), _norm(data.Y_minus)
    terms = x + _norm(sys.B) * u + y + _norm(sys.C) * x + _norm(sys.D) * u
    return _norm(K) * terms


def _chop(R: np.ndarray, scale: float, tol: Tolerances) -> np.ndarray:
    """Zero the entries of ``R`` that are round-off relative to ``scale``."""
    R = R.copy()
    R[np.abs(R) <= tol.rtol_for(R.shape) * scale] = 0.0
    return R


def build_reduction(sys: SystemStructure, data: DataSet, tol: Tolerances = DEFAULT_TOL,
                    annihilator: np.ndarray | None = None) -> Reduction:
    """Construct ``(P, Q, R)`` for the compatible family of the data.

    Passing ``annihilator`` overrides the canonical ``(M N)``; any matrix with
    kernel ``im [E; F]`` is acceptable and the general formula is then used
    regardless of the noise pattern.
    """
    data.check_against(sys)
    n = sys.n
    pattern = classify_noise(sys)
    EF = np.vstack([sys.E, sys.F])
    stacked = data_residual(sys, data)

    if annihilator is not None:
        MN = as_matrix(annihilator, cols=n + sys.p, name="annihilator")
        R_full = _chop(MN @ stacked, _term_scale(MN, sys, data), tol)
        return Reduction(data.X_minus, MN[:, :n], R_full, MN, R_full, pattern, tol)

    if pattern is NoisePattern.NOISELESS:
        MN = np.eye(n + sys.p)
    else:
        MN = annihilator_of_image(EF, tol)
    R_full = _chop(MN @ stacked, _term_scale(MN, sys, data), tol)

    state_part = data.X_plus - sys.B @ data.U_minus
    if pattern is NoisePattern.NOISELESS:
        Q, R = np.eye(n), state_part.copy()
    elif pattern in (NoisePattern.PROCESS_ONLY, NoisePattern.INDEPENDENT_SPLIT):
        Q = annihilator_of_image(sys.E, tol) if sys.r_w else np.eye(n)
        R = _chop(Q @ state_part, _term_scale(Q, sys, data), tol)
    else:
        Q, R = MN[:, :n], R_full
    return Reduction(data.X_minus, Q, R, MN, R_full, pattern, tol)


def _triple_consistent(P, Q, R, tol: Tolerances) -> bool:
    if R.size == 0:
        return True
    scale = max(float(np.linalg.norm(R, 2)), float(np.linalg.norm(Q, 2)) if Q.size else 0.0, 1.0)
    if Q.shape[0]:
        im_q = image_basis(Q, tol)
        resid_r = R - im_q.basis @ (im_q.basis.T @ R)
        if np.linalg.norm(resid_r, 2) > tol.containment_atol * scale:
            return False
    ker_p = kernel_basis(P, tol)
    if ker_p.dim and np.linalg.norm(R @ ker_p.basis, 2) > tol.containment_atol * scale:
        return False
    return True


def consistency_check(red: Reduction, tol: Tolerances | None = None) -> bool:
    """True iff some ``A`` satisfies ``Q A P = R`` (im R in im Q and ker P in ker R)."""
    tol = tol or red.tol
    full = _triple_consistent(red.P, red.MN[:, :red.n], red.R_full, tol)
    return full and _triple_consistent(red.P, red.Q, red.R, tol)


def membership_residual(A, sys: SystemStructure, data: DataSet, tol: Tolerances = DEFAULT_TOL) -> float:
    """Distance of the data equations from ``im [E; F]`` for state matrix ``A``.

    Zero (to round-off) iff some noise sequence explains the data with ``A``.
    Computed from the raw data, independent of any reduction.
    """
    resid = np.vstack([
        data.X_plus - A @ data.X_minus - sys.B @ data.U_minus,
        data.Y_minus - sys.C @ data.X_minus - sys.D @ data.U_minus,
    ])
    EF = np.vstack([sys.E, sys.F])
    if EF.shape[1]:
        im = image_basis(EF, tol)
        resid = resid - im.basis @ (im.basis.T @ resid)
    return float(np.linalg.norm(resid, 2)) if resid.size else 0.0


def simulate(A, sys: SystemStructure, x0, U, W) -> DataSet:
    """Run the full system from ``x0`` with inputs ``U`` (m x T) and noise ``W`` (r x T)."""
    A = as_matrix(A, sys.n, sys.n, "A")
    U = as_matrix(U, rows=sys.m, name="U")
    T = U.shape[1]
    W = as_matrix(W, sys.r_w, T, "W")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (sys.n,):
        raise InputError(f"x0: expected length {sys.n}, got {x0.shape[0]}")
    X = np.zeros((sys.n, T + 1))
    X[:, 0] = x0
    for t in range(T):
        X[:, t + 1] = A @ X[:, t] + sys.B @ U[:, t] + sys.E @ W[:, t]
    Y = sys.C @ X[:, :T] + sys.D @ U + sys.F @ W
    return DataSet(U, X, Y)


# --- problem files -----------------------------------------------------------

_KEYS = ("B", "C", "D", "E", "F", "U", "X", "Y")


def _read_csv_matrix(path: Path) -> list[list[float]]:
    with open(path, newline="") as fh:
        return [[float(v) for v in row] for row in csv.reader(fh) if row]


def _raw_matrix(doc: dict, key: str, base: Path):
    if key not in doc:
        raise InputError(f"{key}: missing required field")
    v = doc[key]
    if isinstance(v, dict):
        if "csv" in v:
            try:
                return _read_csv_matrix(base / v["csv"])
            except (OSError, ValueError) as exc:
                raise InputError(f"{key}: cannot read CSV {v['csv']!r}: {exc}") from exc
        if "shape" in v:
            try:
                rows, cols = v["shape"]
                return np.asarray(v.get("data", []), dtype=float).reshape(rows, cols)
            except (TypeError, ValueError) as exc:
                raise InputError(f"{key}: bad 'shape'/'data' pair ({exc})") from exc
        raise InputError(f"{key}: object form must contain 'csv' or 'shape'")
    if not isinstance(v, list):
        raise InputError(f"{key}: expected an array of arrays")
    if v and not all(isinstance(row, list) for row in v):
        raise InputError(f"{key}: expected an array of arrays (row-major)")
    if v and len({len(row) for row in v}) != 1:
        raise InputError(f"{key}: rows have unequal lengths")
    return v


def _to_array(key: str, raw) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{key}: entries must be numbers ({exc})") from exc
    if arr.size == 0:
        return None  # resolved from the other matrices
    if arr.ndim != 2:
        raise InputError(f"{key}: expected a 2-D matrix")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{key}: entries must be finite")
    return arr


def problem_from_dict(doc: dict, base: Path | str = ".") -> tuple[SystemStructure, DataSet, Tolerances]:
    """Validate a problem document; see README for the schema."""
    if not isinstance(doc, dict):
        raise InputError("problem: top-level value must be an object")
    base = Path(base)
    mats = {k: _to_array(k, _raw_matrix(doc, k, base)) for k in _KEYS}
    shapes = {k: (None if v is None else v.shape) for k, v in mats.items()}

    def pick(*cands):
        for key, axis in cands:
            if shapes[key] is not None:
                return shapes[key][axis]
        return None

    X = mats["X"]
    if X is None:
        raise InputError("X: must be non-empty")
    n, T = X.shape[0], X.shape[1] - 1
    m = pick(("B", 1), ("U", 0), ("D", 1))
    p = pick(("C", 0), ("Y", 0), ("D", 0), ("F", 0))
    r_w = pick(("E", 1), ("F", 1))
    m = 0 if m is None else m
    p = 0 if p is None else p
    r_w = 0 if r_w is None else r_w
    expected = {"B": (n, m), "C": (p, n), "D": (p, m), "E": (n, r_w), "F": (p, r_w),
                "U": (m, T), "Y": (p, T)}
    for key, shp in expected.items():
        if mats[key] is None:
            if shp[0] * shp[1] != 0:
                raise InputError(f"{key}: empty, but shape {shp} is required")
            mats[key] = np.zeros(shp)
        elif mats[key].shape != shp:
            raise InputError(f"{key}: expected shape {shp}, got {mats[key].shape}")

    tol_doc = doc.get("tolerances", {}) or {}
    unknown = set(tol_doc) - {"rank_rtol", "boundary_delta", "containment_atol"}
    if unknown:
        raise InputError(f"tolerances: unknown keys {sorted(unknown)}")
    tol = Tolerances(**{k: float(v) for k, v in tol_doc.items()})

    sys = SystemStructure(mats["B"], mats["C"], mats["D"], mats["E"], mats["F"])
    data = DataSet(mats["U"], mats["X"], mats["Y"])
    data.check_against(sys)
    return sys, data, tol


def load_problem(source) -> tuple[SystemStructure, DataSet, Tolerances]:
    """Load a problem from a JSON file path, a JSON string, or a dict."""
    if isinstance(source, dict):
        return problem_from_dict(source)
    path = Path(source)
    if path.exists():
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc
        return problem_from_dict(doc, path.parent)
    try:
        doc = json.loads(str(source))
    except json.JSONDecodeError as exc:
        raise InputError(f"cannot read problem {str(source)[:60]!r}: not a file or JSON text") from exc
    return problem_from_dict(doc)


def problem_to_dict(sys: SystemStructure, data: DataSet, tol: Tolerances | None = None) -> dict:
    def enc(a):
        a = np.asarray(a)
        if a.size == 0:
            return {"shape": list(a.shape), "data": []}
        return a.tolist()

    doc = {"B": enc(sys.B), "C": enc(sys.C), "D": enc(sys.D), "E": enc(sys.E), "F": enc(sys.F),
           "U": enc(data.U_minus), "X": enc(data.X), "Y": enc(data.Y_minus)}
    if tol is not None:
        doc["tolerances"] = {k: v for k, v in (("rank_rtol", tol.rank_rtol),
                                                ("boundary_delta", tol.boundary_delta),
                                                ("containment_atol", tol.containment_atol))
                             if v is not None}
    return doc
