"""Riemannian structure on the image of a feature map.

Tangent vectors are handled through their "bar" parts: the full vector is
``U(p) @ bar`` and the prefactor cancels from every metric and bracket
computation, so curvature is evaluated purely on Pauli sums.

Conventions: ``R_XY = 1/4 ad([X, Y])``, sectional curvature
``<R_XY X, Y> / (|X|^2 |Y|^2 - <X, Y>^2)``, and the Ricci form is normalised
so that ``Ric(E_j, E_j)`` is the sum of sectional curvatures of the planes
through ``E_j``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .feature_map import (DEFAULT_ORDER, FeatureMapSpec, TangentVector,
                          coordinate_tangents, tangent)
from .linalg import BranchCutError, su_distances
from .pauli import PauliString, SkewHermitianOp, commutator

DROP_TOL = 1e-10
DEGENERATE_TOL = 1e-14
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class EmptyFrameError(ValueError):
    pass


class DegeneratePlaneError(ValueError):
    pass


class SpanError(ValueError):
    pass


def _bar(v):
    return v.bar if isinstance(v, TangentVector) else v


def metric(h, k) -> float:
    """``Re Tr(H^H K) / dim``, for Pauli sums or dense skew-Hermitian matrices."""
    h, k = _bar(h), _bar(k)
    if isinstance(h, SkewHermitianOp) and isinstance(k, SkewHermitianOp):
        h._check(k)
        small, big = (h, k) if len(h.terms) <= len(k.terms) else (k, h)
        return float(sum(c * big.coefficient(p) for p, c in small.items()))
    h = h.to_dense() if isinstance(h, SkewHermitianOp) else np.asarray(h)
    k = k.to_dense() if isinstance(k, SkewHermitianOp) else np.asarray(k)
    if h.shape != k.shape:
        raise ValueError(f"dimension mismatch {h.shape} vs {k.shape}")
    dim = h.shape[0]
    # (Tr(H^H K) + Tr(K^H H)) / (2 dim)
    return float(np.real(np.vdot(h, k) + np.vdot(k, h)) / (2 * dim))


def norm(h) -> float:
    return math.sqrt(max(metric(h, h), 0.0))


@dataclass(frozen=True)
class Frame:
    """Orthonormal vectors (bar parts) at one base point."""

    base: tuple[float, ...]
    vectors: tuple[SkewHermitianOp, ...]
    labels: tuple[str, ...]
    gram: np.ndarray = field(repr=False, compare=False)
    dropped: tuple[str, ...] = ()
    kind: str = "coordinate"

    @property
    def rank(self) -> int:
        return len(self.vectors)


def gram_matrix(vectors: Sequence) -> np.ndarray:
    vs = [_bar(v) for v in vectors]
    return np.array([[metric(a, b) for b in vs] for a in vs])


def gram_schmidt(vectors: Sequence, labels: Sequence[str] | None = None,
                 base=None, kind: str = "coordinate") -> Frame:
    """Classical Gram-Schmidt under :func:`metric`.

    Vectors whose residual is below ``1e-10`` times the largest input norm
    are dropped and listed in ``Frame.dropped``.
    """
    vs = [_bar(v) for v in vectors]
    if not vs:
        raise EmptyFrameError("no vectors to orthonormalise")
    if base is None:
        tv = next((v for v in vectors if isinstance(v, TangentVector)), None)
        base = tv.base if tv is not None else ()
    labels = list(labels) if labels is not None else [str(i + 1) for i in range(len(vs))]
    norms = [norm(v) for v in vs]
    scale = max(norms)
    if scale == 0.0:
        raise EmptyFrameError("all vectors are zero")
    out, kept, dropped = [], [], []
    for v, label in zip(vs, labels):
        proj = [metric(e, v) for e in out]
        r = v
        for e, c in zip(out, proj):
            r = r - c * e
        rn = norm(r)
        if rn < DROP_TOL * scale:
            dropped.append(label)
            continue
        out.append(r / rn)
        kept.append(label)
    return Frame(tuple(base), tuple(out), tuple(kept), gram_matrix(vs), tuple(dropped), kind)


def levi_civita(x, y) -> SkewHermitianOp:
    """``nabla_X Y = 1/2 [X, Y]``."""
    return 0.5 * commutator(_bar(x), _bar(y))


def curvature_tensor(x, y, z) -> SkewHermitianOp:
    """``R_XY(Z) = 1/4 [[X, Y], Z]``."""
    return 0.25 * commutator(commutator(_bar(x), _bar(y)), _bar(z))


def sectional(x, y) -> float:
    """Sectional curvature of the plane spanned by ``x`` and ``y``."""
    x, y = _bar(x), _bar(y)
    gxx, gyy, gxy = metric(x, x), metric(y, y), metric(x, y)
    denom = gxx * gyy - gxy * gxy
    if denom <= DEGENERATE_TOL:
        raise DegeneratePlaneError(f"vectors are linearly dependent (denominator {denom:.3e})")
    return metric(curvature_tensor(x, y, x), y) / denom


def sectional_orthonormal(x, y) -> float:
    """``1/4 |[X, Y]|^2``; valid only for orthonormal ``x``, ``y``."""
    b = commutator(_bar(x), _bar(y))
    return 0.25 * metric(b, b)


def ricci(frame: Frame, x, y) -> float:
    """``sum_i <R_{E_i X}(E_i), Y>`` over the orthonormal frame."""
    x, y = _bar(x), _bar(y)
    return float(sum(metric(curvature_tensor(e, x, e), y) for e in frame.vectors))


def ricci_matrix(frame: Frame) -> np.ndarray:
    r = frame.rank
    out = np.zeros((r, r))
    for i in range(r):
        for j in range(i, r):
            out[i, j] = out[j, i] = ricci(frame, frame.vectors[i], frame.vectors[j])
    return out


def sectional_matrix(frame: Frame) -> np.ndarray:
    """Symmetric matrix of pairwise sectional curvatures, NaN on the diagonal."""
    r = frame.rank
    out = np.full((r, r), np.nan)
    for i, j in itertools.combinations(range(r), 2):
        out[i, j] = out[j, i] = sectional_orthonormal(frame.vectors[i], frame.vectors[j])
    return out


def scalar(frame: Frame) -> float:
    return 2.0 * sum(sectional_orthonormal(frame.vectors[i], frame.vectors[j])
                     for i, j in itertools.combinations(range(frame.rank), 2))


# -- frames at a point -----------------------------------------------------

def coordinate_frame(spec: FeatureMapSpec, p, order: int = DEFAULT_ORDER) -> Frame:
    tangents = coordinate_tangents(spec, p, order)
    return gram_schmidt(tangents, labels=spec.coords, kind="coordinate")


def lie_basis_frame(spec: FeatureMapSpec, p, order: int = DEFAULT_ORDER) -> Frame:
    """Frame along the Lie-closure strings.

    Each closure string carries the root-sum-square of its coefficients in
    the coordinate tangents; strings that do not occur at ``p`` drop out.
    """
    tangents = coordinate_tangents(spec, p, order)
    vectors, labels = [], []
    for s in spec.closure:
        weight = math.sqrt(sum(t.bar.coefficient(s) ** 2 for t in tangents))
        vectors.append(SkewHermitianOp.from_string(s, weight) if weight > 0 else
                       SkewHermitianOp.zero(spec.n_qubits))
        labels.append(s.label)
    kept = [(v, l) for v, l in zip(vectors, labels) if not v.is_zero()]
    if not kept:
        raise EmptyFrameError(f"no closure string has a nonzero coefficient at {p}")
    frame = gram_schmidt([v for v, _ in kept], [l for _, l in kept],
                         base=tuple(np.asarray(p, dtype=float).ravel()), kind="lie-basis")
    missing = tuple(l for v, l in zip(vectors, labels) if v.is_zero())
    return Frame(frame.base, frame.vectors, frame.labels, frame.gram,
                 missing + frame.dropped, "lie-basis")


def make_frame(spec: FeatureMapSpec, p, kind: str = "coordinate",
               order: int = DEFAULT_ORDER) -> Frame:
    if kind == "coordinate":
        return coordinate_frame(spec, p, order)
    if kind == "lie-basis":
        return lie_basis_frame(spec, p, order)
    raise ValueError(f"unknown frame kind {kind!r}")


@dataclass(frozen=True)
class CurvatureReport:
    base: tuple[float, ...]
    frame_kind: str
    labels: tuple[str, ...]
    sectional: dict[tuple[str, str], float]
    ricci: dict[tuple[str, str], float]
    scalar: float


def curvature_report(spec: FeatureMapSpec, p, kind: str = "coordinate",
                     order: int = DEFAULT_ORDER) -> CurvatureReport:
    frame = make_frame(spec, p, kind, order)
    labels = frame.labels
    sec = {}
    for i, j in itertools.combinations(range(frame.rank), 2):
        sec[(labels[i], labels[j])] = sectional_orthonormal(frame.vectors[i], frame.vectors[j])
    ric_m = ricci_matrix(frame)
    ric = {(labels[i], labels[j]): float(ric_m[i, j])
           for i in range(frame.rank) for j in range(i, frame.rank)}
    return CurvatureReport(frame.base, kind, labels, sec, ric, 2.0 * sum(sec.values()))


# -- adjoint representation ------------------------------------------------

def _coeffs(x: SkewHermitianOp, basis: Sequence[PauliString]) -> np.ndarray:
    index = {p: i for i, p in enumerate(basis)}
    out = np.zeros(len(basis))
    for p, c in x.items():
        if p not in index:
            raise SpanError(f"{p} is not in the basis")
        out[index[p]] = c
    return out


def adjoint_matrix(x, basis: Sequence[PauliString]) -> np.ndarray:
    """Matrix of ``ad_x`` acting on the span of ``basis`` (column j = [x, B_j])."""
    x = _bar(x)
    _coeffs(x, basis)
    d = len(basis)
    out = np.zeros((d, d))
    for j, p in enumerate(basis):
        out[:, j] = _coeffs(commutator(x, SkewHermitianOp.from_string(p)), basis)
    return out


def killing(x, y, basis: Sequence[PauliString]) -> float:
    """``Tr(ad_x ad_y)`` in the span of ``basis``."""
    return float(np.trace(adjoint_matrix(x, basis) @ adjoint_matrix(y, basis)))


# -- metric compatibility --------------------------------------------------

def _fields_at(spec, point, order, kind):
    if kind == "frame":
        return list(coordinate_frame(spec, point, order).vectors)
    if kind == "coordinate":
        return [t.bar for t in coordinate_tangents(spec, point, order)]
    raise ValueError(f"unknown field kind {kind!r}")


def metric_compatibility_check(spec: FeatureMapSpec, path: Callable[[float], Sequence[float]],
                               y_index: int = 0, z_index: int = 1,
                               order: int = DEFAULT_ORDER, h: float = 1e-5,
                               fields: str = "frame") -> float:
    """``|d/dt g(Y, Z) - g(nabla_X Y, Z) - g(Y, nabla_X Z)|`` at ``t = 0``.

    ``X`` is the tangent of ``U(path(t))``; ``Y`` and ``Z`` are vector fields
    along the path taken from the orthonormal coordinate frame
    (``fields="frame"``) or the raw coordinate tangents (``"coordinate"``).
    """
    p0 = np.asarray(path(0.0), dtype=float)
    pp = np.asarray(path(h), dtype=float)
    pm = np.asarray(path(-h), dtype=float)
    velocity = (pp - pm) / (2 * h)
    x = tangent(spec, p0, velocity, order).bar
    ys = _fields_at(spec, p0, order, fields)
    y, z = ys[y_index], ys[z_index]
    fp = _fields_at(spec, pp, order, fields)
    fm = _fields_at(spec, pm, order, fields)
    dg = (metric(fp[y_index], fp[z_index]) - metric(fm[y_index], fm[z_index])) / (2 * h)
    return abs(dg - metric(levi_civita(x, y), z) - metric(y, levi_civita(x, z)))


# -- nearest operator on a pulled-back geodesic -----------------------------

@dataclass
class NearestResult:
    t: float
    distance: float
    skipped: list[float] = field(default_factory=list)
    evaluations: int = 0


def golden_section(f: Callable[[float], float], lo: float, hi: float,
                   tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Minimise a unimodal ``f`` on ``[lo, hi]`` until the bracket is narrower than ``tol``."""
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def nearest_on_geodesic(spec: FeatureMapSpec, path: Callable[[float], Sequence[float]],
                        target: np.ndarray, samples: int = 32,
                        interval: tuple[float, float] = (0.0, 1.0),
                        tol: float = 1e-10) -> NearestResult:
    """Closest point of ``t -> U(path(t))`` to the unitary ``target``.

    Scans a uniform grid, then golden-section refines the bracket around every
    local minimum of the scan and keeps the best.  Samples whose logarithm
    falls on the branch cut are skipped and reported.
    """
    if samples < 3:
        raise ValueError("need at least 3 samples")
    a, b = interval
    target = np.asarray(target, dtype=complex)
    result = NearestResult(math.nan, math.inf)
    compiled = spec.compiled

    def distances(ts: np.ndarray) -> np.ndarray:
        result.evaluations += len(ts)
        us = compiled.unitaries(np.array([np.asarray(path(t), dtype=float) for t in ts]))
        ds = su_distances(us, np.broadcast_to(target, us.shape), strict=False)
        cut = np.isnan(ds)
        result.skipped.extend(float(t) for t in ts[cut])
        return np.where(cut, math.inf, ds)

    def dist(t: float) -> float:
        return float(distances(np.array([t]))[0])

    ts = np.linspace(a, b, samples)
    ds = distances(ts)
    if not np.isfinite(ds).any():
        raise BranchCutError("every sample lies on the logarithm branch cut")
    best_t, best_d = float(ts[np.argmin(ds)]), float(np.min(ds))
    for i in range(samples):
        left = ds[i - 1] if i > 0 else math.inf
        right = ds[i + 1] if i < samples - 1 else math.inf
        if not np.isfinite(ds[i]) or ds[i] > left or ds[i] > right:
            continue
        lo, hi = float(ts[max(i - 1, 0)]), float(ts[min(i + 1, samples - 1)])
        t, d = golden_section(dist, lo, hi, tol)
        if d < best_d:
            best_t, best_d = t, d
    result.t, result.distance = best_t, best_d
    return result
