"""Hamiltonian feature maps ``U(p) = exp(sum_k f_k(p) L_k)`` and their tangent vectors."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import expr as ex
from .linalg import expm_skew, expm_skew_dense
from .pauli import (PauliString, SkewHermitianOp, commutator, lie_closure,
                    structure_constants)

log = logging.getLogger(__name__)

DEFAULT_ORDER = 3
MAX_ORDER = 12


class SpecError(ValueError):
    """A feature-map specification violates its validity conditions."""


@dataclass(frozen=True)
class FeatureMapSpec:
    n_qubits: int
    coords: tuple[str, ...]
    pairs: tuple[tuple[ex.Expr, SkewHermitianOp], ...]
    name: str = ""

    @property
    def m(self) -> int:
        return len(self.coords)

    @property
    def generators(self) -> tuple[SkewHermitianOp, ...]:
        return tuple(g for _, g in self.pairs)

    @property
    def functions(self) -> tuple[ex.Expr, ...]:
        return tuple(f for f, _ in self.pairs)

    @cached_property
    def gradients(self) -> tuple[tuple[ex.Expr, ...], ...]:
        """``gradients[k][j]`` is the symbolic d f_k / d x_j."""
        return tuple(tuple(ex.differentiate(f, x) for x in self.coords) for f in self.functions)

    @cached_property
    def closure(self) -> tuple[PauliString, ...]:
        return lie_closure(self.generators)

    @cached_property
    def compiled(self) -> "CompiledFeatureMap":
        return CompiledFeatureMap(self)


def build_spec(n_qubits: int, coords: Sequence[str],
               terms: Sequence[tuple[str, SkewHermitianOp | dict]], name: str = "",
               validate: bool = True) -> FeatureMapSpec:
    """Build a spec from ``(expression text, generator)`` pairs."""
    coords = tuple(coords)
    pairs = []
    for text, gen in terms:
        if not isinstance(gen, SkewHermitianOp):
            gen = SkewHermitianOp(n_qubits, gen)
        pairs.append((ex.parse(text, coords), gen))
    spec = FeatureMapSpec(n_qubits, coords, tuple(pairs), name)
    if validate:
        validate_spec(spec)
    return spec


def spec_from_dict(data: dict, name: str = "", validate: bool = True) -> FeatureMapSpec:
    try:
        n = int(data["qubits"])
        coords = list(data["coords"])
        raw_terms = data["terms"]
    except (KeyError, TypeError) as err:
        raise SpecError(f"malformed feature-map spec: missing {err}") from None
    terms = []
    for t in raw_terms:
        gen = {}
        for entry in t["L"]:
            gen[entry["p"]] = gen.get(entry["p"], 0.0) + float(entry["c"])
        terms.append((t["f"], SkewHermitianOp(n, gen)))
    return build_spec(n, coords, terms, name=name or data.get("name", ""), validate=validate)


def spec_to_dict(spec: FeatureMapSpec) -> dict:
    out = {"qubits": spec.n_qubits, "coords": list(spec.coords), "terms": []}
    if spec.name:
        out["name"] = spec.name
    for f, gen in spec.pairs:
        out["terms"].append({
            "f": ex.to_string(f),
            "L": [{"c": c, "p": p.label} for p, c in gen.items()],
        })
    return out


def load_spec(path: str | Path, validate: bool = True) -> FeatureMapSpec:
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    return spec_from_dict(data, name=data.get("name", path.stem), validate=validate)


def dump_spec(spec: FeatureMapSpec, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2)
        fh.write("\n")


def validity_problems(spec: FeatureMapSpec) -> list[str]:
    """Every generator nonzero; every coordinate moves at least one f_k."""
    problems = []
    if not spec.pairs:
        problems.append("feature map has no terms")
    for k, (f, gen) in enumerate(spec.pairs, 1):
        if gen.is_zero():
            problems.append(f"generator L_{k} is zero")
        if gen.n_qubits != spec.n_qubits:
            problems.append(f"generator L_{k} acts on {gen.n_qubits} qubits, expected {spec.n_qubits}")
        stray = ex.variables_of(f) - set(spec.coords)
        if stray:
            problems.append(f"f_{k} uses undeclared variables {sorted(stray)}")
    for j, x in enumerate(spec.coords):
        if not any(not ex.is_zero(spec.gradients[k][j]) for k in range(len(spec.pairs))):
            problems.append(f"no f_k depends on coordinate {x!r}")
    return problems


def validate_spec(spec: FeatureMapSpec) -> FeatureMapSpec:
    problems = validity_problems(spec)
    if problems:
        raise SpecError("; ".join(problems))
    return spec


def range_warnings(spec: FeatureMapSpec, points: np.ndarray) -> list[str]:
    """Report f_k values outside the rotation range [-pi, 2 pi] on ``points``.

    Advisory only; out-of-range values are still used as given.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    env = {x: points[:, j] for j, x in enumerate(spec.coords)}
    out = []
    for k, f in enumerate(spec.functions, 1):
        vals = np.broadcast_to(ex.evaluate(f, env), (len(points),))
        lo, hi = float(np.min(vals)), float(np.max(vals))
        if lo < -math.pi or hi > 2 * math.pi:
            msg = f"f_{k} ranges over [{lo:.6g}, {hi:.6g}], outside [-pi, 2pi]"
            log.warning(msg)
            out.append(msg)
    return out


def _env(spec: FeatureMapSpec, p) -> dict[str, float]:
    p = np.asarray(p, dtype=float).ravel()
    if p.shape != (spec.m,):
        raise ValueError(f"expected a point with {spec.m} coordinates, got {p.shape}")
    return {x: float(v) for x, v in zip(spec.coords, p)}


def eval_L(spec: FeatureMapSpec, p) -> SkewHermitianOp:
    """``L(p) = sum_k f_k(p) L_k``."""
    env = _env(spec, p)
    out = SkewHermitianOp.zero(spec.n_qubits)
    for f, gen in spec.pairs:
        out = out + ex.evaluate(f, env) * gen
    return out


def eval_U(spec: FeatureMapSpec, p) -> np.ndarray:
    return expm_skew(eval_L(spec, p))


def is_commutative(spec: FeatureMapSpec) -> bool:
    """Pairwise commuting generators; such maps are classically simulable."""
    gens = spec.generators
    return all(commutator(gens[i], gens[j]).is_zero()
               for i in range(len(gens)) for j in range(i + 1, len(gens)))


is_dequantizable = is_commutative


@dataclass(frozen=True)
class TangentVector:
    """Tangent vector ``U(p) @ dense(bar)`` at ``base``; only ``bar`` is stored."""

    base: tuple[float, ...]
    order: int
    bar: SkewHermitianOp

    def full(self, spec: FeatureMapSpec) -> np.ndarray:
        return eval_U(spec, self.base) @ self.bar.to_dense()


def _check_order(order: int) -> int:
    order = int(order)
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"truncation order must lie in 0..{MAX_ORDER}, got {order}")
    return order


def dL(spec: FeatureMapSpec, p, v) -> SkewHermitianOp:
    """Directional derivative of L along the coordinate velocity ``v``."""
    env = _env(spec, p)
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (spec.m,):
        raise ValueError(f"expected a velocity with {spec.m} components")
    out = SkewHermitianOp.zero(spec.n_qubits)
    for (f, gen), grad in zip(spec.pairs, spec.gradients):
        rate = sum(float(v[j]) * ex.evaluate(g, env) for j, g in enumerate(grad) if v[j] != 0.0)
        if rate != 0.0:
            out = out + rate * gen
    return out


def tangent(spec: FeatureMapSpec, p, v, order: int = DEFAULT_ORDER) -> TangentVector:
    """Truncated series ``sum_{q<=Q} (-1)^q/(q+1)! ad_{L(p)}^q (dL)``.

    Brackets are exact over Pauli sums; for commuting generators every term
    past q = 0 vanishes and the result is dL itself.
    """
    order = _check_order(order)
    d = dL(spec, p, v)
    lp = eval_L(spec, p)
    bar = d
    term = d
    for q in range(1, order + 1):
        term = commutator(lp, term)
        if term.is_zero():
            break
        bar = bar + ((-1) ** q / math.factorial(q + 1)) * term
    base = tuple(float(x) for x in np.asarray(p, dtype=float).ravel())
    return TangentVector(base, order, bar)


def coordinate_tangents(spec: FeatureMapSpec, p, order: int = DEFAULT_ORDER) -> list[TangentVector]:
    eye = np.eye(spec.m)
    return [tangent(spec, p, eye[j], order) for j in range(spec.m)]


class CompiledFeatureMap:
    """Vectorised evaluation of a feature map over many points.

    Works in the coordinates of the Lie-closure basis: ``ad`` of each closure
    string is a precomputed real matrix, so the tangent series becomes a few
    batched matrix-vector products.  Agrees with :func:`tangent` to rounding.
    """

    def __init__(self, spec: FeatureMapSpec):
        self.spec = spec
        self.basis = spec.closure
        index = {p: i for i, p in enumerate(self.basis)}
        self.gen_coeffs = np.zeros((len(spec.pairs), len(self.basis)))
        for k, gen in enumerate(spec.generators):
            for p, c in gen.items():
                self.gen_coeffs[k, index[p]] = c
        self.structure = structure_constants(self.basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def _env(self, points: np.ndarray) -> dict[str, np.ndarray]:
        return {x: points[:, j] for j, x in enumerate(self.spec.coords)}

    def f_values(self, points: np.ndarray) -> np.ndarray:
        """(P, n) array of f_k at each point."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        env = self._env(points)
        cols = [np.broadcast_to(ex.evaluate(f, env), (len(points),)) for f in self.spec.functions]
        return np.stack(cols, axis=1)

    def f_gradients(self, points: np.ndarray) -> np.ndarray:
        """(P, n, m) array of d f_k / d x_j."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        env = self._env(points)
        out = np.empty((len(points), len(self.spec.pairs), self.spec.m))
        for k, grad in enumerate(self.spec.gradients):
            for j, g in enumerate(grad):
                out[:, k, j] = np.broadcast_to(ex.evaluate(g, env), (len(points),))
        return out

    def L_coeffs(self, points: np.ndarray) -> np.ndarray:
        return self.f_values(points) @ self.gen_coeffs

    def bar_coeffs(self, points: np.ndarray, velocities: np.ndarray,
                   order: int = DEFAULT_ORDER) -> np.ndarray:
        """(P, d) closure-basis coefficients of the tangent series at each point."""
        order = _check_order(order)
        points = np.atleast_2d(np.asarray(points, dtype=float))
        velocities = np.atleast_2d(np.asarray(velocities, dtype=float))
        rates = np.einsum("pkj,pj->pk", self.f_gradients(points), velocities)
        term = rates @ self.gen_coeffs
        bar = term.copy()
        if order == 0 or not self.structure.any():
            return bar
        ad = np.einsum("pa,acb->pcb", self.L_coeffs(points), self.structure)
        coeff = 1.0
        for q in range(1, order + 1):
            term = np.einsum("pcb,pb->pc", ad, term)
            coeff *= -1.0 / (q + 1)
            bar += coeff * term
        return bar

    def to_op(self, coeffs: np.ndarray) -> SkewHermitianOp:
        return SkewHermitianOp(self.spec.n_qubits,
                               {p: float(c) for p, c in zip(self.basis, coeffs)})

    def unitaries(self, points: np.ndarray) -> np.ndarray:
        """(P, 2^N, 2^N) stack of ``U(p)``."""
        lc = self.L_coeffs(points)
        dense = np.stack([p.to_dense() for p in self.basis])
        gens = -1j * np.einsum("pa,aij->pij", lc, dense)
        return expm_skew_dense(gens)


def angle_map() -> FeatureMapSpec:
    """Angle encoding on two qubits: ``exp(-i x X1 - i y X2)``."""
    return build_spec(2, ("x", "y"), [("x", {"XI": 1.0}), ("y", {"IX": 1.0})], name="angle")


def iqp_map() -> FeatureMapSpec:
    """IQP-style encoding: ``exp(-i x Y1 - i y Y2 - i x y X1 X2)``."""
    return build_spec(2, ("x", "y"),
                      [("x", {"YI": 1.0}), ("y", {"IY": 1.0}), ("x*y", {"XX": 1.0})],
                      name="iqp")


BUILTIN = {"angle": angle_map, "iqp": iqp_map}
