"""Symbolic algebra of N-qubit Pauli strings and real-weighted skew-Hermitian sums.

A :class:`SkewHermitianOp` with terms ``{P: c}`` stands for the matrix
``-i * sum_P c_P * P``.  Commutators of such sums stay real-weighted, so the
whole Lie algebra can be manipulated without ever building a dense matrix.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

SYMBOLS = "IXYZ"

# (a, b) -> (power of i, product symbol) for single-qubit a*b
_SINGLE_MUL: dict[tuple[str, str], tuple[int, str]] = {}
for _a in SYMBOLS:
    _SINGLE_MUL[("I", _a)] = (0, _a)
    _SINGLE_MUL[(_a, "I")] = (0, _a)
    _SINGLE_MUL[(_a, _a)] = (0, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _SINGLE_MUL[(_a, _b)] = (1, _c)
    _SINGLE_MUL[(_b, _a)] = (3, _c)

_PHASES = (1, 1j, -1, -1j)

_SINGLE_DENSE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

#: coefficients below this magnitude are dropped from canonical form
ZERO_TOL = 1e-14


class QubitMismatchError(ValueError):
    pass


@functools.total_ordering
@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, leftmost symbol acts on qubit 1."""

    label: str

    def __post_init__(self):
        if not self.label or any(ch not in SYMBOLS for ch in self.label):
            raise ValueError(f"invalid Pauli string {self.label!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.label)

    @property
    def is_identity(self) -> bool:
        return all(ch == "I" for ch in self.label)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls("I" * n)

    @classmethod
    def single(cls, n: int, qubit: int, symbol: str) -> "PauliString":
        """``symbol`` on ``qubit`` (1-based), identity elsewhere."""
        chars = ["I"] * n
        chars[qubit - 1] = symbol
        return cls("".join(chars))

    def __lt__(self, other: "PauliString") -> bool:
        return (len(self.label), self.label) < (len(other.label), other.label)

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"

    def to_dense(self) -> np.ndarray:
        return _dense_string(self.label)


@functools.lru_cache(maxsize=4096)
def _dense_string(label: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        out = np.kron(out, _SINGLE_DENSE[ch])
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=1 << 16)
def _mul_labels(a: str, b: str) -> tuple[int, str]:
    power = 0
    chars = []
    for x, y in zip(a, b):
        k, c = _SINGLE_MUL[(x, y)]
        power += k
        chars.append(c)
    return power % 4, "".join(chars)


def _check_n(p: PauliString, q: PauliString) -> None:
    if len(p.label) != len(q.label):
        raise QubitMismatchError(f"qubit count mismatch: {p.n_qubits} vs {q.n_qubits}")


def pauli_mul(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, r)`` with ``p @ q == phase * r`` and phase in {1, i, -1, -i}."""
    _check_n(p, q)
    power, label = _mul_labels(p.label, q.label)
    return _PHASES[power], PauliString(label)


def commutes(p: PauliString, q: PauliString) -> bool:
    _check_n(p, q)
    return _mul_labels(p.label, q.label)[0] % 2 == 0


class SkewHermitianOp:
    """Immutable real combination of Pauli strings times ``-i``.

    ``SkewHermitianOp(2, {"YI": 1.0, "XX": 0.5})`` is ``-i (Y⊗I + 0.5 X⊗X)``.
    """

    __slots__ = ("_n", "_terms", "_hash")

    def __init__(self, n_qubits: int, terms: Mapping[PauliString | str, float] | None = None):
        if n_qubits < 1:
            raise ValueError("qubit count must be positive")
        acc: dict[PauliString, float] = {}
        for key, coeff in (terms or {}).items():
            p = key if isinstance(key, PauliString) else PauliString(key)
            if p.n_qubits != n_qubits:
                raise QubitMismatchError(f"{p} does not act on {n_qubits} qubits")
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise ValueError(f"non-finite coefficient for {p}")
            acc[p] = acc.get(p, 0.0) + coeff
        self._n = n_qubits
        self._terms = {p: c for p, c in sorted(acc.items()) if abs(c) >= ZERO_TOL}
        self._hash = None

    @classmethod
    def _from_clean(cls, n: int, terms: dict[PauliString, float]) -> "SkewHermitianOp":
        op = cls.__new__(cls)
        op._n = n
        op._terms = {p: terms[p] for p in sorted(terms) if abs(terms[p]) >= ZERO_TOL}
        op._hash = None
        return op

    @classmethod
    def zero(cls, n_qubits: int) -> "SkewHermitianOp":
        return cls(n_qubits)

    @classmethod
    def from_string(cls, p: PauliString | str, coeff: float = 1.0) -> "SkewHermitianOp":
        p = p if isinstance(p, PauliString) else PauliString(p)
        return cls(p.n_qubits, {p: coeff})

    @property
    def n_qubits(self) -> int:
        return self._n

    @property
    def dim(self) -> int:
        return 2**self._n

    @property
    def terms(self) -> dict[PauliString, float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def strings(self) -> tuple[PauliString, ...]:
        return tuple(self._terms)

    def coefficient(self, p: PauliString | str) -> float:
        p = p if isinstance(p, PauliString) else PauliString(p)
        return self._terms.get(p, 0.0)

    def is_zero(self) -> bool:
        return not self._terms

    def norm(self) -> float:
        """Norm induced by the normalised trace metric, i.e. the coefficient 2-norm."""
        return math.sqrt(sum(c * c for c in self._terms.values()))

    def _check(self, other: "SkewHermitianOp") -> None:
        if self._n != other._n:
            raise QubitMismatchError(f"qubit count mismatch: {self._n} vs {other._n}")

    def __add__(self, other: "SkewHermitianOp") -> "SkewHermitianOp":
        if not isinstance(other, SkewHermitianOp):
            return NotImplemented
        self._check(other)
        acc = dict(self._terms)
        for p, c in other._terms.items():
            acc[p] = acc.get(p, 0.0) + c
        return SkewHermitianOp._from_clean(self._n, acc)

    def __neg__(self) -> "SkewHermitianOp":
        return SkewHermitianOp._from_clean(self._n, {p: -c for p, c in self._terms.items()})

    def __sub__(self, other: "SkewHermitianOp") -> "SkewHermitianOp":
        if not isinstance(other, SkewHermitianOp):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar: float) -> "SkewHermitianOp":
        if isinstance(scalar, SkewHermitianOp):
            return NotImplemented
        s = float(scalar)
        return SkewHermitianOp._from_clean(self._n, {p: s * c for p, c in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "SkewHermitianOp":
        return self * (1.0 / float(scalar))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SkewHermitianOp):
            return NotImplemented
        return self._n == other._n and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._n, tuple(self._terms.items())))
        return self._hash

    def allclose(self, other: "SkewHermitianOp", atol: float = 1e-12) -> bool:
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= atol for k in keys)

    def __repr__(self) -> str:
        body = ", ".join(f"{p.label}: {c!r}" for p, c in self._terms.items())
        return f"SkewHermitianOp({self._n}, {{{body}}})"

    def to_text(self) -> str:
        """One ``coefficient string`` line per term."""
        return "".join(f"{c!r} {p.label}\n" for p, c in self._terms.items())

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "SkewHermitianOp":
        terms: dict[str, float] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'coefficient string', got {raw!r}")
            coeff, label = float(parts[0]), parts[1]
            if n_qubits is None:
                n_qubits = len(label)
            terms[label] = terms.get(label, 0.0) + coeff
        if n_qubits is None:
            raise ValueError("cannot infer qubit count from empty operator text")
        return cls(n_qubits, terms)

    def to_dense(self) -> np.ndarray:
        return to_dense(self)


def to_dense(a: SkewHermitianOp) -> np.ndarray:
    """Dense ``-i * sum c_P P`` as a ``2^N x 2^N`` complex array."""
    out = np.zeros((a.dim, a.dim), dtype=complex)
    for p, c in a.items():
        out += c * _dense_string(p.label)
    return -1j * out


def commutator(a: SkewHermitianOp, b: SkewHermitianOp) -> SkewHermitianOp:
    """Exact ``[a, b] = ab - ba`` over Pauli sums.

    Only anticommuting pairs contribute: with ``PQ = phase R`` the bracket of
    ``-i x P`` and ``-i y Q`` is ``-i (-2i phase x y) R``, a real multiple.
    """
    a._check(b)
    acc: dict[PauliString, float] = {}
    for p, x in a.items():
        for q, y in b.items():
            power, label = _mul_labels(p.label, q.label)
            if power % 2 == 0:
                continue
            r = PauliString(label)
            # phase i -> +2xy, phase -i -> -2xy
            acc[r] = acc.get(r, 0.0) + (2.0 if power == 1 else -2.0) * x * y
    return SkewHermitianOp._from_clean(a.n_qubits, acc)


def ad_power(x: SkewHermitianOp, y: SkewHermitianOp, q: int) -> SkewHermitianOp:
    """``ad_x^q (y)``."""
    for _ in range(q):
        y = commutator(x, y)
    return y


def lie_closure(generators: Iterable[SkewHermitianOp]) -> tuple[PauliString, ...]:
    """Smallest bracket-closed set of strings containing every generator string.

    Pairs are visited breadth-first in discovery order so the output is
    deterministic: generator strings first (in order of appearance), then new
    strings in the order they are produced.
    """
    gens = list(generators)
    if not gens:
        raise ValueError("lie_closure needs at least one generator")
    n = gens[0].n_qubits
    basis: list[PauliString] = []
    seen: set[PauliString] = set()
    for g in gens:
        if g.n_qubits != n:
            raise QubitMismatchError("generators act on different qubit counts")
        for p in g.strings():
            if p not in seen:
                seen.add(p)
                basis.append(p)
    j = 1
    while j < len(basis):
        for i in range(j):
            power, label = _mul_labels(basis[i].label, basis[j].label)
            if power % 2 == 0:
                continue
            r = PauliString(label)
            if r not in seen:
                seen.add(r)
                basis.append(r)
        j += 1
    return tuple(basis)


def all_strings(n: int, include_identity: bool = False) -> tuple[PauliString, ...]:
    """Every N-qubit string in lexicographic order (the su(2^N) root set by default)."""
    out = tuple(PauliString("".join(t)) for t in itertools.product(SYMBOLS, repeat=n))
    return out if include_identity else out[1:]


def structure_constants(basis: tuple[PauliString, ...]) -> np.ndarray:
    """``C[a]`` is the matrix of ``ad`` of basis element ``a`` in ``basis``.

    ``[B_a, B_b] = sum_c C[a, c, b] B_c`` where ``B_a`` is ``-i basis[a]``.
    Raises if the basis is not bracket-closed.
    """
    index = {p: i for i, p in enumerate(basis)}
    d = len(basis)
    out = np.zeros((d, d, d))
    for a, pa in enumerate(basis):
        for b, pb in enumerate(basis):
            power, label = _mul_labels(pa.label, pb.label)
            if power % 2 == 0:
                continue
            r = PauliString(label)
            if r not in index:
                raise ValueError(f"[{pa}, {pb}] leaves the basis ({r})")
            out[a, index[r], b] = 2.0 if power == 1 else -2.0
    return out
