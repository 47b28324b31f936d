"""Independent dense-matrix reference implementations.

Nothing here imports qfmgeom: Pauli strings are Kronecker products, the
exponential is a scaled-and-squared Taylor series, and every bracket is a
plain matrix commutator.  The library is checked against these.
"""

from __future__ import annotations

import math
from functools import reduce

import numpy as np

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(label: str) -> np.ndarray:
    return reduce(np.kron, [SIGMA[c] for c in label])


def skew(terms: dict[str, float]) -> np.ndarray:
    """``-i sum_P c_P P`` as a dense matrix."""
    labels = list(terms)
    out = np.zeros((2 ** len(labels[0]),) * 2, dtype=complex)
    for p, c in terms.items():
        out += -1j * c * pauli(p)
    return out


def coefficients(a: np.ndarray, labels) -> dict[str, float]:
    """Read ``c_P`` back from ``a = -i sum c_P P``."""
    dim = a.shape[0]
    return {p: float(np.real(np.trace(pauli(p) @ (1j * a))) / dim) for p in labels}


def comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def expm_taylor(a: np.ndarray, terms: int = 40) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    nrm = np.linalg.norm(a, 1)
    s = max(0, int(math.ceil(math.log2(nrm))) + 1) if nrm > 0 else 0
    b = a / 2**s
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def metric(h: np.ndarray, k: np.ndarray) -> float:
    return float(np.real(np.trace(h.conj().T @ k)) / h.shape[0])


def ad_series(l: np.ndarray, dl: np.ndarray, order: int) -> np.ndarray:
    """Partial sum ``sum_{q<=Q} (-1)^q/(q+1)! ad_L^q(dL)``."""
    out = np.zeros_like(dl)
    term = dl.copy()
    for q in range(order + 1):
        out = out + (-1) ** q / math.factorial(q + 1) * term
        term = comm(l, term)
    return out


def connection(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 0.5 * comm(x, y)


def curvature(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``R(X,Y)Z = nabla_[X,Y] Z - nabla_X nabla_Y Z + nabla_Y nabla_X Z``."""
    nab = connection
    return nab(comm(x, y), z) - nab(x, nab(y, z)) + nab(y, nab(x, z))


def sectional(x: np.ndarray, y: np.ndarray) -> float:
    denom = metric(x, x) * metric(y, y) - metric(x, y) ** 2
    return metric(curvature(x, y, x), y) / denom


def gram_schmidt(vectors: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    for v in vectors:
        r = v - sum(metric(e, v) * e for e in out) if out else v
        out.append(r / math.sqrt(metric(r, r)))
    return out


# -- the two example maps, written out by hand -------------------------------

def iqp_L(p1: float, p2: float) -> np.ndarray:
    return skew({"YI": p1, "IY": p2, "XX": p1 * p2})


def iqp_partials(p1: float, p2: float) -> list[np.ndarray]:
    return [skew({"YI": 1.0, "IY": 0.0, "XX": p2}), skew({"YI": 0.0, "IY": 1.0, "XX": p1})]


def angle_L(x: float, y: float) -> np.ndarray:
    return skew({"XI": x, "IX": y})


def iqp_bars(p1: float, p2: float, order: int) -> list[np.ndarray]:
    l = iqp_L(p1, p2)
    return [ad_series(l, d, order) for d in iqp_partials(p1, p2)]


def iqp_sectional(p1: float, p2: float, order: int) -> float:
    """Coordinate-frame sectional curvature of the IQP map, brute force."""
    e1, e2 = gram_schmidt(iqp_bars(p1, p2, order))
    return sectional(e1, e2)


def iqp_sectional_q0_closed_form(p1: float, p2: float) -> float:
    # X = d1 = YI + p2 XX, Y = d2 = IY + p1 XX (as -i Pauli sums).
    # |X|^2 = 1 + p2^2, |Y|^2 = 1 + p1^2, <X,Y> = p1 p2.
    # [X, Y] has a ZX part of size 2 p1 and an XZ part of size 2 p2, so
    # |[X,Y]|^2 = 4 (p1^2 + p2^2) and
    # kappa = 1/4 |[X,Y]|^2 / (|X|^2 |Y|^2 - <X,Y>^2).
    return (p1**2 + p2**2) / (1 + p1**2 + p2**2)


def fd_derivative(f, t: float, h: float = 1e-5) -> np.ndarray:
    return (f(t + h) - f(t - h)) / (2 * h)


def half_plane_distance(p1, p2) -> float:
    x1, y1 = p1
    x2, y2 = p2
    if abs(x1 - x2) <= 1e-12:
        return abs(y1 - y2)
    num = math.dist(p1, p2) + math.dist(p2, (x1, -y1))
    return 2 * math.log(num / (2 * math.sqrt(y1 * y2)))
