"""Truncated tangent series versus a finite difference of the dense exponential.

Prints, for a few IQP points, the spectral radius of ``ad_{L(p)}`` and the
relative error of the order-Q series for several Q.  This shows that the
series converges everywhere but needs high orders once the radius passes ~3.
"""

from __future__ import annotations

import numpy as np

from qfmgeom.feature_map import eval_L, eval_U, iqp_map, tangent
from qfmgeom.geometry import adjoint_matrix

ORDERS = (0, 3, 8, 12)
POINTS = [(0.1, 0.1), (0.3, 0.3), (0.5, 0.5), (1.0, 0.1), (-1.0, 1.1), (1.0, 1.1)]


def fd_tangent(spec, p, v, h=1e-5):
    p, v = np.asarray(p, float), np.asarray(v, float)
    return (eval_U(spec, p + h * v) - eval_U(spec, p - h * v)) / (2 * h)


def ad_radius(spec, p):
    ad = adjoint_matrix(eval_L(spec, p), spec.closure)
    return float(np.max(np.abs(np.linalg.eigvals(ad))))


def main():
    spec = iqp_map()
    v = np.array([1.0, 1.0]) / np.sqrt(2)
    print("point".ljust(14) + "rho".rjust(8) + "".join(f"Q={q}".rjust(12) for q in ORDERS))
    for p in POINTS:
        ref = fd_tangent(spec, p, v)
        u = eval_U(spec, p)
        errs = []
        for q in ORDERS:
            approx = u @ tangent(spec, p, v, q).bar.to_dense()
            errs.append(np.linalg.norm(approx - ref) / np.linalg.norm(ref))
        print(f"{str(p):14s}{ad_radius(spec, p):8.3f}" + "".join(f"{e:12.3e}" for e in errs))


if __name__ == "__main__":
    main()
