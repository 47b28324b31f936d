"""Riemannian geometry of Hamiltonian quantum feature maps ``U(p) = exp(sum_k f_k(p) L_k)``."""

from .feature_map import (FeatureMapSpec, TangentVector, angle_map, build_spec, coordinate_tangents,
                          eval_L, eval_U, is_commutative, iqp_map, load_spec, tangent)
from .geometry import (CurvatureReport, Frame, curvature_report, gram_schmidt, metric,
                       nearest_on_geodesic, ricci, scalar, sectional)
from .linalg import dist_su, expm_skew, herm_eig, logm_unitary
from .manifold import ManifoldSpec, grid_points, poincare_distance, poincare_geodesic, pulled_path_length
from .pauli import PauliString, SkewHermitianOp, commutator, lie_closure

__all__ = [
    "FeatureMapSpec",
    "TangentVector",
    "angle_map",
    "build_spec",
    "coordinate_tangents",
    "eval_L",
    "eval_U",
    "is_commutative",
    "iqp_map",
    "load_spec",
    "tangent",
    "CurvatureReport",
    "Frame",
    "curvature_report",
    "gram_schmidt",
    "metric",
    "nearest_on_geodesic",
    "ricci",
    "scalar",
    "sectional",
    "dist_su",
    "expm_skew",
    "herm_eig",
    "logm_unitary",
    "ManifoldSpec",
    "grid_points",
    "poincare_distance",
    "poincare_geodesic",
    "pulled_path_length",
    "PauliString",
    "SkewHermitianOp",
    "commutator",
    "lie_closure",
]

__version__ = "0.1.0"
