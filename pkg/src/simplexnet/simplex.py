"""Regular simplex class centers on a hypersphere.

C class centers are placed at the vertices of a regular C-simplex inscribed
in an origin-centered hypersphere of radius u.  All pairwise center
distances (and angles) are then equal, so no margin hyperparameter is
needed: the geometry itself provides maximal, uniform separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Relative tolerance for the closed-form geometry checks.  The construction
# is exact up to float64 rounding, so 1e-9 leaves ample headroom.
GEOMETRY_RTOL = 1e-9

DEFAULT_RADIUS = 64.0


class DimensionTooSmallError(ValueError):
    """Raised when the feature dimension cannot host a regular C-simplex."""

    def __init__(self, num_classes: int, dim: int):
        self.num_classes = num_classes
        self.dim = dim
        super().__init__(
            f"feature dimension {dim} is too small for {num_classes} classes: "
            f"a regular {num_classes}-simplex needs dim >= {num_classes - 1}"
        )


@dataclass(frozen=True)
class SimplexCenters:
    """Fixed class centers: rows of `centers` are the simplex vertices.

    centers has shape (num_classes, dim); row j is the center of class j,
    with norm `radius`.  Instances are immutable and safe to share.
    """

    num_classes: int
    dim: int
    radius: float
    centers: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.ascontiguousarray(self.centers, dtype=np.float64)
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)
        if c.shape != (self.num_classes, self.dim):
            raise ValueError(
                f"centers shape {c.shape} does not match "
                f"({self.num_classes}, {self.dim})"
            )


@dataclass(frozen=True)
class Violation:
    """One violated geometric invariant, with the measured worst deviation."""

    invariant: str
    deviation: float
    tolerance: float

    def __str__(self):
        return (
            f"{self.invariant}: deviation {self.deviation:.3e} "
            f"exceeds tolerance {self.tolerance:.3e}"
        )


def build_unit_simplex(num_classes: int) -> np.ndarray:
    """Vertices of a regular C-simplex on the unit sphere in C-1 dims.

    Row 0 is (C-1)^(-1/2) * ones; row j (j >= 1) is kappa * ones + eta * e_{j-1}
    with kappa = -(1 + sqrt(C)) / (C-1)^(3/2) and eta = sqrt(C / (C-1)).
    Every vertex has unit norm, every pair has inner product -1/(C-1), and
    the centroid is the origin.
    """
    c = int(num_classes)
    if c < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if c == 2:
        # kappa + eta = -1 exactly; evaluating the general formula in floats
        # lands one ulp off and breaks the exact antipodal symmetry
        return np.array([[1.0], [-1.0]])
    kappa = -(1.0 + math.sqrt(c)) / (c - 1) ** 1.5
    eta = math.sqrt(c / (c - 1.0))
    verts = np.full((c, c - 1), kappa, dtype=np.float64)
    verts[0, :] = 1.0 / math.sqrt(c - 1.0)
    verts[np.arange(1, c), np.arange(c - 1)] += eta
    return verts


def build_centers(num_classes: int, dim: int, radius: float = DEFAULT_RADIUS) -> SimplexCenters:
    """Scale the unit simplex by `radius` and embed it into `dim` dimensions.

    Embedding appends dim-(C-1) zero coordinates, which preserves all norms,
    distances and angles.  Requires dim >= C-1.
    """
    c, d = int(num_classes), int(dim)
    if c < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if d < c - 1:
        raise DimensionTooSmallError(c, d)
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    verts = build_unit_simplex(c)
    centers = np.zeros((c, d), dtype=np.float64)
    centers[:, : c - 1] = radius * verts
    return SimplexCenters(num_classes=c, dim=d, radius=float(radius), centers=centers)


def pairwise_center_distance(num_classes: int, radius: float) -> float:
    """Closed-form distance between any two distinct centers: u*sqrt(2C/(C-1))."""
    return radius * math.sqrt(2.0 * num_classes / (num_classes - 1.0))


def validate_centers(centers: SimplexCenters) -> list[Violation]:
    """Check every geometric invariant; return the violations (empty if valid).

    Diagnostic only: never raises.  Checked invariants:
      * dim >= C-1
      * all row norms equal the radius (relative tol 1e-9)
      * all pairwise distances equal u*sqrt(2C/(C-1)) (relative tol 1e-9)
      * all pairwise inner products equal -u^2/(C-1) (relative tol 1e-9)
      * the centroid is the zero vector (absolute tol 1e-9 * u)
    """
    s = centers.centers
    c, u = centers.num_classes, centers.radius
    out: list[Violation] = []

    if centers.dim < c - 1:
        out.append(Violation("dim_at_least_C_minus_1", float(c - 1 - centers.dim), 0.0))

    norms = np.linalg.norm(s, axis=1)
    norm_dev = float(np.max(np.abs(norms - u)) / u)
    if norm_dev > GEOMETRY_RTOL:
        out.append(Violation("equal_row_norms", norm_dev, GEOMETRY_RTOL))

    gram = s @ s.T
    off = ~np.eye(c, dtype=bool)

    target_dist = pairwise_center_distance(c, u)
    sq = norms[:, None] ** 2 + norms[None, :] ** 2 - 2.0 * gram
    dists = np.sqrt(np.maximum(sq[off], 0.0))
    dist_dev = float(np.max(np.abs(dists - target_dist)) / target_dist)
    if dist_dev > GEOMETRY_RTOL:
        out.append(Violation("equal_pairwise_distances", dist_dev, GEOMETRY_RTOL))

    target_ip = -(u * u) / (c - 1.0)
    ip_dev = float(np.max(np.abs(gram[off] - target_ip)) / abs(target_ip))
    if ip_dev > GEOMETRY_RTOL:
        out.append(Violation("equal_pairwise_inner_products", ip_dev, GEOMETRY_RTOL))

    centroid_dev = float(np.max(np.abs(s.mean(axis=0))))
    if centroid_dev > GEOMETRY_RTOL * u:
        out.append(Violation("zero_centroid", centroid_dev, GEOMETRY_RTOL * u))

    return out
