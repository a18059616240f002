"""Where the class centers come from.

Builds regular simplex center sets for a few class counts, checks the
closed-form geometry (equal norms, equal pairwise distances, equal inner
products, zero centroid), and shows the refusal when the feature dimension
is too small.
"""

import numpy as np

from simplexnet import (
    DimensionTooSmallError,
    build_centers,
    build_unit_simplex,
    pairwise_center_distance,
    validate_centers,
)


def main():
    print("unit simplex for 3 classes (2-D):")
    print(np.round(build_unit_simplex(3), 6))
    print()

    for c, d, u in [(2, 1, 64.0), (4, 3, 64.0), (10, 9, 64.0), (10, 32, 5.0)]:
        centers = build_centers(c, d, u)
        violations = validate_centers(centers)
        dist = pairwise_center_distance(c, u)
        print(
            f"C={c:<3d} d={d:<3d} u={u:<5g} pairwise distance {dist:10.4f} "
            f"inner product {-u * u / (c - 1):12.4f} violations: {violations or 'none'}"
        )

    print()
    print("a 10-class simplex cannot live in 4 dims:")
    try:
        build_centers(10, 4)
    except DimensionTooSmallError as exc:
        print(f"  refused as expected: {exc}")

    # the geometry survives any orthogonal change of basis
    centers = build_centers(5, 8, 64.0)
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((8, 8)))
    rotated = centers.centers @ q
    dists = np.linalg.norm(rotated[:, None, :] - rotated[None, :, :], axis=2)
    off = dists[~np.eye(5, dtype=bool)]
    print(f"\nafter a random rotation: distances still in [{off.min():.6f}, {off.max():.6f}]")


if __name__ == "__main__":
    main()
