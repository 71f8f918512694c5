"""Similarity-graph construction for the clustering pipeline.

Raw data points become a symmetric nonnegative similarity matrix in three
steps: a k-nearest-neighbor graph on Euclidean distances (symmetrized by
taking the union of the two directions), a Gaussian kernel with
self-tuning per-point bandwidths (each point's scale is its distance to
its k-th nearest neighbor), and symmetric degree normalization
``X = D^{-1/2} A D^{-1/2}``.  The kernel diagonal is zeroed before
normalization, so self-similarity never dominates the degrees.

The result is symmetric and entrywise in ``[0, 1]`` but in general
indefinite, which is why the penalty-threshold rule works with the
smallest eigenvalue rather than assuming positive semidefiniteness.
"""

import numpy as np

from .dense import as_matrix

__all__ = ["DEFAULT_NEIGHBOR_COUNT", "build_similarity"]

DEFAULT_NEIGHBOR_COUNT = 7

# Floor for self-tuning scales when duplicate points collapse a neighbor
# distance to zero.
_SCALE_FLOOR = 1e-12


def pairwise_sq_distances(points):
    """Dense matrix of squared Euclidean distances between rows."""
    sq = np.sum(points * points, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(d2, 0.0, out=d2)
    # Exact zeros on the diagonal regardless of rounding.
    np.fill_diagonal(d2, 0.0)
    return (d2 + d2.T) / 2.0


def build_similarity(points, neighbor_count=DEFAULT_NEIGHBOR_COUNT):
    """Self-tuned, degree-normalized affinity matrix of a point set.

    Parameters
    ----------
    points : (m, d) array_like
        One sample per row.
    neighbor_count : int
        Neighborhood size for both the graph sparsification and the
        self-tuning scales; must be positive and smaller than the number
        of points.

    Returns
    -------
    numpy.ndarray
        Symmetric m-by-m matrix with zero diagonal, nonnegative entries
        bounded by 1.
    """
    points = as_matrix(points, name="points")
    m = points.shape[0]
    if m < 2:
        raise ValueError("at least two points are required")
    if not (1 <= neighbor_count < m):
        raise ValueError(
            f"neighbor_count must be in [1, {m - 1}], got {neighbor_count}"
        )

    d2 = pairwise_sq_distances(points)

    # Self-tuning scale: distance to the neighbor_count-th nearest other
    # point (column 0 after partition is the point itself at distance 0).
    order = np.partition(d2, neighbor_count, axis=1)
    sigma = np.sqrt(order[:, neighbor_count])
    np.maximum(sigma, _SCALE_FLOOR, out=sigma)

    affinity = np.exp(-d2 / np.outer(sigma, sigma))
    np.fill_diagonal(affinity, 0.0)

    # Union k-nearest-neighbor mask: keep an edge if either endpoint ranks
    # the other among its neighbor_count closest points.
    nearest = np.argsort(d2, axis=1, kind="stable")[:, 1 : neighbor_count + 1]
    mask = np.zeros((m, m), dtype=bool)
    rows = np.repeat(np.arange(m), neighbor_count)
    mask[rows, nearest.ravel()] = True
    mask |= mask.T
    affinity[~mask] = 0.0

    # Degrees are positive unless an extreme outlier underflows every one
    # of its kernel values; flooring keeps the normalization NaN-free (the
    # affected row is exactly zero either way).
    degrees = np.maximum(affinity.sum(axis=1), 1e-300)
    inv_sqrt = 1.0 / np.sqrt(degrees)
    x = affinity * np.outer(inv_sqrt, inv_sqrt)
    return x
