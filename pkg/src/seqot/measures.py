"""Measure representations: weighted point clouds, 1D grids, quantile functions, Gaussians.

Everything here is a finite-dimensional stand-in for a law on a sequence space:
a fixed truncation dimension is chosen per experiment and the types below carry
the marginals.  All objects are immutable after construction and all operations
are pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

WEIGHT_TOL = 1e-12
PRUNE_TOL = 1e-15
GRID_MASS_TOL = 1e-9

__all__ = [
    "DiscreteMeasure",
    "Quantile1D",
    "GaussianSpec",
    "Grid1D",
    "empirical_from_samples",
    "moment",
    "gaussian_w2",
    "quantile_from_grid",
    "quantile_from_discrete",
    "gaussian1d",
    "gaussian_grid",
    "mixture_grid",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


class DiscreteMeasure:
    """A probability measure supported on finitely many points of R^dim.

    Weights are normalized to sum to one; atoms with weight below 1e-15 are
    pruned after normalization (unless ``prune=False``, used when zero-weight
    atoms are needed to keep a support closed under a group action).
    Duplicate points are kept as separate atoms.
    """

    def __init__(self, points, weights=None, normalize=True, prune=True):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.ndim != 2 or points.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, dim) array")
        n = points.shape[0]
        if weights is None:
            weights = np.full(n, 1.0 / n)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (n,):
            raise ValueError(f"weights shape {weights.shape} != ({n},)")
        if np.any(weights < 0):
            raise ValueError("negative weight")
        total = weights.sum()
        if normalize:
            if total <= 0:
                raise ValueError("total mass must be positive")
            weights = weights / total
        elif abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total}, not 1")
        if prune and np.any(weights < PRUNE_TOL):
            keep = weights >= PRUNE_TOL
            points, weights = points[keep], weights[keep]
            weights = weights / weights.sum()
        self.points = _freeze(points)
        self.weights = _freeze(weights)
        self.dim = points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return f"DiscreteMeasure(n={len(self)}, dim={self.dim})"

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteMeasure":
        m = cls(d["points"], d["weights"], normalize=False, prune=False)
        if m.dim != d["dim"]:
            raise ValueError("dim field disagrees with points")
        return m

    @classmethod
    def from_json(cls, s: str) -> "DiscreteMeasure":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class Quantile1D:
    """A 1D law represented by its generalized inverse CDF on a grid in (0,1).

    Convention: left-continuous generalized inverse, so atoms of the law show
    up as flat runs in ``values``.
    """

    quantile_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.quantile_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 1:
            raise ValueError("grid/values must be matching 1D arrays")
        if np.any(g <= 0) or np.any(g >= 1):
            raise ValueError("quantile grid must lie in (0,1)")
        if np.any(np.diff(g) <= 0):
            raise ValueError("quantile grid must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise ValueError("quantile values must be nondecreasing")
        object.__setattr__(self, "quantile_grid", _freeze(g))
        object.__setattr__(self, "values", _freeze(v))

    def __call__(self, u) -> np.ndarray:
        return np.interp(u, self.quantile_grid, self.values)

    def mean(self) -> float:
        return float(np.mean(self.values))


class GaussianSpec:
    """Gaussian law N(mean, covariance); covariance symmetric positive definite."""

    def __init__(self, mean, covariance):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(covariance, dtype=float))
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise ValueError("covariance shape mismatch")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValueError("covariance not symmetric")
        if np.min(np.linalg.eigvalsh(cov)) <= 0:
            raise ValueError("covariance not positive definite")
        self.mean = _freeze(mean)
        self.covariance = _freeze(cov)
        self.dim = d

    def __repr__(self):
        return f"GaussianSpec(dim={self.dim})"

    @property
    def sigma(self) -> float:
        """Standard deviation; 1D only."""
        if self.dim != 1:
            raise ValueError("sigma is defined for 1D Gaussians")
        return math.sqrt(self.covariance[0, 0])

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "covariance": self.covariance.tolist()}


class Grid1D:
    """A 1D density tabulated on a strictly increasing node grid.

    The trapezoid integral of ``density`` over ``nodes`` is 1 (normalized on
    construction unless ``normalize=False``).  One quadrature rule — trapezoid
    — is used everywhere.
    """

    def __init__(self, nodes, density, normalize=True):
        nodes = np.asarray(nodes, dtype=float)
        density = np.asarray(density, dtype=float)
        if nodes.ndim != 1 or nodes.shape != density.shape or nodes.size < 2:
            raise ValueError("nodes/density must be matching 1D arrays, length >= 2")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(density < 0):
            raise ValueError("density must be nonnegative")
        total = np.trapezoid(density, nodes)
        if normalize:
            if total <= 0:
                raise ValueError("density integrates to zero")
            density = density / total
        elif abs(total - 1.0) > GRID_MASS_TOL:
            raise ValueError(f"density integrates to {total}, not 1")
        self.nodes = _freeze(nodes)
        self.density = _freeze(density)

    def __repr__(self):
        return f"Grid1D(n={self.nodes.size}, [{self.nodes[0]:g}, {self.nodes[-1]:g}])"

    def cdf_table(self) -> np.ndarray:
        """Cumulative trapezoid integral of the density at the nodes."""
        x, f = self.nodes, self.density
        incr = 0.5 * np.diff(x) * (f[:-1] + f[1:])
        return np.concatenate([[0.0], np.cumsum(incr)])

    def pdf(self, x) -> np.ndarray:
        return np.interp(x, self.nodes, self.density, left=0.0, right=0.0)

    def integrate(self, values_on_nodes) -> float:
        """Trapezoid integral of ``values * density`` over the grid."""
        return float(np.trapezoid(np.asarray(values_on_nodes) * self.density, self.nodes))

    def mean(self) -> float:
        return self.integrate(self.nodes)

    def sample(self, size, rng) -> np.ndarray:
        """Inverse-CDF sampling from the tabulated density."""
        u = rng.random(size)
        return _invert_cdf(self.nodes, self.cdf_table(), u)


def _invert_cdf(nodes: np.ndarray, cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Left-continuous generalized inverse of a piecewise-linear CDF."""
    u = np.asarray(u, dtype=float)
    total = cdf[-1]
    uu = np.clip(u * (total if abs(total - 1.0) > 1e-13 else 1.0), 0.0, total)
    idx = np.searchsorted(cdf, uu, side="left")
    idx = np.clip(idx, 0, cdf.size - 1)
    lo = np.maximum(idx - 1, 0)
    denom = cdf[idx] - cdf[lo]
    frac = np.where(denom > 0, (uu - cdf[lo]) / np.where(denom > 0, denom, 1.0), 0.0)
    out = nodes[lo] + frac * (nodes[idx] - nodes[lo])
    # exact hits of a flat CDF run: take the leftmost node (inf of the level set)
    exact = cdf[idx] == uu
    out = np.where(exact, nodes[idx], out)
    return out


# ---------------------------------------------------------------------------
# operations


def empirical_from_samples(samples) -> DiscreteMeasure:
    """Uniform empirical measure on the given sample points.

    Duplicate points are retained as separate atoms of weight 1/n.
    """
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if pts.size == 0:
        raise ValueError("empty sample list")
    if pts.ndim != 2:
        raise ValueError("samples must share a common dimension")
    return DiscreteMeasure(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]),
                           normalize=False, prune=False)


def moment(m: DiscreteMeasure, coordinate: int, order: int) -> float:
    """Raw moment sum_k w_k * x_k[coordinate]**order."""
    if not 0 <= coordinate < m.dim:
        raise ValueError(f"coordinate {coordinate} out of range for dim {m.dim}")
    return float(m.weights @ m.points[:, coordinate] ** order)


def _sqrtm_psd(a: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(a)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def gaussian_w2(a: GaussianSpec, b: GaussianSpec) -> float:
    """Squared Bures-Wasserstein distance between two Gaussian laws.

    ||m_a - m_b||^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2); for diagonal
    covariances this is the shift term plus sum_i (sigma_a,i - sigma_b,i)^2.
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    shift = float(np.sum((a.mean - b.mean) ** 2))
    ra = _sqrtm_psd(a.covariance)
    cross = _sqrtm_psd(ra @ b.covariance @ ra)
    bures = float(np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * np.trace(cross))
    return shift + max(bures, 0.0)


def quantile_from_grid(g: Grid1D, resolution: int) -> Quantile1D:
    """Sample the generalized inverse CDF of ``g`` at midpoints (k-1/2)/resolution."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    u = (np.arange(resolution) + 0.5) / resolution
    cdf = g.cdf_table()
    if cdf[-1] <= 0:
        raise ValueError("degenerate grid")
    return Quantile1D(u, _invert_cdf(g.nodes, cdf, u))


def quantile_from_discrete(m: DiscreteMeasure, resolution: int = 10_000) -> Quantile1D:
    """Quantile representation of a 1D discrete measure (stable monotone order)."""
    if m.dim != 1:
        raise ValueError("1D measures only")
    x = m.points[:, 0]
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], m.weights[order]
    cum = np.cumsum(ws)
    u = (np.arange(resolution) + 0.5) / resolution
    idx = np.searchsorted(cum, u, side="left")
    idx = np.clip(idx, 0, xs.size - 1)
    return Quantile1D(u, xs[idx])


# ---------------------------------------------------------------------------
# convenience constructors used throughout the experiments

DEFAULT_RADIUS = 10.0
DEFAULT_RESOLUTION = 10_000


def gaussian1d(mean: float, sigma: float) -> GaussianSpec:
    return GaussianSpec([mean], [[sigma ** 2]])


def gaussian_grid(mean: float, sigma: float, radius: float = DEFAULT_RADIUS,
                  resolution: int = DEFAULT_RESOLUTION) -> Grid1D:
    """N(mean, sigma^2) tabulated on mean +- radius*sigma."""
    x = np.linspace(mean - radius * sigma, mean + radius * sigma, resolution)
    dens = np.exp(-0.5 * ((x - mean) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    return Grid1D(x, dens)


def mixture_grid(weights, means, sigmas, lo: float = None, hi: float = None,
                 resolution: int = DEFAULT_RESOLUTION) -> Grid1D:
    """Gaussian mixture density on a common grid covering all components."""
    weights = np.asarray(weights, dtype=float)
    means = np.asarray(means, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    if lo is None:
        lo = float(np.min(means - DEFAULT_RADIUS * sigmas))
    if hi is None:
        hi = float(np.max(means + DEFAULT_RADIUS * sigmas))
    x = np.linspace(lo, hi, resolution)
    dens = np.zeros_like(x)
    for w, mu, s in zip(weights / weights.sum(), means, sigmas):
        dens += w * np.exp(-0.5 * ((x - mu) / s) ** 2) / (s * math.sqrt(2 * math.pi))
    return Grid1D(x, dens)
