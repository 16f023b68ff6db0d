"""Grid construction and exact Gaussian-process simulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceModel, covariance_matrix
from .errors import InvalidInputError, SimulationInfeasibleError

DENSE_GUARD = 5000

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)


@dataclass(frozen=True)
class GridSpec:
    """Regular lat/lon grid, poles excluded via band-center latitudes."""

    n_lon: int
    n_lat: int

    def __post_init__(self):
        if self.n_lon < 1 or self.n_lat < 1:
            raise InvalidInputError("grid dimensions must be positive")

    @property
    def n(self) -> int:
        return self.n_lon * self.n_lat


def latlon_grid(spec: GridSpec) -> np.ndarray:
    """Grid locations, shape (n_lat * n_lon, 2), row-major with lat outer.

    Longitudes are equally spaced over [-pi, pi) with the endpoint
    excluded; latitudes sit at the centers of n_lat equal bands of
    (-pi/2, pi/2), so the poles never appear.
    """
    lon = -np.pi + 2.0 * np.pi * np.arange(spec.n_lon) / spec.n_lon
    lat = -np.pi / 2 + np.pi * (np.arange(spec.n_lat) + 0.5) / spec.n_lat
    LON, LAT = np.meshgrid(lon, lat)  # lat varies over rows
    return np.column_stack([LON.ravel(), LAT.ravel()])


def sample_gp(model: CovarianceModel, points, seed, n_draws: int | None = None) -> np.ndarray:
    """Exact mean-zero GP realizations via dense Cholesky.

    Returns one field of length n, or an (n_draws, n) stack when
    ``n_draws`` is given (the factorization is reused across draws). The
    standard normal stream comes from numpy's PCG64 generator (ziggurat
    normals), so a fixed seed reproduces fields bit for bit; independent
    substreams can be derived with ``SeedSequence.spawn``.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    n = p.shape[0]
    if n > DENSE_GUARD:
        raise InvalidInputError(f"dense simulation guarded to n <= {DENSE_GUARD}, got {n}")
    C = covariance_matrix(p, model)
    L = None
    for jitter in JITTER_LADDER:
        try:
            L = np.linalg.cholesky(C + jitter * np.eye(n) if jitter else C)
            break
        except np.linalg.LinAlgError:
            continue
    if L is None:
        raise SimulationInfeasibleError(
            f"Cholesky failed after maximum jitter {JITTER_LADDER[-1]:g}"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if n_draws is None:
        return L @ rng.standard_normal(n)
    return rng.standard_normal((int(n_draws), n)) @ L.T
