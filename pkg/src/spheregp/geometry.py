"""Coordinates, rotations, and distances on the unit sphere.

Locations are (longitude, latitude) pairs in radians, with longitude in
[-pi, pi) and latitude in [-pi/2, pi/2]. All batch functions accept an
array-like of shape (..., 2); a single ``SphericalPoint`` works as a row.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidPointError

UNIT_NORM_TOL = 1e-9


class SphericalPoint(NamedTuple):
    """A point on the unit sphere in (lon, lat) radians."""

    lon: float
    lat: float

    @classmethod
    def create(cls, lon: float, lat: float) -> "SphericalPoint":
        """Build a point, normalizing lon into [-pi, pi) and checking lat."""
        if not np.isfinite(lon) or not np.isfinite(lat):
            raise InvalidPointError(f"non-finite coordinates ({lon}, {lat})")
        if abs(lat) > np.pi / 2 + 1e-12:
            raise InvalidPointError(f"latitude {lat} outside [-pi/2, pi/2]")
        return cls(float(normalize_lon(lon)), float(np.clip(lat, -np.pi / 2, np.pi / 2)))


class EuclideanPoint(NamedTuple):
    """A point in R^3; on-sphere points have unit norm."""

    x: float
    y: float
    z: float


def normalize_lon(lon):
    """Wrap longitudes into [-pi, pi)."""
    return np.mod(np.asarray(lon, dtype=float) + np.pi, 2 * np.pi) - np.pi


def to_euclidean(points) -> np.ndarray:
    """Map (lon, lat) pairs to unit vectors (cos L cos l, cos L sin l, sin L).

    Parameters
    ----------
    points : array-like, shape (..., 2)

    Returns
    -------
    ndarray, shape (..., 3)
    """
    p = np.asarray(points, dtype=float)
    lon, lat = p[..., 0], p[..., 1]
    cl = np.cos(lat)
    return np.stack([cl * np.cos(lon), cl * np.sin(lon), np.sin(lat)], axis=-1)


def to_spherical(xyz) -> np.ndarray:
    """Inverse of :func:`to_euclidean` for unit vectors.

    Raises
    ------
    InvalidPointError
        If any input norm deviates from 1 by more than 1e-9.

    Notes
    -----
    At the poles (x = y = 0) the longitude is normalized to 0.
    """
    v = np.asarray(xyz, dtype=float)
    norms = np.sqrt(np.sum(v * v, axis=-1))
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        bad = float(np.max(np.abs(norms - 1.0)))
        raise InvalidPointError(f"input not on the unit sphere (norm error {bad:.3e})")
    lat = np.arcsin(np.clip(v[..., 2], -1.0, 1.0))
    lon = np.arctan2(v[..., 1], v[..., 0])
    # arctan2 returns (-pi, pi]; fold the single excluded endpoint.
    lon = normalize_lon(lon)
    return np.stack([lon, lat], axis=-1)


def rotation(axis: str, theta: float) -> np.ndarray:
    """Rotation matrix about a coordinate axis.

    ``rotation('x', k)`` rotates the (y, z)-plane; 'y' and 'z' follow the
    same right-handed convention.
    """
    c, s = np.cos(theta), np.sin(theta)
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == "y":
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError(f"unknown axis {axis!r}; expected 'x', 'y' or 'z'")


def frame_rotation(points) -> np.ndarray:
    """Rotation R(s) = Rz(lon) Ry(-lat) carrying (1, 0, 0) onto each point.

    Returns the stacked 3x3 matrices, shape (..., 3, 3). The first column
    of R(s) is the unit vector of s itself.
    """
    p = np.asarray(points, dtype=float)
    lon, lat = p[..., 0], p[..., 1]
    cl, sl = np.cos(lon), np.sin(lon)
    cL, sL = np.cos(lat), np.sin(lat)
    zero = np.zeros_like(cl)
    rows = [
        [cl * cL, -sl, -cl * sL],
        [sl * cL, cl, -sl * sL],
        [sL, zero, cL],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def chordal_distance(a, b) -> np.ndarray:
    """Straight-line distance through the sphere, in [0, 2]."""
    d = to_euclidean(a) - to_euclidean(b)
    return np.sqrt(np.sum(d * d, axis=-1))


def great_arc_distance(a, b) -> np.ndarray:
    """Surface distance theta = 2 arcsin(r / 2), in [0, pi]."""
    r = chordal_distance(a, b)
    return 2.0 * np.arcsin(np.clip(r / 2.0, -1.0, 1.0))


def pairwise_chordal(xyz_a, xyz_b) -> np.ndarray:
    """All chordal distances between two stacks of unit vectors.

    Parameters
    ----------
    xyz_a : ndarray, shape (n, 3)
    xyz_b : ndarray, shape (m, 3)

    Returns
    -------
    ndarray, shape (n, m)
    """
    a = np.asarray(xyz_a, dtype=float)
    b = np.asarray(xyz_b, dtype=float)
    sq = np.maximum(
        np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * (a @ b.T),
        0.0,
    )
    return np.sqrt(sq)
