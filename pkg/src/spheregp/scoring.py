"""Proper scores for point, marginal, and joint predictions.

MAE and RMSE grade mixture means, the continuous ranked probability
score grades each location's predictive mixture in closed form, and the
energy score grades joint predictive samples over the whole test set.
Lower is better for all of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import InvalidInputError

SQRT_2PI = float(np.sqrt(2.0 * np.pi))


@dataclass
class PredictiveMixture:
    """Equal-length Gaussian mixture components at one location."""

    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        self.variances = np.asarray(self.variances, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if not (len(self.means) == len(self.variances) == len(self.weights)):
            raise InvalidInputError("mixture component arrays must have equal length")
        if len(self.means) == 0:
            raise InvalidInputError("mixture needs at least one component")
        if np.any(self.variances <= 0):
            raise InvalidInputError("mixture variances must be positive")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise InvalidInputError("mixture weights must be nonnegative and sum to 1")

    @property
    def mean(self) -> float:
        return float(self.weights @ self.means)

    @property
    def variance(self) -> float:
        mu = self.mean
        return float(self.weights @ (self.variances + self.means**2) - mu**2)

    def sample(self, rng, size: int) -> np.ndarray:
        comp = rng.choice(len(self.weights), size=size, p=self.weights)
        return self.means[comp] + np.sqrt(self.variances[comp]) * rng.standard_normal(size)


def mae(point_preds, y) -> float:
    """Mean absolute error of point predictions."""
    p, t = _paired(point_preds, y)
    return float(np.mean(np.abs(p - t)))


def rmse(point_preds, y) -> float:
    """Root mean squared error of point predictions."""
    p, t = _paired(point_preds, y)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def _paired(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size == 0:
        raise InvalidInputError("predictions and observations must be equal-length and nonempty")
    return a, b


def _crps_aux(mu, v):
    """A(mu, v) = E|X| for X ~ N(mu, v)."""
    sd = np.sqrt(v)
    z = mu / sd
    return mu * (2.0 * ndtr(z) - 1.0) + 2.0 * sd * np.exp(-0.5 * z * z) / SQRT_2PI


def crps_mixture(mix: PredictiveMixture, y: float) -> float:
    """Closed-form CRPS of a Gaussian mixture at observation y."""
    w, mu, v = mix.weights, mix.means, mix.variances
    term1 = float(w @ _crps_aux(y - mu, v))
    cross = _crps_aux(mu[:, None] - mu[None, :], v[:, None] + v[None, :])
    term2 = 0.5 * float(w @ cross @ w)
    return term1 - term2


def energy_score(samples, y) -> float:
    """Energy score of joint predictive samples against the realized vector.

    score = mean_i ||x_i - y|| - (1 / 2 m^2) sum_ij ||x_i - x_j||.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    t = np.asarray(y, dtype=float).ravel()
    if x.shape[0] < 1 or x.shape[1] != t.shape[0]:
        raise InvalidInputError("need >= 1 samples whose dimension matches the observation")
    # canonical sample order makes the score exactly permutation invariant
    x = x[np.lexsort(x.T[::-1])]
    m = x.shape[0]
    term1 = float(np.mean(np.linalg.norm(x - t, axis=1)))
    # chunk the m x m pairwise norms to keep memory flat for large m
    block = max(1, int(2**24 // max(m, 1)))
    total = 0.0
    for start in range(0, m, block):
        diff = x[start : start + block, None, :] - x[None, :, :]
        total += float(np.sum(np.sqrt(np.sum(diff * diff, axis=2))))
    term2 = total / (2.0 * m**2)
    return term1 - term2


def score_record(mixtures, y_test, joint_samples, seed) -> dict:
    """Aggregate test-set scores as a flat JSON-ready record.

    MAE, RMSE, and CRPS average over test locations; the energy score is
    a single value for the whole set.
    """
    y = np.asarray(y_test, dtype=float)
    if len(mixtures) != len(y):
        raise InvalidInputError("one mixture per test observation required")
    point = np.array([m.mean for m in mixtures])
    crps = float(np.mean([crps_mixture(m, yi) for m, yi in zip(mixtures, y)]))
    return {
        "mae": mae(point, y),
        "rmse": rmse(point, y),
        "crps": crps,
        "energy": energy_score(joint_samples, y),
        "n_test": int(len(y)),
        "seed": seed,
    }
