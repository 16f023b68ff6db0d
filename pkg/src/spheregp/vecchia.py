"""Scalable likelihood and prediction via ordered conditional factorization.

The joint Gaussian density is approximated by a product of univariate
conditionals in which each observation, taken in maximum-minimum-distance
order, conditions only on its m nearest predecessors (chordal distance).
The same machinery drives kriging prediction and joint predictive
sampling at unobserved locations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceModel, LocationState, _pair_kernel, location_state
from .errors import DuplicateLocationError, InvalidInputError, NumericalSingularityError
from .geometry import pairwise_chordal, to_euclidean

LOG_2PI = float(np.log(2.0 * np.pi))

DENSE_GUARD = 5000


@dataclass
class VecchiaPlan:
    """Ordering plus truncated conditioning sets.

    ``order[i]`` is the original index of the i-th ordered point and
    ``neighbors[i]`` holds ordered positions j < i (-1 padded) of the
    min(m, i) nearest predecessors of ordered point i.
    """

    order: np.ndarray
    neighbors: np.ndarray
    m: int

    @property
    def n(self) -> int:
        return len(self.order)

    def cond_set(self, i: int) -> np.ndarray:
        """Ordered positions conditioning position i."""
        row = self.neighbors[i]
        return row[row >= 0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "m": self.m,
                "order": self.order.tolist(),
                "neighbors": [self.cond_set(i).tolist() for i in range(self.n)],
            }
        )


def maxmin_order(points) -> np.ndarray:
    """Maximum-minimum-distance ordering of locations.

    Starts from the point nearest the normalized Euclidean centroid, then
    repeatedly picks the point maximizing the minimum chordal distance to
    everything already ordered. Ties break to the smallest original index.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    n = p.shape[0]
    xyz = to_euclidean(p)
    if n > 1 and np.unique(p, axis=0).shape[0] != n:
        raise DuplicateLocationError("maxmin ordering requires distinct locations")
    center = xyz.mean(axis=0)
    norm = np.linalg.norm(center)
    if norm > 1e-12:
        center = center / norm
    d0 = np.linalg.norm(xyz - center, axis=1)
    order = np.empty(n, dtype=int)
    order[0] = int(np.argmin(d0))
    mindist = np.linalg.norm(xyz - xyz[order[0]], axis=1)
    mindist[order[0]] = -np.inf
    for i in range(1, n):
        nxt = int(np.argmax(mindist))
        order[i] = nxt
        mindist = np.minimum(mindist, np.linalg.norm(xyz - xyz[nxt], axis=1))
        mindist[nxt] = -np.inf
    return order


def nearest_neighbor_sets(ordered_points, m: int) -> np.ndarray:
    """Conditioning sets over already-ordered locations.

    Returns an (n, m) array of ordered positions, -1 padded; row i holds
    the min(m, i) predecessors nearest to point i, ties to the smallest
    position.
    """
    p = np.atleast_2d(np.asarray(ordered_points, dtype=float))
    n = p.shape[0]
    m = int(m)
    if m < 0:
        raise InvalidInputError("conditioning-set size must be nonnegative")
    xyz = to_euclidean(p)
    out = np.full((n, max(m, 0)), -1, dtype=int)
    for i in range(1, n):
        k = min(m, i)
        if k == 0:
            continue
        d = np.linalg.norm(xyz[:i] - xyz[i], axis=1)
        nearest = np.argsort(d, kind="stable")[:k]
        out[i, :k] = nearest
    return out


def build_plan(points, m: int) -> VecchiaPlan:
    """Maxmin order plus nearest-neighbor conditioning sets."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    order = maxmin_order(p)
    neighbors = nearest_neighbor_sets(p[order], m)
    return VecchiaPlan(order=order, neighbors=neighbors, m=int(m))


def _conditional_moments(state: LocationState, nugget: float, target_idx, nbr_idx, y_nbr):
    """Batched conditional Gaussian moments of targets given neighbors.

    ``nbr_idx`` is (B, k) with -1 padding; padded slots are replaced by
    independent unit-variance phantoms that do not affect the result.

    Returns (mean, var) arrays of shape (B,).
    """
    nbr_idx = np.atleast_2d(nbr_idx)
    B, k = nbr_idx.shape
    target_idx = np.asarray(target_idx, dtype=int)
    prior = state.sigma[target_idx] ** 2 + nugget
    if k == 0:
        return np.zeros(B), prior

    valid = nbr_idx >= 0
    safe = np.where(valid, nbr_idx, 0)
    K = _pair_kernel(state, safe[:, :, None], state, safe[:, None, :])
    pair_valid = valid[:, :, None] & valid[:, None, :]
    K = np.where(pair_valid, K, 0.0)
    eye = np.eye(k, dtype=bool)
    diag = K[:, eye]
    diag = np.where(valid, diag + nugget, 1.0)
    K[:, eye] = diag

    c = _pair_kernel(state, target_idx[:, None], state, safe)
    c = np.where(valid, c, 0.0)
    yn = np.where(valid, y_nbr, 0.0)

    rhs = np.stack([c, yn], axis=-1)
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        bad = _first_singular(K)
        raise NumericalSingularityError("singular conditioning covariance", index=bad)
    mean = np.einsum("bk,bk->b", c, sol[..., 1])
    var = prior - np.einsum("bk,bk->b", c, sol[..., 0])
    return mean, var


def _first_singular(K):
    for i in range(K.shape[0]):
        try:
            np.linalg.cholesky(K[i])
        except np.linalg.LinAlgError:
            return i
    return None


def vecchia_loglik(model: CovarianceModel, points, y, plan: VecchiaPlan) -> float:
    """Ordered-conditional approximation of the Gaussian log-likelihood."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) != p.shape[0]:
        raise InvalidInputError("observation and location counts differ")
    if plan.n != p.shape[0]:
        raise InvalidInputError("plan was built for a different location set")

    order = plan.order
    state = location_state(p[order], model)
    yo = y[order]
    nugget = model.nugget

    var0 = state.sigma[0] ** 2 + nugget
    ll = -0.5 * (LOG_2PI + np.log(var0) + yo[0] ** 2 / var0)
    if plan.n == 1:
        return float(ll)

    nbr = plan.neighbors[1:]
    y_nbr = np.where(nbr >= 0, yo[np.where(nbr >= 0, nbr, 0)], 0.0)
    mean, var = _conditional_moments(state, nugget, np.arange(1, plan.n), nbr, y_nbr)
    if np.any(var <= 0) or not np.all(np.isfinite(var)):
        bad = int(np.argmin(var)) + 1
        raise NumericalSingularityError(
            f"nonpositive conditional variance at ordered position {bad}", index=bad
        )
    resid = yo[1:] - mean
    ll += np.sum(-0.5 * (LOG_2PI + np.log(var) + resid**2 / var))
    return float(ll)


def exact_loglik(model: CovarianceModel, points, y) -> float:
    """Dense Gaussian log-likelihood via Cholesky (guarded to n <= 5000)."""
    from .covariance import covariance_matrix

    p = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(y, dtype=float)
    n = p.shape[0]
    if n > DENSE_GUARD:
        raise InvalidInputError(f"dense likelihood guarded to n <= {DENSE_GUARD}, got {n}")
    if len(y) != n:
        raise InvalidInputError("observation and location counts differ")
    C = covariance_matrix(p, model)
    try:
        L = np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise NumericalSingularityError(f"covariance matrix not positive definite: {exc}")
    alpha = np.linalg.solve(L, y)
    return float(-0.5 * (n * LOG_2PI + alpha @ alpha) - np.sum(np.log(np.diag(L))))


@dataclass
class GaussianPredictive:
    """Conditional Gaussian at a prediction location."""

    mean: float
    variance: float


def _prediction_neighbors(train_xyz, test_xyz, m):
    n_train = train_xyz.shape[0]
    k = min(m, n_train)
    d = pairwise_chordal(test_xyz, train_xyz)
    if k == n_train:
        return np.tile(np.arange(n_train), (test_xyz.shape[0], 1))
    return np.argsort(d, axis=1, kind="stable")[:, :k]


def vecchia_predict(model: CovarianceModel, train_points, y_train, test_points, m: int):
    """Kriging from the m nearest training observations per test location.

    Returns a list of :class:`GaussianPredictive`.
    """
    mean, var = vecchia_predict_arrays(model, train_points, y_train, test_points, m)
    return [GaussianPredictive(float(mu), float(v)) for mu, v in zip(mean, var)]


def vecchia_predict_arrays(model: CovarianceModel, train_points, y_train, test_points, m: int):
    tr = np.atleast_2d(np.asarray(train_points, dtype=float))
    te = np.atleast_2d(np.asarray(test_points, dtype=float))
    y = np.asarray(y_train, dtype=float)
    if tr.shape[0] == 0:
        raise InvalidInputError("training data must be nonempty")
    if m < 1:
        raise InvalidInputError("prediction needs at least one neighbor")

    state = location_state(np.vstack([tr, te]), model)
    n_train = tr.shape[0]
    nbr = _prediction_neighbors(state.xyz[:n_train], state.xyz[n_train:], m)
    y_nbr = y[nbr]
    target = np.arange(n_train, n_train + te.shape[0])
    mean, var = _conditional_moments(state, model.nugget, target, nbr, y_nbr)
    if np.any(var <= 0):
        # exact-interpolation case: clamp the tiny negative round-off
        if np.min(var) < -1e-8 * float(np.max(state.sigma) ** 2):
            bad = int(np.argmin(var))
            raise NumericalSingularityError(
                f"nonpositive predictive variance at test index {bad}", index=bad
            )
        var = np.maximum(var, 1e-12 * float(np.max(state.sigma) ** 2))
    return mean, var


def joint_predictive_sample(model, train_points, y_train, test_points, m, rng):
    """One draw from the joint predictive over the test locations.

    Test points are visited in maxmin order; each conditions on its m
    nearest neighbors among the training points and previously sampled
    test points.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    return joint_predictive_samples(model, train_points, y_train, test_points, m, rng, 1)[0]


def joint_predictive_samples(model, train_points, y_train, test_points, m, rng, n_draws):
    """Stacked joint predictive draws, shape (n_draws, n_test)."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    tr = np.atleast_2d(np.asarray(train_points, dtype=float))
    te = np.atleast_2d(np.asarray(test_points, dtype=float))
    y = np.asarray(y_train, dtype=float)
    if tr.shape[0] == 0:
        raise InvalidInputError("training data must be nonempty")

    order = maxmin_order(te)
    state = location_state(np.vstack([tr, te[order]]), model)
    n_train, n_test = tr.shape[0], te.shape[0]

    # Conditioning pool for ordered test point i: all train + test[<i].
    nbr = np.full((n_test, min(m, n_train + n_test - 1)), -1, dtype=int)
    for i in range(n_test):
        pool = n_train + i
        k = min(m, pool)
        d = np.linalg.norm(state.xyz[:pool] - state.xyz[n_train + i], axis=1)
        nbr[i, :k] = np.argsort(d, kind="stable")[:k]

    weights, sds = _sequential_weights(state, model.nugget, n_train, nbr)

    draws = np.empty((n_draws, n_test))
    eps = rng.standard_normal((n_draws, n_test))
    for d in range(n_draws):
        z = np.empty(n_train + n_test)
        z[:n_train] = y
        for i in range(n_test):
            row = nbr[i]
            sel = row[row >= 0]
            mu = weights[i][: len(sel)] @ z[sel] if len(sel) else 0.0
            z[n_train + i] = mu + sds[i] * eps[d, i]
        draws[d] = z[n_train:]
    inv = np.argsort(order)
    return draws[:, inv]


def _sequential_weights(state, nugget, n_train, nbr):
    """Per-point kriging weights and conditional sds for sequential sampling."""
    n_test = nbr.shape[0]
    weights, sds = [], []
    for i in range(n_test):
        row = nbr[i]
        sel = row[row >= 0]
        t = n_train + i
        prior = state.sigma[t] ** 2 + nugget
        if len(sel) == 0:
            weights.append(np.empty(0))
            sds.append(np.sqrt(prior))
            continue
        K = _pair_kernel(state, sel[:, None], state, sel[None, :])
        K[np.arange(len(sel)), np.arange(len(sel))] += nugget
        c = _pair_kernel(state, np.full(len(sel), t), state, sel)
        try:
            w = np.linalg.solve(K, c)
        except np.linalg.LinAlgError:
            raise NumericalSingularityError("singular conditioning covariance", index=i)
        v = prior - c @ w
        if v <= 0:
            if v < -1e-8 * float(state.sigma[t] ** 2):
                raise NumericalSingularityError(
                    f"nonpositive conditional variance at test position {i}", index=i
                )
            v = 1e-12 * float(state.sigma[t] ** 2)
        weights.append(w)
        sds.append(np.sqrt(v))
    return weights, np.asarray(sds)
