"""Parameter transforms, priors, and robust adaptive Metropolis sampling.

Sampling happens on an unconstrained vector: regression coefficients map
through the identity and the tangent-plane rotation angle through
kappa = (pi/2) * logistic(raw). The proposal scale adapts by rank-one
updates toward a target acceptance rate (robust adaptive Metropolis),
with step size t^(-2/3).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .covariance import CovarianceModel, GammaField, ModelKind
from .errors import (
    InvalidInputError,
    NumericalSingularityError,
    ParameterOverflowError,
)
from .scoring import PredictiveMixture
from .vecchia import VecchiaPlan, vecchia_loglik, vecchia_predict_arrays

logger = logging.getLogger(__name__)

DEFAULT_TARGET_ACCEPT = 0.234
DEFAULT_PRIOR_SD = 10.0
DEFAULT_INITIAL_SCALE = 0.1
MAX_RETAINED_DRAWS = 500

PARAM_NAMES = {
    ModelKind.ISOTROPIC: ["beta0"],
    ModelKind.AXIALLY_SYMMETRIC: ["beta10", "beta12", "beta20", "beta22"],
    ModelKind.GENERAL: ["beta10", "beta11", "beta12", "beta20", "beta21", "beta22", "kappa_raw"],
}


def n_free_params(kind: ModelKind) -> int:
    return ModelKind(kind).n_free


def kappa_from_raw(raw_kappa: float) -> float:
    return float(np.pi / 2 * expit(raw_kappa))


def raw_from_kappa(kappa: float) -> float:
    return float(logit(kappa / (np.pi / 2)))


def kappa_log_jacobian(raw_kappa: float) -> float:
    """log d(kappa)/d(raw) for the logistic map onto (0, pi/2)."""
    p = expit(raw_kappa)
    return float(np.log(np.pi / 2) + np.log(p) + np.log1p(-p))


def model_from_raw(raw, kind, *, sigma=1.0, nu=0.5, nugget=0.0) -> CovarianceModel:
    """Build the covariance model a raw parameter vector describes."""
    kind = ModelKind(kind)
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (kind.n_free,):
        raise InvalidInputError(f"{kind.value} expects {kind.n_free} free parameters, got {raw.shape}")
    if kind is ModelKind.ISOTROPIC:
        return CovarianceModel.isotropic(raw[0], sigma=sigma, nu=nu, nugget=nugget)
    if kind is ModelKind.AXIALLY_SYMMETRIC:
        return CovarianceModel.axially_symmetric(raw[0], raw[1], raw[2], raw[3], sigma=sigma, nu=nu, nugget=nugget)
    return CovarianceModel(
        GammaField(raw[0], raw[1], raw[2]),
        GammaField(raw[3], raw[4], raw[5]),
        kappa_from_raw(raw[6]),
        sigma,
        nu,
        nugget,
        ModelKind.GENERAL,
    )


def raw_from_model(model: CovarianceModel) -> np.ndarray:
    """Inverse of :func:`model_from_raw`; round-trips within 1e-12."""
    kind = ModelKind(model.kind)
    b1, b2 = model.gamma1.coefficients, model.gamma2.coefficients
    if kind is ModelKind.ISOTROPIC:
        return np.array([b1[0]])
    if kind is ModelKind.AXIALLY_SYMMETRIC:
        return np.array([b1[0], b1[2], b2[0], b2[2]])
    return np.concatenate([b1, b2, [raw_from_kappa(model.kappa)]])


def make_log_posterior(points, y, plan: VecchiaPlan, kind, *, sigma=1.0, nu=0.5, nugget=0.0, prior_sd=DEFAULT_PRIOR_SD):
    """Unnormalized log posterior over the raw parameter vector.

    Adds independent Normal(0, prior_sd^2) priors on every raw coordinate
    (``prior_sd=None`` for a flat prior) plus the log-Jacobian of the
    kappa transform when kappa is sampled. Overflow and singularity
    failures come back as -inf so proposals are rejected, never a crash.
    """
    kind = ModelKind(kind)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(y, dtype=float)

    def log_post(raw):
        raw = np.asarray(raw, dtype=float)
        try:
            model = model_from_raw(raw, kind, sigma=sigma, nu=nu, nugget=nugget)
            ll = vecchia_loglik(model, points, y, plan)
        except (ParameterOverflowError, NumericalSingularityError, FloatingPointError):
            return -np.inf
        if not np.isfinite(ll):
            return -np.inf
        lp = ll
        if prior_sd is not None:
            lp += float(-0.5 * np.sum((raw / prior_sd) ** 2))
        if kind is ModelKind.GENERAL:
            lp += kappa_log_jacobian(raw[-1])
        return lp

    return log_post


@dataclass
class Chain:
    """MCMC output: raw draws plus per-iteration diagnostics."""

    draws: np.ndarray
    log_posts: np.ndarray
    accept_flags: np.ndarray
    proposal_scale_history: np.ndarray
    param_names: list

    @property
    def n_iter(self) -> int:
        return len(self.log_posts)

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accept_flags))

    def retained(self, burn_in: int, thin: int = 1, max_draws: int = MAX_RETAINED_DRAWS) -> np.ndarray:
        """Post-burn-in draws, thinned, capped at ``max_draws`` evenly."""
        if burn_in >= self.n_iter:
            raise InvalidInputError(f"burn-in {burn_in} >= chain length {self.n_iter}")
        kept = self.draws[burn_in::thin]
        if max_draws is not None and len(kept) > max_draws:
            sel = np.linspace(0, len(kept) - 1, max_draws).round().astype(int)
            kept = kept[sel]
        return kept

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(self.param_names) + ["log_post", "accepted"])
            for i in range(self.n_iter):
                row = [f"{v:.17g}" for v in self.draws[i]]
                writer.writerow(row + [f"{self.log_posts[i]:.17g}", int(self.accept_flags[i])])

    @classmethod
    def load_csv(cls, path) -> "Chain":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            names = header[:-2]
            draws, lps, accs = [], [], []
            for row in reader:
                draws.append([float(v) for v in row[: len(names)]])
                lps.append(float(row[-2]))
                accs.append(bool(int(row[-1])))
        d = np.array(draws)
        return cls(d, np.array(lps), np.array(accs), np.empty((0, d.shape[1], d.shape[1])), names)


def run_mcmc(
    target,
    init,
    n_iter: int,
    seed,
    target_accept: float = DEFAULT_TARGET_ACCEPT,
    initial_scale: float = DEFAULT_INITIAL_SCALE,
    adapt: bool = True,
    param_names=None,
) -> Chain:
    """Robust adaptive Metropolis chain over an unnormalized log density.

    Each step proposes x + S u with u standard normal, accepts by the
    Metropolis rule, then rescales S so SS' absorbs a rank-one correction
    eta_t (alpha - target) u u' / |u|^2 with eta_t = t^(-2/3). With
    ``adapt=False`` this is fixed-scale random-walk Metropolis.
    """
    if n_iter < 1:
        raise InvalidInputError("n_iter must be at least 1")
    if not 0 < target_accept < 1:
        raise InvalidInputError("target_accept must be in (0, 1)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    d = len(x)
    S = initial_scale * np.eye(d)
    lp = _safe_target(target, x)

    draws = np.empty((n_iter, d))
    log_posts = np.empty(n_iter)
    accepts = np.zeros(n_iter, dtype=bool)
    scales = np.empty((n_iter, d, d))

    for t in range(1, n_iter + 1):
        u = rng.standard_normal(d)
        prop = x + S @ u
        lp_prop = _safe_target(target, prop)
        if lp_prop == -np.inf and lp == -np.inf:
            alpha = 0.0
        else:
            alpha = float(min(1.0, np.exp(min(lp_prop - lp, 0.0))))
        if rng.random() < alpha:
            x, lp = prop, lp_prop
            accepts[t - 1] = True
        if adapt:
            nrm2 = float(u @ u)
            if nrm2 > 0:
                eta = t ** (-2.0 / 3.0)
                c = eta * (alpha - target_accept) / nrm2
                M = S @ (np.eye(d) + c * np.outer(u, u)) @ S.T
                S = np.linalg.cholesky(M)
        draws[t - 1] = x
        log_posts[t - 1] = lp
        scales[t - 1] = S

    names = list(param_names) if param_names is not None else [f"p{i}" for i in range(d)]
    return Chain(draws, log_posts, accepts, scales, names)


def _safe_target(target, x):
    val = target(x)
    if val is None or np.isnan(val):
        logger.warning("log density returned NaN at %s; treating as -inf", x)
        return -np.inf
    return float(val)


def posterior_predictive(
    chain: Chain,
    burn_in: int,
    thin: int,
    kind,
    train_points,
    y_train,
    test_points,
    m: int,
    *,
    sigma=1.0,
    nu=0.5,
    nugget=0.0,
    max_draws=MAX_RETAINED_DRAWS,
):
    """Equal-weight Gaussian mixtures at each test location.

    One mixture component per retained posterior draw, with moments from
    nearest-neighbor kriging under that draw's covariance model.
    """
    kept = chain.retained(burn_in, thin, max_draws)
    te = np.atleast_2d(np.asarray(test_points, dtype=float))
    K, n_test = len(kept), te.shape[0]
    means = np.empty((K, n_test))
    variances = np.empty((K, n_test))
    for k, raw in enumerate(kept):
        model = model_from_raw(raw, kind, sigma=sigma, nu=nu, nugget=nugget)
        means[k], variances[k] = vecchia_predict_arrays(model, train_points, y_train, te, m)
    w = np.full(K, 1.0 / K)
    return [PredictiveMixture(means[:, j], variances[:, j], w.copy()) for j in range(n_test)]
