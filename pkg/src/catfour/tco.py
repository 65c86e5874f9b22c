"""Sparse Bayesian surrogate with a regularized horseshoe prior (TCO-F).

Model, over {0,1}-convention one-hot Fourier features psi(x):

    y - f(x) ~ Normal(0, sigma),  f(x) = <alpha, psi(x)>
    alpha_i | lambda_i, tau, c ~ Normal(0, tau^2 * lt_i^2)
    lt_i^2 = c^2 lambda_i^2 / (c^2 + tau^2 lambda_i^2)
    lambda_i ~ HalfCauchy(0, 1)
    c^2 ~ InvGamma(nu/2, nu s^2 / 2)
    tau ~ HalfCauchy(0, tau0),  tau0 = d0/(d - d0) * sigma / sqrt(t)
    sigma ~ Exponential(1)

Posterior draws come from a Metropolis-within-Gibbs chain: alpha is drawn
exactly from its Gaussian conditional; the positive scale parameters move
by random-walk proposals on the log scale (vectorized across coordinates
for the local scales). Thompson sampling uses one draw per step; the
acquisition adds an L1 penalty on the active one-hot features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .basis import BasisSpec, ONE_HOT_FOURIER, ZERO_ONE

DEFAULT_ACQ_LAMBDA = 1e-5

_VAR_FLOOR = 1e-20
_VAR_CEIL = 1e20


@dataclass(frozen=True)
class HorseshoeHyper:
    nu: float = 1.0
    s2: float = 1.0
    d0: int | None = None  # None -> max(1, ceil(d / 100))

    def __post_init__(self):
        if self.nu <= 0 or self.s2 <= 0:
            raise ValueError("nu and s2 must be positive")

    def expected_relevant(self, d: int) -> int:
        d0 = self.d0 if self.d0 is not None else max(1, math.ceil(d / 100))
        if not 1 <= d0 < d:
            raise ValueError(f"d0 must lie in [1, d), got {d0} with d={d}")
        return d0


@dataclass(frozen=True)
class McmcConfig:
    warmup_draws: int = 200
    kept_draws: int = 1
    chain_seed: int = 0

    def __post_init__(self):
        if self.warmup_draws < 50:
            raise ValueError("warmup_draws must be >= 50")
        if self.kept_draws < 1:
            raise ValueError("kept_draws must be >= 1")


class TcoModel:
    """Observation store plus posterior-draw machinery."""

    def __init__(self, spec: BasisSpec,
                 hyper: HorseshoeHyper | None = None,
                 sampler_config: McmcConfig | None = None):
        if spec.kind != ONE_HOT_FOURIER or spec.convention != ZERO_ONE:
            raise ValueError("TCO requires a {0,1}-convention one_hot_fourier basis")
        self.spec = spec
        self.hyper = hyper if hyper is not None else HorseshoeHyper()
        self.sampler_config = sampler_config if sampler_config is not None else McmcConfig()
        self._rows: list[np.ndarray] = []
        self._values: list[float] = []

    @property
    def num_observations(self) -> int:
        return len(self._values)

    def observe(self, point: np.ndarray, value: float) -> "TcoModel":
        if not math.isfinite(value):
            raise ValueError(f"observed value must be finite, got {value!r}")
        self._rows.append(self.spec.eval_point(point))
        self._values.append(float(value))
        return self

    def data_matrix(self):
        return np.array(self._rows), np.array(self._values)

    def sample_coefficients(self) -> np.ndarray:
        """One approximate posterior draw of alpha, reproducible given
        (chain_seed, number of observations)."""
        cfg = self.sampler_config
        draws = self.sample_posterior(
            num_draws=cfg.kept_draws, warmup=cfg.warmup_draws, seed=cfg.chain_seed
        )
        return draws[-1]

    def sample_posterior(self, num_draws: int, warmup: int | None = None,
                         seed: int | None = None, thin: int = 1) -> np.ndarray:
        if self.num_observations == 0:
            raise ValueError("no observations: cannot sample the posterior")
        cfg = self.sampler_config
        warmup = cfg.warmup_draws if warmup is None else warmup
        seed = cfg.chain_seed if seed is None else seed
        X, y = self.data_matrix()
        chain_seed = np.random.SeedSequence((int(seed), len(y)))
        return _run_chain(
            X, y, d0=self.hyper.expected_relevant(self.spec.d),
            nu=self.hyper.nu, s2=self.hyper.s2,
            warmup=warmup, num_draws=num_draws, thin=thin,
            rng=np.random.default_rng(chain_seed),
        )


def active_feature_count(spec: BasisSpec, points: np.ndarray) -> np.ndarray:
    """Number of {0,1} one-hot indicators equal to 1, i.e. variables away
    from the reference level k-1."""
    return (np.asarray(points) != spec.space.k - 1).sum(axis=-1)


def acquisition_batch(spec: BasisSpec, coeffs: np.ndarray, points: np.ndarray,
                      reg_lambda: float = DEFAULT_ACQ_LAMBDA) -> np.ndarray:
    """Surrogate prediction plus reg_lambda * ||one-hot(x)||_1."""
    if reg_lambda < 0:
        raise ValueError("reg_lambda must be >= 0")
    return spec.eval_batch(points) @ coeffs + reg_lambda * active_feature_count(spec, points)


def acquisition(spec: BasisSpec, coeffs: np.ndarray, point: np.ndarray,
                reg_lambda: float = DEFAULT_ACQ_LAMBDA) -> float:
    return float(acquisition_batch(spec, coeffs, np.asarray(point)[None, :], reg_lambda)[0])


# -- sampler internals -------------------------------------------------------


def _prior_var(lam2, tau2, c2):
    reg = c2 * lam2 / (c2 + tau2 * lam2)
    return np.clip(tau2 * reg, _VAR_FLOOR, _VAR_CEIL)


def _scale_loglik(alpha, var):
    return float(-0.5 * np.sum(np.log(var)) - 0.5 * np.sum(alpha**2 / var))


def _draw_alpha(XtX, Xty, X, y, var, sigma2, rng):
    t, d = X.shape
    if d <= 3 * t:
        # Rue: exact Gaussian draw via the d x d posterior precision.
        A = XtX / sigma2 + np.diag(1.0 / var)
        try:
            chol = cho_factor(A, lower=True)
        except np.linalg.LinAlgError:
            A = A + 1e-8 * np.eye(d)
            chol = cho_factor(A, lower=True)
        mean = cho_solve(chol, Xty / sigma2)
        noise = solve_triangular(chol[0].T, rng.standard_normal(d), lower=False)
        return mean + noise
    # Bhattacharya et al.: O(t^2 d) draw for wide designs.
    sigma = math.sqrt(sigma2)
    u = rng.standard_normal(d) * np.sqrt(var)
    delta = rng.standard_normal(t)
    v = X @ u / sigma + delta
    M = (X * var) @ X.T / sigma2 + np.eye(t)
    w = np.linalg.solve(M, y / sigma - v)
    return u + (var * (X.T @ w)) / sigma


def _run_chain(X, y, d0, nu, s2, warmup, num_draws, thin, rng):
    t, d = X.shape
    XtX = X.T @ X
    Xty = X.T @ y
    ratio = d0 / (d - d0)

    # Diffuse start: sigma at the data scale and tau at 1 keep the first
    # sweeps from shrinking every coefficient to zero before the chain has
    # seen the likelihood (a stuck mode where sigma absorbs the signal).
    alpha = np.zeros(d)
    log_lam = np.zeros(d)
    log_sigma = math.log(max(float(np.std(y)), 1e-3))
    log_c2 = math.log(s2)
    log_tau = 0.0

    step_vec, step_scalar = 0.5, 0.3
    draws = np.empty((num_draws, d))
    kept = 0

    for sweep in range(warmup + num_draws * thin):
        lam2 = np.exp(2.0 * log_lam)
        tau2 = math.exp(2.0 * log_tau)
        c2 = math.exp(log_c2)
        sigma = math.exp(log_sigma)
        sigma2 = sigma * sigma

        var = _prior_var(lam2, tau2, c2)
        alpha = _draw_alpha(XtX, Xty, X, y, var, sigma2, rng)
        resid = y - X @ alpha
        ssr = float(resid @ resid)

        # sigma: Exponential(1) prior; tau0 depends on sigma, so the tau
        # prior term rides along.
        def sigma_target(ls):
            s = math.exp(ls)
            tau0 = ratio * s / math.sqrt(t)
            tau_prior = math.log(tau0) - math.log(tau0**2 + tau2)
            return (-t * ls - ssr / (2.0 * s * s) - s + ls) + tau_prior

        log_sigma = _mh_scalar(sigma_target, log_sigma, step_scalar, rng)
        sigma = math.exp(log_sigma)
        tau0 = ratio * sigma / math.sqrt(t)

        # local scales: vectorized elementwise MH on log lambda_i
        log_lam = _mh_local_scales(log_lam, alpha, tau2, c2, step_vec, rng)
        lam2 = np.exp(2.0 * log_lam)

        def tau_target(lt):
            t2 = math.exp(2.0 * lt)
            v = _prior_var(lam2, t2, c2)
            return (-math.log(tau0**2 + t2) + lt) + _scale_loglik(alpha, v)

        log_tau = _mh_scalar(tau_target, log_tau, step_scalar, rng)
        tau2 = math.exp(2.0 * log_tau)

        def c2_target(lc):
            cc = math.exp(lc)
            v = _prior_var(lam2, tau2, cc)
            prior = -(nu / 2.0) * lc - nu * s2 / (2.0 * cc)  # IG with jacobian
            return prior + _scale_loglik(alpha, v)

        log_c2 = _mh_scalar(c2_target, log_c2, step_scalar, rng)

        if sweep >= warmup and (sweep - warmup) % thin == 0 and kept < num_draws:
            draws[kept] = alpha
            kept += 1
    return draws


def _mh_scalar(log_target, current, step, rng):
    proposal = current + step * rng.standard_normal()
    if math.log(rng.random()) < log_target(proposal) - log_target(current):
        return proposal
    return current


def _mh_local_scales(log_lam, alpha, tau2, c2, step, rng):
    def per_coord(ll):
        lam2 = np.exp(2.0 * ll)
        var = _prior_var(lam2, tau2, c2)
        # half-Cauchy(0,1) prior with log-scale jacobian, plus normal term
        return (-np.log1p(lam2) + ll) - 0.5 * np.log(var) - 0.5 * alpha**2 / var

    proposal = log_lam + step * rng.standard_normal(log_lam.shape)
    accept = np.log(rng.random(log_lam.shape)) < per_coord(proposal) - per_coord(log_lam)
    return np.where(accept, proposal, log_lam)
