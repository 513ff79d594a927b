"""Gaussian process regression with an ARD Matern 5/2 kernel.

Targets are standardized internally (optional), hyperparameters are fitted by
multi-start maximization of the log marginal likelihood, and the trained model
caches the Cholesky factor of the kernel matrix for fast posterior queries.
Fitted models are immutable; `with_extra_point` returns a new model conditioned
on an additional observation without refitting hyperparameters.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

SQRT5 = np.sqrt(5.0)

LENGTHSCALE_BOUNDS = (0.01, 10.0)
SIGNAL_VARIANCE_BOUNDS = (1e-3, 1e3)
NOISE_VARIANCE_BOUNDS = (1e-8, 1.0)

JITTER_START = 1e-10
JITTER_MAX = 1e-4


class GprError(RuntimeError):
    """Numerical failure while fitting or factorizing."""


@dataclass(frozen=True)
class KernelHyperparams:
    """ARD Matern 5/2 hyperparameters in normalized-input / standardized-target units."""

    lengthscales: tuple[float, ...]
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        if any(l <= 0 for l in self.lengthscales):
            raise ValueError("lengthscales must be positive")
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")

    def to_dict(self) -> dict:
        return {"lengthscales": list(self.lengthscales),
                "signal_variance": self.signal_variance,
                "noise_variance": self.noise_variance}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelHyperparams":
        return cls(lengthscales=tuple(float(x) for x in d["lengthscales"]),
                   signal_variance=float(d["signal_variance"]),
                   noise_variance=float(d["noise_variance"]))


def matern52_ard(u, v, hp: KernelHyperparams) -> np.ndarray | float:
    """Covariance between points (or arrays of points) in normalized coordinates.

    k = sv * (1 + sqrt5*r + 5/3 r^2) * exp(-sqrt5*r), r^2 = sum_i ((u_i-v_i)/l_i)^2.
    """
    ua = np.atleast_2d(np.asarray(u, dtype=float))
    va = np.atleast_2d(np.asarray(v, dtype=float))
    ls = np.asarray(hp.lengthscales, dtype=float)
    if ua.shape[1] != ls.size or va.shape[1] != ls.size:
        raise ValueError("point dimension does not match lengthscales")
    du = ua[:, None, :] / ls - va[None, :, :] / ls
    r = np.sqrt(np.sum(du * du, axis=2))
    k = hp.signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-SQRT5 * r)
    if np.ndim(u) == 1 and np.ndim(v) == 1:
        return float(k[0, 0])
    return k


def _cholesky_with_jitter(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky of `a`, escalating diagonal jitter on failure."""
    jitter = 0.0
    try:
        return np.linalg.cholesky(a), jitter
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER_START
    while jitter <= JITTER_MAX:
        try:
            return np.linalg.cholesky(a + jitter * np.eye(a.shape[0])), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise GprError("kernel matrix not positive definite even at maximum jitter")


def log_marginal_likelihood(inputs: np.ndarray, targets: np.ndarray,
                            hp: KernelHyperparams) -> float:
    """LML of standardized targets under the kernel: the fitting objective."""
    x = np.atleast_2d(inputs)
    y = np.asarray(targets, dtype=float).ravel()
    n = len(y)
    k = matern52_ard(x, x, hp) + hp.noise_variance * np.eye(n)
    chol, _ = _cholesky_with_jitter(k)
    alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, y))
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * y @ alpha - 0.5 * logdet - 0.5 * n * np.log(2.0 * np.pi))


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 8
    seed: int = 0
    pin_noise: float | None = None   # fix noise_variance instead of fitting it
    standardize: bool = True
    maxiter: int = 400


@dataclass(frozen=True)
class SurrogateModel:
    """A fitted GP for one scalar target.

    inputs are normalized coordinates; raw_targets stay in original units.
    chol/alpha cache the factorization of (K + noise I) against standardized
    targets, so posterior queries are matrix-vector products. point_noise,
    when set, carries per-observation noise variances (believer fantasies are
    conditioned noise-free).
    """

    inputs: np.ndarray
    raw_targets: np.ndarray
    target_mean: float
    target_std: float
    hyperparams: KernelHyperparams
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    lml: float = float("nan")
    point_noise: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.raw_targets)

    def standardized_targets(self) -> np.ndarray:
        return (self.raw_targets - self.target_mean) / self.target_std

    def posterior(self, queries) -> tuple[np.ndarray, np.ndarray]:
        """Latent posterior mean and std at query points, in original units.

        Predictive std excludes observation noise.
        """
        q = np.atleast_2d(np.asarray(queries, dtype=float))
        kstar = matern52_ard(q, self.inputs, self.hyperparams)
        mean_std_units = kstar @ self.alpha
        v = np.linalg.solve(self.chol, kstar.T)
        var = self.hyperparams.signal_variance - np.sum(v * v, axis=0)
        var = np.maximum(var, 0.0)
        mean = mean_std_units * self.target_std + self.target_mean
        std = np.sqrt(var) * self.target_std
        return mean, std

    def with_extra_point(self, x, raw_target: float,
                         noise_variance: float = 0.0) -> "SurrogateModel":
        """Condition on one more observation, keeping hyperparameters fixed.

        The default zero noise is the believer convention: the added value is
        trusted exactly, so the posterior collapses onto it there.
        """
        x = np.asarray(x, dtype=float).reshape(1, -1)
        inputs = np.vstack([self.inputs, x])
        raw = np.append(self.raw_targets, raw_target)
        base_noise = (self.point_noise if self.point_noise is not None
                      else np.full(self.n, self.hyperparams.noise_variance))
        point_noise = np.append(base_noise, noise_variance)
        chol, alpha = _factorize(inputs,
                                 (raw - self.target_mean) / self.target_std,
                                 self.hyperparams, point_noise)
        return replace(self, inputs=inputs, raw_targets=raw, chol=chol,
                       alpha=alpha, point_noise=point_noise)

    def snapshot(self) -> dict:
        return {"hyperparams": self.hyperparams.to_dict(),
                "target_mean": self.target_mean,
                "target_std": self.target_std}


def _factorize(inputs: np.ndarray, std_targets: np.ndarray,
               hp: KernelHyperparams,
               point_noise: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    n = len(std_targets)
    noise = (np.diag(point_noise) if point_noise is not None
             else hp.noise_variance * np.eye(n))
    k = matern52_ard(inputs, inputs, hp) + noise
    chol, _ = _cholesky_with_jitter(k)
    alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, std_targets))
    return chol, alpha


def _initial_starts(ndim: int, restarts: int, rng: np.random.Generator,
                    pin_noise: float | None) -> list[np.ndarray]:
    """Log-space starting points. The first start is canonical; later ones are
    seeded perturbations, generated sequentially so a longer run extends a
    shorter one."""
    starts = []
    base_ls = np.full(ndim, np.sqrt(0.1 * 2.0))  # geometric middle of [0.1, 2]
    base = np.concatenate([np.log(base_ls), [np.log(1.0)],
                           [] if pin_noise is not None else [np.log(1e-2)]])
    starts.append(base)
    for _ in range(restarts - 1):
        ls = np.exp(rng.uniform(np.log(0.1), np.log(2.0), size=ndim))
        sv = np.exp(rng.normal(0.0, 0.5))
        vec = [np.log(ls), [np.log(np.clip(sv, *SIGNAL_VARIANCE_BOUNDS))]]
        if pin_noise is None:
            nv = 10 ** rng.uniform(-4, -0.5)
            vec.append([np.log(nv)])
        starts.append(np.concatenate(vec))
    return starts


def _unpack(theta: np.ndarray, ndim: int, pin_noise: float | None) -> KernelHyperparams:
    ls = np.exp(np.clip(theta[:ndim],
                        np.log(LENGTHSCALE_BOUNDS[0]), np.log(LENGTHSCALE_BOUNDS[1])))
    sv = float(np.exp(np.clip(theta[ndim],
                              np.log(SIGNAL_VARIANCE_BOUNDS[0]),
                              np.log(SIGNAL_VARIANCE_BOUNDS[1]))))
    if pin_noise is not None:
        nv = pin_noise
    else:
        nv = float(np.exp(np.clip(theta[ndim + 1],
                                  np.log(NOISE_VARIANCE_BOUNDS[0]),
                                  np.log(NOISE_VARIANCE_BOUNDS[1]))))
    return KernelHyperparams(tuple(float(l) for l in ls), sv, nv)


def fit(inputs, raw_targets, config: FitConfig = FitConfig()) -> SurrogateModel:
    """Fit hyperparameters by multi-start local search on the LML.

    The achieved LML is at least that of every starting point, and the result
    is deterministic for a given seed. With a single training point the prior
    is returned unfitted (nothing to learn).
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(raw_targets, dtype=float).ravel()
    if len(y) != x.shape[0]:
        raise ValueError("inputs and targets length mismatch")
    if len(y) < 1:
        raise ValueError("need at least one observation")
    ndim = x.shape[1]

    if config.standardize:
        mean = float(np.mean(y))
        std = float(np.std(y))
        if std < 1e-12:
            std = 1.0
    else:
        mean, std = 0.0, 1.0
    ys = (y - mean) / std

    if len(y) == 1:
        hp = KernelHyperparams(tuple([1.0] * ndim), 1.0,
                               config.pin_noise if config.pin_noise is not None else 1e-2)
        chol, alpha = _factorize(x, ys, hp)
        return SurrogateModel(x, y, mean, std, hp, chol, alpha,
                              lml=log_marginal_likelihood(x, ys, hp))

    rng = np.random.default_rng(config.seed)
    starts = _initial_starts(ndim, max(1, config.restarts), rng, config.pin_noise)

    def neg_lml(theta: np.ndarray) -> float:
        hp = _unpack(theta, ndim, config.pin_noise)
        try:
            return -log_marginal_likelihood(x, ys, hp)
        except GprError:
            return 1e12

    best_theta, best_val = None, np.inf
    n_failed = 0
    for theta0 in starts:
        v0 = neg_lml(theta0)
        if v0 >= 1e12:
            n_failed += 1
            continue
        res = minimize(neg_lml, theta0, method="Nelder-Mead",
                       options={"maxiter": config.maxiter,
                                "xatol": 1e-4, "fatol": 1e-6})
        cand_theta, cand_val = (res.x, res.fun) if res.fun <= v0 else (theta0, v0)
        if cand_val < best_val:
            best_theta, best_val = cand_theta, cand_val
    if best_theta is None:
        raise GprError("all restarts failed to factorize the kernel matrix")

    hp = _unpack(best_theta, ndim, config.pin_noise)
    chol, alpha = _factorize(x, ys, hp)
    return SurrogateModel(x, y, mean, std, hp, chol, alpha, lml=float(-best_val))


def rebuild(inputs, raw_targets, hp: KernelHyperparams,
            target_mean: float, target_std: float) -> SurrogateModel:
    """Reconstruct a model from stored hyperparameters and training data
    (used when loading campaign snapshots)."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(raw_targets, dtype=float).ravel()
    ys = (y - target_mean) / target_std
    chol, alpha = _factorize(x, ys, hp)
    return SurrogateModel(x, y, target_mean, target_std, hp, chol, alpha,
                          lml=log_marginal_likelihood(x, ys, hp))
