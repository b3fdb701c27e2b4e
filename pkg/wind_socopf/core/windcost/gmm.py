"""One-dimensional Gaussian mixture model of wind farm output (MW)."""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from scipy.stats import norm

from ..errors import WindDataError

logger = logging.getLogger(__name__)

VARIANCE_FLOOR_FACTOR = 1e-6


@dataclass(frozen=True, eq=False)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray
    support_max: float

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float, ndmin=1)
        means = np.array(self.means, dtype=float, ndmin=1)
        stddevs = np.array(self.stddevs, dtype=float, ndmin=1)
        if not (weights.shape == means.shape == stddevs.shape) or weights.ndim != 1:
            raise ValueError("weights, means and stddevs must be 1-D arrays of equal length")
        if weights.size == 0:
            raise ValueError("a GMM needs at least one component")
        if np.any(weights <= 0.0):
            raise ValueError("GMM weights must be positive")
        if np.any(stddevs <= 0.0) or not np.all(np.isfinite(stddevs)):
            raise ValueError("GMM standard deviations must be positive and finite")
        weights = weights / weights.sum()
        for arr in (weights, means, stddevs):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stddevs", stddevs)
        object.__setattr__(self, "support_max", float(self.support_max))

    @property
    def K(self) -> int:
        return int(self.weights.size)

    def pdf(self, x: Any) -> Any:
        return gmm_pdf(self, x)

    def cdf(self, x: Any) -> Any:
        return gmm_cdf(self, x)

    def sample(self, n: int, seed: Optional[int] = None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        component = rng.choice(self.K, size=n, p=self.weights)
        return rng.normal(self.means[component], self.stddevs[component])

    def to_dict(self) -> dict[str, Any]:
        return {
            "K": self.K,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stddevs": self.stddevs.tolist(),
            "support_max": self.support_max,
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "GmmModel":
        try:
            model = cls(
                weights=payload["weights"],
                means=payload["means"],
                stddevs=payload["stddevs"],
                support_max=payload["support_max"],
            )
        except (KeyError, TypeError, ValueError) as e:
            raise WindDataError(f"invalid GMM description: {e}") from e
        if "K" in payload and int(payload["K"]) != model.K:
            raise WindDataError(f"GMM declares K={payload['K']} but has {model.K} components")
        return model


@dataclass(frozen=True, eq=False)
class GmmFit:
    model: GmmModel
    log_likelihoods: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    @property
    def log_likelihood(self) -> float:
        return self.log_likelihoods[-1] if self.log_likelihoods else float("nan")


def _shaped(values: np.ndarray, shape: tuple) -> Any:
    values = values.reshape(shape)
    return values if values.ndim else float(values)


def gmm_pdf(model: GmmModel, x: Any) -> Any:
    x = np.asarray(x, dtype=float)
    values = norm.pdf(x.reshape(-1, 1), model.means, model.stddevs) @ model.weights
    return _shaped(values, x.shape)


def gmm_cdf(model: GmmModel, x: Any) -> Any:
    x = np.asarray(x, dtype=float)
    values = norm.cdf(x.reshape(-1, 1), model.means, model.stddevs) @ model.weights
    return _shaped(np.clip(values, 0.0, 1.0), x.shape)


def truncated_first_moment(model: GmmModel, dn: Any, up: Any) -> Any:
    """Integral of v·f(v) over [dn, up] (either limit may be infinite)."""
    dn, up = np.broadcast_arrays(np.asarray(dn, dtype=float), np.asarray(up, dtype=float))
    shape = dn.shape
    dn, up = dn.reshape(-1, 1), up.reshape(-1, 1)
    mu, sigma = model.means, model.stddevs
    # norm.pdf is 0 at ±inf
    terms = sigma**2 * (norm.pdf(dn, mu, sigma) - norm.pdf(up, mu, sigma)) + mu * (
        norm.cdf(up, mu, sigma) - norm.cdf(dn, mu, sigma)
    )
    return _shaped(terms @ model.weights, shape)


def _variance_floor(samples: np.ndarray) -> float:
    spread = float(np.ptp(samples)) if samples.size else 0.0
    return VARIANCE_FLOOR_FACTOR * max(spread, 1.0) ** 2


def _kmeans_pp_centres(samples: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    centres = [samples[rng.integers(samples.size)]]
    for _ in range(1, K):
        d2 = np.min((samples[:, None] - np.array(centres)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total <= 0.0:
            centres.append(samples[rng.integers(samples.size)])
            continue
        centres.append(samples[rng.choice(samples.size, p=d2 / total)])
    return np.sort(np.array(centres, dtype=float))


def _initial_parameters(
    samples: np.ndarray, K: int, rng: np.random.Generator, floor: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    centres = _kmeans_pp_centres(samples, K, rng)
    labels = np.argmin(np.abs(samples[:, None] - centres[None, :]), axis=1)
    weights = np.empty(K)
    variances = np.empty(K)
    overall = max(float(np.var(samples)), floor)
    for k in range(K):
        members = samples[labels == k]
        weights[k] = max(members.size, 1)
        variances[k] = max(float(np.var(members)), floor) if members.size > 1 else overall
    return weights / weights.sum(), centres, variances


def fit_gmm_em(
    samples: Any,
    K: int = 12,
    max_iter: int = 500,
    tol: float = 1e-8,
    seed: int = 0,
    support_max: Optional[float] = None,
) -> GmmFit:
    """Fit a K-component GMM by expectation-maximization.

    Initialization is k-means++ with ``seed``; variances are floored at
    1e-6·(sample range)². The log-likelihood trace is nondecreasing.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    samples = samples[np.isfinite(samples)]
    if K < 1:
        raise WindDataError(f"K must be at least 1 (got {K})")
    if samples.size < 10 * K:
        raise WindDataError(
            f"need at least {10 * K} samples for a {K}-component fit, got {samples.size}"
        )
    if support_max is None:
        support_max = float(samples.max())

    floor = _variance_floor(samples)
    n = samples.size

    if np.ptp(samples) == 0.0:
        logger.warning("all wind samples identical, falling back to a single component")
        model = GmmModel([1.0], [samples[0]], [np.sqrt(floor)], support_max)
        ll = float(np.sum(norm.logpdf(samples, samples[0], np.sqrt(floor))))
        return GmmFit(model, [ll], converged=True, iterations=0)

    if K == 1:
        mean = float(np.mean(samples))
        var = max(float(np.var(samples)), floor)
        model = GmmModel([1.0], [mean], [np.sqrt(var)], support_max)
        ll = float(np.sum(norm.logpdf(samples, mean, np.sqrt(var))))
        return GmmFit(model, [ll], converged=True, iterations=0)

    rng = np.random.default_rng(seed)
    weights, means, variances = _initial_parameters(samples, K, rng, floor)

    log_likelihoods: list[float] = []
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        # E-step
        log_prob = np.log(weights) + norm.logpdf(samples[:, None], means, np.sqrt(variances))
        log_norm = logsumexp(log_prob, axis=1)
        ll = float(log_norm.sum())
        log_likelihoods.append(ll)
        if len(log_likelihoods) > 1:
            previous = log_likelihoods[-2]
            if abs(ll - previous) <= tol * abs(previous):
                converged = True
                break
        resp = np.exp(log_prob - log_norm[:, None])

        # M-step
        nk = np.maximum(resp.sum(axis=0), np.finfo(float).tiny)
        weights = np.maximum(nk / n, np.finfo(float).tiny)
        weights /= weights.sum()
        means = resp.T @ samples / nk
        variances = np.maximum((resp * (samples[:, None] - means) ** 2).sum(axis=0) / nk, floor)

    if not converged:
        logger.warning(f"EM stopped after {max_iter} iterations without meeting tol={tol}")

    order = np.argsort(means, kind="stable")
    model = GmmModel(weights[order], means[order], np.sqrt(variances[order]), support_max)
    return GmmFit(model, log_likelihoods, converged=converged, iterations=iteration)


def density_table(model: GmmModel, samples: Any, bins: int = 50) -> pd.DataFrame:
    """Histogram density of the samples next to the model's mean density per bin."""
    samples = np.asarray(samples, dtype=float).ravel()
    empirical, edges = np.histogram(samples, bins=bins, density=True)
    left, right = edges[:-1], edges[1:]
    model_density = (gmm_cdf(model, right) - gmm_cdf(model, left)) / (right - left)
    return pd.DataFrame(
        {
            "bin_left": left,
            "bin_right": right,
            "empirical_density": empirical,
            "model_density": model_density,
        }
    )


def load_wind_samples(path: str) -> np.ndarray:
    """Read MW samples from the first column of a CSV file (header optional)."""
    try:
        frame = pd.read_csv(path, header=None)
    except (OSError, pd.errors.EmptyDataError) as e:
        raise WindDataError(f"cannot read wind data {path}: {e}") from e
    values = pd.to_numeric(frame.iloc[:, 0], errors="coerce").dropna().to_numpy(dtype=float)
    if values.size == 0:
        raise WindDataError(f"{path}: no numeric wind samples")
    return values


def save_gmm_json(model: GmmModel, path: str) -> None:
    with open(path, "w") as f:
        json.dump(model.to_dict(), f, indent=2)


def load_gmm_json(path: str) -> GmmModel:
    try:
        with open(path, "r") as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise WindDataError(f"cannot read GMM file {path}: {e}") from e
    return GmmModel.from_dict(payload)
