"""Two-component Gaussian-mixture thermometry of IQ readout clouds.

A cloud of demodulated (I, Q) outcomes contains the two pointer states of
the qubit. An expectation-maximization fit with full (unconstrained)
covariances yields the state populations; the effective qubit temperature
follows from the two-level Boltzmann ratio

    T_q = (h f_q / k_B) / ln(p_g / p_e).

By default the heavier component is labeled ground state, valid for
T_q << h f_q / k_B; a reference center can be supplied instead for
near-degenerate populations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import H, K_B, ComputationError, IQCloud, ValidationError

__all__ = [
    "MixtureModel",
    "SweepResult",
    "fit_mixture",
    "sample_mixture",
    "temperature_from_populations",
    "measurement_photons",
    "sweep_temperature",
    "DegenerateCovariance",
    "InvertedPopulation",
    "NonConvergence",
]


class DegenerateCovariance(ComputationError):
    """A mixture component collapsed onto (numerically) zero variance."""


class InvertedPopulation(ComputationError):
    """p_e >= p_g: infinite or negative temperature, out-of-equilibrium data."""


class NonConvergence(ComputationError):
    """EM failed to reach its tolerance within the iteration budget."""


@dataclass(frozen=True)
class MixtureModel:
    """Two-component Gaussian mixture; component 0 is the ground state.

    separation is the distance between the means in pooled-sigma units; a
    value around or below 1 flags an unidentifiable near-degenerate split.
    """

    weights: tuple
    means: np.ndarray
    covariances: np.ndarray
    separation: float = float("nan")
    converged: bool = True
    n_iterations: int = 0
    log_likelihood_path: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != 2 or not all(0.0 < x < 1.0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValidationError(f"weights must be two values in (0, 1) summing to 1, got {w}")
        object.__setattr__(self, "weights", w)
        means = np.array(self.means, dtype=float)
        covs = np.array(self.covariances, dtype=float)
        if means.shape != (2, 2) or covs.shape != (2, 2, 2):
            raise ValidationError("means must be (2, 2) and covariances (2, 2, 2)")
        for c in covs:
            if not np.allclose(c, c.T) or np.linalg.det(c) <= 0 or c[0, 0] <= 0:
                raise ValidationError("covariances must be symmetric positive definite")
        means.setflags(write=False)
        covs.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)

    @property
    def p_g(self) -> float:
        return self.weights[0]

    @property
    def p_e(self) -> float:
        return self.weights[1]


@dataclass(frozen=True)
class SweepResult:
    """Per-cloud temperatures plus aggregate statistics over a sweep."""

    f_q: np.ndarray
    t_q: np.ndarray
    mean: float
    sigma: float
    excluded: tuple


def _log_gauss(points, mean, cov):
    d = points - mean
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2
    if det <= 0 or not np.isfinite(det):
        raise DegenerateCovariance("component covariance is not positive definite")
    quad = (
        d[:, 0] ** 2 * cov[1, 1] - 2.0 * d[:, 0] * d[:, 1] * cov[0, 1] + d[:, 1] ** 2 * cov[0, 0]
    ) / det
    return -0.5 * (quad + math.log(det) + 2.0 * math.log(2.0 * math.pi))


def _kmeanspp(points, rng):
    """Two k-means++ centers, then a short Lloyd refinement."""
    n = points.shape[0]
    c0 = points[rng.integers(n)]
    d2 = np.sum((points - c0) ** 2, axis=1)
    total = d2.sum()
    if total <= 0:
        raise DegenerateCovariance("all points coincide; mixture is unidentifiable")
    c1 = points[rng.choice(n, p=d2 / total)]
    centers = np.array([c0, c1])
    labels = None
    for _ in range(25):
        dist = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
        new_labels = np.argmin(dist, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in (0, 1):
            mask = labels == k
            if not np.any(mask):
                # Re-seed an empty cluster on the farthest point.
                far = np.argmax(np.min(dist, axis=1))
                centers[k] = points[far]
            else:
                centers[k] = points[mask].mean(axis=0)
    return centers, labels


def fit_mixture(cloud: IQCloud, seed: int = 0, *, max_iter: int = 500, tol: float = 1e-10,
                ground_center=None, raise_on_nonconvergence: bool = False) -> MixtureModel:
    """EM fit of a two-component full-covariance Gaussian mixture.

    Deterministic for a given seed (k-means++ initialization draws from a
    seeded generator). The component with the larger weight is labeled
    ground state unless ground_center is given, in which case the
    component closer to that center is. Exhausting max_iter flags
    converged=False on the result, or raises NonConvergence on request.
    """
    points = np.asarray(cloud.points, dtype=float)
    n = points.shape[0]
    if n < 4:
        raise ValidationError(f"mixture fit needs >= 4 points, got {n}")
    total_var = float(points.var(axis=0).sum())
    if total_var <= 0 or not np.isfinite(total_var):
        raise DegenerateCovariance("cloud has zero variance; mixture is unidentifiable")
    var_floor = 1e-12 * total_var

    rng = np.random.default_rng(seed)
    centers, labels = _kmeanspp(points, rng)
    weights = np.array([np.mean(labels == k) for k in (0, 1)])
    weights = np.clip(weights, 2.0 / n, 1.0 - 2.0 / n)
    weights /= weights.sum()
    means = centers.astype(float)
    covs = np.empty((2, 2, 2))
    for k in (0, 1):
        mask = labels == k
        sel = points[mask] if mask.sum() >= 4 else points
        d = sel - sel.mean(axis=0)
        covs[k] = d.T @ d / sel.shape[0]
        covs[k][0, 0] = max(covs[k][0, 0], var_floor)
        covs[k][1, 1] = max(covs[k][1, 1], var_floor)

    ll_path = []
    log_resp = np.empty((n, 2))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # E step
        for k in (0, 1):
            log_resp[:, k] = math.log(weights[k]) + _log_gauss(points, means[k], covs[k])
        norm = np.logaddexp(log_resp[:, 0], log_resp[:, 1])
        ll = float(norm.sum())
        ll_path.append(ll)
        resp = np.exp(log_resp - norm[:, None])
        # M step
        nk = resp.sum(axis=0)
        if np.any(nk < 1e-10):
            raise DegenerateCovariance("a component lost all responsibility mass")
        weights = nk / n
        for k in (0, 1):
            means[k] = resp[:, k] @ points / nk[k]
            d = points - means[k]
            covs[k] = (resp[:, k][:, None] * d).T @ d / nk[k]
            det = covs[k][0, 0] * covs[k][1, 1] - covs[k][0, 1] ** 2
            if det <= var_floor**2 or min(covs[k][0, 0], covs[k][1, 1]) <= var_floor:
                raise DegenerateCovariance("component covariance collapsed during EM")
        if len(ll_path) > 1 and abs(ll_path[-1] - ll_path[-2]) <= tol * max(1.0, abs(ll)):
            converged = True
            break

    if not converged and raise_on_nonconvergence:
        raise NonConvergence(f"EM did not reach tolerance within {max_iter} iterations")

    if ground_center is not None:
        ref = np.asarray(ground_center, dtype=float)
        order = np.argsort([np.linalg.norm(means[k] - ref) for k in (0, 1)])
    else:
        order = np.argsort(-weights)
    order = list(order)
    weights = weights[order]
    means = means[order]
    covs = covs[order]

    pooled = 0.5 * (np.trace(covs[0]) + np.trace(covs[1])) / 2.0
    separation = float(np.linalg.norm(means[0] - means[1]) / math.sqrt(pooled))
    return MixtureModel(
        weights=(float(weights[0]), float(weights[1])),
        means=means,
        covariances=covs,
        separation=separation,
        converged=converged,
        n_iterations=it,
        log_likelihood_path=np.asarray(ll_path),
    )


def sample_mixture(model: MixtureModel, n_points: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n_points from the mixture, shuffled so order carries no label."""
    n_g = rng.binomial(n_points, model.weights[0])
    parts = [
        rng.multivariate_normal(model.means[0], model.covariances[0], size=n_g),
        rng.multivariate_normal(model.means[1], model.covariances[1], size=n_points - n_g),
    ]
    points = np.concatenate(parts, axis=0)
    return points[rng.permutation(n_points)]


def temperature_from_populations(p_e: float, p_g: float, f_q: float) -> float:
    """Effective temperature from the excited/ground population ratio.

    Invariant under common rescaling of (p_e, p_g); only the ratio enters.
    """
    if p_e <= 0 or p_g <= 0:
        raise ValidationError("populations must be positive")
    if f_q <= 0:
        raise ValidationError("f_q must be positive")
    if p_e >= p_g:
        raise InvertedPopulation(
            f"p_e={p_e:.4g} >= p_g={p_g:.4g}: temperature is undefined (out of equilibrium)"
        )
    return (H * f_q / K_B) / math.log(p_g / p_e)


def measurement_photons(n_bar: float, kappa: float, t_meas: float) -> float:
    """Number of measurement photons n_bar * kappa * t_meas / 4.

    kappa is angular (rad/s); used to normalize IQ quadratures to the
    square root of this number.
    """
    if n_bar < 0 or kappa < 0 or t_meas < 0:
        raise ValidationError("all inputs must be non-negative")
    return n_bar * kappa * t_meas / 4.0


def sweep_temperature(clouds, seed: int = 0, *, ground_center=None) -> SweepResult:
    """Per-cloud mixture temperatures plus mean and population sigma.

    Clouds whose fitted populations are inverted are excluded from the
    aggregate and reported in SweepResult.excluded as (index, reason).
    """
    f_qs, t_qs, excluded = [], [], []
    for idx, cloud in enumerate(clouds):
        model = fit_mixture(cloud, seed=seed + idx, ground_center=ground_center)
        try:
            t_q = temperature_from_populations(model.p_e, model.p_g, cloud.f_q)
        except InvertedPopulation as exc:
            excluded.append((idx, str(exc)))
            continue
        f_qs.append(cloud.f_q)
        t_qs.append(t_q)
    if not t_qs:
        raise InvertedPopulation("every cloud was excluded; no temperature to report")
    t_arr = np.asarray(t_qs)
    return SweepResult(
        f_q=np.asarray(f_qs),
        t_q=t_arr,
        mean=float(t_arr.mean()),
        sigma=float(t_arr.std()),
        excluded=tuple(excluded),
    )
