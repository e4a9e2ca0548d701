"""Bonferroni-type multiple testing with hypothesis weights.

The weighted rule rejects hypothesis j when ``P_j <= alpha * w_j`` for a
non-negative weight vector summing to one.  The union bound then spends
exactly ``alpha`` across the family, so the familywise error rate is
controlled for *any* such weights — informative weights buy power where
the alternatives are likely without touching the guarantee.  Uniform
weights ``w_j = 1/m`` recover plain Bonferroni.

For one-sided Normal-means alternatives with known means theta_j, the
power-optimal weights have the closed form

    w_j = (m / alpha) * survivor(theta_j / 2 + c / theta_j),

where c is the normalizing constant making the weights sum to one.  The
map c -> sum of weights is strictly decreasing, so c is found by
bracketed bisection.
"""

from dataclasses import dataclass

import numpy as np

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    check_alpha,
    check_finite_array,
    check_means,
    check_pvalues,
    check_weights,
)
from .report import SimulationReport
from .rng import RngSeed
from .special import normal_survivor

__all__ = [
    "RejectionSet",
    "WeightSolverError",
    "bonferroni",
    "weighted_bonferroni",
    "optimal_weights",
    "average_optimal_weights",
    "fwer_simulate",
    "WeightedBonferroni",
]

# Residual tolerance on |sum(weights) - 1| after the c-solve.
_SOLVER_TOL = 1e-10


class WeightSolverError(RuntimeError):
    """The normalizing-constant solve failed; carries diagnostics."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class RejectionSet:
    """Outcome of a multiple-testing procedure.

    ``indices`` are 1-based hypothesis labels, sorted ascending;
    ``thresholds`` holds the per-hypothesis cutoffs alpha * w_j actually
    used.
    """

    indices: tuple
    thresholds: tuple
    alpha: float
    m: int

    def __post_init__(self):
        m = int(self.m)
        if m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        idx = tuple(int(i) for i in self.indices)
        if list(idx) != sorted(set(idx)):
            raise ValueError("indices must be sorted and unique")
        if idx and not (1 <= idx[0] and idx[-1] <= m):
            raise ValueError(f"indices must lie in 1..{m}, got {idx}")
        if len(self.thresholds) != m:
            raise ValueError("thresholds must have one entry per hypothesis")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        object.__setattr__(self, "m", m)

    @property
    def mask(self) -> np.ndarray:
        """Boolean rejection mask of length m (0-based positional view)."""
        out = np.zeros(self.m, dtype=bool)
        if self.indices:
            out[np.asarray(self.indices) - 1] = True
        return out

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices),
            "thresholds": list(self.thresholds),
            "alpha": self.alpha,
            "m": self.m,
        }


def _reject(pvalues: np.ndarray, thresholds: np.ndarray, alpha: float) -> RejectionSet:
    # A zero threshold means a zero weight: that hypothesis is unrejectable,
    # even by a p-value of exactly 0.
    rejected = np.flatnonzero((pvalues <= thresholds) & (thresholds > 0.0)) + 1
    return RejectionSet(
        indices=tuple(int(j) for j in rejected),
        thresholds=tuple(thresholds),
        alpha=alpha,
        m=pvalues.size,
    )


def bonferroni(pvalues, alpha: float) -> RejectionSet:
    """Reject hypothesis j iff P_j <= alpha / m (boundary included)."""
    p = check_pvalues(pvalues)
    alpha = check_alpha(alpha)
    thresholds = np.full(p.size, alpha / p.size)
    return _reject(p, thresholds, alpha)


def weighted_bonferroni(
    pvalues, weights, alpha: float, conservative: bool = False
) -> RejectionSet:
    """Reject hypothesis j iff P_j <= alpha * w_j.

    Weights must be non-negative and sum to one; a zero weight makes its
    hypothesis unrejectable (no division ever happens).  With
    ``conservative=True`` the rule becomes the literal composition of
    p-value reweighting with plain Bonferroni, P_j / w_j <= alpha / m —
    an m-fold harsher cutoff kept for reference.
    """
    p = check_pvalues(pvalues)
    alpha = check_alpha(alpha)
    w = check_weights(weights, m=p.size)
    thresholds = alpha * w
    if conservative:
        thresholds = thresholds / p.size
    return _reject(p, thresholds, alpha)


def _weight_total(c: float, means: np.ndarray, alpha: float) -> float:
    """Sum of the candidate weights at normalizing constant c."""
    m = means.size
    return float((m / alpha) * normal_survivor(means / 2.0 + c / means).sum())


def optimal_weights(means, alpha: float) -> tuple[np.ndarray, float]:
    """Power-optimal weights for one-sided Normal-means alternatives.

    Parameters
    ----------
    means : array-like of positive floats
        Alternative means theta_j; all must be >= 1e-6.
    alpha : float

    Returns
    -------
    (weights, c) : the weight vector (summing to one within 1e-10) and the
        normalizing constant that achieves it.

    Raises
    ------
    WeightSolverError
        If the bracket cannot be expanded to straddle the root or the
        residual tolerance is not met — in practice only for pathological
        means where c / theta_j overflows.
    """
    theta = check_means(means)
    alpha = check_alpha(alpha)

    lo, hi = -1.0, 1.0
    for _ in range(300):
        if _weight_total(lo, theta, alpha) > 1.0:
            break
        lo *= 2.0
    else:
        raise WeightSolverError(
            "could not bracket the normalizing constant from below",
            lo=lo,
            total=_weight_total(lo, theta, alpha),
        )
    for _ in range(300):
        if _weight_total(hi, theta, alpha) < 1.0:
            break
        hi *= 2.0
    else:
        raise WeightSolverError(
            "could not bracket the normalizing constant from above",
            hi=hi,
            total=_weight_total(hi, theta, alpha),
        )

    # The total is strictly decreasing in c, so plain bisection converges
    # unconditionally; 200 halvings exhaust double precision.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _weight_total(mid, theta, alpha) > 1.0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)

    weights = (theta.size / alpha) * normal_survivor(theta / 2.0 + c / theta)
    residual = abs(float(weights.sum()) - 1.0)
    if residual > _SOLVER_TOL:
        raise WeightSolverError(
            f"weights sum to 1 only within {residual:.3e} (tolerance {_SOLVER_TOL:.0e})",
            c=c,
            residual=residual,
            bracket=(lo, hi),
        )
    return weights, float(c)


def average_optimal_weights(mean_draws, alpha: float) -> np.ndarray:
    """Weights averaged over uncertainty in the alternative means.

    ``mean_draws`` is an (s, m) array of theta vectors, e.g. sampled from
    a prior.  Each row gets its own optimal weights; the rows are averaged
    and renormalized to sum to one.
    """
    draws = np.asarray(mean_draws, dtype=float)
    if draws.ndim != 2 or draws.shape[0] < 1:
        raise ValueError("mean_draws must be a non-empty 2-d array of shape (s, m)")
    stacked = np.stack([optimal_weights(row, alpha)[0] for row in draws])
    averaged = stacked.mean(axis=0)
    return averaged / averaged.sum()


def fwer_simulate(
    truth,
    weights,
    alpha: float,
    replicates: int,
    seed: RngSeed,
    conservative: bool = False,
) -> SimulationReport:
    """Monte Carlo familywise error and power of the weighted rule.

    ``truth`` encodes the data-generating state of each hypothesis: entry
    j is 0.0 when null j is true (Z_j ~ N(0,1)) and a positive mean
    theta_j under the alternative (Z_j ~ N(theta_j, 1)).  One-sided
    p-values P_j = survivor(Z_j) feed :func:`weighted_bonferroni`.

    Reports the FWER estimate (any true null rejected) and, when at least
    one alternative exists, the average power (mean fraction of
    alternatives rejected per replicate).
    """
    theta = check_finite_array(truth, "truth", min_len=1)
    if np.any(theta < 0.0):
        raise ValueError("truth entries must be 0 (null) or positive alternative means")
    alpha = check_alpha(alpha)
    w = check_weights(weights, m=theta.size)
    replicates = int(replicates)
    if replicates < 1000:
        raise ValueError(f"replicates must be at least 1000, got {replicates}")

    nulls = theta == 0.0
    alts = ~nulls
    thresholds = alpha * w
    if conservative:
        thresholds = thresholds / theta.size

    rng = seed.generator()
    z = rng.normal(0.0, 1.0, size=(replicates, theta.size)) + theta[None, :]
    pvals = normal_survivor(z)
    rejected = (pvals <= thresholds[None, :]) & (thresholds[None, :] > 0.0)

    any_false_rejection = rejected[:, nulls].any(axis=1) if nulls.any() else np.zeros(
        replicates, dtype=bool
    )
    estimates = {"fwer": float(any_false_rejection.mean())}
    ses = {"fwer": float(any_false_rejection.std(ddof=1) / np.sqrt(replicates))}

    if alts.any():
        per_rep_power = rejected[:, alts].mean(axis=1)
        estimates["avg_power"] = float(per_rep_power.mean())
        ses["avg_power"] = float(per_rep_power.std(ddof=1) / np.sqrt(replicates))

    return SimulationReport(
        estimates=estimates,
        standard_errors=ses,
        replicates=replicates,
        config={
            "m": int(theta.size),
            "n_null": int(nulls.sum()),
            "n_alt": int(alts.sum()),
            "alpha": alpha,
            "conservative": bool(conservative),
            "weights": [float(x) for x in w],
            "truth": [float(t) for t in theta],
        },
        seed=seed,
    )


class WeightedBonferroni(BaseEstimator):
    """Estimator facade over the weighted Bonferroni procedure.

    ``fit`` takes the observed p-values, resolves the weights (uniform by
    default, supplied via ``weights``, or optimal for one-sided
    Normal-means alternatives via ``means``), and stores the rejection
    set.  ``predict`` applies the fitted thresholds to new p-values.

    Attributes after fit: ``rejections_`` (:class:`RejectionSet`),
    ``weights_``, ``thresholds_``, ``weight_source_`` and ``c_`` (the
    normalizing constant, None unless weights were solved from means).
    """

    def __init__(self, alpha: float = 0.05, weights=None, means=None, conservative: bool = False):
        self.alpha = alpha
        self.weights = weights
        self.means = means
        self.conservative = conservative

    def fit(self, X, y=None):
        p = check_pvalues(X)
        if self.weights is not None and self.means is not None:
            raise ValueError("pass either weights or means, not both")
        self.c_ = None
        if self.means is not None:
            w, self.c_ = optimal_weights(self.means, self.alpha)
            self.weight_source_ = "optimal"
        elif self.weights is not None:
            w = check_weights(self.weights, m=p.size)
            self.weight_source_ = "supplied"
        else:
            w = np.full(p.size, 1.0 / p.size)
            self.weight_source_ = "uniform"
        self.weights_ = w
        self.rejections_ = weighted_bonferroni(p, w, self.alpha, conservative=self.conservative)
        self.thresholds_ = np.asarray(self.rejections_.thresholds)
        return self

    def predict(self, X) -> np.ndarray:
        """Boolean rejection mask for p-values ``X`` under the fitted thresholds."""
        check_is_fitted(self, "thresholds_")
        p = check_pvalues(X)
        if p.size != self.thresholds_.size:
            raise ValueError(
                f"expected {self.thresholds_.size} p-values, got {p.size}"
            )
        return p <= self.thresholds_
