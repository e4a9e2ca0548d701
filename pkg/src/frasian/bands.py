"""Confidence and credible bands for an unknown CDF.

Two constructions around the same kind of object:

* ``dkw_band`` — the distribution-free band ``F_n +/- epsilon_n`` from the
  Dvoretzky-Kiefer-Wolfowitz inequality, with
  ``epsilon_n = sqrt(log(2/alpha) / (2n))``.  Coverage is guaranteed for
  every F and every n.
* ``dp_posterior_band`` — a credible band from a Dirichlet process
  posterior.  The posterior ``DP(F_bar_n, beta + n)`` centers on the blend
  ``F_bar_n = (beta/(beta+n)) F_0 + (n/(beta+n)) F_n``; the band collects
  the sup-norm deviations of posterior draws around that center and keeps
  the (1-alpha) quantile as a constant radius.  Its frequentist coverage
  is *not* guaranteed: when the prior guess F_0 sits far from the truth
  and beta is large, the band concentrates around the wrong center.

Both bands are evaluated on a finite grid, and coverage checks compare the
true CDF to the band on that same grid, so the two methods are judged by
an identical yardstick.
"""

import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_alpha, check_finite_array, check_positive
from .report import SimulationReport
from .rng import RngSeed
from .special import NormalParams, ecdf_eval, normal_cdf, sample_normal
from .conformal import GridSpec  # noqa: F401  (re-exported for CLI symmetry)

__all__ = [
    "DpPrior",
    "DpPosterior",
    "DiscreteCdf",
    "CdfBand",
    "DpBandConfig",
    "dkw_epsilon",
    "dkw_band",
    "band_grid",
    "dp_posterior",
    "sample_dp",
    "dp_posterior_band",
    "band_coverage",
    "CdfBandEstimator",
]

# Residual stick-breaking mass above this triggers a truncation warning.
_RESIDUAL_WARN = 0.05


@dataclass(frozen=True)
class DpPrior:
    """Dirichlet process prior DP(F0, beta) with a normal base measure."""

    base: NormalParams = NormalParams(0.0, 1.0)
    concentration: float = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "concentration", check_positive(self.concentration, "concentration")
        )


@dataclass(frozen=True, eq=False)
class DpPosterior:
    """Posterior DP(F_bar_n, beta + n) after observing ``sample``.

    ``base_weight`` is beta/(beta+n): the share of the posterior mean CDF
    (and of each posterior draw's atoms) coming from the prior base rather
    than from the data.
    """

    base: NormalParams
    sample: np.ndarray
    base_weight: float
    concentration: float

    def __post_init__(self):
        if not 0.0 < self.base_weight <= 1.0:
            raise ValueError(f"base_weight must lie in (0, 1], got {self.base_weight!r}")
        object.__setattr__(
            self, "concentration", check_positive(self.concentration, "concentration")
        )
        object.__setattr__(self, "sample", np.asarray(self.sample, dtype=float))

    def mean_cdf(self, x):
        """Posterior mean CDF F_bar_n at ``x`` (scalar or array)."""
        prior_part = normal_cdf(x, self.base.mean, self.base.variance)
        if self.sample.size == 0:
            out = prior_part
        else:
            out = self.base_weight * prior_part + (1.0 - self.base_weight) * ecdf_eval(
                self.sample, x
            )
        return out


def dp_posterior(prior: DpPrior, sample) -> DpPosterior:
    """Conjugate DP update: concentration grows by n, base blends toward F_n."""
    y = check_finite_array(sample, "sample")
    beta = prior.concentration
    n = y.size
    return DpPosterior(
        base=prior.base,
        sample=y,
        base_weight=beta / (beta + n),
        concentration=beta + n,
    )


@dataclass(frozen=True, eq=False)
class DiscreteCdf:
    """A single draw from a DP: atoms with weights summing to one.

    ``residual`` is the stick-breaking mass left after truncation; it is
    assigned to the final atom so the distribution stays proper.
    """

    atoms: np.ndarray
    weights: np.ndarray
    residual: float

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.shape != weights.shape or atoms.ndim != 1:
            raise ValueError("atoms and weights must be 1-d arrays of equal length")
        order = np.argsort(atoms, kind="stable")
        object.__setattr__(self, "atoms", atoms[order])
        object.__setattr__(self, "weights", weights[order])
        object.__setattr__(self, "residual", float(self.residual))

    def cdf(self, x):
        """Right-continuous CDF of the draw at ``x``."""
        # Cumulative weights can drift a few ulp past 1; clamp so the
        # result is a genuine CDF.
        cum = np.minimum(np.cumsum(self.weights), 1.0)
        idx = np.searchsorted(self.atoms, np.asarray(x, dtype=float), side="right")
        padded = np.concatenate([[0.0], cum])
        out = padded[idx]
        return float(out) if np.ndim(x) == 0 else out


def dkw_epsilon(n: int, alpha: float) -> float:
    """Half-width of the DKW band: sqrt(log(2/alpha) / (2n))."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    alpha = check_alpha(alpha)
    return float(np.sqrt(np.log(2.0 / alpha) / (2.0 * n)))


def band_grid(sample, n_points: int = 512, pad_sds: float = 4.0) -> np.ndarray:
    """Evaluation grid: the data range padded by ``pad_sds`` sample SDs.

    The sample points themselves (and near-midpoints just left of each,
    half a grid step away) are merged in so the band is checked right at
    the ECDF jumps, where sup-norm violations actually happen.
    """
    y = check_finite_array(sample, "sample", min_len=1)
    sd = float(y.std())
    if sd == 0.0:
        sd = 1.0
    lo = float(y.min()) - pad_sds * sd
    hi = float(y.max()) + pad_sds * sd
    base = np.linspace(lo, hi, int(n_points))
    step = base[1] - base[0]
    return np.unique(np.concatenate([base, y, y - 0.5 * step]))


def dkw_band(sample, alpha: float, grid=None) -> "CdfBand":
    """Distribution-free 1-alpha confidence band for the CDF."""
    y = check_finite_array(sample, "sample", min_len=1)
    alpha = check_alpha(alpha)
    if grid is None:
        grid = band_grid(y)
    grid = check_finite_array(grid, "grid", min_len=2)
    eps = dkw_epsilon(y.size, alpha)
    center = ecdf_eval(y, grid)
    return CdfBand(
        grid=grid,
        lower=np.clip(center - eps, 0.0, 1.0),
        upper=np.clip(center + eps, 0.0, 1.0),
        center=center,
        alpha=alpha,
        method="dkw",
        meta={"epsilon": eps, "n": int(y.size)},
    )


def _draw_cdf_matrix(posterior: DpPosterior, n_draws: int, truncation: int, grid, rng):
    """Evaluate ``n_draws`` posterior CDF draws on ``grid``.

    Stick-breaking with Beta(1, concentration) sticks, truncated at
    ``truncation`` sticks plus one atom holding the leftover mass.  All
    rows share one batched ``searchsorted`` by offsetting each row into a
    disjoint numeric block.  Returns ``(cdfs, residuals)`` where ``cdfs``
    is (n_draws, len(grid)) and clipped to [0, 1].
    """
    m, k = int(n_draws), int(truncation)
    conc = posterior.concentration
    sticks = rng.beta(1.0, conc, size=(m, k))
    leftover = np.cumprod(1.0 - sticks, axis=1)
    weights = np.empty((m, k + 1))
    weights[:, 0] = sticks[:, 0]
    weights[:, 1:k] = sticks[:, 1:] * leftover[:, :-1]
    weights[:, k] = leftover[:, -1]
    residuals = leftover[:, -1].copy()

    from_base = rng.random((m, k + 1)) < posterior.base_weight
    base_atoms = rng.normal(posterior.base.mean, posterior.base.sd, size=(m, k + 1))
    if posterior.sample.size:
        data_atoms = posterior.sample[rng.integers(0, posterior.sample.size, size=(m, k + 1))]
        atoms = np.where(from_base, base_atoms, data_atoms)
    else:
        atoms = base_atoms

    order = np.argsort(atoms, axis=1)
    atoms_sorted = np.take_along_axis(atoms, order, axis=1)
    cum_weights = np.minimum(np.cumsum(np.take_along_axis(weights, order, axis=1), axis=1), 1.0)

    # Shift row i by i*span so one flat searchsorted serves every draw;
    # the span covers the grid too, or queries could leak into the next
    # row's block.
    lo = min(float(atoms_sorted[:, 0].min()), float(grid[0]))
    hi = max(float(atoms_sorted[:, -1].max()), float(grid[-1]))
    span = hi - lo + 1.0
    offsets = span * np.arange(m)
    flat_atoms = (atoms_sorted + offsets[:, None]).ravel()
    flat_queries = (grid[None, :] + offsets[:, None]).ravel()
    pos = np.searchsorted(flat_atoms, flat_queries, side="right")
    rows = np.repeat(np.arange(m), grid.size)
    pos_in_row = pos - (k + 1) * rows
    padded = np.concatenate([np.zeros((m, 1)), cum_weights], axis=1)
    cdfs = padded[rows, pos_in_row].reshape(m, grid.size)
    return cdfs, residuals


def sample_dp(posterior: DpPosterior, truncation: int, seed: RngSeed) -> DiscreteCdf:
    """One truncated stick-breaking draw from the posterior."""
    truncation = int(truncation)
    if truncation < 1:
        raise ValueError(f"truncation must be a positive integer, got {truncation}")
    rng = seed.generator()
    sticks = rng.beta(1.0, posterior.concentration, size=truncation)
    leftover = np.cumprod(1.0 - sticks)
    weights = np.empty(truncation + 1)
    weights[0] = sticks[0]
    weights[1:truncation] = sticks[1:] * leftover[:-1]
    weights[truncation] = leftover[-1]

    from_base = rng.random(truncation + 1) < posterior.base_weight
    atoms = rng.normal(posterior.base.mean, posterior.base.sd, size=truncation + 1)
    if posterior.sample.size:
        picks = posterior.sample[rng.integers(0, posterior.sample.size, size=truncation + 1)]
        atoms = np.where(from_base, atoms, picks)
    return DiscreteCdf(atoms=atoms, weights=weights, residual=float(leftover[-1]))


def dp_posterior_band(
    posterior: DpPosterior,
    alpha: float,
    seed: RngSeed,
    draws: int = 1000,
    truncation: int = 1000,
    grid=None,
) -> "CdfBand":
    """Credible band: (1-alpha) quantile of sup-norm deviations from F_bar_n.

    Draws ``draws`` posterior CDFs, measures each one's largest absolute
    deviation from the posterior mean CDF over the grid, and uses the
    ceil((1-alpha)*draws)-th smallest deviation as a constant band radius
    around F_bar_n.  The band is clipped to [0, 1].
    """
    alpha = check_alpha(alpha)
    draws = int(draws)
    truncation = int(truncation)
    if draws < 1 or truncation < 1:
        raise ValueError("draws and truncation must be positive integers")
    if grid is None:
        if posterior.sample.size == 0:
            raise ValueError("grid is required when the posterior holds no data")
        grid = band_grid(posterior.sample)
    grid = check_finite_array(grid, "grid", min_len=2)

    cdfs, residuals = _draw_cdf_matrix(posterior, draws, truncation, grid, seed.generator())
    center = posterior.mean_cdf(grid)
    deviations = np.abs(cdfs - center[None, :]).max(axis=1)
    rank = int(np.ceil((1.0 - alpha) * draws)) - 1
    radius = float(np.sort(deviations)[rank])

    notes = []
    if residuals.max() > _RESIDUAL_WARN:
        notes.append(
            f"stick-breaking residual reached {residuals.max():.3g}; "
            f"increase truncation (currently {truncation}) for concentration "
            f"{posterior.concentration:g}"
        )
        _warnings.warn(notes[-1], UserWarning, stacklevel=2)

    return CdfBand(
        grid=grid,
        lower=np.clip(center - radius, 0.0, 1.0),
        upper=np.clip(center + radius, 0.0, 1.0),
        center=center,
        alpha=alpha,
        method="dp",
        meta={
            "radius": radius,
            "draws": draws,
            "truncation": truncation,
            "residual_mean": float(residuals.mean()),
            "residual_max": float(residuals.max()),
            "concentration": float(posterior.concentration),
            "base_weight": float(posterior.base_weight),
        },
        warnings=tuple(notes),
    )


@dataclass(frozen=True, eq=False)
class CdfBand:
    """A CDF band on a grid: lower/upper envelopes around a center curve."""

    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    center: np.ndarray
    alpha: float
    method: str
    meta: dict = field(default_factory=dict)
    warnings: tuple = ()

    def __post_init__(self):
        grid = check_finite_array(self.grid, "grid", min_len=2)
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        center = np.asarray(self.center, dtype=float)
        if not (lower.shape == upper.shape == center.shape == grid.shape):
            raise ValueError("grid, lower, upper and center must share one shape")
        if np.any(lower > upper):
            raise ValueError("lower envelope exceeds upper envelope")
        if np.any(lower < 0.0) or np.any(upper > 1.0):
            raise ValueError("band envelopes must stay inside [0, 1]")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        object.__setattr__(self, "warnings", tuple(str(w) for w in self.warnings))

    def covers(self, cdf_values) -> bool:
        """Whether a CDF (given by its values on the grid) stays inside."""
        f = check_finite_array(cdf_values, "cdf_values")
        if f.shape != self.grid.shape:
            raise ValueError("cdf_values must be evaluated on the band's grid")
        return bool(np.all((self.lower <= f) & (f <= self.upper)))


@dataclass(frozen=True)
class DpBandConfig:
    """Knobs for the DP side of a coverage study."""

    beta: float = 1.0
    base: NormalParams = NormalParams(0.0, 1.0)
    draws: int = 1000
    truncation: int = 1000
    content_draws: int = 4

    def __post_init__(self):
        object.__setattr__(self, "beta", check_positive(self.beta, "beta"))
        if int(self.draws) < 1 or int(self.truncation) < 1 or int(self.content_draws) < 0:
            raise ValueError("draws/truncation must be positive, content_draws non-negative")
        object.__setattr__(self, "draws", int(self.draws))
        object.__setattr__(self, "truncation", int(self.truncation))
        object.__setattr__(self, "content_draws", int(self.content_draws))


def band_coverage(
    method: str,
    true_dist: NormalParams,
    n: int,
    alpha: float,
    replicates: int,
    seed: RngSeed,
    dp_config: DpBandConfig | None = None,
) -> SimulationReport:
    """Monte Carlo coverage of a CDF band when the data come from N(mean, var).

    Each replicate draws a fresh sample, builds the requested band, and
    checks whether the true CDF stays inside it across the whole grid.
    For the DP method the report also estimates the band's *posterior
    content*: the chance that a fresh posterior draw stays within the band
    radius of the posterior mean — the credible level the band actually
    delivers, to contrast with its frequentist coverage.
    """
    if method not in ("dkw", "dp"):
        raise ValueError(f"method must be 'dkw' or 'dp', got {method!r}")
    alpha = check_alpha(alpha)
    n = int(n)
    replicates = int(replicates)
    if n < 1 or replicates < 1:
        raise ValueError("n and replicates must be positive integers")
    if method == "dp" and dp_config is None:
        dp_config = DpBandConfig()

    covered = np.empty(replicates, dtype=bool)
    contents = np.empty(replicates) if method == "dp" else None
    notes: list[str] = []

    for i in range(replicates):
        rep = seed.child(i)
        sample = sample_normal(true_dist, n, rep.child(0))
        grid = band_grid(sample)
        truth = normal_cdf(grid, true_dist.mean, true_dist.variance)
        if method == "dkw":
            band = dkw_band(sample, alpha, grid=grid)
        else:
            posterior = dp_posterior(
                DpPrior(base=dp_config.base, concentration=dp_config.beta), sample
            )
            with _warnings.catch_warnings():
                _warnings.simplefilter("ignore", UserWarning)
                band = dp_posterior_band(
                    posterior,
                    alpha,
                    seed=rep.child(1),
                    draws=dp_config.draws,
                    truncation=dp_config.truncation,
                    grid=grid,
                )
            notes.extend(band.warnings)
            if dp_config.content_draws:
                fresh, _ = _draw_cdf_matrix(
                    posterior,
                    dp_config.content_draws,
                    dp_config.truncation,
                    grid,
                    rep.child(2).generator(),
                )
                dev = np.abs(fresh - band.center[None, :]).max(axis=1)
                contents[i] = float((dev <= band.meta["radius"]).mean())
        covered[i] = band.covers(truth)

    estimates = {"coverage": float(covered.mean())}
    ses = {"coverage": float(covered.std(ddof=1) / np.sqrt(replicates)) if replicates > 1 else 0.0}
    if method == "dp" and dp_config.content_draws:
        estimates["content"] = float(contents.mean())
        ses["content"] = (
            float(contents.std(ddof=1) / np.sqrt(replicates)) if replicates > 1 else 0.0
        )

    config = {
        "method": method,
        "true_mean": true_dist.mean,
        "true_var": true_dist.variance,
        "n": n,
        "alpha": alpha,
    }
    if method == "dp":
        config.update(
            beta=dp_config.beta,
            base_mean=dp_config.base.mean,
            base_var=dp_config.base.variance,
            draws=dp_config.draws,
            truncation=dp_config.truncation,
            content_draws=dp_config.content_draws,
        )
    return SimulationReport(
        estimates=estimates,
        standard_errors=ses,
        replicates=replicates,
        config=config,
        seed=seed,
        warnings=tuple(dict.fromkeys(notes)),
    )


class CdfBandEstimator(TransformerMixin, BaseEstimator):
    """Estimator facade over the band constructions.

    ``fit`` builds the band from a 1-d sample; ``transform`` evaluates the
    fitted envelopes at new points, returning columns (lower, center,
    upper).

    Parameters mirror the functional API: ``method`` picks "dkw" or "dp";
    ``beta``, ``base_mean``, ``base_var``, ``draws``, ``truncation`` and
    ``seed`` only matter for the DP method.
    """

    def __init__(
        self,
        method: str = "dkw",
        alpha: float = 0.05,
        beta: float = 1.0,
        base_mean: float = 0.0,
        base_var: float = 1.0,
        draws: int = 1000,
        truncation: int = 1000,
        seed: int = 0,
        grid=None,
    ):
        self.method = method
        self.alpha = alpha
        self.beta = beta
        self.base_mean = base_mean
        self.base_var = base_var
        self.draws = draws
        self.truncation = truncation
        self.seed = seed
        self.grid = grid

    def fit(self, X, y=None):
        if self.method not in ("dkw", "dp"):
            raise ValueError(f"method must be 'dkw' or 'dp', got {self.method!r}")
        sample = check_finite_array(X, "X", min_len=1)
        self.sample_ = sample
        if self.method == "dkw":
            self.band_ = dkw_band(sample, self.alpha, grid=self.grid)
            self.epsilon_ = self.band_.meta["epsilon"]
        else:
            prior = DpPrior(
                base=NormalParams(self.base_mean, self.base_var), concentration=self.beta
            )
            self.posterior_ = dp_posterior(prior, sample)
            seed = self.seed if isinstance(self.seed, RngSeed) else RngSeed(int(self.seed))
            self.band_ = dp_posterior_band(
                self.posterior_,
                self.alpha,
                seed=seed,
                draws=self.draws,
                truncation=self.truncation,
                grid=self.grid,
            )
            self.radius_ = self.band_.meta["radius"]
        return self

    def transform(self, X) -> np.ndarray:
        """Evaluate (lower, center, upper) at new points by step interpolation."""
        check_is_fitted(self, "band_")
        x = check_finite_array(X, "X")
        band = self.band_
        idx = np.clip(np.searchsorted(band.grid, x, side="right") - 1, 0, band.grid.size - 1)
        return np.column_stack([band.lower[idx], band.center[idx], band.upper[idx]])
