"""Input validation helpers shared across the package.

Small, composable checks in the spirit of ``sklearn.utils.validation``:
each either returns the cleaned value or raises ``ValueError`` with a
message naming the offending argument.
"""

import numpy as np

__all__ = [
    "check_alpha",
    "check_positive",
    "check_nonnegative",
    "check_finite_array",
    "check_pvalues",
    "check_weights",
    "check_means",
]

# Effect sizes smaller than this make the optimal-weight objective
# numerically meaningless (c / theta overflows the useful range).
MIN_MEAN = 1e-6


def check_alpha(alpha) -> float:
    """Validate a miscoverage/level parameter: a float strictly in (0, 1)."""
    alpha = float(alpha)
    if not np.isfinite(alpha) or not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha!r}")
    return alpha


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return value


def check_nonnegative(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")
    return value


def check_finite_array(values, name: str, min_len: int = 0) -> np.ndarray:
    """Coerce to a 1-d float array with all entries finite."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size < min_len:
        raise ValueError(f"{name} must contain at least {min_len} value(s), got {arr.size}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite; found NaN or infinity")
    return arr


def check_pvalues(pvalues) -> np.ndarray:
    p = check_finite_array(pvalues, "pvalues", min_len=1)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("pvalues must lie in [0, 1]")
    return p


def check_weights(weights, m: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Validate a weight vector: non-negative entries summing to one."""
    w = check_finite_array(weights, "weights", min_len=1)
    if m is not None and w.size != m:
        raise ValueError(f"weights must have length {m}, got {w.size}")
    if np.any(w < 0.0):
        raise ValueError("weights must be non-negative")
    total = float(w.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"weights must sum to 1 (within {tol}), got sum {total!r}")
    return w


def check_means(means) -> np.ndarray:
    """Validate alternative means for the weight solver: all >= 1e-6."""
    theta = check_finite_array(means, "means", min_len=1)
    if np.any(theta < MIN_MEAN):
        raise ValueError(
            f"means must all be at least {MIN_MEAN:g}; "
            "vanishing effect sizes have no finite optimal weights"
        )
    return theta
