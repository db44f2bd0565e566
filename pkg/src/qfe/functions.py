"""Sampled functions, interpolation, and the interpolation error functionals."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels
from .errors import DataError, GridMismatchError, QuadratureError, RangeError


class InterpolationMethod(enum.Enum):
    NEAREST = "nearest"
    LINEAR = "linear"

    @classmethod
    def from_name(cls, name: str) -> "InterpolationMethod":
        key = name.strip().lower().replace("-", "").replace("_", "")
        if key in ("nearest", "nn", "nearestneighbour", "nearestneighbor"):
            return cls.NEAREST
        if key in ("linear", "lin"):
            return cls.LINEAR
        raise DataError(f"unknown interpolation method '{name}' (expected 'nearest' or 'linear')")


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values (radians) on a strictly increasing grid of signal values (volts)."""

    xs: np.ndarray
    values: np.ndarray
    variances: np.ndarray | None = None
    label: str = field(default="")

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float).ravel()
        values = np.array(self.values, dtype=float).ravel()
        if xs.size == 0:
            raise DataError("sampled function needs at least one node")
        if xs.shape != values.shape:
            raise DataError(f"xs and values differ in length ({xs.size} vs {values.size})")
        if np.any(np.diff(xs) <= 0):
            raise DataError("xs must be strictly increasing")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(values))):
            raise DataError("xs and values must be finite")
        variances = self.variances
        if variances is not None:
            variances = np.array(variances, dtype=float).ravel()
            if variances.shape != xs.shape:
                raise DataError("variances must match xs in length")
            if np.any(~(variances >= 0)):
                raise DataError("variances must be nonnegative")
            variances.setflags(write=False)
        xs.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variances", variances)

    def __len__(self):
        return self.xs.size

    def __eq__(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        if (self.variances is None) != (other.variances is None):
            return False
        return (
            self.label == other.label
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.values, other.values)
            and (self.variances is None or np.array_equal(self.variances, other.variances))
        )

    @property
    def span(self) -> float:
        return float(self.xs[-1] - self.xs[0])

    def take(self, indices) -> "SampledFunction":
        idx = np.asarray(indices)
        return SampledFunction(
            self.xs[idx],
            self.values[idx],
            None if self.variances is None else self.variances[idx],
            self.label,
        )


def subset_indices(n_points: int, n_s: int) -> np.ndarray:
    """Indices ``round(m (M - 1) / (n_s - 1))``, rounding halves up."""
    if n_s < 2 or n_s > n_points:
        raise DataError(f"n_s must lie in [2, {n_points}], got {n_s}")
    m = np.arange(n_s, dtype=np.int64)
    # floor(m (M-1)/(n_s-1) + 1/2) in exact integer arithmetic
    idx = (2 * m * (n_points - 1) + (n_s - 1)) // (2 * (n_s - 1))
    return np.unique(idx)


def select_subset(points: SampledFunction, n_s: int) -> SampledFunction:
    """Pick ``n_s`` roughly evenly spaced points, endpoints included."""
    return points.take(subset_indices(len(points), n_s))


def interpolation_plan(sample_xs, target_xs, method: InterpolationMethod):
    """Bracketing indices and weights so that ``est = (1 - t) v[lo] + t v[hi]``.

    Nearest-neighbour uses ``t`` in {0, 1}; exact midpoints go to the lower node.
    """
    sample_xs = np.asarray(sample_xs, dtype=float)
    target_xs = np.asarray(target_xs, dtype=float)
    if target_xs.size and (target_xs.min() < sample_xs[0] or target_xs.max() > sample_xs[-1]):
        bad = target_xs[(target_xs < sample_xs[0]) | (target_xs > sample_xs[-1])][0]
        raise RangeError(
            f"x={bad!r} outside sampled range [{sample_xs[0]!r}, {sample_xs[-1]!r}]; extrapolation refused"
        )
    if sample_xs.size == 1:
        zeros = np.zeros(target_xs.size, dtype=np.intp)
        return zeros, zeros, np.zeros(target_xs.size)
    lo = np.searchsorted(sample_xs, target_xs, side="right") - 1
    lo = np.clip(lo, 0, sample_xs.size - 2).astype(np.intp)
    hi = lo + 1
    left = target_xs - sample_xs[lo]
    right = sample_xs[hi] - target_xs
    if method is InterpolationMethod.NEAREST:
        t = np.where(left <= right, 0.0, 1.0)
    else:
        t = left / (sample_xs[hi] - sample_xs[lo])
        t[right == 0.0] = 1.0
    return lo, hi, t


def interpolate(subset: SampledFunction, method: InterpolationMethod, target_xs) -> SampledFunction:
    target_xs = np.asarray(target_xs, dtype=float)
    lo, hi, t = interpolation_plan(subset.xs, target_xs, method)
    est = (1.0 - t) * subset.values[lo] + t * subset.values[hi]
    return SampledFunction(target_xs, est, label=subset.label)


def trapezoid_weights(xs) -> np.ndarray:
    """Node weights of the trapezoid rule; sums to ``xs[-1] - xs[0]``."""
    xs = np.asarray(xs, dtype=float)
    w = np.zeros_like(xs)
    if xs.size < 2:
        return w
    dx = np.diff(xs)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def _check_same_grid(estimate: SampledFunction, reference: SampledFunction) -> None:
    if len(estimate) != len(reference):
        raise GridMismatchError(
            f"estimate has {len(estimate)} nodes but reference has {len(reference)}"
        )
    off = np.nonzero(estimate.xs != reference.xs)[0]
    if off.size:
        i = off[0]
        raise GridMismatchError(
            f"estimate node x={estimate.xs[i]!r} does not match reference node x={reference.xs[i]!r} (index {i})"
        )


def delta_squared(estimate: SampledFunction, reference: SampledFunction) -> float:
    """Mean squared deviation from the reference over its sampled range."""
    _check_same_grid(estimate, reference)
    if len(reference) < 2:
        raise DataError("reference needs at least two nodes")
    w = trapezoid_weights(reference.xs)
    diff = estimate.values - reference.values
    return float(np.dot(diff * diff, w) / reference.span)


def delta_squared_batch(
    sample_xs,
    sample_values,
    reference: SampledFunction,
    method: InterpolationMethod,
) -> np.ndarray:
    """:func:`delta_squared` of the interpolant of every row of ``sample_values``."""
    values = np.ascontiguousarray(np.atleast_2d(sample_values), dtype=float)
    lo, hi, t = interpolation_plan(sample_xs, reference.xs, method)
    w = trapezoid_weights(reference.xs)
    return kernels.delta2_batch(
        values,
        np.ascontiguousarray(lo),
        np.ascontiguousarray(hi),
        np.ascontiguousarray(t),
        np.ascontiguousarray(reference.values),
        w,
        reference.span,
    )


def continuous_delta(
    reference,
    estimate: SampledFunction,
    method: InterpolationMethod,
    domain: tuple[float, float] | None = None,
    rtol: float = 1e-8,
) -> float:
    """``(1/L) int |phi(x) - phi_est(x)|^2 dx`` by adaptive quadrature.

    ``reference`` is a vectorisable callable. The integral is split at the
    sample nodes (and at NN switch points) so that every piece is smooth.
    """
    lo_x, hi_x = domain if domain is not None else (estimate.xs[0], estimate.xs[-1])
    if not hi_x > lo_x:
        raise DataError("domain must have positive length")
    breaks = [lo_x, *estimate.xs[(estimate.xs > lo_x) & (estimate.xs < hi_x)], hi_x]
    if method is InterpolationMethod.NEAREST:
        mids = (estimate.xs[:-1] + estimate.xs[1:]) / 2
        breaks = sorted(set(breaks) | set(mids[(mids > lo_x) & (mids < hi_x)]))

    def integrand(x):
        est = interpolate(estimate, method, [x]).values[0]
        return (float(reference(x)) - est) ** 2

    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for a, b in zip(breaks[:-1], breaks[1:]):
            # keep NN evaluation on one side of each switch point
            if method is InterpolationMethod.NEAREST:
                m = (a + b) / 2
                val = interpolate(estimate, method, [m]).values[0]

                def piece(x, val=val):
                    return (float(reference(x)) - val) ** 2

            else:
                piece = integrand
            try:
                part, _ = integrate.quad(piece, a, b, epsabs=1e-15, epsrel=rtol, limit=200)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(f"quadrature failed on [{a}, {b}]: {exc}") from exc
            total += part
    return total / (hi_x - lo_x)
