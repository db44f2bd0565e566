"""Synthetic data: response models, photon counts, and the CRB shortcut sampler."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, RangeError, UnidentifiableError
from .functions import SampledFunction
from .measurement import (
    PhasePoint,
    ProbeModel,
    effective_fisher_array,
    effective_shots,
    probability_vector,
    shots_from_resources,
)

DEFAULT_VISIBILITY = 0.95
DEFAULT_DOMAIN = (0.0, 3.0)


class Family(enum.Enum):
    LINEAR = "linear"
    SIGMOID = "sigmoid"
    SINUSOID = "sinusoid"
    SAMPLED = "sampled"


# name -> (parameter names, default values)
FAMILY_PARAMS = {
    Family.LINEAR: (("slope", "intercept"), (0.5, 0.0)),
    Family.SIGMOID: (("amplitude", "rate", "center"), (2.5, 3.0, 1.5)),
    Family.SINUSOID: (("amplitude", "frequency", "phase", "offset"), (1.0, 1.0, 0.0, 1.5)),
}


@dataclass(frozen=True, eq=False)
class ResponseModel:
    """Phase response phi(x) and visibility v(x) over a voltage domain.

    Analytic families:

    * ``linear``:   slope * x + intercept
    * ``sigmoid``:  amplitude / (1 + exp(-rate (x - center)))
    * ``sinusoid``: amplitude * sin(frequency * x + phase) + offset

    A ``sampled`` model linearly interpolates a :class:`SampledFunction`.
    The visibility is a constant or a sampled function of x.
    """

    family: Family
    params: tuple[float, ...] = ()
    samples: SampledFunction | None = None
    visibility: float | SampledFunction = DEFAULT_VISIBILITY
    domain: tuple[float, float] = DEFAULT_DOMAIN

    def __post_init__(self):
        lo, hi = (float(d) for d in self.domain)
        if not hi > lo:
            raise DataError(f"empty domain [{lo}, {hi}]")
        object.__setattr__(self, "domain", (lo, hi))
        if self.family is Family.SAMPLED:
            if self.samples is None or len(self.samples) < 2:
                raise DataError("sampled response needs at least two nodes")
            if self.samples.xs[0] > lo or self.samples.xs[-1] < hi:
                raise DataError("sampled response does not cover its domain")
        else:
            names, defaults = FAMILY_PARAMS[self.family]
            params = tuple(float(p) for p in self.params) or defaults
            if len(params) != len(names):
                raise DataError(
                    f"{self.family.value} takes {len(names)} parameters ({', '.join(names)}), got {len(params)}"
                )
            object.__setattr__(self, "params", params)
        vis = self.visibility
        if isinstance(vis, SampledFunction):
            if np.any((vis.values < 0) | (vis.values > 1)):
                raise DataError("visibility values must lie in [0, 1]")
        elif not 0.0 <= float(vis) <= 1.0:
            raise DataError(f"visibility must lie in [0, 1], got {vis}")

    @classmethod
    def linear(cls, slope=0.5, intercept=0.0, **kw) -> "ResponseModel":
        return cls(Family.LINEAR, (slope, intercept), **kw)

    @classmethod
    def sigmoid(cls, amplitude=2.5, rate=3.0, center=1.5, **kw) -> "ResponseModel":
        return cls(Family.SIGMOID, (amplitude, rate, center), **kw)

    @classmethod
    def sinusoid(cls, amplitude=1.0, frequency=1.0, phase=0.0, offset=1.5, **kw) -> "ResponseModel":
        return cls(Family.SINUSOID, (amplitude, frequency, phase, offset), **kw)

    @classmethod
    def sampled(cls, samples: SampledFunction, visibility=DEFAULT_VISIBILITY, domain=None) -> "ResponseModel":
        if domain is None:
            domain = (samples.xs[0], samples.xs[-1])
        return cls(Family.SAMPLED, samples=samples, visibility=visibility, domain=domain)

    def _check_domain(self, x: np.ndarray) -> None:
        lo, hi = self.domain
        if x.size and (x.min() < lo or x.max() > hi):
            bad = x[(x < lo) | (x > hi)][0]
            raise RangeError(f"x={bad!r} V outside response domain [{lo}, {hi}]")

    def phase(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        p = self.params
        if self.family is Family.LINEAR:
            return p[0] * x + p[1]
        if self.family is Family.SIGMOID:
            return p[0] / (1.0 + np.exp(-p[1] * (x - p[2])))
        if self.family is Family.SINUSOID:
            return p[0] * np.sin(p[1] * x + p[2]) + p[3]
        return np.interp(x, self.samples.xs, self.samples.values)

    def vis(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        if isinstance(self.visibility, SampledFunction):
            return np.interp(x, self.visibility.xs, self.visibility.values)
        return np.full(x.shape, float(self.visibility))

    def __call__(self, x):
        return self.phase(x)


def eval_response(model: ResponseModel, x: float) -> PhasePoint:
    return PhasePoint(float(model.phase(x)), float(model.vis(x)))


def uniform_grid(n: int, domain: tuple[float, float] = DEFAULT_DOMAIN) -> np.ndarray:
    """``n`` equally spaced voltages, endpoints included."""
    if n < 1:
        raise DataError(f"grid needs at least one point, got {n}")
    if n == 1:
        return np.array([(domain[0] + domain[1]) / 2])
    return np.linspace(domain[0], domain[1], n)


@dataclass(frozen=True)
class SeededRng:
    """Reproducible random stream identified by a seed and a stream key.

    Streams with different keys are statistically independent, and a
    stream's output does not depend on which other streams were used.
    """

    seed: int
    stream_id: int | tuple[int, ...] = 0

    @property
    def key(self) -> tuple[int, ...]:
        sid = self.stream_id
        return tuple(int(s) for s in sid) if isinstance(sid, tuple) else (int(sid),)

    def substream(self, *ids: int) -> "SeededRng":
        return SeededRng(self.seed, self.key + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed), spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True, eq=False)
class CountRecord:
    x: float
    counts: np.ndarray
    n_shots: int = field(default=-1)

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64).ravel()
        if np.any(counts < 0):
            raise DataError("counts must be nonnegative")
        total = int(counts.sum())
        n_shots = total if self.n_shots == -1 else int(self.n_shots)
        if n_shots != total:
            raise DataError(f"counts sum to {total} but n_shots is {n_shots}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n_shots", n_shots)
        object.__setattr__(self, "x", float(self.x))

    def __eq__(self, other):
        if not isinstance(other, CountRecord):
            return NotImplemented
        return self.x == other.x and self.n_shots == other.n_shots and np.array_equal(self.counts, other.counts)


def sample_counts(probe: ProbeModel, point: PhasePoint, n_shots: int, rng: SeededRng, x: float = 0.0) -> CountRecord:
    if n_shots < 1:
        raise DataError(f"n_shots must be >= 1, got {n_shots}")
    p = probability_vector(probe, point)
    counts = rng.generator().multinomial(n_shots, p / p.sum())
    return CountRecord(x, counts, n_shots)


def acquire_function(
    model: ResponseModel,
    xs: Sequence[float],
    probe: ProbeModel,
    n_resources: int,
    rng: SeededRng,
) -> list[CountRecord]:
    """Count records at every fiducial voltage, one independent stream per point."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise DataError("no fiducial points requested")
    n_shots = shots_from_resources(probe, n_resources)
    phi = model.phase(xs)
    vis = model.vis(xs)
    return [
        sample_counts(probe, PhasePoint(float(phi[i]), float(vis[i])), n_shots, rng.substream(i), x=float(xs[i]))
        for i in range(xs.size)
    ]


def crb_variances(
    model: ResponseModel,
    xs,
    probe: ProbeModel,
    n_resources: int,
    convention: str = "per_shot",
) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    n_eff = effective_shots(probe, n_resources, convention)
    fisher = effective_fisher_array(probe, model.phase(xs), model.vis(xs))
    if np.any(~(fisher > 0.0)):
        bad = xs[~(fisher > 0.0)][0]
        raise UnidentifiableError(f"phase unidentifiable at x={bad!r} V: effective Fisher information is zero")
    return 1.0 / (n_eff * fisher)


def sample_crb_estimates(
    model: ResponseModel,
    xs,
    probe: ProbeModel,
    n_resources: int,
    rng: SeededRng,
    convention: str = "per_shot",
) -> SampledFunction:
    """Truth plus Gaussian noise at the Cramer-Rao variance.

    Point ``i`` draws from ``rng.substream(i)``.
    """
    xs = np.asarray(xs, dtype=float)
    var = crb_variances(model, xs, probe, n_resources, convention)
    noise = np.array([rng.substream(i).generator().standard_normal() for i in range(xs.size)])
    values = model.phase(xs) + np.sqrt(var) * noise
    return SampledFunction(xs, values, var, label=f"{probe.name}_crb")
