"""Resource-allocation campaigns: delta^2 versus sampling density.

For every probe and resource budget a set of fiducial points is acquired,
thinned to ``n_s`` points, interpolated onto the reference grid and
compared with the reference. Error bars come from re-perturbing the
fiducial estimates with their own variances ``mc_reps`` times.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import platform
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels
from .bayes import EstimatorConfig, centred_support, estimate_records
from .errors import DataError, QfeError
from .functions import (
    InterpolationMethod,
    SampledFunction,
    delta_squared_batch,
    subset_indices,
)
from .measurement import RESOURCE_CONVENTIONS, ProbeModel
from .simulate import ResponseModel, SeededRng, acquire_function, sample_crb_estimates, uniform_grid

log = logging.getLogger(__name__)

MODES = ("full", "crb", "exact")
N_S_LADDER = (2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 50, 60, 70, 80, 90, 100)

# leading element of every stream key
REFERENCE_STREAM = 0
ACQUIRE_STREAM = 1
MC_STREAM = 2


def default_n_s_values(n_points: int) -> tuple[int, ...]:
    vals = [n for n in N_S_LADDER if n <= n_points]
    if n_points not in vals:
        vals.append(n_points)
    return tuple(vals)


@dataclass(frozen=True)
class CampaignConfig:
    response: ResponseModel = field(default_factory=ResponseModel.sigmoid)
    probes: tuple[ProbeModel, ...] = (ProbeModel.noon2(), ProbeModel.single_photon())
    n_resources_list: tuple[int, ...] = (800, 1900)
    n_points: int = 100
    n_s_values: tuple[int, ...] | None = None
    methods: tuple[InterpolationMethod, ...] = (InterpolationMethod.NEAREST, InterpolationMethod.LINEAR)
    reference_n_s: int = 500
    reference_n_resources: int = 60000
    reference_probe: ProbeModel = ProbeModel.noon2()
    reference_mode: str = "full"
    mc_reps: int = 500
    mode: str = "full"
    seed: int = 0
    resource_convention: str = "per_shot"
    n_phi: int = 512
    n_v: int = 256

    def __post_init__(self):
        if self.n_s_values is None:
            object.__setattr__(self, "n_s_values", default_n_s_values(self.n_points))
        self.validate()

    def validate(self) -> None:
        if self.n_points < 2:
            raise DataError(f"n_points must be >= 2, got {self.n_points}")
        for n_s in self.n_s_values:
            if n_s > self.n_points:
                raise DataError(f"n_s exceeds acquired points ({n_s} > {self.n_points})")
            if n_s < 2:
                raise DataError(f"n_s must be >= 2, got {n_s}")
        if self.mc_reps < 2:
            raise DataError(f"mc_reps must be >= 2, got {self.mc_reps}")
        if self.reference_n_s < 2:
            raise DataError(f"reference_n_s must be >= 2, got {self.reference_n_s}")
        if self.mode not in ("full", "crb", "exact"):
            raise DataError(f"mode must be one of full, crb, exact; got '{self.mode}'")
        if self.reference_mode not in MODES:
            raise DataError(f"reference_mode must be one of {', '.join(MODES)}; got '{self.reference_mode}'")
        if self.resource_convention not in RESOURCE_CONVENTIONS:
            raise DataError(f"resource_convention must be one of {', '.join(RESOURCE_CONVENTIONS)}")
        if not self.probes or not self.n_resources_list or not self.methods or not self.n_s_values:
            raise DataError("probes, n_resources, methods and n_s_values must be nonempty")
        if any(n < 1 for n in self.n_resources_list) or self.reference_n_resources < 1:
            raise DataError("resource counts must be positive")

    @property
    def estimator(self) -> EstimatorConfig:
        return EstimatorConfig(n_phi=self.n_phi, n_v=self.n_v)

    def to_dict(self) -> dict:
        resp = self.response
        vis = resp.visibility
        return {
            "response": resp.family.value,
            "response_params": list(resp.params),
            "response_samples": None
            if resp.samples is None
            else [resp.samples.xs.tolist(), resp.samples.values.tolist()],
            "vis": vis if isinstance(vis, float) else [vis.xs.tolist(), vis.values.tolist()],
            "domain": list(resp.domain),
            "probes": [p.name for p in self.probes],
            "n_resources": list(self.n_resources_list),
            "n_points": self.n_points,
            "n_s_values": list(self.n_s_values),
            "methods": [m.value for m in self.methods],
            "reference_n_s": self.reference_n_s,
            "reference_n_resources": self.reference_n_resources,
            "reference_probe": self.reference_probe.name,
            "reference_mode": self.reference_mode,
            "mc_reps": self.mc_reps,
            "mode": self.mode,
            "seed": self.seed,
            "resource_convention": self.resource_convention,
            "n_phi": self.n_phi,
            "n_v": self.n_v,
        }

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class CampaignRow:
    probe: str
    n_resources: int
    method: str
    n_s: int
    delta2_mean: float
    delta2_std: float


@dataclass
class CampaignResult:
    rows: list[CampaignRow]
    reference: SampledFunction
    points: dict[tuple[str, int], SampledFunction]
    provenance: dict
    failures: list[str] = field(default_factory=list)

    def curve(self, probe: str, n_resources: int, method: str):
        """``(n_s, mean, std)`` arrays of one curve, ordered by ``n_s``."""
        rows = sorted(
            (r for r in self.rows if (r.probe, r.n_resources, r.method) == (probe, n_resources, method)),
            key=lambda r: r.n_s,
        )
        if not rows:
            raise KeyError((probe, n_resources, method))
        return (
            np.array([r.n_s for r in rows]),
            np.array([r.delta2_mean for r in rows]),
            np.array([r.delta2_std for r in rows]),
        )

    def curve_keys(self) -> list[tuple[str, int, str]]:
        seen = {}
        for r in self.rows:
            seen.setdefault((r.probe, r.n_resources, r.method), None)
        return list(seen)


def _exact_function(model: ResponseModel, xs, label: str) -> SampledFunction:
    return SampledFunction(xs, model.phase(xs), np.zeros(len(xs)), label=label)


def measure(config: CampaignConfig, mode: str, probe: ProbeModel, n_resources: int, xs, rng, label: str):
    """Phase estimates at ``xs`` in one of the acquisition modes.

    ``full`` samples counts and runs the Bayesian estimator on a phase
    support centred on the response range; ``crb`` adds Cramer-Rao
    Gaussian noise; ``exact`` returns the truth with zero variances.
    """
    model = config.response
    if mode == "exact":
        return _exact_function(model, xs, label)
    if mode == "crb":
        fn = sample_crb_estimates(model, xs, probe, n_resources, rng, config.resource_convention)
        return SampledFunction(fn.xs, fn.values, fn.variances, label=label)
    records = acquire_function(model, xs, probe, n_resources, rng)
    support = centred_support(probe, model.phase(uniform_grid(max(config.reference_n_s, 2), model.domain)))
    est = EstimatorConfig(phi_support=support, n_phi=config.n_phi, n_v=config.n_v)
    fn, _ = estimate_records(records, probe, est, label=label)
    return fn


def build_reference(config: CampaignConfig, rng: SeededRng) -> SampledFunction:
    """Dense, well-resourced reference measurement on a uniform grid."""
    xs = uniform_grid(config.reference_n_s, config.response.domain)
    return measure(
        config,
        config.reference_mode,
        config.reference_probe,
        config.reference_n_resources,
        xs,
        rng,
        "reference",
    )


def standard_normals(rng: SeededRng, n_points: int, reps: int) -> np.ndarray:
    """``(reps, n_points)`` normals; column ``i`` comes from ``rng.substream(i)``."""
    return np.column_stack([rng.substream(i).generator().standard_normal(reps) for i in range(n_points)])


def montecarlo_delta_error(
    points: SampledFunction,
    reference: SampledFunction,
    method: InterpolationMethod,
    reps: int,
    rng: SeededRng | None = None,
    noise: np.ndarray | None = None,
) -> tuple[float, float]:
    """Mean and standard deviation of delta^2 over Gaussian re-perturbations.

    Each repetition adds ``N(0, variance_i)`` to every point, interpolates
    onto the reference grid and evaluates delta^2. Pre-drawn standard
    normals of shape ``(reps, len(points))`` may be passed as ``noise``.
    """
    if points.variances is None:
        raise DataError("points carry no variances; cannot run the Monte-Carlo error routine")
    if reps < 2:
        raise DataError(f"reps must be >= 2, got {reps}")
    if not np.any(points.variances):
        d2 = float(delta_squared_batch(points.xs, points.values[None, :], reference, method)[0])
        return d2, 0.0
    if noise is None:
        if rng is None:
            raise DataError("need an rng or pre-drawn noise")
        noise = standard_normals(rng, len(points), reps)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (reps, len(points)):
        raise DataError(f"noise shape {noise.shape} != {(reps, len(points))}")
    values = points.values + np.sqrt(points.variances) * noise
    d2 = delta_squared_batch(points.xs, values, reference, method)
    return float(d2.mean()), float(d2.std(ddof=1))


def stream_key(probe: ProbeModel, n_resources: int) -> tuple[int, int]:
    return probe.phase_multiplier, int(n_resources)


def _run_task(config: CampaignConfig, reference: SampledFunction, probe: ProbeModel, n_resources: int):
    rng = SeededRng(config.seed)
    key = stream_key(probe, n_resources)
    xs = uniform_grid(config.n_points, config.response.domain)
    label = f"{probe.name}_{n_resources}"
    points = measure(config, config.mode, probe, n_resources, xs, rng.substream(ACQUIRE_STREAM, *key), label)
    noise = standard_normals(rng.substream(MC_STREAM, *key), len(points), config.mc_reps)
    rows = []
    for method in config.methods:
        for n_s in config.n_s_values:
            idx = subset_indices(len(points), n_s)
            mean, std = montecarlo_delta_error(
                points.take(idx), reference, method, config.mc_reps, noise=noise[:, idx]
            )
            rows.append(CampaignRow(probe.name, int(n_resources), method.value, int(n_s), mean, std))
    return points, rows


def provenance(config: CampaignConfig) -> dict:
    return {
        "config_sha256": config.digest(),
        "config": config.to_dict(),
        "seed": config.seed,
        "versions": {
            "qfe": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
        },
        "kernel_backend": kernels.BACKEND,
    }


def run_campaign(config: CampaignConfig, workers: int = 1) -> CampaignResult:
    """Run every (probe, N_r) acquisition and sweep ``n_s`` and methods.

    Tasks may run on ``workers`` threads; rows always come back in config
    order and are identical for any worker count. A failing task yields
    NaN rows and an entry in ``failures``.
    """
    reference = build_reference(config, SeededRng(config.seed).substream(REFERENCE_STREAM))
    tasks = [(p, nr) for p in config.probes for nr in config.n_resources_list]

    def run(task):
        probe, nr = task
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                out = _run_task(config, reference, probe, nr)
            for w in caught:
                log.info("%s N_r=%s: %s", probe.name, nr, w.message)
            return out, None
        except QfeError as exc:
            return None, f"{probe.name} N_r={nr}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, tasks))
    else:
        outcomes = [run(t) for t in tasks]

    rows, points, failures = [], {}, []
    for (probe, nr), (out, err) in zip(tasks, outcomes):
        if err is not None:
            log.error("campaign task failed: %s", err)
            failures.append(err)
            rows.extend(
                CampaignRow(probe.name, int(nr), m.value, int(n_s), math.nan, math.nan)
                for m in config.methods
                for n_s in config.n_s_values
            )
            continue
        pts, task_rows = out
        points[(probe.name, int(nr))] = pts
        rows.extend(task_rows)
    return CampaignResult(rows, reference, points, provenance(config), failures)


@dataclass(frozen=True)
class CrossoverSummary:
    n_s_star: int
    floor: float
    floor_std: float
    low_confidence: bool


def crossover_point(n_s, mean, std, rtol: float = 0.0) -> CrossoverSummary:
    """Smallest ``n_s`` whose delta^2 is within two combined std of the floor.

    The floor is the mean of the last two points. ``rtol`` widens the band
    by a fraction of the floor (useful for noise-free curves). When no
    point qualifies, the largest ``n_s`` is returned. The result is flagged
    low-confidence if any later point leaves the band again.
    """
    n_s, mean, std = (np.asarray(a, dtype=float) for a in (n_s, mean, std))
    if n_s.size < 4:
        raise DataError(f"crossover analysis needs at least 4 points, got {n_s.size}")
    order = np.argsort(n_s)
    n_s, mean, std = n_s[order], mean[order], std[order]
    floor = float(mean[-2:].mean())
    floor_std = float(math.sqrt(std[-2] ** 2 + std[-1] ** 2) / 2)
    band = 2.0 * np.sqrt(std**2 + floor_std**2) + rtol * abs(floor)
    inside = np.abs(mean - floor) <= band
    if not inside.any():
        return CrossoverSummary(int(n_s[-1]), floor, floor_std, False)
    first = int(np.argmax(inside))
    low_conf = bool(not inside[first:].all())
    return CrossoverSummary(int(n_s[first]), floor, floor_std, low_conf)


def crossover_analysis(result: CampaignResult, rtol: float = 0.0) -> dict[tuple[str, int, str], CrossoverSummary]:
    out = {}
    for key in result.curve_keys():
        n_s, mean, std = result.curve(*key)
        out[key] = crossover_point(n_s, mean, std, rtol)
    return out
