"""Grid-based joint Bayesian estimation of phase and visibility.

With a uniform prior the posterior is proportional to
``prod_theta p_theta(phi, v) ** n_theta``. It is evaluated on a
cell-centred grid in log space and summarised by its first and second
moments (midpoint rule).
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import BoundaryMassWarning, DataError, DataImpossibleError, DomainError
from .functions import SampledFunction
from .measurement import ProbeModel, fringe_terms
from .simulate import CountRecord

P_FLOOR = 1e-300
NORMALIZATION_TOL = 1e-9
MIN_RESOLUTION = 16


@dataclass(frozen=True)
class EstimatorConfig:
    """Prior support and grid resolution.

    ``phi_support=None`` means the probe's full fundamental domain
    ``[0, period)``.
    """

    phi_support: tuple[float, float] | None = None
    vis_support: tuple[float, float] = (0.0, 1.0)
    n_phi: int = 512
    n_v: int = 256
    boundary_threshold: float = 1e-3
    boundary_width: int = 2

    def support_for(self, probe: ProbeModel) -> tuple[tuple[float, float], tuple[float, float]]:
        phi = self.phi_support if self.phi_support is not None else (0.0, probe.period)
        return (float(phi[0]), float(phi[1])), (float(self.vis_support[0]), float(self.vis_support[1]))


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    phi_axis: np.ndarray
    vis_axis: np.ndarray
    density: np.ndarray

    @property
    def d_phi(self) -> float:
        return float(self.phi_axis[1] - self.phi_axis[0])

    @property
    def d_vis(self) -> float:
        return float(self.vis_axis[1] - self.vis_axis[0])

    @property
    def mass(self) -> float:
        return float(self.density.sum() * self.d_phi * self.d_vis)


@dataclass(frozen=True)
class PosteriorSummary:
    phi_b: float
    vis_b: float
    var_phi: float
    var_vis: float
    boundary_mass: float = 0.0


def cell_centres(lo: float, hi: float, n: int) -> np.ndarray:
    step = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * step


def _validate_support(probe, phi_support, vis_support, resolution):
    (p_lo, p_hi), (v_lo, v_hi) = phi_support, vis_support
    n_phi, n_v = resolution
    if n_phi < MIN_RESOLUTION or n_v < MIN_RESOLUTION:
        raise DataError(f"grid resolution must be at least {MIN_RESOLUTION} per axis, got {resolution}")
    if not p_hi > p_lo or not v_hi > v_lo:
        raise DataError("prior support must have positive extent")
    if p_hi - p_lo > probe.period * (1 + 1e-12):
        raise DomainError(
            f"phase support width {p_hi - p_lo:.6g} exceeds the {probe.name} period {probe.period:.6g}"
        )
    if v_lo < 0.0 or v_hi > 1.0:
        raise DomainError(f"visibility support [{v_lo}, {v_hi}] not within [0, 1]")


@functools.lru_cache(maxsize=16)
def _log_prob_table(probe: ProbeModel, p_lo, p_hi, v_lo, v_hi, n_phi, n_v):
    phi = cell_centres(p_lo, p_hi, n_phi)
    vis = cell_centres(v_lo, v_hi, n_v)
    p, _, _ = fringe_terms(probe, phi[:, None], vis[None, :])
    log_p = np.ascontiguousarray(np.log(np.maximum(p, P_FLOOR)))
    possible = (p > P_FLOOR).any(axis=(1, 2))
    for arr in (phi, vis, log_p, possible):
        arr.setflags(write=False)
    return phi, vis, log_p, possible


def posterior_grid(
    counts: CountRecord,
    probe: ProbeModel,
    support: tuple[tuple[float, float], tuple[float, float]] | None = None,
    resolution: tuple[int, int] = (512, 256),
) -> PosteriorGrid:
    if support is None:
        support = EstimatorConfig().support_for(probe)
    phi_support, vis_support = (tuple(map(float, s)) for s in support)
    resolution = (int(resolution[0]), int(resolution[1]))
    _validate_support(probe, phi_support, vis_support, resolution)
    n = np.asarray(counts.counts, dtype=float)
    if n.size != probe.n_settings:
        raise DataError(f"record has {n.size} counts but {probe.name} has {probe.n_settings} settings")
    phi, vis, log_p, possible = _log_prob_table(probe, *phi_support, *vis_support, *resolution)
    if np.any((n > 0) & ~possible):
        s = int(np.nonzero((n > 0) & ~possible)[0][0])
        raise DataImpossibleError(
            f"data impossible under model: setting {s} has {int(n[s])} counts but zero probability on the whole support"
        )
    surface, total = kernels.likelihood_surface(log_p, np.ascontiguousarray(n))
    d_area = (phi[1] - phi[0]) * (vis[1] - vis[0])
    surface /= total * d_area
    surface.setflags(write=False)
    return PosteriorGrid(phi, vis, surface)


def posterior_moments(grid: PosteriorGrid) -> PosteriorSummary:
    mass = grid.mass
    if abs(mass - 1.0) > NORMALIZATION_TOL:
        raise DataError(f"posterior grid is not normalized (total mass {mass!r})")
    m_phi = grid.density.sum(axis=1) * grid.d_vis * grid.d_phi
    m_vis = grid.density.sum(axis=0) * grid.d_phi * grid.d_vis
    phi_b = float(m_phi @ grid.phi_axis)
    vis_b = float(m_vis @ grid.vis_axis)
    var_phi = float(m_phi @ (grid.phi_axis - phi_b) ** 2)
    var_vis = float(m_vis @ (grid.vis_axis - vis_b) ** 2)
    return PosteriorSummary(phi_b, vis_b, max(var_phi, 0.0), max(var_vis, 0.0))


def boundary_mass(grid: PosteriorGrid, width: int = 2) -> float:
    """Posterior mass within ``width`` cells of any edge of the grid."""
    inner = grid.density[width:-width, width:-width].sum() * grid.d_phi * grid.d_vis
    return float(max(grid.mass - inner, 0.0))


def estimate_point(
    counts: CountRecord,
    probe: ProbeModel,
    config: EstimatorConfig | None = None,
) -> PosteriorSummary:
    """Posterior means and variances of (phi, vis) for one record.

    Emits :class:`BoundaryMassWarning` when more than
    ``config.boundary_threshold`` of the mass sits on the grid edge.
    """
    config = config or EstimatorConfig()
    grid = posterior_grid(counts, probe, config.support_for(probe), (config.n_phi, config.n_v))
    summary = posterior_moments(grid)
    edge = boundary_mass(grid, config.boundary_width)
    if edge > config.boundary_threshold:
        warnings.warn(
            f"posterior at x={counts.x!r} has {edge:.2e} of its mass on the grid boundary",
            BoundaryMassWarning,
            stacklevel=2,
        )
    return PosteriorSummary(summary.phi_b, summary.vis_b, summary.var_phi, summary.var_vis, edge)


def estimate_records(
    records: Sequence[CountRecord],
    probe: ProbeModel,
    config: EstimatorConfig | None = None,
    label: str = "",
) -> tuple[SampledFunction, list[PosteriorSummary]]:
    """Estimate every record; return the phase estimates as a sampled function too.

    Boundary warnings are collected into one summary warning.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryMassWarning)
        summaries = [estimate_point(r, probe, config) for r in records]
    threshold = (config or EstimatorConfig()).boundary_threshold
    flagged = sum(s.boundary_mass > threshold for s in summaries)
    if flagged:
        warnings.warn(
            f"{flagged} of {len(summaries)} posteriors put more than {threshold:g} of their mass on the grid boundary",
            BoundaryMassWarning,
            stacklevel=2,
        )
    xs = np.array([r.x for r in records])
    fn = SampledFunction(
        xs,
        [s.phi_b for s in summaries],
        [s.var_phi for s in summaries],
        label=label,
    )
    return fn, summaries


def centred_support(probe: ProbeModel, phi_values, margin_warn: float = 0.1) -> tuple[float, float]:
    """A one-period phase support centred on the span of ``phi_values``."""
    lo, hi = float(np.min(phi_values)), float(np.max(phi_values))
    centre = 0.5 * (lo + hi)
    half = probe.period / 2
    if hi - lo > probe.period * (1 - margin_warn):
        warnings.warn(
            f"phase span {hi - lo:.3g} rad nearly fills the {probe.name} period {probe.period:.3g}; "
            "estimates near the edges will wrap",
            stacklevel=2,
        )
    return centre - half, centre + half


__all__ = [
    "EstimatorConfig",
    "PosteriorGrid",
    "PosteriorSummary",
    "boundary_mass",
    "centred_support",
    "estimate_point",
    "estimate_records",
    "posterior_grid",
    "posterior_moments",
]
