"""Measurement model for single-photon and two-photon N00N probes.

Both probes are read out with four half-wave-plate settings. A detected
event falls in exactly one setting, so the four outcome probabilities

    p_j = (1 + v cos(4 k theta_j - k phi)) / 4

form one categorical distribution, where ``k`` is the phase multiplier
(1 for a single photon, 2 for the N00N state).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError, NormalizationError, UnidentifiableError

# Visibility is clamped below 1 before dividing by outcome probabilities.
VIS_CLAMP = 1.0 - 1e-12
# Below this f_vv the nuisance direction is treated as absent.
F_VV_FLOOR = 1e-15
NORMALIZATION_TOL = 1e-12


class ProbeKind(enum.Enum):
    SINGLE_PHOTON = "single"
    NOON2 = "noon2"


_MULTIPLIER = {ProbeKind.SINGLE_PHOTON: 1, ProbeKind.NOON2: 2}


def canonical_settings(kind: ProbeKind) -> tuple[float, ...]:
    """HWP angles that make the four fringe arguments step by pi/2."""
    k = _MULTIPLIER[kind]
    return tuple(j * math.pi / (8 * k) for j in range(4))


@dataclass(frozen=True)
class ProbeModel:
    kind: ProbeKind
    settings: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.settings:
            object.__setattr__(self, "settings", canonical_settings(self.kind))
        else:
            object.__setattr__(self, "settings", tuple(float(t) for t in self.settings))

    @classmethod
    def single_photon(cls) -> "ProbeModel":
        return cls(ProbeKind.SINGLE_PHOTON)

    @classmethod
    def noon2(cls) -> "ProbeModel":
        return cls(ProbeKind.NOON2)

    @classmethod
    def from_name(cls, name: str) -> "ProbeModel":
        """Build a canonical probe from ``"single"`` or ``"noon2"`` (aliases accepted)."""
        key = name.strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "single": ProbeKind.SINGLE_PHOTON,
            "singlephoton": ProbeKind.SINGLE_PHOTON,
            "classical": ProbeKind.SINGLE_PHOTON,
            "noon2": ProbeKind.NOON2,
            "noon": ProbeKind.NOON2,
            "n00n": ProbeKind.NOON2,
            "quantum": ProbeKind.NOON2,
        }
        if key not in aliases:
            raise DataError(f"unknown probe '{name}' (expected 'single' or 'noon2')")
        return cls(aliases[key])

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def phase_multiplier(self) -> int:
        return _MULTIPLIER[self.kind]

    @property
    def photons_per_shot(self) -> int:
        return _MULTIPLIER[self.kind]

    @property
    def period(self) -> float:
        """Period of the likelihood in phi."""
        return 2.0 * math.pi / self.phase_multiplier

    @property
    def n_settings(self) -> int:
        return len(self.settings)

    @property
    def is_canonical(self) -> bool:
        return self.settings == canonical_settings(self.kind)

    def fringe_offsets(self) -> np.ndarray:
        """The per-setting fringe offsets ``4 k theta``."""
        return 4.0 * self.phase_multiplier * np.asarray(self.settings)


@dataclass(frozen=True)
class PhasePoint:
    phi: float
    vis: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise DomainError(f"phase must be finite, got {self.phi}")
        _check_vis(self.vis)


@dataclass(frozen=True)
class FisherMatrix:
    """Per-shot Fisher information for the parameters (phi, vis)."""

    f_pp: float
    f_pv: float
    f_vv: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.f_pp, self.f_pv], [self.f_pv, self.f_vv]])


def _check_vis(vis) -> None:
    v = np.asarray(vis, dtype=float)
    if not np.all((v >= 0.0) & (v <= 1.0)):
        raise DomainError(f"visibility must lie in [0, 1], got {vis}")


def fringe_terms(probe: ProbeModel, phi, vis):
    """Vectorised probabilities and derivatives.

    Returns ``(p, dp_dphi, dp_dvis)``, each of shape ``(n_settings,) +
    broadcast(phi, vis).shape``. No validation or clamping is applied.
    """
    phi = np.asarray(phi, dtype=float)
    vis = np.asarray(vis, dtype=float)
    k = probe.phase_multiplier
    arg = probe.fringe_offsets().reshape((-1,) + (1,) * max(phi.ndim, vis.ndim)) - k * phi
    c = np.cos(arg)
    p = 0.25 * (1.0 + vis * c)
    dp_dphi = 0.25 * vis * k * np.sin(arg)
    dp_dvis = 0.25 * c
    return p, dp_dphi, dp_dvis


def outcome_probability(probe: ProbeModel, theta: float, point: PhasePoint) -> float:
    _check_vis(point.vis)
    k = probe.phase_multiplier
    return 0.25 * (1.0 + point.vis * math.cos(4 * k * theta - k * point.phi))


def probability_vector(probe: ProbeModel, point: PhasePoint) -> np.ndarray:
    """Outcome probabilities over all settings of ``probe``.

    Raises :class:`NormalizationError` when the settings do not form a
    complete categorical outcome set.
    """
    _check_vis(point.vis)
    p, _, _ = fringe_terms(probe, point.phi, point.vis)
    deficit = 1.0 - float(p.sum())
    if abs(deficit) > NORMALIZATION_TOL:
        raise NormalizationError(deficit)
    return np.clip(p, 0.0, None)


def fisher_entries(probe: ProbeModel, phi, vis):
    """Vectorised ``(f_pp, f_pv, f_vv)`` over broadcast ``phi``, ``vis`` arrays."""
    _check_vis(vis)
    vis = np.minimum(np.asarray(vis, dtype=float), VIS_CLAMP)
    p, da, db = fringe_terms(probe, phi, vis)
    return (da * da / p).sum(0), (da * db / p).sum(0), (db * db / p).sum(0)


def fisher_matrix(probe: ProbeModel, point: PhasePoint) -> FisherMatrix:
    f_pp, f_pv, f_vv = fisher_entries(probe, point.phi, point.vis)
    return FisherMatrix(float(f_pp), float(f_pv), float(f_vv))


def schur_phase(f_pp, f_pv, f_vv):
    """Phase information left after profiling out the visibility."""
    f_pp, f_pv, f_vv = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (f_pp, f_pv, f_vv)))
    safe = np.where(f_vv < F_VV_FLOOR, 1.0, f_vv)
    return np.where(f_vv < F_VV_FLOOR, f_pp, f_pp - f_pv * f_pv / safe)


def effective_fisher_array(probe: ProbeModel, phi, vis) -> np.ndarray:
    return schur_phase(*fisher_entries(probe, phi, vis))


def effective_phase_fisher(probe: ProbeModel, point: PhasePoint) -> float:
    """Per-shot phase Fisher information with the visibility as a nuisance."""
    fm = fisher_matrix(probe, point)
    return float(schur_phase(fm.f_pp, fm.f_pv, fm.f_vv))


def closed_form_fisher(probe: ProbeModel, phi, vis):
    """Textbook closed forms of the effective Fisher for the two canonical probes."""
    phi = np.asarray(phi, dtype=float)
    v2 = np.asarray(vis, dtype=float) ** 2
    if probe.kind is ProbeKind.SINGLE_PHOTON:
        return 2.0 * v2 / (4.0 - v2 * (1.0 - np.cos(4.0 * phi)))
    return 8.0 * v2 / (4.0 - v2 * (1.0 - np.cos(8.0 * phi)))


def crb_variance(probe: ProbeModel, point: PhasePoint, n_shots: int) -> float:
    """Cramer-Rao variance ``1 / (n_shots F)`` of the phase."""
    if n_shots < 1:
        raise DataError(f"n_shots must be >= 1, got {n_shots}")
    f = effective_phase_fisher(probe, point)
    if not f > 0.0:
        raise UnidentifiableError()
    return 1.0 / (n_shots * f)


def shots_from_resources(probe: ProbeModel, n_resources: int) -> int:
    """Number of repetitions affordable with ``n_resources`` photons."""
    n_resources = int(n_resources)
    if n_resources < probe.photons_per_shot:
        raise DataError(
            f"{n_resources} resources cannot fund a single {probe.name} shot "
            f"({probe.photons_per_shot} photons each)"
        )
    n_shots, rem = divmod(n_resources, probe.photons_per_shot)
    if rem:
        warnings.warn(
            f"{n_resources} resources not divisible by {probe.photons_per_shot}; using {n_shots} shots",
            stacklevel=2,
        )
    return n_shots


RESOURCE_CONVENTIONS = ("per_shot", "per_resource")


def effective_shots(probe: ProbeModel, n_resources: int, convention: str = "per_shot") -> int:
    """Multiplier of the per-shot Fisher under a resource-accounting convention.

    ``per_shot`` divides the resources by the photons in each state;
    ``per_resource`` uses the resource count directly.
    """
    if convention == "per_shot":
        return shots_from_resources(probe, n_resources)
    if convention == "per_resource":
        if n_resources < 1:
            raise DataError(f"n_resources must be >= 1, got {n_resources}")
        return int(n_resources)
    raise DataError(f"unknown resource convention '{convention}' (expected one of {RESOURCE_CONVENTIONS})")
