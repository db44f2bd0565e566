import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfe.errors import DataError, DomainError, NormalizationError, UnidentifiableError
from qfe.measurement import (
    PhasePoint,
    ProbeKind,
    ProbeModel,
    closed_form_fisher,
    crb_variance,
    effective_fisher_array,
    effective_phase_fisher,
    effective_shots,
    fisher_entries,
    fisher_matrix,
    outcome_probability,
    probability_vector,
    shots_from_resources,
)

PI = math.pi


def expected_loglik(probe, truth, phi, vis):
    """sum_j p_j(truth) log p_j(phi, vis), written out independently of the package."""
    k = 1 if probe.kind is ProbeKind.SINGLE_PHOTON else 2
    total = 0.0
    for theta in probe.settings:
        p0 = 0.25 * (1 + truth[1] * math.cos(4 * k * theta - k * truth[0]))
        p = 0.25 * (1 + vis * math.cos(4 * k * theta - k * phi))
        total += p0 * math.log(p)
    return total


def fd_fisher(probe, phi, vis, h=1e-5):
    """Fisher matrix as minus the Hessian of the expected log-likelihood (central differences)."""
    g = lambda a, b: expected_loglik(probe, (phi, vis), a, b)  # noqa: E731
    f_pp = -(g(phi + h, vis) - 2 * g(phi, vis) + g(phi - h, vis)) / h**2
    f_vv = -(g(phi, vis + h) - 2 * g(phi, vis) + g(phi, vis - h)) / h**2
    f_pv = -(
        g(phi + h, vis + h) - g(phi + h, vis - h) - g(phi - h, vis + h) + g(phi - h, vis - h)
    ) / (4 * h**2)
    return f_pp, f_pv, f_vv


class TestProbeModel:
    def test_canonical_settings(self, noon2, single):
        assert noon2.settings == (0.0, PI / 16, PI / 8, 3 * PI / 16)
        assert single.settings == (0.0, PI / 8, PI / 4, 3 * PI / 8)

    @pytest.mark.parametrize("kind,k", [(ProbeKind.SINGLE_PHOTON, 1), (ProbeKind.NOON2, 2)])
    def test_photons_equal_multiplier(self, kind, k):
        probe = ProbeModel(kind)
        assert probe.photons_per_shot == probe.phase_multiplier == k
        assert probe.period == pytest.approx(2 * PI / k)

    def test_from_name(self):
        assert ProbeModel.from_name("NOON2") == ProbeModel.noon2()
        assert ProbeModel.from_name("single_photon") == ProbeModel.single_photon()
        with pytest.raises(DataError):
            ProbeModel.from_name("noon3")


class TestOutcomeProbability:
    def test_examples(self, noon2, single):
        assert outcome_probability(noon2, 0.0, PhasePoint(0.0, 1.0)) == 0.5
        assert outcome_probability(noon2, PI / 16, PhasePoint(0.0, 1.0)) == pytest.approx(0.25, abs=1e-16)
        assert outcome_probability(single, PI / 8, PhasePoint(0.0, 0.0)) == 0.25

    @pytest.mark.parametrize("vis", [-0.1, 1.0000001, math.nan])
    def test_bad_visibility(self, vis):
        with pytest.raises(DomainError):
            PhasePoint(0.3, vis)

    def test_range(self, noon2):
        for phi in np.linspace(0, 2 * PI, 17):
            for theta in noon2.settings:
                p = outcome_probability(noon2, theta, PhasePoint(phi, 1.0))
                assert 0.0 <= p <= 0.5


class TestProbabilityVector:
    @pytest.mark.parametrize("probe", [ProbeModel.noon2(), ProbeModel.single_photon()])
    def test_phase_zero(self, probe):
        np.testing.assert_allclose(probability_vector(probe, PhasePoint(0.0, 1.0)), [0.5, 0.25, 0.0, 0.25], atol=1e-16)

    def test_noon_pi_16(self, noon2):
        # direct evaluation of (1 + cos(a - pi/8)) / 4 at a = 0, pi/2, pi, 3pi/2
        oracle = [0.25 * (1 + math.cos(a - PI / 8)) for a in (0, PI / 2, PI, 3 * PI / 2)]
        got = probability_vector(noon2, PhasePoint(PI / 16, 1.0))
        np.testing.assert_allclose(got, oracle, rtol=0, atol=1e-15)
        np.testing.assert_allclose(got, [0.48097, 0.34567, 0.01903, 0.15433], atol=5e-6)

    @pytest.mark.parametrize("probe", [ProbeModel.noon2(), ProbeModel.single_photon()])
    def test_normalization_grid(self, probe):
        for phi in np.linspace(0, 2 * PI, 100, endpoint=False):
            for vis in np.linspace(0, 1, 11):
                assert abs(probability_vector(probe, PhasePoint(phi, vis)).sum() - 1) < 1e-12

    def test_non_canonical_settings_rejected(self):
        probe = ProbeModel(ProbeKind.NOON2, settings=(0.0, PI / 16, PI / 8))
        with pytest.raises(NormalizationError) as err:
            probability_vector(probe, PhasePoint(0.0, 1.0))
        assert err.value.deficit == pytest.approx(0.25)
        assert "deficit" in str(err.value)


class TestFisher:
    def test_noon_pi_16_matrix(self, noon2):
        fm = fisher_matrix(noon2, PhasePoint(PI / 16, 1.0))
        assert (fm.f_pp, fm.f_pv, fm.f_vv) == pytest.approx((4.0, -2.0, 3.0), rel=1e-9)

    @pytest.mark.parametrize("probe", [ProbeModel.noon2(), ProbeModel.single_photon()])
    def test_flat_fringe(self, probe):
        fm = fisher_matrix(probe, PhasePoint(0.4, 0.0))
        assert fm.f_pp == 0.0 and fm.f_pv == 0.0
        assert fm.f_vv > 0

    def test_visibility_one_with_zero_probability_is_finite(self, noon2):
        fm = fisher_matrix(noon2, PhasePoint(0.0, 1.0))
        assert all(math.isfinite(v) for v in (fm.f_pp, fm.f_pv, fm.f_vv))
        assert math.isfinite(effective_phase_fisher(noon2, PhasePoint(0.0, 1.0)))

    def test_matrix_duality(self, noon2, single):
        phi = np.arange(0, PI, 0.01)[:, None]
        vis = np.array([0.1, 0.5, 0.9, 0.99])[None, :]
        q = fisher_entries(noon2, phi, vis)[0]
        c = fisher_entries(single, 2 * phi, vis)[0]
        np.testing.assert_allclose(q, 4 * c, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("probe", [ProbeModel.noon2(), ProbeModel.single_photon()])
    @pytest.mark.parametrize("phi,vis", [(0.1, 0.3), (0.7, 0.9), (1.3, 0.95), (2.9, 0.6), (PI / 16, 0.99)])
    def test_finite_differences(self, probe, phi, vis):
        fm = fisher_matrix(probe, PhasePoint(phi, vis))
        f_pp, f_pv, f_vv = fd_fisher(probe, phi, vis)
        assert fm.f_pp == pytest.approx(f_pp, rel=1e-4)
        assert fm.f_vv == pytest.approx(f_vv, rel=1e-4)
        assert fm.f_pv == pytest.approx(f_pv, rel=1e-4, abs=1e-4 * math.sqrt(f_pp * f_vv))

    @settings(max_examples=200, deadline=None)
    @given(
        st.sampled_from(["noon2", "single"]),
        st.floats(0, 2 * PI),
        st.floats(0, 1),
    )
    def test_psd_and_nuisance_penalty(self, name, phi, vis):
        probe = ProbeModel.from_name(name)
        fm = fisher_matrix(probe, PhasePoint(phi, vis))
        eig = np.linalg.eigvalsh(fm.as_array())
        assert eig.min() >= -1e-9 * max(1.0, eig.max())
        assert effective_phase_fisher(probe, PhasePoint(phi, vis)) <= fm.f_pp + 1e-12 * max(1.0, fm.f_pp)


class TestEffectiveFisher:
    def test_examples(self, noon2, single):
        assert effective_phase_fisher(noon2, PhasePoint(PI / 8, 1.0)) == pytest.approx(4.0, rel=1e-9)
        assert effective_phase_fisher(noon2, PhasePoint(PI / 16, 1.0)) == pytest.approx(8 / 3, rel=1e-9)
        assert effective_phase_fisher(single, PhasePoint(PI / 4, 1.0)) == pytest.approx(1.0, rel=1e-9)

    def test_printed_closed_forms_at_examples(self, noon2, single):
        assert 8 / (4 - (1 - math.cos(PI))) == 4.0
        assert closed_form_fisher(noon2, PI / 16, 1.0) == pytest.approx(8 / 3)
        assert closed_form_fisher(single, PI / 4, 1.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("probe", [ProbeModel.noon2(), ProbeModel.single_photon()])
    def test_closed_form_grid(self, probe):
        phi = np.arange(0, PI, 0.01)[:, None]
        vis = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99])[None, :]
        got = effective_fisher_array(probe, phi, vis)
        want = closed_form_fisher(probe, phi, vis)
        assert np.max(np.abs(got - want) / want) < 1e-9

    def test_zero_visibility(self, noon2):
        assert effective_phase_fisher(noon2, PhasePoint(1.0, 0.0)) == 0.0


class TestCrb:
    def test_examples(self, noon2, single):
        assert crb_variance(noon2, PhasePoint(PI / 8, 1.0), 400) == pytest.approx(6.25e-4, rel=1e-9)
        assert crb_variance(noon2, PhasePoint(PI / 8, 1.0), 1) == pytest.approx(0.25, rel=1e-9)
        assert crb_variance(single, PhasePoint(PI / 4, 1.0), 800) == pytest.approx(1.25e-3, rel=1e-9)

    def test_unidentifiable(self, noon2):
        with pytest.raises(UnidentifiableError, match="unidentifiable"):
            crb_variance(noon2, PhasePoint(0.3, 0.0), 100)

    def test_bad_shots(self, noon2):
        with pytest.raises(DataError):
            crb_variance(noon2, PhasePoint(0.3, 0.5), 0)


class TestResources:
    def test_examples(self, noon2, single):
        assert shots_from_resources(noon2, 800) == 400
        assert shots_from_resources(single, 1900) == 1900

    def test_floor_warns(self, noon2):
        with pytest.warns(UserWarning, match="not divisible"):
            assert shots_from_resources(noon2, 3) == 1

    def test_too_few(self, noon2):
        with pytest.raises(DataError):
            shots_from_resources(noon2, 1)

    def test_conventions(self, noon2):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert effective_shots(noon2, 800, "per_shot") == 400
            assert effective_shots(noon2, 800, "per_resource") == 800
        with pytest.raises(DataError):
            effective_shots(noon2, 800, "per_photon")
