import math
import warnings

import numpy as np
import pytest

import qfe.bayes as bayes
from qfe.bayes import (
    EstimatorConfig,
    PosteriorGrid,
    boundary_mass,
    cell_centres,
    centred_support,
    estimate_point,
    estimate_records,
    posterior_grid,
    posterior_moments,
)
from qfe.errors import BoundaryMassWarning, DataError, DataImpossibleError, DomainError
from qfe.measurement import PhasePoint, ProbeModel, crb_variance, probability_vector
from qfe.simulate import CountRecord, SeededRng, sample_counts

PI = math.pi
STANDARD_RECORD = CountRecord(0.0, [192, 138, 8, 62], 400)  # 400 x probabilities at (pi/16, 1)


def mode(grid):
    i, j = np.unravel_index(np.argmax(grid.density), grid.density.shape)
    return grid.phi_axis[i], grid.vis_axis[j]


def quiet_estimate(*args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryMassWarning)
        return estimate_point(*args, **kw)


class TestPosteriorGrid:
    def test_empty_counts_uniform(self, noon2):
        grid = posterior_grid(CountRecord(0.0, [0, 0, 0, 0]), noon2, resolution=(64, 32))
        assert np.ptp(grid.density) == 0.0
        assert grid.mass == pytest.approx(1.0, abs=1e-12)

    def test_normalized_and_axes(self, noon2):
        grid = posterior_grid(STANDARD_RECORD, noon2)
        assert grid.mass == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.diff(grid.phi_axis) > 0) and np.all(np.diff(grid.vis_axis) > 0)
        assert grid.density.min() >= 0.0
        assert grid.phi_axis[0] > 0 and grid.phi_axis[-1] < PI

    def test_mode_at_truth_node(self, single):
        # truth placed exactly on a node of the 128 x 64 grid
        phi_axis = cell_centres(0.0, 2 * PI, 128)
        vis_axis = cell_centres(0.0, 1.0, 64)
        truth = (phi_axis[37], vis_axis[50])
        p = probability_vector(single, PhasePoint(*truth))
        counts = np.round(10**7 * p).astype(int)
        grid = posterior_grid(CountRecord(0.0, counts), single, resolution=(128, 64))
        assert mode(grid) == truth

    def test_standard_record_mode(self, noon2):
        phi_m, vis_m = mode(posterior_grid(STANDARD_RECORD, noon2))
        assert phi_m == pytest.approx(PI / 16, abs=0.02)
        assert vis_m > 0.97

    def test_large_counts_do_not_overflow(self, noon2):
        rec = sample_counts(noon2, PhasePoint(1.0, 0.95), 60_000, SeededRng(0))
        grid = posterior_grid(rec, noon2)
        assert np.all(np.isfinite(grid.density))
        assert grid.mass == pytest.approx(1.0, abs=1e-9)

    def test_support_wider_than_period(self, noon2):
        with pytest.raises(DomainError):
            posterior_grid(STANDARD_RECORD, noon2, support=((0.0, 4.0), (0.0, 1.0)))

    def test_resolution_floor(self, noon2):
        with pytest.raises(DataError):
            posterior_grid(STANDARD_RECORD, noon2, resolution=(8, 64))

    def test_wrong_count_length(self, noon2):
        with pytest.raises(DataError):
            posterior_grid(CountRecord(0.0, [1, 2, 3]), noon2)

    def test_data_impossible(self, noon2, monkeypatch):
        real = bayes.fringe_terms

        def fake(probe, phi, vis):
            p, a, b = real(probe, phi, vis)
            p = p.copy()
            p[2] = 0.0
            return p, a, b

        bayes._log_prob_table.cache_clear()
        monkeypatch.setattr(bayes, "fringe_terms", fake)
        try:
            with pytest.raises(DataImpossibleError, match="impossible"):
                posterior_grid(STANDARD_RECORD, noon2, resolution=(32, 32))
            posterior_grid(CountRecord(0.0, [5, 5, 0, 5]), noon2, resolution=(32, 32))
        finally:
            bayes._log_prob_table.cache_clear()


class TestPosteriorMoments:
    def test_uniform(self):
        n_phi, n_v = 512, 256
        grid = PosteriorGrid(
            cell_centres(0, PI, n_phi), cell_centres(0, 1, n_v), np.full((n_phi, n_v), 1 / PI)
        )
        s = posterior_moments(grid)
        assert s.phi_b == pytest.approx(PI / 2, rel=1e-12)
        assert s.var_phi == pytest.approx(PI**2 / 12, rel=1e-5)
        assert s.vis_b == pytest.approx(0.5, rel=1e-12)
        assert s.var_vis == pytest.approx(1 / 12, rel=1e-4)

    def test_delta(self):
        phi, vis = cell_centres(0, PI, 64), cell_centres(0, 1, 32)
        dens = np.zeros((64, 32))
        dens[10, 20] = 1 / ((phi[1] - phi[0]) * (vis[1] - vis[0]))
        s = posterior_moments(PosteriorGrid(phi, vis, dens))
        assert s.phi_b == pytest.approx(phi[10], rel=1e-12)
        assert s.vis_b == pytest.approx(vis[20], rel=1e-12)
        assert s.var_phi == pytest.approx(0.0, abs=1e-20)
        assert s.var_vis == pytest.approx(0.0, abs=1e-20)

    def test_unnormalized(self):
        grid = PosteriorGrid(cell_centres(0, 1, 16), cell_centres(0, 1, 16), np.full((16, 16), 2.0))
        with pytest.raises(DataError, match="normalized"):
            posterior_moments(grid)

    def test_restricted_support(self, noon2):
        grid = posterior_grid(STANDARD_RECORD, noon2, support=((0.0, PI / 2), (0.5, 1.0)), resolution=(512, 256))
        s = posterior_moments(grid)
        assert abs(s.phi_b - PI / 16) <= 3 * math.sqrt(s.var_phi)
        assert 0.5 <= s.vis_b <= 1.0


class TestEstimatePoint:
    def test_boundary_warning(self, noon2):
        # phase near 0 on the [0, pi) support: posterior wraps onto both edges
        rec = sample_counts(noon2, PhasePoint(0.01, 0.9), 400, SeededRng(0))
        with pytest.warns(BoundaryMassWarning):
            s = estimate_point(rec, noon2)
        assert s.boundary_mass > 1e-3

    def test_no_warning_mid_support(self, noon2):
        rec = sample_counts(noon2, PhasePoint(1.2, 0.8), 400, SeededRng(0))
        with warnings.catch_warnings():
            warnings.simplefilter("error", BoundaryMassWarning)
            s = estimate_point(rec, noon2)
        assert s.boundary_mass < 1e-3

    def test_custom_support_avoids_wrap(self, noon2):
        rec = sample_counts(noon2, PhasePoint(0.01, 0.9), 400, SeededRng(0))
        cfg = EstimatorConfig(phi_support=(-PI / 2, PI / 2))
        s = quiet_estimate(rec, noon2, cfg)
        assert abs(s.phi_b - 0.01) < 4 * math.sqrt(crb_variance(noon2, PhasePoint(0.01, 0.9), 400))

    @pytest.mark.filterwarnings("ignore::qfe.errors.BoundaryMassWarning")
    def test_records_helper(self, noon2):
        recs = [sample_counts(noon2, PhasePoint(1.0, 0.9), 400, SeededRng(0, i), x=0.1 * i) for i in range(3)]
        fn, summaries = estimate_records(recs, noon2, EstimatorConfig(n_phi=128, n_v=64))
        assert fn.xs.tolist() == [0.0, 0.1, 0.2]
        assert fn.values.tolist() == [s.phi_b for s in summaries]

    def test_centred_support(self, noon2):
        lo, hi = centred_support(noon2, [0.1, 2.5])
        assert hi - lo == pytest.approx(PI)
        assert (lo + hi) / 2 == pytest.approx(1.3)
        with pytest.warns(UserWarning, match="wrap"):
            centred_support(noon2, [0.0, 3.0])


class TestProperties:
    RECORDS = [
        STANDARD_RECORD,
        CountRecord(0.0, [110, 50, 90, 150], 400),
        CountRecord(0.0, [300, 410, 520, 670], 1900),
    ]

    @pytest.mark.parametrize("rec", RECORDS)
    def test_doubling_counts_shrinks_variance(self, noon2, rec):
        a = quiet_estimate(rec, noon2)
        b = quiet_estimate(CountRecord(rec.x, 2 * rec.counts), noon2)
        assert b.var_phi <= a.var_phi + 1e-12

    @pytest.mark.parametrize("rec", RECORDS)
    def test_grid_refinement(self, noon2, rec):
        a = quiet_estimate(rec, noon2, EstimatorConfig(n_phi=512, n_v=256))
        b = quiet_estimate(rec, noon2, EstimatorConfig(n_phi=1024, n_v=512))
        assert abs(a.phi_b - b.phi_b) < 0.1 * math.sqrt(a.var_phi)

    def test_coverage(self, noon2):
        truth = PhasePoint(1.1, 0.85)
        hits = 0
        for i in range(500):
            s = quiet_estimate(sample_counts(noon2, truth, 400, SeededRng(31, i)), noon2)
            hits += abs(s.phi_b - truth.phi) <= 2 * math.sqrt(s.var_phi)
        assert hits / 500 >= 0.90

    @pytest.mark.slow
    def test_mse_approaches_crb(self, noon2):
        # The posterior mean is shrunk by the bounded visibility prior, so at
        # small n its MSE sits below the CRB and rises toward it.
        truth = PhasePoint(0.7, 0.9)
        ratios = []
        for n in (100, 400, 1600):
            est = np.array(
                [quiet_estimate(sample_counts(noon2, truth, n, SeededRng(77, i)), noon2).phi_b for i in range(2000)]
            )
            ratios.append(np.mean((est - truth.phi) ** 2) / crb_variance(noon2, truth, n))
        gaps = np.abs(np.array(ratios) - 1)
        assert gaps[-1] < gaps[0]
        assert ratios[-1] <= 1.3
        assert ratios[0] < 1.0


def test_boundary_mass_uniform(noon2):
    grid = posterior_grid(CountRecord(0.0, [0, 0, 0, 0]), noon2, resolution=(100, 50))
    assert boundary_mass(grid, 2) == pytest.approx(1 - (96 * 46) / (100 * 50), rel=1e-9)
