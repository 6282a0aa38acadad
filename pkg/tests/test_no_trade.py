"""No-trade region tests: extraction, optimality, thresholds, serialization."""

from dataclasses import replace

import numpy as np
import pytest

from illiq.errors import ConcavityError
from illiq.hjb import make_grid, solve
from illiq.model import ModelParams, merton_fraction
from illiq.no_trade import (
    extract_boundaries,
    extract_region,
    foc_residual,
    threshold_times,
    threshold_times_integral,
    write_region_csv,
)

REF = ModelParams(mu=0.2, sigma=1.0, gamma=0.9, T=1.0, eps_buy=0.05, eps_sell=0.05, lam=3.0)


class TestTerminalSlice:
    def test_terminal_band_is_everything(self):
        """At the horizon any trade only pays fees, so no fraction trades."""
        g = make_grid(n_z=400)
        y_lo, y_hi = extract_boundaries(np.ones(g.x.size), g, REF)
        assert y_lo == 0.0 and y_hi == 1.0

    def test_region_starts_pinned_at_horizon(self, ref_region):
        assert ref_region.lower[0] == 0.0
        assert ref_region.upper[0] == 1.0


class TestReferenceRegion:
    def test_band_brackets_target_at_time_zero(self, ref_region):
        lo, hi = ref_region.at(0.0)
        y_m = merton_fraction(REF)
        assert lo < y_m < hi
        assert 0.05 < lo < 0.15
        assert 0.25 < hi < 0.32

    def test_band_ordered_everywhere(self, ref_region):
        assert np.all(ref_region.lower <= ref_region.upper + 1e-12)

    def test_band_widens_toward_horizon(self, ref_region):
        # as t -> T trading is less and less worth paying for
        widths = ref_region.upper - ref_region.lower
        k0 = len(ref_region.times) - 1          # t = 0
        for t in (0.3, 0.6, 0.85):
            k = int(np.argmin(np.abs(ref_region.times - t)))
            assert widths[k] >= widths[k0] - 1e-12

    def test_at_interpolates_between_levels(self, ref_region):
        t0, t1 = ref_region.times[10], ref_region.times[11]
        mid = 0.5 * (t0 + t1)
        lo_mid, hi_mid = ref_region.at(mid)
        assert min(ref_region.lower[10], ref_region.lower[11]) <= lo_mid \
            <= max(ref_region.lower[10], ref_region.lower[11])
        assert min(ref_region.upper[10], ref_region.upper[11]) <= hi_mid \
            <= max(ref_region.upper[10], ref_region.upper[11])


class TestFirstOrderConditions:
    @pytest.mark.parametrize("t", [0.0, 0.5])
    def test_residuals_vanish_at_refined_edges(self, ref_surface, ref_region, t):
        k = int(np.argmin(np.abs(ref_surface.times - t)))
        row = ref_surface.values[k]
        scale = np.abs(row).max()
        for side, y in (("buy", ref_region.lower[k]), ("sell", ref_region.upper[k])):
            if 0.0 < y < 1.0:
                res = foc_residual(row, ref_surface.grid, REF, y, side)
                assert abs(res) <= 1e-8 * scale

    def test_zero_cost_band_collapses_to_a_point(self):
        p = replace(REF, eps_buy=0.0, eps_sell=0.0)
        surf = solve(p, make_grid(n_z=1500), n_t=500)
        y_lo, y_hi = extract_boundaries(surf.values[-1], surf.grid, p)
        assert abs(y_hi - y_lo) < 1e-9
        assert abs(y_lo - merton_fraction(p)) < 0.05

    def test_width_tracks_coefficient_prediction(self):
        """width ~ 2 a1(c) eps^(1/3) with c = lam * eps^(2/3) per cost level.

        At fixed intensity the coupling constant changes with the cost, so
        the prediction must re-evaluate a1 per level; the naive fixed-c cube
        root would be off by the a1 ratio.
        """
        from illiq.asymptotics import a1, coupling_c

        for eps in (0.05, 0.02):
            p = replace(REF, eps_buy=eps, eps_sell=eps)
            surf = solve(p, make_grid(n_z=1500), n_t=500)
            y_lo, y_hi = extract_boundaries(surf.values[-1], surf.grid, p)
            predicted = 2.0 * a1(p, coupling_c(eps, p.lam)) * eps ** (1.0 / 3.0)
            assert (y_hi - y_lo) == pytest.approx(predicted, rel=0.25)

    def test_non_unimodal_slice_raises(self):
        g = make_grid(n_z=400)
        bumpy = 1.0 + 0.1 * np.exp(-((g.z + 2) ** 2)) + 0.1 * np.exp(-((g.z - 2) ** 2))
        row = np.empty(g.x.size)
        row[0] = row[-1] = 1.0
        row[1:-1] = bumpy
        with pytest.raises(ConcavityError):
            extract_boundaries(row, g, REF)


class TestThresholdTimes:
    def test_thresholds_sit_late_in_the_horizon(self, ref_surface, ref_region):
        t_lo, t_hi = threshold_times(ref_surface, ref_region)
        assert REF.T - 0.5 < t_lo < REF.T
        assert REF.T - 0.5 < t_hi < REF.T

    def test_band_pinned_after_thresholds(self, ref_surface, ref_region):
        dt = ref_surface.dt
        sel_lo = ref_region.times >= ref_region.t_lower + 0.5 * dt
        sel_hi = ref_region.times >= ref_region.t_upper + 0.5 * dt
        assert np.all(ref_region.lower[sel_lo] == 0.0)
        assert np.all(ref_region.upper[sel_hi] == 1.0)

    def test_integral_equations_agree_with_grid_scan(self, ref_surface, ref_region):
        """Two independent routes to the threshold times agree to 2 steps."""
        dt = ref_surface.dt
        t_lo_d, t_hi_d = threshold_times(ref_surface, ref_region)
        t_lo_i, t_hi_i = threshold_times_integral(ref_surface, ref_region)
        assert abs(t_lo_d - t_lo_i) <= 2 * dt
        assert abs(t_hi_d - t_hi_i) <= 2 * dt


class TestSerialization:
    def test_region_csv_round_trip(self, ref_region, tmp_path):
        path = tmp_path / "region.csv"
        write_region_csv(ref_region, str(path), extra_header=["note=test"])
        text = path.read_text().splitlines()
        assert text[0] == "# schema=illiq.region.v1"
        assert any(line.startswith("# t_lower=") for line in text)
        header_rows = sum(1 for line in text if line.startswith("#")) + 1
        data = np.loadtxt(str(path), delimiter=",", skiprows=header_rows)
        np.testing.assert_array_equal(data[:, 0], ref_region.times)
        np.testing.assert_array_equal(data[:, 1], ref_region.lower)
        np.testing.assert_array_equal(data[:, 2], ref_region.upper)


def test_region_from_full_extraction_matches_in_loop(ref_surface, ref_region):
    """Re-extracting from stored rows reproduces the region arrays."""
    fresh = extract_region(ref_surface)
    np.testing.assert_allclose(fresh.lower, ref_region.lower, atol=1e-12)
    np.testing.assert_allclose(fresh.upper, ref_region.upper, atol=1e-12)
