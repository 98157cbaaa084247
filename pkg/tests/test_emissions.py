import pytest
from hypothesis import given
from hypothesis import strategies as st

from cityaccess.emissions import (
    DispersionGeometry,
    EmissionParams,
    WhoClass,
    annual_fleet_estimate,
    annual_from_km,
    classify_who,
    dispersion_volume,
    steady_concentration,
    sweep,
)


class TestAnnualFleetEstimate:
    def test_dublin_budget(self):
        kg_year, kg_day = annual_fleet_estimate(170_000, 4.0, 0.10)
        assert kg_year == 68_000.0
        assert kg_day == pytest.approx(185.0, abs=2.0)

    def test_zero_fleet(self):
        assert annual_fleet_estimate(0, 4.0, 0.1) == (0.0, 0.0)

    def test_fraction_one_recovers_total_mass(self):
        kg_year, _ = annual_fleet_estimate(170_000, 4.0, 1.0)
        assert kg_year == 680_000.0


class TestDispersionVolume:
    def test_dublin_street_network(self):
        geom = DispersionGeometry(street_length_m=11_250_000)
        assert dispersion_volume(geom) == pytest.approx(450e6)

    def test_unit_cube(self):
        assert dispersion_volume(DispersionGeometry(1, 1, 1)) == 1.0

    def test_linear_in_length(self):
        v1 = dispersion_volume(DispersionGeometry(1000))
        v2 = dispersion_volume(DispersionGeometry(2000))
        assert v2 == 2 * v1

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            DispersionGeometry(street_length_m=0)


class TestSteadyConcentration:
    def test_dublin_point(self):
        # 68000e9 / 8760 / 450e6 by hand
        assert steady_concentration(68_000, 450e6, 1) == pytest.approx(17.25, abs=0.05)

    def test_zero_mass(self):
        assert steady_concentration(0, 450e6, 1) == 0.0

    def test_double_air_changes_halves(self):
        c1 = steady_concentration(1000, 1e6, 1)
        c2 = steady_concentration(1000, 1e6, 2)
        assert c2 == pytest.approx(c1 / 2)

    @given(
        mass=st.floats(0, 1e6),
        vol=st.floats(1, 1e10),
        scale=st.floats(1.01, 100),
    )
    def test_linearity_and_inverse_proportionality(self, mass, vol, scale):
        base = steady_concentration(mass, vol, 1)
        assert steady_concentration(mass * scale, vol, 1) == pytest.approx(
            base * scale, rel=1e-9
        )
        assert steady_concentration(mass, vol * scale, 1) == pytest.approx(
            base / scale, rel=1e-9
        )
        assert steady_concentration(mass, vol, scale) == pytest.approx(
            base / scale, rel=1e-9
        )


class TestClassifyWho:
    def test_dublin_above_annual_limit(self):
        assert classify_who(17.25, "pm25", "annual") is WhoClass.ABOVE_LIMIT

    def test_boundary_is_safe(self):
        assert classify_who(10.0, "pm25", "annual") is WhoClass.SAFE

    def test_daily_limit(self):
        assert classify_who(24.9, "pm25", "daily") is WhoClass.SAFE
        assert classify_who(25.1, "pm25", "daily") is WhoClass.ABOVE_LIMIT

    def test_pm10_limits(self):
        assert classify_who(50.0, "pm10", "daily") is WhoClass.SAFE
        assert classify_who(20.5, "pm10", "annual") is WhoClass.ABOVE_LIMIT

    def test_unknown_species_rejected(self):
        with pytest.raises(ValueError):
            classify_who(5.0, "pm1", "daily")

    @given(c1=st.floats(0, 100), c2=st.floats(0, 100))
    def test_classification_monotone(self, c1, c2):
        lo, hi = sorted((c1, c2))
        if classify_who(lo) is WhoClass.ABOVE_LIMIT:
            assert classify_who(hi) is WhoClass.ABOVE_LIMIT


class TestSweep:
    def test_car_axis_linear(self):
        rows = sweep("cars", [50_000, 100_000])
        assert rows[1][1] == pytest.approx(2 * rows[0][1])

    def test_volume_axis_inverse(self):
        rows = sweep("volume", [225e6, 450e6])
        assert rows[0][1] == pytest.approx(2 * rows[1][1])

    def test_hundred_thousand_car_boundary(self):
        rows = sweep("cars", [100_000], per_car_airborne_kg_year=0.4, volume_m3=450e6)
        x, conc, _ = rows[0]
        assert conc == pytest.approx(10.1, abs=0.2)

    def test_bad_axis_rejected(self):
        with pytest.raises(ValueError):
            sweep("speed", [1.0])


class TestParams:
    def test_wear_rate_bounds(self):
        with pytest.raises(ValueError):
            EmissionParams(wear_mg_per_km=300)

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            EmissionParams(airborne_fraction=1.5)

    def test_default_per_car_airborne(self):
        assert EmissionParams().airborne_kg_per_car_per_year == pytest.approx(0.4)

    def test_annual_and_per_km_modes_agree(self):
        # 35,000 km per tyre set at the 114.3 mg/km calibration
        via_km = annual_from_km(170_000, 35_000, 114.3, 0.1)
        via_kg, _ = annual_fleet_estimate(170_000, 4.0, 0.1)
        assert via_km == pytest.approx(via_kg, rel=0.15)
