import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vbpv.errors import ExtractionError, InputError
from vbpv.module_model import (
    THERMAL_BIFACIAL,
    THERMAL_MONOFACIAL,
    SingleDiodeParams,
    ThermalParams,
    _at_conditions,
    bifaciality_factors,
    bstc_equivalent_irradiance,
    bstc_rating,
    cell_temperature,
    current_at,
    dump_module_spec,
    extract_single_diode,
    iv_curve,
    load_module_spec,
    mpp,
    open_circuit_voltage,
    simple_power,
)

KEYS = ["vikram_mono_375", "vikram_poly_330", "adani_bifacial_355"]


def implicit_current(op, v, iterations=200):
    """Solve I = Iph - I0(exp((V+I Rs)/a) - 1) - (V+I Rs)/Rsh by bisection on I."""
    v = np.asarray(v, dtype=float)
    iph, i0, a = float(op.i_ph), float(op.i_0), float(op.a)
    lo = np.full_like(v, -2 * iph - v.max() / op.r_sh)
    hi = np.full_like(v, iph)

    def f(i):
        vd = v + i * op.r_s
        return iph - i0 * np.expm1(vd / a) - vd / op.r_sh - i

    for _ in range(iterations):
        mid = (lo + hi) / 2
        pos = f(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return (lo + hi) / 2


class TestModuleSpec:
    def test_bundled_values(self, mono, poly, bifacial):
        assert (mono.p_max, mono.v_oc, mono.i_sc) == (375.0, 48.7, 9.94)
        assert (poly.p_max, poly.v_mp, poly.i_mp) == (330.0, 38.0, 8.7)
        assert bifacial.bifaciality == 0.87
        assert not mono.is_bifacial and bifacial.is_bifacial

    @pytest.mark.parametrize("changes", [
        {"v_mp": 50.0},
        {"i_mp": 10.0},
        {"p_max": 400.0},
        {"tc_voc": 0.1},
        {"tc_isc": -0.1},
        {"bifaciality": 1.2},
        {"length": 0.0},
    ])
    def test_invariants(self, mono, changes):
        with pytest.raises(InputError):
            replace(mono, **changes)

    def test_phi_defaults(self, bifacial):
        assert bifacial.phi_isc_effective == bifacial.phi_voc_effective == 0.87
        assert replace(bifacial, phi_isc=0.9).phi_isc_effective == 0.9

    def test_json_round_trip(self, bifacial, tmp_path):
        path = tmp_path / "m.json"
        dump_module_spec(bifacial, path)
        assert load_module_spec(path) == bifacial
        assert json.loads(path.read_text())["p_max"] == 355.0


class TestBifacialityFactors:
    def test_table_value(self):
        f = bifaciality_factors({"p_max": 355, "v_oc": 46.4, "i_sc": 9.74},
                                {"p_max": 308.85, "v_oc": 46.4, "i_sc": 9.74})
        assert f.phi_pmax == pytest.approx(0.87)
        assert f.in_band()
        assert not f.unusual

    def test_identical(self):
        d = {"p_max": 1.0, "v_oc": 2.0, "i_sc": 3.0}
        f = bifaciality_factors(d, d)
        assert (f.phi_pmax, f.phi_voc, f.phi_isc) == (1, 1, 1)

    def test_opaque(self):
        f = bifaciality_factors({"p_max": 1.0, "v_oc": 2.0, "i_sc": 3.0}, {"p_max": 0, "v_oc": 0, "i_sc": 0})
        assert (f.phi_pmax, f.phi_voc, f.phi_isc) == (0, 0, 0)

    def test_rear_above_front_flags(self):
        f = bifaciality_factors({"p_max": 1.0, "v_oc": 2.0, "i_sc": 3.0}, {"p_max": 1.1, "v_oc": 2, "i_sc": 3})
        assert f.unusual

    def test_front_zero(self):
        with pytest.raises(InputError):
            bifaciality_factors({"p_max": 0, "v_oc": 1, "i_sc": 1}, {"p_max": 0, "v_oc": 0, "i_sc": 0})


class TestThermal:
    def test_dark(self):
        assert cell_temperature(31.0, 0.0, 0.0, THERMAL_MONOFACIAL) == 31.0

    def test_noct_like(self):
        assert cell_temperature(20, 800, 0, THERMAL_MONOFACIAL) == pytest.approx(45.0)
        assert cell_temperature(20, 800, 0, THERMAL_BIFACIAL) == pytest.approx(47.5, abs=0.05)

    def test_doubling_u_halves_rise(self):
        t1 = cell_temperature(20, 700, 100, ThermalParams(0.9, 0.8, 20.0))
        t2 = cell_temperature(20, 700, 100, ThermalParams(0.9, 0.8, 40.0))
        assert t2 - 20 == pytest.approx((t1 - 20) / 2)

    @pytest.mark.parametrize("args", [(0.0, 0.9, 28.8), (0.9, 1.1, 28.8), (0.9, 0.9, 0.0)])
    def test_invalid(self, args):
        with pytest.raises(InputError):
            ThermalParams(*args)


class TestSimplePower:
    def test_stc(self, mono):
        assert simple_power(mono, 1000.0, 25.0) == mono.p_max

    def test_bifacial_hot(self, bifacial):
        assert simple_power(bifacial, 1000.0, 50.0) == pytest.approx(319.5)

    def test_negative(self, mono):
        with pytest.raises(InputError):
            simple_power(mono, -1.0, 25.0)

    def test_vectorized(self, mono):
        p = simple_power(mono, np.array([0.0, 500.0, 1000.0]), 25.0)
        np.testing.assert_allclose(p, [0.0, 187.5, 375.0])

    @staticmethod
    def deviation(spec, params, g, t):
        G, T = np.meshgrid(g, t)
        diode = mpp(params, G, 0.0, 0.0, T)[2]
        return np.abs(simple_power(spec, G, T) - diode) / diode

    @pytest.mark.parametrize("key", ["vikram_mono_375", "vikram_poly_330"])
    def test_monofacial_agrees_above_400(self, modules, params, key):
        dev = self.deviation(modules[key], params[key], np.arange(400, 1101, 50.0), np.arange(15, 66, 5.0))
        assert dev.max() < 0.03

    def test_bifacial_agrees_near_stc(self, bifacial, params):
        dev = self.deviation(bifacial, params["adani_bifacial_355"], np.arange(800, 1101, 50.0),
                             np.arange(15, 46, 5.0))
        assert dev.max() < 0.03

    @pytest.mark.xfail(strict=True, reason="the linear model drifts 5-8% from the diode model at 200 W/m2")
    @pytest.mark.parametrize("key", KEYS)
    def test_agrees_full_range(self, modules, params, key):
        dev = self.deviation(modules[key], params[key], np.arange(200, 1101, 50.0), np.arange(15, 66, 5.0))
        assert dev.max() < 0.03


class TestExtraction:
    @pytest.mark.parametrize("key", KEYS)
    def test_reproduces_datasheet(self, modules, params, key):
        spec, p = modules[key], params[key]
        assert current_at(p, 0.0, 1000.0) == pytest.approx(spec.i_sc, rel=1e-3)
        assert open_circuit_voltage(p, 1000.0) == pytest.approx(spec.v_oc, rel=5e-3)
        assert current_at(p, spec.v_mp, 1000.0) == pytest.approx(spec.i_mp, rel=5e-3)
        v, i, pm = mpp(p, 1000.0)
        assert v == pytest.approx(spec.v_mp, rel=5e-3)
        assert i == pytest.approx(spec.i_mp, rel=5e-3)
        assert pm == pytest.approx(spec.p_max, rel=5e-3)

    @pytest.mark.parametrize("key,p_nameplate", [("vikram_mono_375", 375.0), ("adani_bifacial_355", 355.0)])
    def test_nameplate_power(self, params, key, p_nameplate):
        assert mpp(params[key], 1000.0)[2] == pytest.approx(p_nameplate, rel=5e-3)

    @pytest.mark.parametrize("key", KEYS)
    def test_parameter_invariants(self, params, key):
        p = params[key]
        assert min(p.i_ph_f, p.i_0, p.n_ideality, p.r_s, p.r_sh) > 0
        assert p.r_sh / p.r_s > 10

    def test_deterministic(self, mono):
        assert extract_single_diode(mono) == extract_single_diode(mono)

    def test_rear_photocurrent_coupling(self, bifacial, params):
        p = params["adani_bifacial_355"]
        assert p.i_ph_r == pytest.approx(0.87 * p.i_ph_f)

    def test_infeasible_raises_with_residuals(self, mono):
        squared = replace(mono, v_mp=48.0, i_mp=9.9, p_max=475.2)
        with pytest.raises(ExtractionError) as exc:
            extract_single_diode(squared)
        assert exc.value.residuals is not None

    @pytest.mark.parametrize("key", KEYS)
    def test_voc_temperature_coefficient(self, modules, params, key):
        spec, p = modules[key], params[key]
        t = np.arange(15.0, 66.0, 5.0)
        voc = np.array([open_circuit_voltage(p, 1000.0, t_cell=x) for x in t])
        slope = np.gradient(voc, t) / spec.v_oc * 100
        np.testing.assert_allclose(slope, spec.tc_voc, rtol=0.15)

    def test_params_validation(self):
        with pytest.raises(InputError):
            SingleDiodeParams(9.0, 0.0, 1e-10, 1.0, 0.5, 4.0, 72, 0.005)


class TestCurves:
    @pytest.mark.parametrize("key", KEYS)
    def test_mpp_against_dense_grid(self, modules, params, key):
        p = params[key]
        op = _at_conditions(p, 1000.0, 0.0, 0.0, 25.0)
        voc = open_circuit_voltage(p, 1000.0)
        v = np.linspace(0.0, voc, 100_000)
        grid_p = (v * implicit_current(op, v)).max()
        assert mpp(p, 1000.0)[2] == pytest.approx(grid_p, rel=5e-4)

    @pytest.mark.parametrize("key", KEYS)
    def test_lambert_matches_implicit(self, params, key):
        p = params[key]
        op = _at_conditions(p, 640.0, 0.0, 0.0, 47.0)
        v = np.linspace(0, open_circuit_voltage(p, 640.0, t_cell=47.0), 50)
        np.testing.assert_allclose(current_at(p, v, 640.0, t_cell=47.0), implicit_current(op, v),
                                   atol=1e-9)

    @pytest.mark.parametrize("key", KEYS)
    def test_derivative_zero_at_mpp(self, modules, params, key):
        p = params[key]
        v, _, _ = mpp(p, 1000.0)
        h = 1e-4 * modules[key].v_oc

        def power(x):
            return x * current_at(p, x, 1000.0)

        dpdv = (power(v + h) - power(v - h)) / (2 * h)
        curvature = abs(power(v + h) - 2 * power(v) + power(v - h)) / h**2
        # central-difference truncation plus the golden-section location error
        assert abs(dpdv) <= curvature * h + 1e-6

    def test_dark_curve(self, params):
        curve = iv_curve(params["vikram_mono_375"], 0.0, 0.0)
        assert all(i <= 0 for v, i in curve if v > 0)

    def test_zero_irradiance_mpp(self, params):
        assert mpp(params["vikram_mono_375"], 0.0) == (0.0, 0.0, 0.0)

    def test_linear_front_photocurrent(self, params):
        p = params["vikram_poly_330"]
        full = _at_conditions(p, 900.0, 0.0, 0.0, 40.0)
        half = _at_conditions(p, 450.0, 0.0, 0.0, 40.0)
        assert float(half.i_ph) == pytest.approx(float(full.i_ph) / 2, rel=1e-15)

    def test_lower_irradiance_lower_power(self, params):
        p = params["vikram_mono_375"]
        assert mpp(p, 800.0)[2] < mpp(p, 1000.0)[2]

    def test_n_points(self, params):
        assert len(iv_curve(params["vikram_mono_375"], 1000.0, n_points=7)) == 7
        with pytest.raises(InputError):
            iv_curve(params["vikram_mono_375"], 1000.0, n_points=1)

    @pytest.mark.parametrize("t", [-41.0, 101.0])
    def test_temperature_domain(self, params, t):
        with pytest.raises(InputError):
            mpp(params["vikram_mono_375"], 1000.0, t_cell=t)

    @given(g=st.floats(1, 1200), gr=st.floats(0, 300), t=st.floats(-40, 100))
    def test_curve_monotone_and_bracketed(self, params, g, gr, t):
        p = params["adani_bifacial_355"]
        curve = np.array(iv_curve(p, g, gr, 0.87, t, n_points=60))
        assert np.all(np.diff(curve[:, 1]) <= 1e-9)
        v, i, pm = mpp(p, g, gr, 0.87, t)
        assert v < curve[-1, 0]
        assert i < curve[0, 1]

    @given(gf=st.floats(0, 1200), gr=st.floats(0, 400), t=st.floats(15, 65))
    def test_face_superposition(self, params, gf, gr, t):
        p = params["adani_bifacial_355"]
        both = mpp(p, gf, gr, 0.87, t)[2]
        assert both >= max(mpp(p, gf, 0.0, 0.87, t)[2], mpp(p, 0.0, gr, 0.87, t)[2]) - 1e-9


class TestBstc:
    def test_equivalent_irradiance(self):
        assert bstc_equivalent_irradiance(0.87) == pytest.approx(1117.45)
        assert bstc_equivalent_irradiance(0.0) == 1000.0

    def test_rating_bounds(self, bifacial, params):
        ratio = bstc_rating(bifacial, params["adani_bifacial_355"]) / bifacial.p_max
        assert 1.0 < ratio <= 1.0 + 0.87 * 0.135

    def test_monofacial_rejected(self, mono, params):
        with pytest.raises(InputError):
            bstc_rating(mono, params["vikram_mono_375"])

    def test_matches_rear_illumination(self, bifacial, params):
        # rating at G_E equals front 1000 plus rear 135 through the phi_Isc coupling
        p = params["adani_bifacial_355"]
        assert bstc_rating(bifacial, p) == pytest.approx(mpp(p, 1000.0, 135.0, 0.87)[2], rel=1e-9)
