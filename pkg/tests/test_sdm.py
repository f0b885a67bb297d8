import math

import numpy as np
import pytest

from pvprof import sdm
from conftest import CELLS, CSI_PARAMS, draw_csi_like
from oracles import bisect_current, bisect_voltage, diode_residual, scan_mpp

STC = sdm.OperatingConditions(1000.0, 25.0)

# values pinned with the independent oracles in oracles.py before the build
I0_AT_50C = 1.4621090605219855e-08
A_MOD_STC = 2.0348522663899993
ISC_STC = 9.491694765844592
VOC_STC = 49.17323396031375
I_AT_30V = 9.412934499726667
V_AT_HALF_ISC = 46.07828183682211
P_MPP_STC = 356.541592638875


@pytest.fixture(scope="module")
def op_stc():
    return sdm.translate_to_operating(CSI_PARAMS, STC, CELLS)


class TestTypes:
    def test_params_require_positive(self):
        with pytest.raises(ValueError):
            sdm.SdmParamsRef(-1.0, 3e-10, 0.35, 400.0, 1.1)

    def test_diode_factor_bounds(self):
        with pytest.raises(ValueError):
            sdm.SdmParamsRef(9.5, 3e-10, 0.35, 400.0, 3.0)

    def test_saturation_below_photocurrent(self):
        with pytest.raises(ValueError):
            sdm.SdmParamsRef(1e-12, 3e-10, 0.35, 400.0, 1.1)

    def test_conditions_ranges(self):
        with pytest.raises(ValueError):
            sdm.OperatingConditions(-1.0, 25.0)
        with pytest.raises(ValueError):
            sdm.OperatingConditions(500.0, 150.0)

    def test_topology_integers(self):
        with pytest.raises(ValueError):
            sdm.ArrayTopology(0, 1, 1)

    def test_iv_point_power_product(self):
        pt = sdm.IvPoint.from_vi(40.0, 8.5)
        assert pt.p == 40.0 * 8.5


class TestTranslate:
    def test_reference_conditions_fixed_point(self, op_stc):
        assert op_stc.i_ph == CSI_PARAMS.i_ph_ref
        assert op_stc.i_0 == CSI_PARAMS.i_0_ref
        assert op_stc.r_sh == CSI_PARAMS.r_sh_ref
        assert op_stc.r_s == CSI_PARAMS.r_s
        assert op_stc.a_mod == pytest.approx(A_MOD_STC, rel=1e-12)

    def test_alpha_term_vanishes_at_reference(self):
        op = sdm.translate_to_operating(CSI_PARAMS, STC, CELLS, alpha_isc=0.01)
        assert op.i_ph == CSI_PARAMS.i_ph_ref

    def test_inverse_irradiance_shunt_scaling(self):
        op = sdm.translate_to_operating(
            CSI_PARAMS, sdm.OperatingConditions(500.0, 25.0), CELLS)
        assert op.r_sh == pytest.approx(800.0, rel=1e-14)

    def test_photocurrent_linear_in_irradiance(self):
        op = sdm.translate_to_operating(
            CSI_PARAMS, sdm.OperatingConditions(250.0, 25.0), CELLS)
        assert op.i_ph == pytest.approx(CSI_PARAMS.i_ph_ref / 4.0, rel=1e-14)

    def test_saturation_current_band_gap_law(self):
        op = sdm.translate_to_operating(
            CSI_PARAMS, sdm.OperatingConditions(1000.0, 50.0), CELLS)
        assert op.i_0 == pytest.approx(I0_AT_50C, rel=1e-12)

    def test_night_maps_to_zero_photocurrent_and_capped_shunt(self):
        op = sdm.translate_to_operating(
            CSI_PARAMS, sdm.OperatingConditions(0.0, 10.0), CELLS)
        assert op.i_ph == 0.0
        assert op.r_sh == sdm.NIGHT_RSH_CAP
        assert math.isfinite(op.a_mod) and op.a_mod > 0


class TestSolvers:
    def test_ideal_current_source_limit(self):
        op = sdm.SdmParamsOperating(i_ph=9.5, i_0=0.0, r_s=0.35,
                                    r_sh=sdm.NIGHT_RSH_CAP, a_mod=2.0)
        assert sdm.solve_current(0.0, op) == pytest.approx(9.5, rel=1e-6)

    def test_dark_short_circuit(self):
        op = sdm.SdmParamsOperating(i_ph=0.0, i_0=3e-10, r_s=0.35,
                                    r_sh=sdm.NIGHT_RSH_CAP, a_mod=2.0)
        assert sdm.solve_current(0.0, op) == pytest.approx(0.0, abs=1e-12)

    def test_current_at_30v_vs_bisection_oracle(self, op_stc):
        assert sdm.solve_current(30.0, op_stc) == pytest.approx(I_AT_30V,
                                                                abs=1e-9)

    def test_short_circuit_current_frozen(self, op_stc):
        assert sdm.short_circuit_current(op_stc) == pytest.approx(ISC_STC,
                                                                  abs=1e-9)

    def test_open_circuit_voltage_frozen(self, op_stc):
        assert sdm.open_circuit_voltage(op_stc) == pytest.approx(VOC_STC,
                                                                 abs=1e-8)

    def test_voltage_at_half_isc_vs_oracle(self, op_stc):
        i_sc = sdm.short_circuit_current(op_stc)
        assert sdm.solve_voltage(0.5 * i_sc, op_stc) == pytest.approx(
            V_AT_HALF_ISC, abs=1e-8)

    def test_inverse_consistency_at_voc(self, op_stc):
        voc = sdm.open_circuit_voltage(op_stc)
        assert abs(sdm.solve_current(voc, op_stc)) < 1e-8

    def test_boundary_at_isc(self, op_stc):
        i_sc = sdm.short_circuit_current(op_stc)
        assert abs(sdm.solve_voltage(i_sc, op_stc)) < 1e-8

    def test_dark_voc_is_zero(self):
        op = sdm.SdmParamsOperating(i_ph=0.0, i_0=3e-10, r_s=0.35,
                                    r_sh=sdm.NIGHT_RSH_CAP, a_mod=2.0)
        assert sdm.open_circuit_voltage(op) == 0.0

    def test_current_above_isc_rejected(self, op_stc):
        i_sc = sdm.short_circuit_current(op_stc)
        with pytest.raises(ValueError):
            sdm.solve_voltage(1.01 * i_sc, op_stc)

    def test_isc_bounded_by_photocurrent(self, op_stc):
        i_sc = sdm.short_circuit_current(op_stc)
        assert i_sc < op_stc.i_ph
        # series/shunt losses keep isc close below iph
        bound = op_stc.i_ph * (1.0 - op_stc.r_s / (op_stc.r_s + op_stc.r_sh))
        assert i_sc > bound - 1e-6

    def test_mutual_inverse_and_residuals_random(self):
        rng = np.random.default_rng(7)
        for params in draw_csi_like(rng, 30):
            g = rng.uniform(100.0, 1000.0)
            t = rng.uniform(0.0, 70.0)
            op = sdm.translate_to_operating(
                params, sdm.OperatingConditions(g, t), CELLS)
            voc = sdm.open_circuit_voltage(op)
            for frac in (0.0, 0.3, 0.6, 0.9):
                v = frac * voc
                i = sdm.solve_current(v, op)
                assert abs(sdm.diode_residual(i, v, op)) < 1e-9
                if i >= 0:
                    v_back = sdm.solve_voltage(i, op)
                    assert v_back == pytest.approx(v, abs=1e-8)


class TestMpp:
    def test_dark_module_zero_point(self):
        op = sdm.SdmParamsOperating(i_ph=0.0, i_0=3e-10, r_s=0.35,
                                    r_sh=sdm.NIGHT_RSH_CAP, a_mod=2.0)
        assert sdm.find_mpp(op) == sdm.IvPoint(0.0, 0.0, 0.0)

    def test_matches_dense_grid_scan(self, op_stc):
        mpp = sdm.find_mpp(op_stc)
        assert mpp.p == pytest.approx(P_MPP_STC, rel=1e-6)
        assert abs(sdm.diode_residual(mpp.i, mpp.v, op_stc)) < 1e-9

    def test_power_increases_with_irradiance(self):
        op1000 = sdm.translate_to_operating(CSI_PARAMS, STC, CELLS)
        op500 = sdm.translate_to_operating(
            CSI_PARAMS, sdm.OperatingConditions(500.0, 25.0), CELLS)
        assert sdm.find_mpp(op1000).p > sdm.find_mpp(op500).p

    def test_derivative_changes_sign_at_mpp(self, op_stc):
        mpp = sdm.find_mpp(op_stc)
        dv = 1e-4
        p_lo = (mpp.v - dv) * sdm.solve_current(mpp.v - dv, op_stc)
        p_hi = (mpp.v + dv) * sdm.solve_current(mpp.v + dv, op_stc)
        assert p_lo < mpp.p and p_hi < mpp.p

    def test_mpp_dominates_curve(self):
        # 1000 uniform terminal voltages per parameter draw; curve currents
        # from a test-local vectorized Newton solve on the implicit equation
        rng = np.random.default_rng(11)
        for params in draw_csi_like(rng, 10):
            op = sdm.translate_to_operating(params, STC, CELLS)
            voc = sdm.open_circuit_voltage(op)
            v = np.linspace(0.0, voc, 1000)
            i = np.full_like(v, 0.5 * op.i_ph)
            for _ in range(80):
                vd = v + i * op.r_s
                e = np.exp(vd / op.a_mod)
                f = op.i_ph - op.i_0 * (e - 1.0) - vd / op.r_sh - i
                fp = -op.i_0 * e * op.r_s / op.a_mod - op.r_s / op.r_sh - 1.0
                i = i - f / fp
            assert np.max(np.abs(op.i_ph - op.i_0 * np.expm1((v + i * op.r_s)
                          / op.a_mod) - (v + i * op.r_s) / op.r_sh - i)) < 1e-9
            p_mpp = sdm.find_mpp(op).p
            assert np.all(v * i <= p_mpp * (1.0 + 1e-9))

    def test_power_monotone_in_irradiance_and_temperature(self):
        rng = np.random.default_rng(13)
        g_grid = np.linspace(50.0, 1000.0, 40)
        t_grid = np.linspace(0.0, 80.0, 33)
        for params in draw_csi_like(rng, 8):
            _, _, p_g = sdm.simulate_array_mpp_arrays(
                params.i_ph_ref, params.i_0_ref, params.r_s, params.r_sh_ref,
                params.n_diode, g_grid, 25.0, sdm.ArrayTopology(CELLS, 1, 1))
            assert np.all(np.diff(p_g) > -1e-9 * p_g[:-1])
            _, _, p_t = sdm.simulate_array_mpp_arrays(
                params.i_ph_ref, params.i_0_ref, params.r_s, params.r_sh_ref,
                params.n_diode, 1000.0, t_grid, sdm.ArrayTopology(CELLS, 1, 1))
            assert np.all(np.diff(p_t) < 1e-9 * p_t[:-1])


class TestArrayScaling:
    def test_identity_topology(self, op_stc):
        mpp = sdm.find_mpp(op_stc)
        v, i = sdm.simulate_array_mpp(CSI_PARAMS, sdm.ArrayTopology(CELLS, 1, 1),
                                      STC)
        assert v == pytest.approx(mpp.v, rel=1e-12)
        assert i == pytest.approx(mpp.i, rel=1e-12)

    def test_parallel_scaling_exact(self):
        v1, i1 = sdm.simulate_array_mpp(CSI_PARAMS,
                                        sdm.ArrayTopology(CELLS, 12, 4), STC)
        v2, i2 = sdm.simulate_array_mpp(CSI_PARAMS,
                                        sdm.ArrayTopology(CELLS, 12, 8), STC)
        assert i2 == 2.0 * i1
        assert v2 == v1

    def test_array_level_grid_scan(self, topo):
        ops = sdm.translate_to_operating(CSI_PARAMS, STC, CELLS)
        v_scan, i_scan, p_scan = scan_mpp(ops.i_ph, ops.i_0, ops.r_s,
                                          ops.r_sh, ops.a_mod)
        v, i = sdm.simulate_array_mpp(CSI_PARAMS, topo, STC)
        assert v * i == pytest.approx(
            p_scan * topo.modules_per_string * topo.strings_in_parallel,
            rel=1e-6)


class TestOracleAgreement:
    def test_library_against_fresh_oracle_runs(self, op_stc):
        # recompute (not frozen) oracle values to guard the frozen constants
        args = (op_stc.i_ph, op_stc.i_0, op_stc.r_s, op_stc.r_sh, op_stc.a_mod)
        assert bisect_current(0.0, *args) == pytest.approx(ISC_STC, abs=1e-10)
        assert bisect_voltage(0.0, *args) == pytest.approx(VOC_STC, abs=1e-10)
        _, _, p = scan_mpp(*args, n_points=200_000)
        assert p == pytest.approx(P_MPP_STC, rel=1e-7)
        i30 = bisect_current(30.0, *args)
        assert abs(diode_residual(i30, 30.0, *args)) < 1e-11
