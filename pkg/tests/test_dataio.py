import json

import numpy as np
import pytest

from linetherm.core import SchemaVersionError, ValidationError
from linetherm.dataio import (
    read_fin_csv,
    read_heatpulse_csv,
    read_iq_csv,
    read_json_doc,
    read_phase_csv,
    read_trace_csv,
    sidecar_path,
    write_fin_csv,
    write_heatpulse_csv,
    write_iq_csv,
    write_phase_csv,
    write_trace_csv,
)
from linetherm.heatpulse import HeatPulseModelParams
from linetherm.iqtemp import MixtureModel
from linetherm.synth import gen_decay, gen_fin, gen_heatpulse, gen_iq, gen_phase


def test_trace_round_trip(tmp_path):
    trace = gen_decay("ramsey", {"A": 1.0, "gamma2_star_per_s": 3e5, "delta_f_hz": 2e5,
                                 "phi_rad": 0.1, "B": 0.0},
                      np.linspace(0, 1e-5, 40), noise=0.01, seed=1)
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace)
    back = read_trace_csv(path, kind="ramsey")
    assert np.array_equal(back.times, trace.times)
    assert np.array_equal(back.signal, trace.signal)
    assert np.array_equal(back.sigma, trace.sigma)
    assert back.kind == "ramsey"


def test_heatpulse_round_trip(tmp_path, table1):
    model = HeatPulseModelParams(t0=0.058, delta_t=0.05, tau_cool=0.3e-3, gamma_offset=1e5)
    series = gen_heatpulse(model, table1, np.linspace(0, 2e-3, 25), t_heat=5e-6)
    path = tmp_path / "hp.csv"
    write_heatpulse_csv(path, series)
    assert sidecar_path(path).exists()
    back = read_heatpulse_csv(path)
    assert back.t_heat == 5e-6
    assert np.array_equal(back.t_cool, series.t_cool)
    assert np.array_equal(back.gamma2_star, series.gamma2_star)
    assert np.array_equal(back.delta_f, series.delta_f)


def test_fin_round_trip(tmp_path):
    exp = gen_fin(1.2, 1.6e4, 0.045, 0.025, 0.022, 0.1, [1e-6, 2e-6])
    path = tmp_path / "fin.csv"
    write_fin_csv(path, exp)
    back = read_fin_csv(path)
    assert back.l_c == exp.l_c and back.d_hc == exp.d_hc and back.w == exp.w
    assert np.array_equal(back.t_h, exp.t_h)


def test_fin_missing_sidecar(tmp_path):
    exp = gen_fin(1.2, 1.6e4, 0.045, 0.025, 0.022, 0.1, [1e-6])
    path = tmp_path / "fin.csv"
    write_fin_csv(path, exp)
    sidecar_path(path).unlink()
    with pytest.raises(ValidationError):
        read_fin_csv(path)


def test_iq_round_trip(tmp_path):
    model = MixtureModel(weights=(0.7, 0.3), means=np.array([[-2.0, 0.0], [2.0, 0.0]]),
                         covariances=np.array([np.eye(2), np.eye(2)]))
    cloud = gen_iq(model, 500, 0.5e9, seed=2)
    path = tmp_path / "iq.csv"
    write_iq_csv(path, cloud)
    back = read_iq_csv(path)
    assert back.f_q == 0.5e9
    assert np.array_equal(back.points, cloud.points)


def test_phase_round_trip(tmp_path):
    params = {"f_g_hz": 7.458e9, "f_e_hz": 7.4553e9,
              "kappa_g_rad_per_s": 2 * np.pi * 3.79e6,
              "kappa_e_rad_per_s": 2 * np.pi * 4.47e6,
              "tau_delay_s": 0.0, "theta0_rad": 0.0}
    sweep = gen_phase(params, np.linspace(7.43e9, 7.49e9, 60), n_bar_readout=0.16)
    path = tmp_path / "phase.csv"
    write_phase_csv(path, sweep)
    back = read_phase_csv(path)
    assert back.n_bar_readout == 0.16
    assert np.array_equal(back.phase_e, sweep.phase_e)


def test_schema_version_rejected(tmp_path):
    path = tmp_path / "doc.json"
    path.write_text(json.dumps({"schema_version": "2.0", "t_heat_s": 1.0}))
    with pytest.raises(SchemaVersionError):
        read_json_doc(path)


def test_bad_csv_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_s,signal\n0.0,1.0\nnope,2.0\n")
    with pytest.raises(ValidationError):
        read_trace_csv(path, kind="echo")
    path.write_text("wrong,header\n0.0,1.0\n")
    with pytest.raises(ValidationError):
        read_trace_csv(path, kind="echo")
    path.write_text("")
    with pytest.raises(ValidationError):
        read_trace_csv(path, kind="echo")
