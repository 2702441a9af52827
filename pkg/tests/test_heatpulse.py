import numpy as np
import pytest

from linetherm.core import ValidationError
from linetherm.heatpulse import (
    CalibrationWarning,
    HeatPulseModelParams,
    calibrate_offset,
    fit_cooling,
    trajectory,
)
from linetherm.shotnoise import bose_einstein, dephasing_full
from linetherm.synth import gen_heatpulse

GRID = np.linspace(0.0, 2e-3, 41)

FLEX = dict(t0=0.058, tau=0.28e-3, delta_ts=(0.024, 0.055, 0.114))
COAX = dict(t0=0.071, tau=0.55e-3, delta_ts=(0.020, 0.063, 0.098))


def make_datasets(sys, scenario, noise_gamma=0.0, noise_delta_f=0.0, seed=0,
                  gamma_offset=2.4e5, f0_offset=1.5e3, grid=GRID):
    out = []
    for j, dt in enumerate(scenario["delta_ts"]):
        model = HeatPulseModelParams(
            t0=scenario["t0"], delta_t=dt, tau_cool=scenario["tau"],
            gamma_offset=gamma_offset, f0_offset=f0_offset,
        )
        out.append(
            gen_heatpulse(model, sys, grid, noise_gamma=noise_gamma,
                          noise_delta_f=noise_delta_f, seed=seed + j, t_heat=(j + 1) * 5e-6)
        )
    return out


def test_model_params_validation():
    with pytest.raises(ValidationError):
        HeatPulseModelParams(t0=0.0, delta_t=0.0, tau_cool=1e-3)
    with pytest.raises(ValidationError):
        HeatPulseModelParams(t0=0.058, delta_t=-0.1, tau_cool=1e-3)
    with pytest.raises(ValidationError):
        HeatPulseModelParams(t0=0.058, delta_t=0.1, tau_cool=0.0)


def test_trajectory_no_heating_is_constant(table1):
    model = HeatPulseModelParams(t0=0.058, delta_t=0.0, tau_cool=0.28e-3)
    gamma, delta_f = trajectory(model, table1, GRID)
    assert np.ptp(gamma) == 0.0
    assert np.ptp(delta_f) == 0.0


def test_trajectory_late_time_baseline(table1):
    model = HeatPulseModelParams(t0=0.058, delta_t=0.114, tau_cool=0.28e-3)
    gamma_inf, _ = trajectory(model, table1, 50 * 0.28e-3)
    # at T0 = 58 mK the occupation is ~2.1e-3 photons
    assert gamma_inf == pytest.approx(1.63e4, rel=0.01)
    n_base = bose_einstein(0.058, table1.f_r)
    assert n_base == pytest.approx(2.1e-3, rel=0.05)
    assert gamma_inf == pytest.approx(dephasing_full(n_base, table1).gamma_n, rel=1e-9)


def test_trajectory_at_pulse_end(table1):
    # T(0) = 172 mK; oracle composed inline from the constituent formulas
    model = HeatPulseModelParams(t0=0.058, delta_t=0.114, tau_cool=0.28e-3)
    gamma0, df0 = trajectory(model, table1, 0.0)
    n = bose_einstein(0.172, table1.f_r)
    assert n == pytest.approx(0.143, rel=0.01)
    z = (1 + 1j * table1.chi / table1.kappa) ** 2 + 4j * table1.chi * n / table1.kappa
    val = 0.5 * table1.kappa * (np.sqrt(z) - 1.0)
    assert gamma0 == pytest.approx(val.real, rel=1e-12)
    assert df0 == pytest.approx(val.imag / (2 * np.pi) - table1.chi / (4 * np.pi), rel=1e-12)


def test_trajectory_monotone_decay(table1):
    model = HeatPulseModelParams(t0=0.058, delta_t=0.114, tau_cool=0.28e-3)
    gamma, delta_f = trajectory(model, table1, GRID)
    assert np.all(np.diff(gamma) < 0.0)
    assert np.all(np.diff(np.abs(delta_f)) < 0.0)
    with pytest.raises(ValidationError):
        trajectory(model, table1, -1e-3)


def test_calibrate_offset():
    assert calibrate_offset(np.full(8, 2.5e5), 1.75e4) == pytest.approx(2.325e5, rel=1e-12)
    assert calibrate_offset([1.75e4, 1.75e4], 1.75e4) == 0.0
    with pytest.warns(CalibrationWarning):
        assert calibrate_offset([2.0e5], 1.75e4) == pytest.approx(1.825e5)
    with pytest.raises(ValidationError):
        calibrate_offset([], 1.75e4)


def test_fit_cooling_flexline_noiseless(table1):
    datasets = make_datasets(table1, FLEX)
    result = fit_cooling(datasets, table1, FLEX["t0"])
    assert result.converged
    assert result.params["tau_cool_s"] == pytest.approx(FLEX["tau"], rel=1e-6)
    for j, dt in enumerate(FLEX["delta_ts"]):
        assert result.params[f"delta_t_k[{j}]"] == pytest.approx(dt, rel=1e-6)
    assert result.params["gamma_offset_per_s"] == pytest.approx(2.4e5, rel=1e-6)
    assert result.params["f0_offset_hz"] == pytest.approx(1.5e3, rel=1e-6)


def test_fit_cooling_coax_noiseless(table1):
    grid = np.linspace(0.0, 4e-3, 41)
    datasets = make_datasets(table1, COAX, grid=grid)
    result = fit_cooling(datasets, table1, COAX["t0"])
    assert result.params["tau_cool_s"] == pytest.approx(COAX["tau"], rel=1e-6)


def test_fit_cooling_noisy(table1):
    datasets = make_datasets(table1, FLEX, noise_gamma=2e3, noise_delta_f=300.0, seed=17)
    result = fit_cooling(datasets, table1, FLEX["t0"])
    assert result.params["tau_cool_s"] == pytest.approx(FLEX["tau"], rel=0.05)


def test_fit_cooling_offset_independence(table1):
    # recovered physics must not depend on the offsets used in generation
    a = fit_cooling(make_datasets(table1, FLEX, gamma_offset=0.0, f0_offset=0.0),
                    table1, FLEX["t0"])
    b = fit_cooling(make_datasets(table1, FLEX, gamma_offset=9.9e5, f0_offset=-3e4),
                    table1, FLEX["t0"])
    assert a.params["tau_cool_s"] == pytest.approx(b.params["tau_cool_s"], rel=1e-8)
    for j in range(3):
        assert a.params[f"delta_t_k[{j}]"] == pytest.approx(
            b.params[f"delta_t_k[{j}]"], rel=1e-7
        )


def test_fit_cooling_null_heating_consistent_with_zero(table1):
    model = HeatPulseModelParams(t0=0.058, delta_t=0.0, tau_cool=0.28e-3,
                                 gamma_offset=2.4e5, f0_offset=1e3)
    data = gen_heatpulse(model, table1, GRID, noise_gamma=2e3, noise_delta_f=300.0, seed=11)
    result = fit_cooling([data], table1, 0.058)
    assert abs(result.params["delta_t_k"]) <= 2.0 * result.sigmas["delta_t_k"]


def test_fit_cooling_single_dataset_matches_repeat(table1):
    data = make_datasets(table1, FLEX)[:1]
    a = fit_cooling(data, table1, FLEX["t0"])
    b = fit_cooling(data, table1, FLEX["t0"])
    assert a.params == b.params
    assert a.params["tau_cool_s"] == pytest.approx(FLEX["tau"], rel=1e-6)


def test_fit_cooling_fit_t0_recovers_fixed_value(table1):
    datasets = make_datasets(table1, FLEX)
    result = fit_cooling(datasets, table1, 0.055, fit_t0=True)
    assert result.params["t0_k"] == pytest.approx(0.058, rel=1e-4)


def test_fit_cooling_input_validation(table1):
    with pytest.raises(ValidationError):
        fit_cooling([], table1, 0.058)
    short = gen_heatpulse(
        HeatPulseModelParams(t0=0.058, delta_t=0.01, tau_cool=1e-3),
        table1, np.linspace(0, 1e-3, 3),
    )
    with pytest.raises(ValidationError):
        fit_cooling([short], table1, 0.058)
    good = make_datasets(table1, FLEX)[:1]
    with pytest.raises(ValidationError):
        fit_cooling(good, table1, -0.05)
