use itd_core::reference::{analytical_frequency_response, fd_simulate, FdConfig};
use itd_core::thermal::{core_temperature, hz_to_omega, surface_temperature};
use itd_core::{HeatInput, StateSpaceModel, ThermalParams, ThermalState};
use itd_validation::{gain_phase_error, sinusoidal_response, Drive};

fn reference_cell() -> ThermalParams {
    ThermalParams::reference_26650()
}

#[test]
fn fd_periodic_response_matches_bessel_solution() {
    let p = reference_cell();
    for f_hz in [1e-4, 1e-3, 1e-2] {
        let exact = analytical_frequency_response(&p, hz_to_omega(f_hz));
        let dt = (0.05 / (f_hz * 1e2)).min(0.1);
        let heat = sinusoidal_response(&p, f_hz, Drive::Heat, 201, dt);
        let coolant = sinusoidal_response(&p, f_hz, Drive::Coolant, 201, dt);
        for (name, got, want) in [
            ("H11", heat.core, exact.h11()),
            ("H21", heat.surface, exact.h21()),
            ("H12", coolant.core, exact.h12()),
            ("H22", coolant.surface, exact.h22()),
        ] {
            let (amp, phase) = gain_phase_error(got, want);
            assert!(
                amp < 0.01 && phase < 1.0,
                "{name} at {f_hz} Hz: amplitude {amp:e}, phase {phase} deg"
            );
        }
        assert!(heat.energy.relative_residual() < 1e-10);
        assert!(coolant.energy.relative_residual() < 1e-10);
    }
}

#[test]
fn spatial_error_is_second_order() {
    // successive differences at a fixed step cancel the time-discretization error
    let p = reference_cell();
    let h = |n: usize| sinusoidal_response(&p, 1e-2, Drive::Heat, n, 0.01).surface;
    let (coarse, mid, fine) = (h(51), h(101), h(201));
    let ratio = (coarse - mid).norm() / (mid - fine).norm();
    assert!(ratio > 3.5 && ratio < 4.5, "difference ratio {ratio}");
}

#[test]
fn pa_step_response_tracks_oracle() {
    // PA is exact at steady state and lags the oracle only during fast transients
    let p = reference_cell();
    let n = 3000;
    let q = vec![8.0; n];
    let coolant = vec![8.0; n];
    let run = fd_simulate(&p, &q, &coolant, 1.0, 8.0, FdConfig::default()).unwrap();
    let model = StateSpaceModel::continuous(&p).discretize(1.0).unwrap();
    let mut x = ThermalState::uniform(8.0);
    let mut worst_core: f64 = 0.0;
    for k in 0..n {
        x = model.step(x, HeatInput::new(8.0, 8.0)).unwrap();
        let field = &run.fields[k + 1];
        let dc = (core_temperature(x, 8.0, &p) - field.core()).abs();
        let ds = (surface_temperature(x, 8.0, &p) - field.surface()).abs();
        worst_core = worst_core.max(dc);
        assert!(ds < 0.1, "surface differs by {ds} at {k}");
    }
    let rise = run.fields[n].core() - 8.0;
    assert!(
        worst_core < 0.05 * rise,
        "worst core gap {worst_core} for a {rise} K rise"
    );
    let end = &run.fields[n];
    assert!((core_temperature(x, 8.0, &p) - end.core()).abs() < 1e-3 * rise);
    assert!(run.energy.relative_residual() < 1e-5);
    assert!(run.max_step_residual < 1e-6);
}
