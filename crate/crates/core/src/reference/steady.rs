use super::fd::RadialField;
use crate::thermal::ThermalParams;

/// Closed-form steady temperature at radius `r` under constant heat `q` (W):
/// a parabola whose surface value balances convection over the side wall.
pub fn steady_state_temperature(q: f64, t_inf: f64, params: &ThermalParams, r: f64) -> f64 {
    let t_surf = t_inf + q / (params.h() * params.side_area());
    let drop = q * params.r_o().powi(2) / (4.0 * params.kt() * params.v_b());
    t_surf + drop * (1.0 - (r / params.r_o()).powi(2))
}

/// Steady profile sampled on a uniform `n_nodes` grid.
pub fn steady_state_profile(
    q: f64,
    t_inf: f64,
    params: &ThermalParams,
    n_nodes: usize,
) -> RadialField {
    RadialField::from_fn(n_nodes, params.r_o(), f64::INFINITY, |r| {
        steady_state_temperature(q, t_inf, params, r)
    })
}
