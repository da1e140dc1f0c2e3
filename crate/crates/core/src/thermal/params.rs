use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of a cylindrical cell and its cooling boundary.
///
/// The diffusivity is always derived from `kt / (rho * cp)` and the volume
/// must be that of the cylinder `pi * r_o^2 * length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ThermalParams {
    rho: f64,
    cp: f64,
    kt: f64,
    h: f64,
    r_o: f64,
    length: f64,
    v_b: f64,
    alpha: f64,
}

/// Relative tolerance on a user-supplied volume.
const VOLUME_RTOL: f64 = 1e-9;

impl ThermalParams {
    /// Density, specific heat, radial conductivity, convection coefficient,
    /// outer radius and height, all SI.
    pub fn new(rho: f64, cp: f64, kt: f64, h: f64, r_o: f64, length: f64) -> Result<Self> {
        for (name, v) in [
            ("rho", rho),
            ("cp", cp),
            ("kt", kt),
            ("h", h),
            ("r_o", r_o),
            ("length", length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        Ok(Self {
            rho,
            cp,
            kt,
            h,
            r_o,
            length,
            v_b: PI * r_o * r_o * length,
            alpha: kt / (rho * cp),
        })
    }

    /// Like [`ThermalParams::new`] but also checks a stated cell volume.
    pub fn with_volume(
        rho: f64,
        cp: f64,
        kt: f64,
        h: f64,
        r_o: f64,
        length: f64,
        v_b: f64,
    ) -> Result<Self> {
        let p = Self::new(rho, cp, kt, h, r_o, length)?;
        if !((v_b - p.v_b).abs() <= VOLUME_RTOL * p.v_b) {
            return Err(Error::invalid(
                "v_b",
                format!("{v_b} does not match pi*r_o^2*L = {}", p.v_b),
            ));
        }
        Ok(p)
    }

    /// Identified parameters of the 2.3 Ah 26650 LiFePO4 cell (65 mm x 26 mm).
    pub fn reference_26650() -> Self {
        Self::new(2107.0, 1171.6, 0.404, 39.3, 0.013, 0.065)
            .expect("reference parameters are valid")
    }

    /// Starting point used for offline identification of the same cell.
    pub fn initial_guess_26650() -> Self {
        Self::new(2107.0, 1050.0, 0.55, 20.0, 0.013, 0.065).expect("initial guess is valid")
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn cp(&self) -> f64 {
        self.cp
    }
    pub fn kt(&self) -> f64 {
        self.kt
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn r_o(&self) -> f64 {
        self.r_o
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn v_b(&self) -> f64 {
        self.v_b
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Lateral (cooled) surface area.
    pub fn side_area(&self) -> f64 {
        2.0 * PI * self.r_o * self.length
    }

    /// Lumped heat capacity rho * cp * V (J/K).
    pub fn heat_capacity(&self) -> f64 {
        self.rho * self.cp * self.v_b
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.rho, self.cp, self.kt, h, self.r_o, self.length)
    }

    pub fn with_cp(&self, cp: f64) -> Result<Self> {
        Self::new(self.rho, cp, self.kt, self.h, self.r_o, self.length)
    }

    pub fn with_kt(&self, kt: f64) -> Result<Self> {
        Self::new(self.rho, self.cp, kt, self.h, self.r_o, self.length)
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(rho, self.cp, self.kt, self.h, self.r_o, self.length)
    }
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    rho: f64,
    cp: f64,
    kt: f64,
    h: f64,
    r_o: f64,
    length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_b: Option<f64>,
}

impl TryFrom<RawParams> for ThermalParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        match raw.v_b {
            Some(v) => Self::with_volume(raw.rho, raw.cp, raw.kt, raw.h, raw.r_o, raw.length, v),
            None => Self::new(raw.rho, raw.cp, raw.kt, raw.h, raw.r_o, raw.length),
        }
    }
}

impl From<ThermalParams> for RawParams {
    fn from(p: ThermalParams) -> Self {
        RawParams {
            rho: p.rho,
            cp: p.cp,
            kt: p.kt,
            h: p.h,
            r_o: p.r_o,
            length: p.length,
            v_b: Some(p.v_b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = ThermalParams::reference_26650();
        assert!((p.alpha() - 0.404 / (2107.0 * 1171.6)).abs() < 1e-20);
        assert!((p.v_b() - PI * 0.013f64.powi(2) * 0.065).abs() < 1e-18);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(ThermalParams::new(2107.0, 0.0, 0.4, 39.3, 0.013, 0.065).is_err());
        assert!(ThermalParams::new(2107.0, 1000.0, -0.4, 39.3, 0.013, 0.065).is_err());
        assert!(ThermalParams::new(2107.0, 1000.0, 0.4, f64::NAN, 0.013, 0.065).is_err());
    }

    #[test]
    fn volume_mismatch_is_an_error() {
        let v = PI * 0.013f64.powi(2) * 0.065;
        assert!(ThermalParams::with_volume(2107.0, 1171.6, 0.404, 39.3, 0.013, 0.065, v).is_ok());
        assert!(
            ThermalParams::with_volume(2107.0, 1171.6, 0.404, 39.3, 0.013, 0.065, v * 1.001)
                .is_err()
        );
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = ThermalParams::reference_26650();
        let s = serde_json::to_string(&p).unwrap();
        let q: ThermalParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let bad =
            r#"{"rho":2107,"cp":1171.6,"kt":0.404,"h":39.3,"r_o":0.013,"length":0.065,"v_b":1.0}"#;
        assert!(serde_json::from_str::<ThermalParams>(bad).is_err());
        let no_vol = r#"{"rho":2107,"cp":1171.6,"kt":0.404,"h":39.3,"r_o":0.013,"length":0.065}"#;
        assert_eq!(serde_json::from_str::<ThermalParams>(no_vol).unwrap(), p);
    }
}
