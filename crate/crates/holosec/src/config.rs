//! Run parameters, unit conversions, and scenario placement.
//!
//! Everything downstream computes in watts and linear SINR; dBm/dB only
//! appear at the I/O boundary. A [`SystemConfig`] is validated once into a
//! [`ValidatedConfig`], after which it is immutable and safe to share across
//! parallel Monte Carlo workers.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Split of the transmit budget between the data beam and artificial noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnPowerPolicy {
    /// The noise vector is loaded with whatever power the scaled beamformer
    /// leaves unused. With a unit-generalized-norm beamformer this residual
    /// is zero for budgets below 1 W, so the noise stays dark unless it was
    /// loaded at initialization.
    #[default]
    PaperResidual,
    /// The noise vector always receives `fraction * P_t`; the beamformer is
    /// scaled against the remaining `(1 - fraction) * P_t`.
    FixedFraction(f64),
}

/// Placement of the surface, the legitimate user, and the eavesdropper disk.
///
/// The surface sits in a horizontal plane at `rhs_altitude_m`; boresight
/// points along -z. Bob is on boresight at `bob_range_m`, and Eve is drawn
/// uniformly from a disk of radius `eve_disk_radius_m` around Bob in the
/// plane orthogonal to boresight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub rhs_altitude_m: f64,
    pub bob_range_m: f64,
    pub eve_disk_radius_m: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            rhs_altitude_m: 50.0,
            bob_range_m: 100.0,
            eve_disk_radius_m: 5.0,
        }
    }
}

/// All tunables for one run. Field names match the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    pub carrier_frequency_hz: f64,
    /// Element pitch in meters; `None` selects lambda/3.
    pub element_spacing_m: Option<f64>,
    /// Number of surface elements M; must be a perfect square.
    pub num_elements: usize,
    /// Number of RF chains R feeding the surface.
    pub num_rf_chains: usize,
    pub transmit_power_dbm: f64,
    pub noise_power_bob_dbm: f64,
    pub noise_power_eve_dbm: f64,
    pub relative_permittivity: f64,
    pub rician_factor: f64,
    pub pathloss_exponent_bob: f64,
    pub pathloss_exponent_eve: f64,
    /// Gradient-ascent step size for the amplitude weights.
    pub learning_rate: f64,
    /// Stop threshold on the amplitude-weight update norm.
    pub inner_tolerance: f64,
    /// Stop threshold on the secrecy-rate change across outer iterations.
    pub outer_tolerance: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub rng_seed: u64,
    pub an_power_policy: AnPowerPolicy,
    pub scenario: ScenarioParams,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 30e9,
            element_spacing_m: None,
            num_elements: 25,
            num_rf_chains: 2,
            transmit_power_dbm: 25.0,
            noise_power_bob_dbm: -75.0,
            noise_power_eve_dbm: -75.0,
            relative_permittivity: 3.0,
            rician_factor: 0.0,
            pathloss_exponent_bob: 2.2,
            pathloss_exponent_eve: 2.5,
            learning_rate: 0.01,
            inner_tolerance: 1e-5,
            outer_tolerance: 1e-4,
            max_inner_iters: 500,
            max_outer_iters: 100,
            rng_seed: 42,
            an_power_policy: AnPowerPolicy::PaperResidual,
            scenario: ScenarioParams::default(),
        }
    }
}

/// Converts a dBm level to watts.
pub fn dbm_to_watts(p_dbm: f64) -> Result<f64> {
    if !p_dbm.is_finite() {
        return Err(Error::Config(format!("non-finite dBm value: {p_dbm}")));
    }
    Ok(10f64.powf((p_dbm - 30.0) / 10.0))
}

/// Converts a power in watts back to dBm.
pub fn watts_to_dbm(p_w: f64) -> Result<f64> {
    if !p_w.is_finite() || p_w <= 0.0 {
        return Err(Error::Config(format!(
            "power must be positive and finite, got {p_w} W"
        )));
    }
    Ok(10.0 * p_w.log10() + 30.0)
}

/// A [`SystemConfig`] whose invariants have been checked, with derived
/// quantities cached. Construction is the only way to obtain one.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    raw: SystemConfig,
    wavelength_m: f64,
    spacing_m: f64,
    grid_side: usize,
    transmit_power_w: f64,
    noise_bob_w: f64,
    noise_eve_w: f64,
}

impl SystemConfig {
    /// Checks all invariants and caches derived quantities. Pure: equal
    /// inputs validate to equal outputs and nothing global is touched.
    pub fn validate(self) -> Result<ValidatedConfig> {
        let cfg = &self;
        if !(cfg.carrier_frequency_hz.is_finite() && cfg.carrier_frequency_hz > 0.0) {
            return Err(Error::Config(format!(
                "carrier frequency must be positive, got {} Hz",
                cfg.carrier_frequency_hz
            )));
        }
        if cfg.num_elements == 0 {
            return Err(Error::Config("num_elements must be positive".into()));
        }
        let grid_side = integer_sqrt(cfg.num_elements).ok_or_else(|| {
            Error::Config(format!(
                "num_elements must be a perfect square, got {}",
                cfg.num_elements
            ))
        })?;
        if cfg.num_rf_chains == 0 {
            return Err(Error::Config("num_rf_chains must be at least 1".into()));
        }
        if !(cfg.relative_permittivity.is_finite() && cfg.relative_permittivity >= 1.0) {
            return Err(Error::Config(format!(
                "relative_permittivity must be >= 1, got {}",
                cfg.relative_permittivity
            )));
        }
        if !(cfg.rician_factor.is_finite() && cfg.rician_factor >= 0.0) {
            return Err(Error::Config(format!(
                "rician_factor must be >= 0, got {}",
                cfg.rician_factor
            )));
        }
        if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                cfg.learning_rate
            )));
        }
        for (name, tol) in [
            ("inner_tolerance", cfg.inner_tolerance),
            ("outer_tolerance", cfg.outer_tolerance),
        ] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {tol}")));
            }
        }
        if cfg.max_inner_iters == 0 || cfg.max_outer_iters == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        if let AnPowerPolicy::FixedFraction(rho) = cfg.an_power_policy {
            if !(rho.is_finite() && (0.0..=1.0).contains(&rho)) {
                return Err(Error::Config(format!(
                    "fixed AN fraction must lie in [0, 1], got {rho}"
                )));
            }
        }
        if !(cfg.scenario.bob_range_m >= 1.0 && cfg.scenario.eve_disk_radius_m > 0.0) {
            return Err(Error::Config(
                "scenario requires bob_range_m >= 1 and eve_disk_radius_m > 0".into(),
            ));
        }

        let wavelength_m = SPEED_OF_LIGHT / cfg.carrier_frequency_hz;
        let spacing_m = match cfg.element_spacing_m {
            Some(s) if s.is_finite() && s > 0.0 => s,
            Some(s) => {
                return Err(Error::Config(format!(
                    "element_spacing_m must be positive, got {s}"
                )))
            }
            None => wavelength_m / 3.0,
        };
        let transmit_power_w = dbm_to_watts(cfg.transmit_power_dbm)?;
        let noise_bob_w = dbm_to_watts(cfg.noise_power_bob_dbm)?;
        let noise_eve_w = dbm_to_watts(cfg.noise_power_eve_dbm)?;

        Ok(ValidatedConfig {
            raw: self,
            wavelength_m,
            spacing_m,
            grid_side,
            transmit_power_w,
            noise_bob_w,
            noise_eve_w,
        })
    }
}

impl ValidatedConfig {
    pub fn raw(&self) -> &SystemConfig {
        &self.raw
    }
    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }
    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }
    /// Side length of the square element grid (sqrt of M).
    pub fn grid_side(&self) -> usize {
        self.grid_side
    }
    pub fn num_elements(&self) -> usize {
        self.raw.num_elements
    }
    pub fn num_rf_chains(&self) -> usize {
        self.raw.num_rf_chains
    }
    pub fn transmit_power_w(&self) -> f64 {
        self.transmit_power_w
    }
    pub fn noise_bob_w(&self) -> f64 {
        self.noise_bob_w
    }
    pub fn noise_eve_w(&self) -> f64 {
        self.noise_eve_w
    }
    pub fn an_power_policy(&self) -> AnPowerPolicy {
        self.raw.an_power_policy
    }
    pub fn scenario(&self) -> &ScenarioParams {
        &self.raw.scenario
    }
}

fn integer_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Concrete placement for one trial: surface center, Bob, and a sampled Eve.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    pub rhs_center: Vector3<f64>,
    pub bob_position: Vector3<f64>,
    pub eve_disk_radius: f64,
    pub eve_position: Vector3<f64>,
}

impl ScenarioGeometry {
    /// Builds the placement from scenario parameters and a sampled Eve
    /// position, checking that Eve lies inside her disk and Bob sits at the
    /// configured boresight range.
    pub fn new(params: &ScenarioParams, eve_position: Vector3<f64>) -> Result<Self> {
        let rhs_center = Vector3::new(0.0, 0.0, params.rhs_altitude_m);
        let bob_position = Vector3::new(0.0, 0.0, params.rhs_altitude_m - params.bob_range_m);
        let eve_offset = (eve_position - bob_position).norm();
        if eve_offset > params.eve_disk_radius_m * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::Config(format!(
                "eve position lies {eve_offset} m from bob, outside the {} m disk",
                params.eve_disk_radius_m
            )));
        }
        let range = (bob_position - rhs_center).norm();
        if (range - params.bob_range_m).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "bob range {range} m deviates from configured {} m",
                params.bob_range_m
            )));
        }
        Ok(Self {
            rhs_center,
            bob_position,
            eve_disk_radius: params.eve_disk_radius_m,
            eve_position,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dbm_conversion_reference_points() {
        assert!((dbm_to_watts(30.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(0.0).unwrap() - 1e-3).abs() < 1e-18);
        // -75 dBm noise floor used throughout the experiments
        let w = dbm_to_watts(-75.0).unwrap();
        assert!((w - 10f64.powf(-10.5)).abs() / w < 1e-14);
        assert!((w - 3.1623e-11).abs() / w < 1e-4);
    }

    #[test]
    fn dbm_rejects_non_finite() {
        assert!(dbm_to_watts(f64::NAN).is_err());
        assert!(dbm_to_watts(f64::INFINITY).is_err());
        assert!(watts_to_dbm(0.0).is_err());
        assert!(watts_to_dbm(-1.0).is_err());
    }

    #[test]
    fn validate_defaults_and_wavelength() {
        let cfg = SystemConfig::default().validate().unwrap();
        assert_eq!(cfg.num_elements(), 25);
        assert_eq!(cfg.grid_side(), 5);
        assert_eq!(cfg.num_rf_chains(), 2);
        assert!((cfg.wavelength_m() - 0.009993).abs() < 1e-6);
        assert!((cfg.spacing_m() - cfg.wavelength_m() / 3.0).abs() < 1e-18);
    }

    #[test]
    fn validate_rejects_non_square_m() {
        let cfg = SystemConfig {
            num_elements: 5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig {
            num_elements: 3,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn validate_rejects_degenerate_step_and_fraction() {
        let cfg = SystemConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig {
            an_power_policy: AnPowerPolicy::FixedFraction(1.5),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn validation_is_pure() {
        let a = SystemConfig::default().validate().unwrap();
        let b = SystemConfig::default().validate().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scenario_geometry_invariants() {
        let params = ScenarioParams::default();
        let bob = Vector3::new(0.0, 0.0, -50.0);
        let geom = ScenarioGeometry::new(&params, bob + Vector3::new(3.0, 4.0, 0.0)).unwrap();
        assert!((geom.bob_position - bob).norm() < 1e-12);
        assert!(((geom.bob_position - geom.rhs_center).norm() - 100.0).abs() < 1e-9);
        // outside the disk
        assert!(ScenarioGeometry::new(&params, bob + Vector3::new(6.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn config_json_round_trip_with_defaults() {
        let json = r#"{ "transmit_power_dbm": 20.0, "num_elements": 49 }"#;
        let cfg: SystemConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.num_elements, 49);
        assert_eq!(cfg.transmit_power_dbm, 20.0);
        // untouched fields fall back to defaults
        assert_eq!(cfg.num_rf_chains, 2);
        assert_eq!(cfg.an_power_policy, AnPowerPolicy::PaperResidual);
        let cfg2: SystemConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, cfg2);
    }

    proptest! {
        #[test]
        fn dbm_round_trip(p in -120.0f64..60.0) {
            let w = dbm_to_watts(p).unwrap();
            let back = watts_to_dbm(w).unwrap();
            prop_assert!((back - p).abs() < 1e-12);
        }
    }
}
