//! Rician-faded channel vectors with path loss and planar-array LoS phases.
//!
//! A channel draw is `h = sqrt(gain) * (sqrt(K/(K+1)) los + sqrt(1/(K+1)) n)`
//! with `n` i.i.d. circularly-symmetric unit-variance complex Gaussian. Every
//! draw is a pure function of the rng stream handed in, so trials can own
//! independent streams and remain bit-reproducible.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use crate::config::{ScenarioGeometry, ValidatedConfig};
use crate::error::{Error, Result};
use crate::geometry::RhsGeometry;
use crate::CVector;

/// Rician factors at or above this are treated as the pure-LoS limit.
pub const K_LOS_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMeta {
    pub bob_distance_m: f64,
    pub eve_distance_m: f64,
    pub rician_k: f64,
    pub gain_bob: f64,
    pub gain_eve: f64,
    pub seed: u64,
}

/// One realization of the surface-to-Bob and surface-to-Eve channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_b: CVector,
    pub g_e: CVector,
    pub meta: ChannelMeta,
}

/// Line-of-sight steering vector toward `target`: entry m is
/// `exp(j k_f (r_m - center) . u)` with `u` the unit direction from the
/// surface center to the target.
pub fn los_steering(geom: &RhsGeometry, target: Vector3<f64>) -> Result<CVector> {
    let dir = target - geom.center;
    let dist = dir.norm();
    if dist == 0.0 {
        return Err(Error::Config(
            "steering target coincides with the surface center".into(),
        ));
    }
    let u = dir / dist;
    Ok(CVector::from_iterator(
        geom.element_positions.len(),
        geom.element_positions.iter().map(|r| {
            let phase = geom.k_f_mag * (r - geom.center).dot(&u);
            Complex64::from_polar(1.0, phase)
        }),
    ))
}

/// Linear path-loss gain: free-space gain at the 1 m reference, then
/// exponent-law decay, `(lambda / 4 pi)^2 d^-beta`.
pub fn path_loss_gain(distance_m: f64, exponent: f64, wavelength_m: f64) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m >= 1.0) {
        return Err(Error::Config(format!(
            "path-loss model needs distance >= 1 m, got {distance_m}"
        )));
    }
    let reference = (wavelength_m / (4.0 * std::f64::consts::PI)).powi(2);
    Ok(reference * distance_m.powf(-exponent))
}

/// Draws one Rician channel around a LoS component.
pub fn rician_channel(
    los: &CVector,
    rician_k: f64,
    gain: f64,
    rng: &mut ChaCha8Rng,
) -> CVector {
    let amp = gain.sqrt();
    if rician_k >= K_LOS_LIMIT {
        return los * Complex64::new(amp, 0.0);
    }
    let los_w = (rician_k / (rician_k + 1.0)).sqrt();
    let nlos_w = (1.0 / (rician_k + 1.0)).sqrt();
    let sigma = (0.5f64).sqrt(); // unit variance per complex entry
    CVector::from_iterator(
        los.len(),
        los.iter().map(|l| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let n = Complex64::new(re * sigma, im * sigma);
            (l * los_w + n * nlos_w) * amp
        }),
    )
}

/// Uniform draw from the disk of `radius_m` around `bob`, in the plane
/// orthogonal to boresight. Area-uniform via the sqrt-radius inverse
/// transform.
pub fn sample_eve_position(
    bob: Vector3<f64>,
    radius_m: f64,
    rng: &mut ChaCha8Rng,
) -> Vector3<f64> {
    let r = radius_m * rng.gen::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    bob + Vector3::new(r * theta.cos(), r * theta.sin(), 0.0)
}

impl ChannelRealization {
    /// Draws both links for one trial. `seed` is recorded in the metadata;
    /// the draw itself consumes `rng`.
    pub fn generate(
        cfg: &ValidatedConfig,
        geom: &RhsGeometry,
        scenario: &ScenarioGeometry,
        seed: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let k = cfg.raw().rician_factor;
        let bob_distance_m = (scenario.bob_position - geom.center).norm();
        let eve_distance_m = (scenario.eve_position - geom.center).norm();
        let gain_bob = path_loss_gain(
            bob_distance_m,
            cfg.raw().pathloss_exponent_bob,
            cfg.wavelength_m(),
        )?;
        let gain_eve = path_loss_gain(
            eve_distance_m,
            cfg.raw().pathloss_exponent_eve,
            cfg.wavelength_m(),
        )?;
        let los_bob = los_steering(geom, scenario.bob_position)?;
        let los_eve = los_steering(geom, scenario.eve_position)?;
        let h_b = rician_channel(&los_bob, k, gain_bob, rng);
        let g_e = rician_channel(&los_eve, k, gain_eve, rng);
        Ok(Self {
            h_b,
            g_e,
            meta: ChannelMeta {
                bob_distance_m,
                eve_distance_m,
                rician_k: k,
                gain_bob,
                gain_eve,
                seed,
            },
        })
    }

    /// Dump both channel vectors as arrays of `[re, im]` pairs.
    pub fn dump_json(&self) -> serde_json::Value {
        let vec = |v: &CVector| {
            v.iter()
                .map(|c| json!([c.re, c.im]))
                .collect::<Vec<_>>()
        };
        json!({ "h_b": vec(&self.h_b), "g_e": vec(&self.g_e), "seed": self.meta.seed })
    }

    /// Parses channel vectors from the `dump_json` format.
    pub fn load_json(value: &serde_json::Value) -> Result<(CVector, CVector)> {
        let parse = |key: &str| -> Result<CVector> {
            let arr = value[key]
                .as_array()
                .ok_or_else(|| Error::Config(format!("missing channel array '{key}'")))?;
            let entries = arr
                .iter()
                .map(|pair| {
                    let re = pair[0].as_f64();
                    let im = pair[1].as_f64();
                    match (re, im) {
                        (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                        _ => Err(Error::Config(format!("malformed [re, im] pair in '{key}'"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CVector::from_vec(entries))
        };
        Ok((parse("h_b")?, parse("g_e")?))
    }
}
