//! Surface element grid, feed layout, wave numbers, and the fixed
//! reference-phase matrix.
//!
//! The surface is a sqrt(M) x sqrt(M) grid in a horizontal plane. Each entry
//! of the analog beamformer `W` is an amplitude weight `w_m` times a fixed
//! phase `exp(-j k_s d_mk)` imprinted by the reference wave travelling from
//! feed `k` over the in-plane distance `d_mk`, so `W = diag(w) * phi`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde_json::json;

use crate::config::ValidatedConfig;
use crate::error::{Error, Result};
use crate::{CMatrix, RVector};

/// Fixed physical layout of one surface: element positions, feed positions,
/// wave-number magnitudes, and the reference-phase matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsGeometry {
    pub center: Vector3<f64>,
    pub element_positions: Vec<Vector3<f64>>,
    pub feed_positions: Vec<Vector3<f64>>,
    /// Free-space wave number, rad/m.
    pub k_f_mag: f64,
    /// In-substrate wave number, rad/m.
    pub k_s_mag: f64,
    /// M x R unit-modulus reference phases.
    pub phi: CMatrix,
}

/// Free-space and in-substrate wave-number magnitudes for a carrier.
pub fn wave_numbers(frequency_hz: f64, relative_permittivity: f64) -> Result<(f64, f64)> {
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(Error::Config(format!(
            "frequency must be positive, got {frequency_hz} Hz"
        )));
    }
    if !(relative_permittivity.is_finite() && relative_permittivity >= 1.0) {
        return Err(Error::Config(format!(
            "relative permittivity must be >= 1, got {relative_permittivity}"
        )));
    }
    let k_f = 2.0 * std::f64::consts::PI * frequency_hz / crate::config::SPEED_OF_LIGHT;
    Ok((k_f, relative_permittivity.sqrt() * k_f))
}

/// Builds the centered sqrt(M) x sqrt(M) grid in row-major order, in the
/// horizontal plane through `center`.
pub fn build_grid(num_elements: usize, spacing_m: f64, center: Vector3<f64>) -> Result<Vec<Vector3<f64>>> {
    let side = (num_elements as f64).sqrt().round() as usize;
    if side * side != num_elements || num_elements == 0 {
        return Err(Error::Config(format!(
            "element count must be a positive perfect square, got {num_elements}"
        )));
    }
    if !(spacing_m.is_finite() && spacing_m > 0.0) {
        return Err(Error::Config(format!(
            "element spacing must be positive, got {spacing_m}"
        )));
    }
    let half = (side as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(num_elements);
    for row in 0..side {
        for col in 0..side {
            let x = (col as f64 - half) * spacing_m;
            let y = (row as f64 - half) * spacing_m;
            positions.push(center + Vector3::new(x, y, 0.0));
        }
    }
    Ok(positions)
}

/// Places the R feeds evenly along the low-y edge of the grid, in the grid
/// plane: feed k sits at the midpoint of the k-th of R equal segments
/// spanning the grid's x extent.
pub fn build_feeds(
    num_elements: usize,
    num_feeds: usize,
    spacing_m: f64,
    center: Vector3<f64>,
) -> Result<Vec<Vector3<f64>>> {
    let side = (num_elements as f64).sqrt().round() as usize;
    if side * side != num_elements || num_elements == 0 {
        return Err(Error::Config(format!(
            "element count must be a positive perfect square, got {num_elements}"
        )));
    }
    if num_feeds == 0 {
        return Err(Error::Config("feed count must be at least 1".into()));
    }
    let half = (side as f64 - 1.0) / 2.0;
    let extent = (side as f64 - 1.0) * spacing_m;
    let x_min = -half * spacing_m;
    let y_edge = -half * spacing_m;
    let feeds = (0..num_feeds)
        .map(|k| {
            let x = x_min + (k as f64 + 0.5) * extent / num_feeds as f64;
            center + Vector3::new(x, y_edge, 0.0)
        })
        .collect();
    Ok(feeds)
}

/// Reference-phase matrix: `phi[m, k] = exp(-j k_s d_mk)` with `d_mk` the
/// in-plane distance from feed `k` to element `m`. Every entry has unit
/// modulus by construction.
pub fn reference_phase_matrix(
    element_positions: &[Vector3<f64>],
    feed_positions: &[Vector3<f64>],
    k_s_mag: f64,
) -> CMatrix {
    CMatrix::from_fn(element_positions.len(), feed_positions.len(), |m, k| {
        let d = in_plane_distance(element_positions[m], feed_positions[k]);
        Complex64::from_polar(1.0, -k_s_mag * d)
    })
}

fn in_plane_distance(a: Vector3<f64>, b: Vector3<f64>) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Analog beamformer for a weight vector: `W = diag(w) * phi`.
pub fn assemble_holographic(weights: &RVector, phi: &CMatrix) -> Result<CMatrix> {
    if weights.len() != phi.nrows() {
        return Err(Error::Config(format!(
            "weight vector length {} does not match {} surface elements",
            weights.len(),
            phi.nrows()
        )));
    }
    if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
        return Err(Error::Config(
            "holographic weights must lie in [0, 1]".into(),
        ));
    }
    let mut w_mat = phi.clone();
    for (m, &w) in weights.iter().enumerate() {
        w_mat.row_mut(m).scale_mut(w);
    }
    Ok(w_mat)
}

impl RhsGeometry {
    /// Builds the full geometry for a validated configuration, with the
    /// surface centered at `center`.
    pub fn new(cfg: &ValidatedConfig, center: Vector3<f64>) -> Result<Self> {
        let (k_f_mag, k_s_mag) =
            wave_numbers(cfg.raw().carrier_frequency_hz, cfg.raw().relative_permittivity)?;
        let element_positions = build_grid(cfg.num_elements(), cfg.spacing_m(), center)?;
        let feed_positions =
            build_feeds(cfg.num_elements(), cfg.num_rf_chains(), cfg.spacing_m(), center)?;
        let phi = reference_phase_matrix(&element_positions, &feed_positions, k_s_mag);
        Ok(Self {
            center,
            element_positions,
            feed_positions,
            k_f_mag,
            k_s_mag,
            phi,
        })
    }

    /// Debug dump: positions plus phases as re/im pairs.
    pub fn dump_json(&self) -> serde_json::Value {
        let vec3 = |v: &Vector3<f64>| json!([v.x, v.y, v.z]);
        json!({
            "center": vec3(&self.center),
            "k_f_mag": self.k_f_mag,
            "k_s_mag": self.k_s_mag,
            "element_positions": self.element_positions.iter().map(vec3).collect::<Vec<_>>(),
            "feed_positions": self.feed_positions.iter().map(vec3).collect::<Vec<_>>(),
            "phi": (0..self.phi.nrows())
                .map(|m| {
                    (0..self.phi.ncols())
                        .map(|k| json!([self.phi[(m, k)].re, self.phi[(m, k)].im]))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn wave_numbers_substrate_scaling() {
        // parametric check: k_s = sqrt(eps_r) * k_f
        let f = 200.0 * PI * crate::config::SPEED_OF_LIGHT / (2.0 * PI);
        let (kf, ks) = wave_numbers(f, 3.0).unwrap();
        assert!((kf - 200.0 * PI).abs() < 1e-9);
        assert!((ks - 200.0 * 3f64.sqrt() * PI).abs() < 1e-9);
        let (kf1, ks1) = wave_numbers(1e9, 1.0).unwrap();
        assert_eq!(kf1, ks1);
        // 30 GHz carrier
        let (kf30, _) = wave_numbers(30e9, 3.0).unwrap();
        let expect = 2.0 * PI * 30e9 / crate::config::SPEED_OF_LIGHT;
        assert!((kf30 - expect).abs() < 1e-12);
        assert!((kf30 - 628.7545).abs() < 1e-3);
    }

    #[test]
    fn wave_numbers_rejects_bad_input() {
        assert!(wave_numbers(0.0, 3.0).is_err());
        assert!(wave_numbers(-1.0, 3.0).is_err());
        assert!(wave_numbers(1e9, 0.5).is_err());
    }

    #[test]
    fn grid_two_by_two_row_major() {
        let d = 0.004;
        let grid = build_grid(4, d, Vector3::zeros()).unwrap();
        let expect = [
            Vector3::new(-d / 2.0, -d / 2.0, 0.0),
            Vector3::new(d / 2.0, -d / 2.0, 0.0),
            Vector3::new(-d / 2.0, d / 2.0, 0.0),
            Vector3::new(d / 2.0, d / 2.0, 0.0),
        ];
        for (g, e) in grid.iter().zip(expect.iter()) {
            assert!((g - e).norm() < 1e-15);
        }
    }

    #[test]
    fn grid_spacing_and_rejection() {
        let grid = build_grid(25, 0.003, Vector3::new(0.0, 0.0, 50.0)).unwrap();
        assert_eq!(grid.len(), 25);
        // adjacent along x within a row, and along y across rows
        for row in 0..5 {
            for col in 0..4 {
                let a = grid[row * 5 + col];
                let b = grid[row * 5 + col + 1];
                assert!(((b - a).norm() - 0.003).abs() < 1e-15);
            }
        }
        for row in 0..4 {
            let a = grid[row * 5];
            let b = grid[(row + 1) * 5];
            assert!(((b - a).norm() - 0.003).abs() < 1e-15);
        }
        assert!(build_grid(3, 0.003, Vector3::zeros()).is_err());
    }

    #[test]
    fn phase_matrix_unit_modulus_and_special_points() {
        // element coincident with its feed -> phase 1
        let elements = vec![Vector3::zeros(), Vector3::new(0.1, 0.0, 0.0)];
        let feeds = vec![Vector3::zeros()];
        let k_s = 10.0 * PI;
        let phi = reference_phase_matrix(&elements, &feeds, k_s);
        assert!((phi[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // half-wavelength in-guide -> -1
        let elements = vec![Vector3::new(PI / k_s, 0.0, 0.0)];
        let phi = reference_phase_matrix(&elements, &feeds, k_s);
        assert!((phi[(0, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn phase_matrix_unit_modulus_random_geometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let elements: Vec<_> = (0..16)
            .map(|_| Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), 0.0))
            .collect();
        let feeds: Vec<_> = (0..3)
            .map(|_| Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), 0.0))
            .collect();
        let phi = reference_phase_matrix(&elements, &feeds, 345.6);
        for v in phi.iter() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn assemble_identity_dark_and_uniform() {
        let cfg = SystemConfig::default().validate().unwrap();
        let geom = RhsGeometry::new(&cfg, Vector3::new(0.0, 0.0, 50.0)).unwrap();
        let m = cfg.num_elements();

        let ones = RVector::from_element(m, 1.0);
        let w = assemble_holographic(&ones, &geom.phi).unwrap();
        assert!((&w - &geom.phi).norm() < 1e-15);

        let zeros = RVector::zeros(m);
        let w = assemble_holographic(&zeros, &geom.phi).unwrap();
        assert!(w.norm() < 1e-15);

        let half = RVector::from_element(m, 0.5);
        let w = assemble_holographic(&half, &geom.phi).unwrap();
        for v in w.iter() {
            assert!((v.norm() - 0.5).abs() < 1e-12);
        }

        let bad = RVector::from_element(m, 1.5);
        assert!(assemble_holographic(&bad, &geom.phi).is_err());
    }

    #[test]
    fn assemble_is_linear_in_weights() {
        let cfg = SystemConfig::default().validate().unwrap();
        let geom = RhsGeometry::new(&cfg, Vector3::zeros()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w: RVector = RVector::from_fn(cfg.num_elements(), |_, _| rng.gen::<f64>());
        for alpha in [0.0, 0.25, 0.7, 1.0] {
            let lhs = assemble_holographic(&(w.clone() * alpha), &geom.phi).unwrap();
            let rhs = assemble_holographic(&w, &geom.phi).unwrap() * Complex64::new(alpha, 0.0);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn permuting_elements_permutes_rows_consistently() {
        // downstream scalars must not depend on element ordering
        let cfg = SystemConfig::default().validate().unwrap();
        let geom = RhsGeometry::new(&cfg, Vector3::zeros()).unwrap();
        let m = cfg.num_elements();
        let r = cfg.num_rf_chains();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = RVector::from_fn(m, |_, _| rng.gen::<f64>());
        let h = crate::CVector::from_fn(m, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let v = crate::CVector::from_fn(r, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });

        let w_mat = assemble_holographic(&w, &geom.phi).unwrap();
        let scalar = (w_mat.adjoint() * &h).dotc(&v).norm_sqr();

        // apply a fixed permutation to rows of phi, w, and h together
        let perm: Vec<usize> = (0..m).rev().collect();
        let phi_p = CMatrix::from_fn(m, r, |i, k| geom.phi[(perm[i], k)]);
        let w_p = RVector::from_fn(m, |i, _| w[perm[i]]);
        let h_p = crate::CVector::from_fn(m, |i, _| h[perm[i]]);
        let w_mat_p = assemble_holographic(&w_p, &phi_p).unwrap();
        let scalar_p = (w_mat_p.adjoint() * &h_p).dotc(&v).norm_sqr();
        assert!((scalar - scalar_p).abs() <= 1e-12 * scalar.abs().max(1e-300));
    }

    #[test]
    fn geometry_dump_is_valid_json() {
        let cfg = SystemConfig {
            num_elements: 4,
            ..Default::default()
        }
        .validate()
        .unwrap();
        let geom = RhsGeometry::new(&cfg, Vector3::new(0.0, 0.0, 50.0)).unwrap();
        let dump = geom.dump_json();
        assert_eq!(dump["element_positions"].as_array().unwrap().len(), 4);
        assert_eq!(dump["phi"][0].as_array().unwrap().len(), 2);
    }
}
