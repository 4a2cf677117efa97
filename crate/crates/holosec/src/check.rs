//! Fast invariant and property battery behind `holosec check`.
//!
//! Each check re-derives its expectation through an independent route
//! (scalar re-evaluation, random sampling, finite differences, an
//! eigensolver it does not share with the implementation) and reports one
//! pass/fail line. The full-scale acceptance suite lives with the
//! integration tests; this battery is the quick field version.

use nalgebra::{SymmetricEigen, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::sample_eve_position;
use crate::channel::ChannelRealization;
use crate::config::{ScenarioGeometry, SystemConfig};
use crate::experiment::{csv_string, run_sweep, Scheme, SweepSpec, SweepVariable};
use crate::geometry::RhsGeometry;
use crate::mm_digital::{majorizer_coefficient, solve_generalized_eig};
use crate::mm_holographic::{gradient, project_box, surrogate_qw};
use crate::{C64, CMatrix, CVector, RVector};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_cvec(n: usize, rng: &mut ChaCha8Rng) -> CVector {
    CVector::from_fn(n, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

fn random_cmat(m: usize, r: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(m, r, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

fn check_dbm_round_trip() -> Result<String, String> {
    let mut p = -120.0;
    let mut worst: f64 = 0.0;
    while p <= 60.0 {
        let w = crate::config::dbm_to_watts(p).map_err(|e| e.to_string())?;
        let back = crate::config::watts_to_dbm(w).map_err(|e| e.to_string())?;
        worst = worst.max((back - p).abs());
        p += 0.5;
    }
    if worst < 1e-12 {
        Ok(format!("worst round-trip error {worst:.2e}"))
    } else {
        Err(format!("round-trip error {worst:.2e} exceeds 1e-12"))
    }
}

fn check_majorizer_bound() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..2000 {
        let x_t = rng.gen::<f64>() * 1e3;
        let x = rng.gen::<f64>() * 1e3;
        let (slope, offset) = majorizer_coefficient(x_t);
        let gap = offset + slope * x - (1.0 + x).ln();
        if gap < -1e-12 {
            return Err(format!("bound violated at x={x}, x_t={x_t}: gap={gap:e}"));
        }
        let at_anchor = offset + slope * x_t - (1.0 + x_t).ln();
        if at_anchor.abs() > 1e-12 {
            return Err(format!("tangency violated at x_t={x_t}: {at_anchor:e}"));
        }
    }
    Ok("2000 random pairs".into())
}

fn check_quadratic_form_identity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..100 {
        let m = rng.gen_range(1..=16);
        let r = rng.gen_range(1..=4);
        let h = random_cvec(m, &mut rng);
        let phi = random_cmat(m, r, &mut rng);
        let x = random_cvec(r, &mut rng);
        let qmat = crate::mm_holographic::quadratic_form_matrix(&h, &phi, &x);
        let w = RVector::from_fn(m, |_, _| rng.gen::<f64>());
        let lhs: f64 = (0..m)
            .map(|i| (0..m).map(|j| w[i] * qmat[(i, j)].re * w[j]).sum::<f64>())
            .sum();
        let w_mat = crate::geometry::assemble_holographic(&w, &phi).map_err(|e| e.to_string())?;
        let rhs = (w_mat.adjoint() * &h).dotc(&x).norm_sqr();
        if (lhs - rhs).abs() > 1e-12 * rhs.max(1e-30) {
            return Err(format!("identity broke: {lhs} vs {rhs}"));
        }
    }
    Ok("100 random instances at 1e-12 relative".into())
}

fn check_generalized_eig() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..50 {
        let r = rng.gen_range(2..=8);
        let a = random_cmat(r, r, &mut rng);
        let q = (&a + a.adjoint()) * c(0.5, 0.0);
        let b0 = random_cmat(r, r, &mut rng);
        let reff = &b0 * b0.adjoint();
        let (v, lambda) = solve_generalized_eig(&q, &reff).map_err(|e| e.to_string())?;
        let quotient = |x: &CVector| x.dotc(&(&q * x)).re / x.dotc(&(&reff * x)).re;
        let best = quotient(&v);
        if (best - lambda).abs() > 1e-6 * lambda.abs().max(1.0) {
            return Err(format!("eigenvalue {lambda} does not match quotient {best}"));
        }
        for _ in 0..20_000 {
            let cand = random_cvec(r, &mut rng);
            if quotient(&cand) > best + 1e-9 * best.abs().max(1.0) {
                return Err(format!(
                    "random vector beat the eigenvector: {} > {best}",
                    quotient(&cand)
                ));
            }
        }
    }
    Ok("50 pencils vs 20k random vectors each".into())
}

fn check_an_contracts() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..200 {
        let m = rng.gen_range(4..=12);
        let r = rng.gen_range(2..=4);
        let w = random_cmat(m, r, &mut rng);
        let h = random_cvec(m, &mut rng);
        let g = random_cvec(m, &mut rng);
        let p_av = rng.gen::<f64>() + 0.05;
        let eff = crate::an_design::effective_bob_channel(&w, &h);
        let nb = crate::an_design::null_space(&eff);
        let z = crate::an_design::an_vector(&nb, &w, &g, p_av);

        if (z.norm_squared() - p_av).abs() > 1e-12 * p_av {
            return Err(format!("power load {} != {p_av}", z.norm_squared()));
        }
        if eff.dotc(&z).norm() > 1e-9 * eff.norm() * z.norm() {
            return Err("noise leaked onto the protected channel".into());
        }
        let eff_e = w.adjoint() * &g;
        let achieved = eff_e.dotc(&z).norm_sqr();
        let g_tilde = nb.basis.adjoint() * (&eff_e * eff_e.adjoint()) * &nb.basis;
        let eig = SymmetricEigen::new(g_tilde);
        let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        if (achieved - p_av * lambda_max).abs() > 1e-9 * (p_av * lambda_max).max(1e-30) {
            return Err(format!(
                "interference {achieved} != p_av * lambda_max = {}",
                p_av * lambda_max
            ));
        }
    }
    Ok("200 instances: zero leakage, exact power, optimal alignment".into())
}

fn check_gradient_fd() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..20 {
        let m = rng.gen_range(2..=10);
        let r = rng.gen_range(1..=3);
        let h = random_cvec(m, &mut rng);
        let g = random_cvec(m, &mut rng);
        let phi = random_cmat(m, r, &mut rng);
        let v = random_cvec(r, &mut rng);
        let z = random_cvec(r, &mut rng);
        let w_t = RVector::from_fn(m, |_, _| rng.gen::<f64>());
        let surr = surrogate_qw(&h, &g, &phi, &v, &z, &w_t, 1e-3, 2e-3);
        let grad = gradient(&surr.q_w, &w_t);
        let quad = |w: &RVector| w.dot(&(&surr.q_w * w));
        let step = 1e-6;
        let mut fd = RVector::zeros(m);
        for i in 0..m {
            let mut wp = w_t.clone();
            let mut wm = w_t.clone();
            wp[i] += step;
            wm[i] -= step;
            fd[i] = (quad(&wp) - quad(&wm)) / (2.0 * step);
        }
        let rel = (&grad - &fd).norm() / grad.norm().max(1e-12);
        if rel > 1e-5 {
            return Err(format!("finite-difference mismatch {rel:e}"));
        }
    }
    Ok("20 instances at 1e-5 relative".into())
}

fn check_projection() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for _ in 0..200 {
        let m = rng.gen_range(1..=12);
        let a = RVector::from_fn(m, |_, _| rng.gen::<f64>() * 6.0 - 3.0);
        let b = RVector::from_fn(m, |_, _| rng.gen::<f64>() * 6.0 - 3.0);
        let pa = project_box(&a);
        let pb = project_box(&b);
        if !pa.iter().all(|&x| (0.0..=1.0).contains(&x)) {
            return Err("projection left the box".into());
        }
        if pa != project_box(&pa) {
            return Err("projection is not idempotent".into());
        }
        if (&pa - &pb).norm() > (&a - &b).norm() + 1e-12 {
            return Err("projection expanded a pair".into());
        }
    }
    Ok("feasible, idempotent, non-expansive on 200 pairs".into())
}

fn check_optimizer_feasibility() -> Result<String, String> {
    let cfg = SystemConfig {
        num_elements: 16,
        max_outer_iters: 20,
        max_inner_iters: 200,
        ..Default::default()
    }
    .validate()
    .map_err(|e| e.to_string())?;
    let center = Vector3::new(0.0, 0.0, cfg.scenario().rhs_altitude_m);
    let geom = RhsGeometry::new(&cfg, center).map_err(|e| e.to_string())?;
    let bob = Vector3::new(
        0.0,
        0.0,
        cfg.scenario().rhs_altitude_m - cfg.scenario().bob_range_m,
    );
    let p_t = cfg.transmit_power_w();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eve = sample_eve_position(bob, cfg.scenario().eve_disk_radius_m, &mut rng);
        let scenario = ScenarioGeometry::new(cfg.scenario(), eve).map_err(|e| e.to_string())?;
        let channels = ChannelRealization::generate(&cfg, &geom, &scenario, seed, &mut rng)
            .map_err(|e| e.to_string())?;
        let (_, trace) =
            crate::optimizer::optimize(&cfg, &geom, &channels, &mut rng).map_err(|e| e.to_string())?;
        for rec in &trace.records {
            if rec.power_signal + rec.power_an > p_t * (1.0 + 1e-9) {
                return Err(format!(
                    "power budget exceeded: {} W of {p_t} W",
                    rec.power_signal + rec.power_an
                ));
            }
            if rec.w_min < 0.0 || rec.w_max > 1.0 {
                return Err("weights left the box".into());
            }
            if rec.an_bob_leak_rel > 1e-9 {
                return Err(format!("noise leakage {} onto Bob", rec.an_bob_leak_rel));
            }
        }
    }
    Ok("5 runs, every outer iterate feasible".into())
}

fn check_sweep_determinism() -> Result<String, String> {
    let spec = SweepSpec {
        variable: SweepVariable::TransmitPowerDbm,
        values: vec![15.0, 25.0],
        trials: 2,
        schemes: vec![Scheme::Proposed, Scheme::Random],
        base: SystemConfig {
            num_elements: 16,
            max_outer_iters: 8,
            max_inner_iters: 100,
            ..Default::default()
        },
        seed: 11,
        measure_runtime: false,
    };
    let a = csv_string(&run_sweep(&spec).map_err(|e| e.to_string())?);
    let b = csv_string(&run_sweep(&spec).map_err(|e| e.to_string())?);
    if a == b {
        Ok(format!("{} byte CSV identical across two runs", a.len()))
    } else {
        Err("two runs of the same spec diverged".into())
    }
}

type Check = (&'static str, fn() -> Result<String, String>);

/// Runs the whole battery, printing one line per check.
pub fn run_all() -> Vec<CheckResult> {
    let checks: Vec<Check> = vec![
        ("dbm-round-trip", check_dbm_round_trip),
        ("majorizer-bound", check_majorizer_bound),
        ("quadratic-form-identity", check_quadratic_form_identity),
        ("generalized-eig-optimality", check_generalized_eig),
        ("an-contracts", check_an_contracts),
        ("gradient-finite-difference", check_gradient_fd),
        ("box-projection", check_projection),
        ("optimizer-feasibility", check_optimizer_feasibility),
        ("sweep-determinism", check_sweep_determinism),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(detail) => CheckResult {
                name,
                passed: true,
                detail,
            },
            Err(detail) => CheckResult {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}
