//! Monte Carlo sweep runner: Proposed vs Random over transmit power, surface
//! size, RF chains, or Rician factor, with CSV emission.
//!
//! Each (value, trial) pair derives its own rng streams from a stable 64-bit
//! hash, so trials are independent, embarrassingly parallel, and the output
//! is byte-reproducible regardless of worker scheduling. Both schemes of a
//! trial consume the identical channel realization; only the baseline's
//! weights come from a separate stream.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_eve_position, ChannelRealization};
use crate::config::{ScenarioGeometry, SystemConfig, ValidatedConfig};
use crate::error::{Error, Result};
use crate::geometry::{assemble_holographic, RhsGeometry};
use crate::metrics::{self, SecrecyReport};
use crate::mm_digital::{digital_step, power_scale};
use crate::optimizer::{self, BeamformingState};
use crate::{CVector, RVector};

/// Which configuration field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    TransmitPowerDbm,
    RhsSize,
    RfChains,
    RicianK,
}

impl SweepVariable {
    pub fn cli_name(self) -> &'static str {
        match self {
            SweepVariable::TransmitPowerDbm => "power",
            SweepVariable::RhsSize => "rhs-size",
            SweepVariable::RfChains => "rf-chains",
            SweepVariable::RicianK => "rician",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "power" => Ok(SweepVariable::TransmitPowerDbm),
            "rhs-size" => Ok(SweepVariable::RhsSize),
            "rf-chains" => Ok(SweepVariable::RfChains),
            "rician" => Ok(SweepVariable::RicianK),
            other => Err(Error::Config(format!(
                "unknown sweep variable '{other}' (expected power, rhs-size, rf-chains, rician)"
            ))),
        }
    }

    /// Applies one sweep value to a base configuration.
    pub fn apply(self, base: &SystemConfig, value: f64) -> SystemConfig {
        let mut cfg = base.clone();
        match self {
            SweepVariable::TransmitPowerDbm => cfg.transmit_power_dbm = value,
            SweepVariable::RhsSize => cfg.num_elements = value.round() as usize,
            SweepVariable::RfChains => cfg.num_rf_chains = value.round() as usize,
            SweepVariable::RicianK => cfg.rician_factor = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    Random,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Random => "random",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "proposed" => Ok(Scheme::Proposed),
            "random" => Ok(Scheme::Random),
            other => Err(Error::Config(format!(
                "unknown scheme '{other}' (expected proposed, random)"
            ))),
        }
    }
}

/// Full description of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub base: SystemConfig,
    pub seed: u64,
    /// When set, `runtime_ms` carries wall-clock optimizer time, which makes
    /// the CSV vary run to run. Off by default so identical specs produce
    /// byte-identical output.
    #[serde(default)]
    pub measure_runtime: bool,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_variable: SweepVariable,
    pub sweep_value: f64,
    pub trial: usize,
    pub scheme: String,
    pub secrecy_bits: f64,
    pub rate_bob: f64,
    pub rate_eve: f64,
    pub outer_iters: usize,
    pub runtime_ms: f64,
    pub seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stable hash chain over (seed, sweep-value bits, trial): the same inputs
/// give the same stream on every platform and run.
pub fn derive_trial_seed(base_seed: u64, value: f64, trial: u64) -> u64 {
    let mut s = splitmix64(base_seed);
    s = splitmix64(s ^ value.to_bits());
    splitmix64(s ^ trial)
}

const STREAM_CHANNEL: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_BASELINE: u64 = 3;

fn stream_rng(trial_seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(trial_seed ^ stream))
}

/// Benchmark scheme: weights drawn once from `U(0,1)^M` and left untouched; the
/// beamformer and noise still get one pass of their optimization steps.
pub fn random_baseline(
    cfg: &ValidatedConfig,
    geom: &RhsGeometry,
    channels: &ChannelRealization,
    rng: &mut ChaCha8Rng,
) -> Result<(BeamformingState, SecrecyReport)> {
    let m = cfg.num_elements();
    let p_t = cfg.transmit_power_w();
    let policy = cfg.an_power_policy();
    let (noise_b, noise_e) = (cfg.noise_bob_w(), cfg.noise_eve_w());

    let w = RVector::from_fn(m, |_, _| rng.gen::<f64>());
    let w_mat = assemble_holographic(&w, &geom.phi)?;

    let z0 = match policy {
        crate::config::AnPowerPolicy::PaperResidual => CVector::zeros(cfg.num_rf_chains()),
        crate::config::AnPowerPolicy::FixedFraction(rho) => {
            let eff = crate::an_design::effective_bob_channel(&w_mat, &channels.h_b);
            crate::an_design::an_vector(
                &crate::an_design::null_space(&eff),
                &w_mat,
                &channels.g_e,
                rho * p_t,
            )
        }
    };

    let eff = crate::an_design::effective_bob_channel(&w_mat, &channels.h_b);
    let norm = eff.norm();
    let v0 = if norm > 0.0 {
        let matched = &eff / crate::C64::new(norm, 0.0);
        power_scale(
            &matched,
            &w_mat,
            optimizer::signal_budget_for(policy, p_t, z0.norm_squared()),
        )
    } else {
        CVector::zeros(cfg.num_rf_chains())
    };

    let v = digital_step(
        &v0,
        &z0,
        &channels.h_b,
        &channels.g_e,
        &w_mat,
        noise_b,
        noise_e,
        optimizer::signal_budget_for(policy, p_t, z0.norm_squared()),
    )?;
    let signal_power = (&w_mat * &v).norm_squared();
    let z = crate::an_design::an_vector(
        &crate::an_design::null_space(&eff),
        &w_mat,
        &channels.g_e,
        optimizer::an_budget_for(policy, p_t, signal_power),
    );

    let report = metrics::report(
        &channels.h_b,
        &channels.g_e,
        &w_mat,
        &v,
        &z,
        noise_b,
        noise_e,
    );
    Ok((BeamformingState { v, w, z }, report))
}

fn validate_spec(spec: &SweepSpec) -> Result<()> {
    if spec.values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if !spec.values.windows(2).all(|p| p[0] < p[1]) {
        return Err(Error::Config(
            "sweep values must be strictly increasing".into(),
        ));
    }
    if spec.trials == 0 {
        return Err(Error::Config("sweep needs at least one trial".into()));
    }
    if spec.schemes.is_empty() {
        return Err(Error::Config("sweep needs at least one scheme".into()));
    }
    // every per-value configuration must validate (catches non-square sizes)
    for &value in &spec.values {
        spec.variable.apply(&spec.base, value).validate()?;
    }
    Ok(())
}

struct TrialOutcome {
    secrecy: f64,
    rate_bob: f64,
    rate_eve: f64,
    outer_iters: usize,
}

fn run_trial_scheme(
    cfg: &ValidatedConfig,
    geom: &RhsGeometry,
    channels: &ChannelRealization,
    scheme: Scheme,
    trial_seed: u64,
) -> Result<TrialOutcome> {
    match scheme {
        Scheme::Proposed => {
            let mut rng = stream_rng(trial_seed, STREAM_INIT);
            let (_, trace) = optimizer::optimize(cfg, geom, channels, &mut rng)?;
            let best = trace.best_record().copied();
            Ok(TrialOutcome {
                secrecy: best.map_or(0.0, |r| r.secrecy),
                rate_bob: best.map_or(0.0, |r| r.rate_bob),
                rate_eve: best.map_or(0.0, |r| r.rate_eve),
                outer_iters: trace.records.len(),
            })
        }
        Scheme::Random => {
            let mut rng = stream_rng(trial_seed, STREAM_BASELINE);
            let (_, report) = random_baseline(cfg, geom, channels, &mut rng)?;
            Ok(TrialOutcome {
                secrecy: report.secrecy,
                rate_bob: report.rate_bob,
                rate_eve: report.rate_eve,
                outer_iters: 1,
            })
        }
    }
}

/// Runs every (value, trial, scheme) combination. Rows come back sorted by
/// (value, trial, scheme) and are a pure function of the spec unless
/// `measure_runtime` is set.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    validate_spec(spec)?;

    let jobs: Vec<(usize, f64, usize)> = spec
        .values
        .iter()
        .enumerate()
        .flat_map(|(vi, &value)| (0..spec.trials).map(move |t| (vi, value, t)))
        .collect();

    let mut rows: Vec<(usize, ResultRow)> = jobs
        .par_iter()
        .map(|&(vi, value, trial)| {
            let trial_seed = derive_trial_seed(spec.seed, value, trial as u64);
            let cfg = spec
                .variable
                .apply(&spec.base, value)
                .validate()
                .expect("spec validated above");

            let mut channel_rng = stream_rng(trial_seed, STREAM_CHANNEL);
            let center = Vector3::new(0.0, 0.0, cfg.scenario().rhs_altitude_m);
            let bob = Vector3::new(
                0.0,
                0.0,
                cfg.scenario().rhs_altitude_m - cfg.scenario().bob_range_m,
            );
            let setup = (|| -> Result<(RhsGeometry, ChannelRealization)> {
                let geom = RhsGeometry::new(&cfg, center)?;
                let eve =
                    sample_eve_position(bob, cfg.scenario().eve_disk_radius_m, &mut channel_rng);
                let scenario = ScenarioGeometry::new(cfg.scenario(), eve)?;
                let channels =
                    ChannelRealization::generate(&cfg, &geom, &scenario, trial_seed, &mut channel_rng)?;
                Ok((geom, channels))
            })();

            let scheme_rows: Vec<ResultRow> = spec
                .schemes
                .iter()
                .map(|&scheme| {
                    let started = Instant::now();
                    let outcome = match &setup {
                        Ok((geom, channels)) => catch_unwind(AssertUnwindSafe(|| {
                            run_trial_scheme(&cfg, geom, channels, scheme, trial_seed)
                        }))
                        .unwrap_or_else(|_| {
                            Err(Error::Numerical {
                                message: "trial panicked".into(),
                                dump: format!("value={value}, trial={trial}, seed={trial_seed}"),
                            })
                        }),
                        Err(e) => Err(Error::Config(format!("setup failed: {e}"))),
                    };
                    let runtime_ms = if spec.measure_runtime {
                        started.elapsed().as_secs_f64() * 1e3
                    } else {
                        0.0
                    };
                    match outcome {
                        Ok(out) => ResultRow {
                            sweep_variable: spec.variable,
                            sweep_value: value,
                            trial,
                            scheme: scheme.name().to_string(),
                            secrecy_bits: out.secrecy,
                            rate_bob: out.rate_bob,
                            rate_eve: out.rate_eve,
                            outer_iters: out.outer_iters,
                            runtime_ms,
                            seed: trial_seed,
                        },
                        Err(_) => ResultRow {
                            sweep_variable: spec.variable,
                            sweep_value: value,
                            trial,
                            scheme: format!("{}-error", scheme.name()),
                            secrecy_bits: f64::NAN,
                            rate_bob: f64::NAN,
                            rate_eve: f64::NAN,
                            outer_iters: 0,
                            runtime_ms,
                            seed: trial_seed,
                        },
                    }
                })
                .collect();
            (vi, scheme_rows)
        })
        .flat_map(|(vi, rows)| rows.into_iter().map(move |r| (vi, r)).collect::<Vec<_>>())
        .collect();

    rows.sort_by(|(ai, a), (bi, b)| {
        (ai, a.trial, &a.scheme).cmp(&(bi, b.trial, &b.scheme))
    });
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub const CSV_HEADER: &str =
    "sweep_variable,sweep_value,trial,scheme,secrecy_bits,rate_bob,rate_eve,outer_iters,runtime_ms,seed";

fn fmt_float(x: f64) -> String {
    // nine significant digits
    format!("{x:.8e}")
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.sweep_variable.cli_name(),
            fmt_float(self.sweep_value),
            self.trial,
            self.scheme,
            fmt_float(self.secrecy_bits),
            fmt_float(self.rate_bob),
            fmt_float(self.rate_eve),
            self.outer_iters,
            fmt_float(self.runtime_ms),
            self.seed,
        )
    }
}

/// The exact bytes `write_csv` produces.
pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(csv_string(rows).as_bytes())?;
    Ok(())
}

/// Parses text produced by `write_csv` back into rows.
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "unexpected CSV header: {other:?}"
            )))
        }
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(Error::Config(format!("malformed CSV row: {line}")));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad float '{s}': {e}")))
            };
            Ok(ResultRow {
                sweep_variable: SweepVariable::parse(f[0])?,
                sweep_value: num(f[1])?,
                trial: f[2]
                    .parse()
                    .map_err(|e| Error::Config(format!("bad trial '{}': {e}", f[2])))?,
                scheme: f[3].to_string(),
                secrecy_bits: num(f[4])?,
                rate_bob: num(f[5])?,
                rate_eve: num(f[6])?,
                outer_iters: f[7]
                    .parse()
                    .map_err(|e| Error::Config(format!("bad iters '{}': {e}", f[7])))?,
                runtime_ms: num(f[8])?,
                seed: f[9]
                    .parse()
                    .map_err(|e| Error::Config(format!("bad seed '{}': {e}", f[9])))?,
            })
        })
        .collect()
}

/// Gnuplot script that plots mean secrecy against the sweep value for both
/// schemes of a CSV produced by `write_csv`.
pub fn write_gnuplot_script(csv_path: &Path, script_path: &Path) -> Result<()> {
    let csv = csv_path.display();
    let script = format!(
        r#"set datafile separator ","
set key top left
set xlabel "sweep value"
set ylabel "secrecy rate (bits/s/Hz)"
set grid
plot "{csv}" using (strcol(4) eq "proposed" ? $2 : NaN):5 smooth unique with linespoints title "proposed", \
     "{csv}" using (strcol(4) eq "random" ? $2 : NaN):5 smooth unique with linespoints title "random"
"#
    );
    let mut file = std::fs::File::create(script_path)?;
    file.write_all(script.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> SweepSpec {
        SweepSpec {
            variable: SweepVariable::TransmitPowerDbm,
            values: vec![15.0, 25.0],
            trials: 2,
            schemes: vec![Scheme::Proposed, Scheme::Random],
            base: SystemConfig {
                num_elements: 16,
                max_outer_iters: 10,
                max_inner_iters: 100,
                ..Default::default()
            },
            seed: 7,
            measure_runtime: false,
        }
    }

    #[test]
    fn seed_derivation_is_stable_and_spread() {
        let a = derive_trial_seed(42, 25.0, 0);
        let b = derive_trial_seed(42, 25.0, 0);
        assert_eq!(a, b);
        assert_ne!(a, derive_trial_seed(42, 25.0, 1));
        assert_ne!(a, derive_trial_seed(42, 30.0, 0));
        assert_ne!(a, derive_trial_seed(43, 25.0, 0));
    }

    #[test]
    fn sweep_cardinality_and_order() {
        let mut spec = tiny_spec();
        spec.values = vec![20.0];
        spec.trials = 1;
        spec.schemes = vec![Scheme::Proposed];
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].scheme, "proposed");
        assert!(rows[0].outer_iters > 0);

        let rows = run_sweep(&tiny_spec()).unwrap();
        assert_eq!(rows.len(), 8);
        // sorted by (value, trial, scheme)
        let key: Vec<_> = rows
            .iter()
            .map(|r| (r.sweep_value as i64, r.trial, r.scheme.clone()))
            .collect();
        let mut sorted = key.clone();
        sorted.sort();
        assert_eq!(key, sorted);
    }

    #[test]
    fn sweep_is_byte_deterministic() {
        let spec = tiny_spec();
        let a = csv_string(&run_sweep(&spec).unwrap());
        let b = csv_string(&run_sweep(&spec).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn scheme_fairness_same_channels() {
        // removing the random scheme must not change the proposed rows
        let spec = tiny_spec();
        let both = run_sweep(&spec).unwrap();
        let mut only = spec.clone();
        only.schemes = vec![Scheme::Proposed];
        let proposed_only = run_sweep(&only).unwrap();
        let filtered: Vec<_> = both.iter().filter(|r| r.scheme == "proposed").collect();
        assert_eq!(filtered.len(), proposed_only.len());
        for (a, b) in filtered.iter().zip(proposed_only.iter()) {
            assert_eq!(a.secrecy_bits, b.secrecy_bits);
            assert_eq!(a.seed, b.seed);
        }
    }

    #[test]
    fn trial_independence() {
        // dropping a trial leaves the other trials' rows untouched
        let spec = tiny_spec();
        let rows = run_sweep(&spec).unwrap();
        let mut fewer = spec.clone();
        fewer.trials = 1;
        let rows_fewer = run_sweep(&fewer).unwrap();
        for r in &rows_fewer {
            let matching = rows
                .iter()
                .find(|x| {
                    x.trial == r.trial
                        && x.sweep_value == r.sweep_value
                        && x.scheme == r.scheme
                })
                .unwrap();
            assert_eq!(matching.secrecy_bits, r.secrecy_bits);
        }
    }

    #[test]
    fn spec_validation_rejects_bad_input() {
        let mut spec = tiny_spec();
        spec.values = vec![];
        assert!(run_sweep(&spec).is_err());

        let mut spec = tiny_spec();
        spec.values = vec![25.0, 15.0];
        assert!(run_sweep(&spec).is_err());

        let mut spec = tiny_spec();
        spec.variable = SweepVariable::RhsSize;
        spec.values = vec![15.0, 24.0];
        assert!(run_sweep(&spec).is_err(), "non-square sizes must be rejected");

        let mut spec = tiny_spec();
        spec.trials = 0;
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let rows = run_sweep(&tiny_spec()).unwrap();
        let text = csv_string(&rows);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), rows.len() + 1);
        assert!(text.ends_with('\n'));

        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in rows.iter().zip(parsed.iter()) {
            assert_eq!(a.scheme, b.scheme);
            assert_eq!(a.trial, b.trial);
            assert_eq!(a.seed, b.seed);
            // nine significant digits survive the round trip
            assert!((a.secrecy_bits - b.secrecy_bits).abs() <= 1e-8 * a.secrecy_bits.abs().max(1e-12));
        }

        // empty rows -> header-only file
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn baseline_is_deterministic_and_feasible() {
        let spec = tiny_spec();
        let cfg = spec.base.clone().validate().unwrap();
        let center = Vector3::new(0.0, 0.0, 50.0);
        let geom = RhsGeometry::new(&cfg, center).unwrap();
        let mut rng = stream_rng(3, STREAM_CHANNEL);
        let bob = Vector3::new(0.0, 0.0, -50.0);
        let eve = sample_eve_position(bob, 5.0, &mut rng);
        let scenario = ScenarioGeometry::new(cfg.scenario(), eve).unwrap();
        let channels = ChannelRealization::generate(&cfg, &geom, &scenario, 3, &mut rng).unwrap();

        let (state_a, rep_a) =
            random_baseline(&cfg, &geom, &channels, &mut stream_rng(3, STREAM_BASELINE)).unwrap();
        let (state_b, rep_b) =
            random_baseline(&cfg, &geom, &channels, &mut stream_rng(3, STREAM_BASELINE)).unwrap();
        assert_eq!(state_a, state_b);
        assert_eq!(rep_a, rep_b);
        assert!(rep_a.power_total <= cfg.transmit_power_w() * (1.0 + 1e-9));
        assert!(state_a.w.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn gnuplot_script_mentions_csv() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("rows.csv");
        let gp = dir.path().join("rows.gp");
        write_csv(&run_sweep(&tiny_spec()).unwrap(), &csv).unwrap();
        write_gnuplot_script(&csv, &gp).unwrap();
        let text = std::fs::read_to_string(&gp).unwrap();
        assert!(text.contains("rows.csv"));
        assert!(text.contains("proposed"));
    }
}
