//! SINRs, rates, secrecy rate, and power accounting for a candidate
//! `(v, W, z)` triple. These are the ground truth every optimization step is
//! measured against; none of the surrogate machinery leaks in here.

use serde::Serialize;

use crate::{CMatrix, CVector};

/// Point evaluation of one beamforming state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecrecyReport {
    pub sinr_bob: f64,
    pub sinr_eve: f64,
    /// bits/s/Hz
    pub rate_bob: f64,
    pub rate_eve: f64,
    /// `max(0, rate_bob - rate_eve)`, bits/s/Hz
    pub secrecy: f64,
    /// `||W v||^2`, watts
    pub power_signal: f64,
    /// `||z||^2`, watts
    pub power_an: f64,
    pub power_total: f64,
}

/// SINR at a receiver with channel `h`: `|h^H W v|^2 / (|h^H W z|^2 + noise)`.
pub fn sinr(channel: &CVector, w_mat: &CMatrix, v: &CVector, z: &CVector, noise_w: f64) -> f64 {
    let effective = w_mat.adjoint() * channel; // W^H h
    let signal = effective.dotc(v).norm_sqr();
    let leakage = effective.dotc(z).norm_sqr();
    signal / (leakage + noise_w)
}

/// Achievable rate `log2(1 + sinr)` in bits/s/Hz.
pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Positive part of the rate difference.
pub fn secrecy_rate(sinr_bob: f64, sinr_eve: f64) -> f64 {
    (rate(sinr_bob) - rate(sinr_eve)).max(0.0)
}

/// Signal and noise transmit powers, `(||W v||^2, ||z||^2)` in watts.
pub fn transmit_power(w_mat: &CMatrix, v: &CVector, z: &CVector) -> (f64, f64) {
    let signal = (w_mat * v).norm_squared();
    let an = z.norm_squared();
    (signal, an)
}

/// Full report for one state.
pub fn report(
    h_b: &CVector,
    g_e: &CVector,
    w_mat: &CMatrix,
    v: &CVector,
    z: &CVector,
    noise_bob_w: f64,
    noise_eve_w: f64,
) -> SecrecyReport {
    let sinr_bob = sinr(h_b, w_mat, v, z, noise_bob_w);
    let sinr_eve = sinr(g_e, w_mat, v, z, noise_eve_w);
    let rate_bob = rate(sinr_bob);
    let rate_eve = rate(sinr_eve);
    let (power_signal, power_an) = transmit_power(w_mat, v, z);
    SecrecyReport {
        sinr_bob,
        sinr_eve,
        rate_bob,
        rate_eve,
        secrecy: (rate_bob - rate_eve).max(0.0),
        power_signal,
        power_an,
        power_total: power_signal + power_an,
    }
}
