//! One majorize-maximize update of the holographic amplitude weights.
//!
//! With `W = diag(w) phi`, both SINR numerators are quadratic forms in the
//! real weight vector: `|h^H diag(w) phi x|^2 = w^T Re(s s^H) w` with
//! `s_m = conj((phi x)_m) h_m`. The surrogate matrix `Q_w` divides each
//! receiver's numerator matrix by its anchored denominator; the weights then
//! follow projected gradient ascent on `w^T Q_w w` over the box `[0, 1]^M`,
//! rebuilding `Q_w` at every anchor.

use num_complex::Complex64;

use crate::{CMatrix, CVector, RMatrix, RVector};

/// Surrogate quadratic for the amplitude weights at one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct HolographicSurrogate {
    /// Real symmetric M x M surrogate matrix.
    pub q_w: RMatrix,
    pub anchor: RVector,
}

/// Rank-1 PSD quadratic-form matrix `diag(phi x)^H c c^H diag(phi x)`,
/// satisfying `w^T Re(.) w = |c^H diag(w) phi x|^2` for real `w`.
pub fn quadratic_form_matrix(channel: &CVector, phi: &CMatrix, x: &CVector) -> CMatrix {
    let s = form_vector(channel, phi, x);
    &s * s.adjoint()
}

/// The vector `s` with `s_m = conj((phi x)_m) c_m`; the quadratic-form matrix
/// is `s s^H`.
fn form_vector(channel: &CVector, phi: &CMatrix, x: &CVector) -> CVector {
    let px = phi * x;
    CVector::from_fn(channel.len(), |m, _| px[m].conj() * channel[m])
}

fn dot_unconjugated(w: &RVector, s: &CVector) -> Complex64 {
    w.iter()
        .zip(s.iter())
        .map(|(&wi, si)| si * wi)
        .sum()
}

/// Everything about `(channels, phi, v, z, noise)` that the inner loop needs;
/// only the anchor changes between iterations.
#[derive(Debug, Clone)]
pub struct SurrogateContext {
    re_num_bob: RMatrix,
    re_num_eve: RMatrix,
    sig_bob: CVector,
    sig_eve: CVector,
    an_bob: CVector,
    an_eve: CVector,
    noise_bob_w: f64,
    noise_eve_w: f64,
}

impl SurrogateContext {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        h_b: &CVector,
        g_e: &CVector,
        phi: &CMatrix,
        v: &CVector,
        z: &CVector,
        noise_bob_w: f64,
        noise_eve_w: f64,
    ) -> Self {
        let sig_bob = form_vector(h_b, phi, v);
        let sig_eve = form_vector(g_e, phi, v);
        let an_bob = form_vector(h_b, phi, z);
        let an_eve = form_vector(g_e, phi, z);
        let m = h_b.len();
        let re_outer = |s: &CVector| {
            RMatrix::from_fn(m, m, |i, j| (s[i] * s[j].conj()).re)
        };
        Self {
            re_num_bob: re_outer(&sig_bob),
            re_num_eve: re_outer(&sig_eve),
            sig_bob,
            sig_eve,
            an_bob,
            an_eve,
            noise_bob_w,
            noise_eve_w,
        }
    }

    /// Anchored interference-plus-noise denominators
    /// `|h^H diag(w) phi z|^2 + noise` for Bob and Eve.
    pub fn denominators_at(&self, w: &RVector) -> (f64, f64) {
        let den_bob = dot_unconjugated(w, &self.an_bob).norm_sqr() + self.noise_bob_w;
        let den_eve = dot_unconjugated(w, &self.an_eve).norm_sqr() + self.noise_eve_w;
        (den_bob, den_eve)
    }

    /// Rebuilds the surrogate at a new anchor.
    pub fn surrogate_at(&self, anchor: &RVector) -> HolographicSurrogate {
        let (den_bob, den_eve) = self.denominators_at(anchor);
        let num_bob = dot_unconjugated(anchor, &self.sig_bob).norm_sqr();
        let num_eve = dot_unconjugated(anchor, &self.sig_eve).norm_sqr();
        let inv_bob = 1.0 / (den_bob + num_bob);
        let inv_eve = 1.0 / (den_eve + num_eve);
        let m = anchor.len();
        let q_w = RMatrix::from_fn(m, m, |i, j| {
            let val = self.re_num_bob[(i, j)] * inv_bob - self.re_num_eve[(i, j)] * inv_eve;
            // symmetric by construction; average with the transpose entry to
            // pin down roundoff
            let val_t = self.re_num_bob[(j, i)] * inv_bob - self.re_num_eve[(j, i)] * inv_eve;
            0.5 * (val + val_t)
        });
        HolographicSurrogate {
            q_w,
            anchor: anchor.clone(),
        }
    }
}

/// Full surrogate build from raw parts.
#[allow(clippy::too_many_arguments)]
pub fn surrogate_qw(
    h_b: &CVector,
    g_e: &CVector,
    phi: &CMatrix,
    v: &CVector,
    z: &CVector,
    w_anchor: &RVector,
    noise_bob_w: f64,
    noise_eve_w: f64,
) -> HolographicSurrogate {
    SurrogateContext::new(h_b, g_e, phi, v, z, noise_bob_w, noise_eve_w).surrogate_at(w_anchor)
}

/// Ascent direction of `w^T Q_w w`.
pub fn gradient(q_w: &RMatrix, w: &RVector) -> RVector {
    q_w * w * 2.0
}

/// Elementwise clamp onto `[0, 1]^M`.
pub fn project_box(w: &RVector) -> RVector {
    w.map(|x| x.clamp(0.0, 1.0))
}

fn quad_form(q: &RMatrix, w: &RVector) -> f64 {
    w.dot(&(q * w))
}

/// One projected-gradient step on the fixed-anchor surrogate, with the step
/// size halved (up to 20 times) until the surrogate value does not decrease.
/// Falls back to staying put when no admissible step exists.
pub(crate) fn ascent_step(q_w: &RMatrix, w: &RVector, eta: f64) -> RVector {
    let f0 = quad_form(q_w, w);
    let grad = gradient(q_w, w);
    let mut step = eta;
    for _ in 0..=20 {
        let w_next = project_box(&(w + &grad * step));
        if quad_form(q_w, &w_next) >= f0 - 1e-12 {
            return w_next;
        }
        step *= 0.5;
    }
    w.clone()
}

/// Projected gradient ascent on the anchored surrogate, rebuilding the
/// surrogate at every iterate. Stops when the update norm drops below
/// `eps_inner` or after `max_iters` iterations; returns the final weights
/// and the number of iterations used.
pub fn optimize_holographic(
    w_init: &RVector,
    ctx: &SurrogateContext,
    eta: f64,
    eps_inner: f64,
    max_iters: usize,
) -> (RVector, usize) {
    let mut w = project_box(w_init);
    let mut iters = 0;
    for t in 1..=max_iters {
        iters = t;
        let surr = ctx.surrogate_at(&w);
        let w_next = ascent_step(&surr.q_w, &w, eta);
        let delta = (&w_next - &w).norm();
        w = w_next;
        if delta < eps_inner {
            break;
        }
    }
    (w, iters)
}
