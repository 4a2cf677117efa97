//! One majorize-maximize update of the digital beamformer.
//!
//! Each receiver's rate `log2(1 + v^H A v / b)` is bounded above by a
//! quadratic surrogate tangent at the current iterate. The surrogate
//! difference `Q_v = M_b - M_e` turns the step into a generalized Rayleigh
//! quotient maximization over the pencil `(Q_v, W^H W)`; the top generalized
//! eigenvector is then scaled back into the power budget.

use nalgebra::{Cholesky, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

/// One quadratic majorizer: `rate(v) <= constant + v^H matrix v / ln 2`,
/// tangent (up to a known constant) at `anchor`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateQuadratic {
    /// Hermitian PSD rank-<=1 coefficient matrix.
    pub matrix: CMatrix,
    /// Iterate the majorizer was built at.
    pub anchor: CVector,
    /// Additive rate term at the anchor, bits.
    pub constant: f64,
    /// Interference-plus-noise denominator at the anchor, watts.
    pub b: f64,
}

/// Tangent-line coefficients of `ln(1 + x)` at `x_t`: the bound
/// `ln(1 + x) <= offset + slope * x` holds for all `x >= 0`, with equality
/// exactly at `x = x_t`.
pub fn majorizer_coefficient(x_t: f64) -> (f64, f64) {
    debug_assert!(x_t >= 0.0);
    let slope = 1.0 / (1.0 + x_t);
    let offset = (1.0 + x_t).ln() - x_t / (1.0 + x_t);
    (slope, offset)
}

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Builds the rate majorizer for one receiver at anchor `v_t`:
/// `b = |h^H W z|^2 + noise`, `matrix = A / (b + v_t^H A v_t)` with
/// `A = W^H h h^H W`, and `constant` the rate at the anchor.
pub fn surrogate_matrix_v(
    channel: &CVector,
    w_mat: &CMatrix,
    v_anchor: &CVector,
    z: &CVector,
    noise_w: f64,
) -> SurrogateQuadratic {
    let effective = w_mat.adjoint() * channel; // W^H h
    let b = effective.dotc(z).norm_sqr() + noise_w;
    let a = &effective * effective.adjoint(); // rank-1 PSD
    let num_anchor = effective.dotc(v_anchor).norm_sqr(); // v_t^H A v_t
    let x_t = num_anchor / b;
    let matrix = a / Complex64::new(b + num_anchor, 0.0);
    SurrogateQuadratic {
        matrix: hermitize(&matrix),
        anchor: v_anchor.clone(),
        constant: (1.0 + x_t).log2(),
        b,
    }
}

/// Surrogate difference matrix `Q_v = M_b - M_e`, symmetrized. May be
/// indefinite.
pub fn build_qv(bob: &SurrogateQuadratic, eve: &SurrogateQuadratic) -> Result<CMatrix> {
    if bob.matrix.shape() != eve.matrix.shape() {
        return Err(Error::Config(format!(
            "surrogate dimension mismatch: {:?} vs {:?}",
            bob.matrix.shape(),
            eve.matrix.shape()
        )));
    }
    Ok(hermitize(&(&bob.matrix - &eve.matrix)))
}

fn dump_pencil(q: &CMatrix, b: &CMatrix) -> String {
    format!("Q = {:?}\nB = {:?}", q, b)
}

/// Solves the Hermitian pencil `Q v = lambda Reff v` for the top generalized
/// eigenpair. The returned vector has unit generalized norm with its
/// largest-magnitude entry made real positive. When `Reff` is not
/// numerically positive definite, the pencil is regularized with the ridge
/// `delta = 1e-10 tr(Reff) / R` before factoring.
pub fn solve_generalized_eig(q: &CMatrix, reff: &CMatrix) -> Result<(CVector, f64)> {
    let r = q.nrows();
    if q.ncols() != r || reff.nrows() != r || reff.ncols() != r {
        return Err(Error::Config(format!(
            "pencil must be square and matched: Q is {:?}, Reff is {:?}",
            q.shape(),
            reff.shape()
        )));
    }
    let sym_reff = hermitize(reff);
    let (b, chol) = match Cholesky::new(sym_reff.clone()) {
        Some(chol) => (sym_reff, chol),
        None => {
            let delta = 1e-10 * reff.trace().re / r as f64;
            let mut ridged = sym_reff;
            for i in 0..r {
                ridged[(i, i)] += Complex64::new(delta, 0.0);
            }
            let chol = Cholesky::new(ridged.clone()).ok_or_else(|| Error::Numerical {
                message: "Cholesky factorization of the power-weight matrix failed".into(),
                dump: dump_pencil(q, &ridged),
            })?;
            (ridged, chol)
        }
    };
    let l = chol.l();
    // C = L^-1 Q L^-H, Hermitian; standard eigenproblem of C solves the pencil.
    let y = l
        .solve_lower_triangular(q)
        .ok_or_else(|| Error::Numerical {
            message: "forward substitution failed".into(),
            dump: dump_pencil(q, &b),
        })?;
    let c = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or_else(|| Error::Numerical {
            message: "forward substitution failed".into(),
            dump: dump_pencil(q, &b),
        })?
        .adjoint();
    let eig = SymmetricEigen::new(hermitize(&c));
    let (top, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let u = eig.eigenvectors.column(top).into_owned();
    // back-substitute to the original coordinates
    let mut v = l
        .adjoint()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::Numerical {
            message: "back substitution failed".into(),
            dump: dump_pencil(q, &b),
        })?;
    normalize_generalized(&mut v, &b);
    let mut lambda = v.dotc(&(q * &v)).re;

    // the Cholesky reduction loses accuracy on poorly conditioned pencils;
    // inverse-iteration steps on (Q - lambda B) restore the residual. When a
    // pure Rayleigh-quotient step stops improving (eigenvalue clusters, or a
    // shift that lands too exactly on the eigenvalue), one retry with a
    // detuned shift usually unsticks it.
    let scale = q.norm();
    let residual_of =
        |v: &CVector, lambda: f64| (q * v - &b * v * Complex64::new(lambda, 0.0)).norm();
    let mut residual = residual_of(&v, lambda);
    let mut detune = false;
    let mut attempts = 0;
    while residual > 1e-10 * scale && attempts < 8 {
        attempts += 1;
        let mu = if detune {
            1e-9 * (1.0 + lambda.abs())
        } else {
            0.0
        };
        let shifted = q - &b * Complex64::new(lambda + mu, 0.0);
        let improved = shifted
            .full_piv_lu()
            .solve(&(&b * &v))
            .and_then(|mut x| {
                let gnorm_sq = x.dotc(&(&b * &x)).re;
                if !(gnorm_sq.is_finite() && gnorm_sq > 0.0) {
                    return None;
                }
                x /= Complex64::new(gnorm_sq.sqrt(), 0.0);
                let lambda_x = x.dotc(&(q * &x)).re;
                let residual_x = residual_of(&x, lambda_x);
                (residual_x < residual).then_some((x, lambda_x, residual_x))
            });
        match improved {
            Some((x, lambda_x, residual_x)) => {
                v = x;
                lambda = lambda_x;
                residual = residual_x;
                detune = false;
            }
            None if !detune => detune = true,
            None => break,
        }
    }

    // deterministic phase: largest-magnitude entry real positive
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0usize, -1.0), |(bi, bv), (i, c)| {
            if c.norm() > bv {
                (i, c.norm())
            } else {
                (bi, bv)
            }
        });
    let mag = v[imax].norm();
    if mag > 0.0 {
        let rot = v[imax].conj() / mag;
        v *= rot;
    }

    if residual > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical {
            message: format!(
                "generalized eigenpair residual {residual:e} exceeds 1e-8 * {scale:e}"
            ),
            dump: dump_pencil(q, &b),
        });
    }
    Ok((v, lambda))
}

fn normalize_generalized(v: &mut CVector, b: &CMatrix) {
    let gnorm = v.dotc(&(b * &*v)).re.sqrt();
    if gnorm > 0.0 {
        *v /= Complex64::new(gnorm, 0.0);
    }
}

/// Scales `v` so the radiated signal power fits the budget:
/// `beta = min(1, sqrt(p_av / ||W v||^2))`. A dark surface (`||W v|| = 0`)
/// leaves `v` unchanged.
pub fn power_scale(v: &CVector, w_mat: &CMatrix, p_av: f64) -> CVector {
    let p_cur = (w_mat * v).norm_squared();
    if p_cur == 0.0 {
        return v.clone();
    }
    let beta = (p_av.max(0.0) / p_cur).sqrt().min(1.0);
    v * Complex64::new(beta, 0.0)
}

/// One full digital-beamformer update: build both surrogates at the anchor,
/// solve the pencil `(Q_v, W^H W)`, and scale into the available budget.
#[allow(clippy::too_many_arguments)]
pub fn digital_step(
    v_anchor: &CVector,
    z: &CVector,
    h_b: &CVector,
    g_e: &CVector,
    w_mat: &CMatrix,
    noise_bob_w: f64,
    noise_eve_w: f64,
    p_av: f64,
) -> Result<CVector> {
    let surr_bob = surrogate_matrix_v(h_b, w_mat, v_anchor, z, noise_bob_w);
    let surr_eve = surrogate_matrix_v(g_e, w_mat, v_anchor, z, noise_eve_w);
    let q_v = build_qv(&surr_bob, &surr_eve)?;
    let reff = hermitize(&(w_mat.adjoint() * w_mat));
    let (v, _lambda) = solve_generalized_eig(&q_v, &reff)?;
    Ok(power_scale(&v, w_mat, p_av))
}
