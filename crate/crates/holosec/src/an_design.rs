//! Artificial-noise construction: project onto the null space of Bob's
//! effective channel, align with Eve inside that subspace, load the residual
//! power.
//!
//! Eve's projected interference matrix `N^H (W^H g g^H W) N` is rank one, so
//! its principal eigenvector is the projected Eve channel itself, normalized.

use num_complex::Complex64;

use crate::{CMatrix, CVector};

/// Orthonormal basis of the subspace invisible to Bob, together with the
/// effective channel it annihilates.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceBasis {
    /// R x (R-1) with orthonormal columns; R x R when the effective channel
    /// is zero; R x 0 when R = 1 and the channel is nonzero.
    pub basis: CMatrix,
    pub effective_channel: CVector,
}

/// Bob's effective channel through the surface, `W^H h_b`.
pub fn effective_bob_channel(w_mat: &CMatrix, h_b: &CVector) -> CVector {
    w_mat.adjoint() * h_b
}

/// Orthonormal basis of the orthogonal complement of the effective channel.
///
/// Built from the Householder reflector that maps the channel onto the first
/// coordinate axis: the remaining columns of the (unitary, Hermitian)
/// reflector span the complement exactly.
pub fn null_space(effective_channel: &CVector) -> NullSpaceBasis {
    let r = effective_channel.len();
    let norm = effective_channel.norm();
    if norm == 0.0 {
        return NullSpaceBasis {
            basis: CMatrix::identity(r, r),
            effective_channel: effective_channel.clone(),
        };
    }
    if r == 1 {
        return NullSpaceBasis {
            basis: CMatrix::zeros(1, 0),
            effective_channel: effective_channel.clone(),
        };
    }
    let lead = effective_channel[0];
    let alpha = if lead.norm() > 0.0 {
        lead / lead.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut u = effective_channel.clone();
    u[0] += alpha * norm;
    let u_norm_sq = u.norm_squared();
    // columns 1..R of P = I - 2 u u^H / ||u||^2
    let basis = CMatrix::from_fn(r, r - 1, |i, j| {
        let col = j + 1;
        let reflect = u[i] * u[col].conj() * (-2.0 / u_norm_sq);
        if i == col {
            reflect + 1.0
        } else {
            reflect
        }
    });
    NullSpaceBasis {
        basis,
        effective_channel: effective_channel.clone(),
    }
}

/// Noise vector of power `p_av` inside the Bob-invisible subspace, aligned
/// for maximum interference at Eve. Returns zero when the subspace is empty
/// or the budget is zero.
pub fn an_vector(nb: &NullSpaceBasis, w_mat: &CMatrix, g_e: &CVector, p_av: f64) -> CVector {
    let r = w_mat.ncols();
    if nb.basis.ncols() == 0 || p_av <= 0.0 {
        return CVector::zeros(r);
    }
    // projected Eve channel; N^H G_e N = a a^H, so a / ||a|| is its principal
    // eigenvector whenever a != 0
    let a = nb.basis.adjoint() * (w_mat.adjoint() * g_e);
    let a_norm = a.norm();
    let direction = if a_norm > 0.0 {
        &nb.basis * (a / Complex64::new(a_norm, 0.0))
    } else {
        nb.basis.column(0).into_owned()
    };
    direction * Complex64::new(p_av.sqrt(), 0.0)
}
