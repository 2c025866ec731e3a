//! Spectral fields (coefficient vectors in the Stokes eigenbasis), the
//! L²-orthogonal projection onto the retained span, fractional operator
//! powers, and the norms used by the a priori estimates.

use crate::basis::StokesBasis;
use crate::domain::GridField;
use crate::error::{Error, Result};

/// Coordinates of a field in the retained eigenbasis.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub coeffs: Vec<f64>,
    basis_id: u64,
}

impl SpectralField {
    pub fn new(basis: &StokesBasis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.k() {
            return Err(Error::InvalidParameter(format!(
                "coefficient length {} does not match retained mode count {}",
                coeffs.len(),
                basis.k()
            )));
        }
        Ok(Self { coeffs, basis_id: basis.id() })
    }

    pub fn zeros(basis: &StokesBasis) -> Self {
        Self { coeffs: vec![0.0; basis.k()], basis_id: basis.id() }
    }

    /// Unit vector along mode j.
    pub fn unit(basis: &StokesBasis, j: usize) -> Self {
        let mut coeffs = vec![0.0; basis.k()];
        coeffs[j] = 1.0;
        Self { coeffs, basis_id: basis.id() }
    }

    pub fn check_basis(&self, basis: &StokesBasis) -> Result<()> {
        if self.basis_id != basis.id() {
            return Err(Error::GridMismatch { expected: basis.id(), got: self.basis_id });
        }
        Ok(())
    }

    pub fn l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Project a physical-space field onto the retained solenoidal span.
///
/// Idempotent: projecting the reconstruction reproduces the coefficients.
pub fn leray_project(field: &GridField, basis: &StokesBasis) -> Result<SpectralField> {
    let coeffs = basis.project(field)?;
    Ok(SpectralField { coeffs, basis_id: basis.id() })
}

/// Apply A^γ spectrally: c_j ↦ λ_j^γ c_j.
pub fn frac_power_apply(gamma: f64, u: &SpectralField, basis: &StokesBasis) -> Result<SpectralField> {
    u.check_basis(basis)?;
    if !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be finite, got {gamma}")));
    }
    let coeffs =
        u.coeffs.iter().enumerate().map(|(j, c)| basis.lambda(j).powf(gamma) * c).collect();
    Ok(SpectralField { coeffs, basis_id: basis.id() })
}

/// |A^γ u| without materializing the powered field.
pub fn frac_norm(gamma: f64, u: &SpectralField, basis: &StokesBasis) -> Result<f64> {
    u.check_basis(basis)?;
    Ok(u.coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let s = basis.lambda(j).powf(gamma) * c;
            s * s
        })
        .sum::<f64>()
        .sqrt())
}

/// All norms of one spectral field used by the estimate checks.
#[derive(Debug, Clone)]
pub struct NormReport {
    pub l2: f64,
    /// |∇u| = |A^{1/2} u|
    pub grad: f64,
    /// |A u|
    pub a: f64,
    /// |A^γ u| at the configured γ
    pub a_gamma: f64,
    pub gamma: f64,
    /// grid-quadrature |u|_{L⁴}
    pub l4: f64,
    /// grid-quadrature |u|_{L^{n/2}} (n = 2 ⇒ L¹)
    pub l_half_n: f64,
}

/// Compute the norm report; physical-space norms go through quadrature on
/// the basis grid.
pub fn norms(u: &SpectralField, basis: &StokesBasis, gamma: f64) -> Result<NormReport> {
    u.check_basis(basis)?;
    let l2 = u.l2();
    let grad = frac_norm(0.5, u, basis)?;
    let a = frac_norm(1.0, u, basis)?;
    let a_gamma = frac_norm(gamma, u, basis)?;
    let phys = basis.reconstruct(&u.coeffs);
    let l4 = phys.norm_lp(&basis.grid, 4.0);
    let l_half_n = phys.norm_lp(&basis.grid, 1.0);
    Ok(NormReport { l2, grad, a, a_gamma, gamma, l4, l_half_n })
}
