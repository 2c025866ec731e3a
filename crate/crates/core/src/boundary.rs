//! Time-periodic wall data as truncated Fourier series in x and t, plus the
//! outflow-condition certificates.
//!
//! Each wall carries tangential (along x) and normal (along the outward
//! normal) components. A harmonic term is
//!
//!   amplitude · X_{m_x}(x) · cos(2π m_t t / τ + phase)
//!
//! with X_m(x) = cos(2π m x / L) for m ≥ 0 and sin(2π|m| x / L) for m < 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One separable harmonic of a wall component.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Harmonic {
    /// Signed x-wavenumber index; negative selects the sine branch.
    pub m_x: i32,
    /// Temporal wavenumber index (frequency 2π m_t / τ).
    pub m_t: u32,
    pub amplitude: f64,
    /// Temporal phase (radians).
    pub phase: f64,
}

/// Tangential and normal data on one wall.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WallData {
    pub tangential: Vec<Harmonic>,
    pub normal: Vec<Harmonic>,
}

/// τ-periodic wall data on both walls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryData {
    pub period_tau: f64,
    pub lower: WallData,
    pub upper: WallData,
}

impl BoundaryData {
    pub fn new(period_tau: f64, lower: WallData, upper: WallData) -> Result<Self> {
        if !(period_tau > 0.0) {
            return Err(Error::NonpositiveCoefficient { name: "period_tau", value: period_tau });
        }
        let data = Self { period_tau, lower, upper };
        for h in data.all_harmonics() {
            if !h.amplitude.is_finite() || !h.phase.is_finite() {
                return Err(Error::InvalidParameter("non-finite harmonic coefficient".into()));
            }
        }
        Ok(data)
    }

    pub fn zero(period_tau: f64) -> Self {
        Self { period_tau, lower: WallData::default(), upper: WallData::default() }
    }

    pub fn all_harmonics(&self) -> impl Iterator<Item = &Harmonic> {
        self.lower
            .tangential
            .iter()
            .chain(self.lower.normal.iter())
            .chain(self.upper.tangential.iter())
            .chain(self.upper.normal.iter())
    }

    /// Truncated-Fourier data is C¹ (in fact analytic) in t by construction.
    pub fn smooth_in_time(&self) -> bool {
        true
    }

    /// Largest temporal wavenumber carried by any component.
    pub fn max_m_t(&self) -> u32 {
        self.all_harmonics().map(|h| h.m_t).max().unwrap_or(0)
    }

    /// Largest |m_x| carried by any component.
    pub fn max_m_x(&self) -> u32 {
        self.all_harmonics().map(|h| h.m_x.unsigned_abs()).max().unwrap_or(0)
    }
}

/// Trigonometric polynomial in (x, t); closed under ∂x, ∂t and the
/// x-antiderivative used to build the stream-function trace.
#[derive(Debug, Clone, Default)]
pub struct TrigSum {
    pub terms: Vec<Harmonic>,
    pub length_x: f64,
    pub tau: f64,
}

impl TrigSum {
    pub fn from_harmonics(terms: &[Harmonic], length_x: f64, tau: f64) -> Self {
        Self { terms: terms.to_vec(), length_x, tau }
    }

    fn theta(&self, m_x: i32) -> f64 {
        2.0 * std::f64::consts::PI * m_x.unsigned_abs() as f64 / self.length_x
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI / self.tau;
        self.terms
            .iter()
            .map(|h| {
                let sx = if h.m_x >= 0 {
                    (self.theta(h.m_x) * x).cos()
                } else {
                    (self.theta(h.m_x) * x).sin()
                };
                h.amplitude * sx * (omega * h.m_t as f64 * t + h.phase).cos()
            })
            .sum()
    }

    pub fn dx(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|h| h.m_x != 0)
            .map(|h| {
                let th = self.theta(h.m_x);
                if h.m_x > 0 {
                    // cos → −θ sin
                    Harmonic { m_x: -h.m_x, amplitude: -h.amplitude * th, ..*h }
                } else {
                    // sin → θ cos
                    Harmonic { m_x: -h.m_x, amplitude: h.amplitude * th, ..*h }
                }
            })
            .collect();
        Self { terms, ..*self }
    }

    pub fn dt(&self) -> Self {
        let omega = 2.0 * std::f64::consts::PI / self.tau;
        let terms = self
            .terms
            .iter()
            .filter(|h| h.m_t != 0)
            .map(|h| Harmonic {
                amplitude: h.amplitude * omega * h.m_t as f64,
                phase: h.phase + std::f64::consts::FRAC_PI_2,
                ..*h
            })
            .collect();
        Self { terms, ..*self }
    }

    /// Antiderivative in x vanishing at x = 0. Mean (m_x = 0) terms are not
    /// representable and must have been removed beforehand.
    pub fn antiderivative_x(&self) -> Result<Self> {
        let mut terms = Vec::new();
        for h in &self.terms {
            if h.m_x == 0 {
                return Err(Error::InvalidParameter(
                    "x-antiderivative of a mean term is not periodic".into(),
                ));
            }
            let th = self.theta(h.m_x);
            if h.m_x > 0 {
                // ∫cos = sin/θ
                terms.push(Harmonic { m_x: -h.m_x, amplitude: h.amplitude / th, ..*h });
            } else {
                // ∫sin = (1 − cos)/θ
                terms.push(Harmonic { m_x: 0, amplitude: h.amplitude / th, ..*h });
                terms.push(Harmonic { m_x: -h.m_x, amplitude: -h.amplitude / th, ..*h });
            }
        }
        Ok(Self { terms, ..*self })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|h| Harmonic { amplitude: h.amplitude * factor, ..*h })
            .collect();
        Self { terms, ..*self }
    }

    /// Cheap uniform bound Σ|amplitude|.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|h| h.amplitude.abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|h| h.amplitude == 0.0)
    }

    pub fn x_wavenumbers(&self) -> Vec<u32> {
        let mut ms: Vec<u32> =
            self.terms.iter().map(|h| h.m_x.unsigned_abs()).collect();
        ms.sort_unstable();
        ms.dedup();
        ms
    }
}

/// Per-wall flux samples and the two outflow verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutflowCertificate {
    /// Sample times spanning one period.
    pub times: Vec<f64>,
    /// ∫ β·n dσ on the lower wall at each sample time.
    pub flux_lower: Vec<f64>,
    /// Same for the upper wall.
    pub flux_upper: Vec<f64>,
    /// Total flux through the whole boundary stays below tol at every time.
    pub goc_ok: bool,
    /// Every connected wall's flux stays below tol at every time.
    pub soc_ok: bool,
    pub tol: f64,
}

/// Evaluate the outflow conditions on `n_t` samples over one period.
///
/// Only x-mean (m_x = 0) normal harmonics carry flux; the certificate
/// reports failure rather than erroring.
pub fn check_outflow(beta: &BoundaryData, tol: f64) -> OutflowCertificate {
    check_outflow_sampled(beta, tol, 64, 1.0)
}

pub fn check_outflow_sampled(
    beta: &BoundaryData,
    tol: f64,
    n_t: usize,
    length_x: f64,
) -> OutflowCertificate {
    let tau = beta.period_tau;
    let omega = 2.0 * std::f64::consts::PI / tau;
    let times: Vec<f64> = (0..n_t).map(|i| tau * i as f64 / n_t as f64).collect();
    let flux = |wall: &WallData, t: f64| -> f64 {
        wall.normal
            .iter()
            .filter(|h| h.m_x == 0)
            .map(|h| h.amplitude * length_x * (omega * h.m_t as f64 * t + h.phase).cos())
            .sum()
    };
    let flux_lower: Vec<f64> = times.iter().map(|&t| flux(&beta.lower, t)).collect();
    let flux_upper: Vec<f64> = times.iter().map(|&t| flux(&beta.upper, t)).collect();
    let soc_ok = flux_lower.iter().chain(flux_upper.iter()).all(|f| f.abs() <= tol);
    let goc_ok =
        flux_lower.iter().zip(&flux_upper).all(|(a, b)| (a + b).abs() <= tol);
    OutflowCertificate { times, flux_lower, flux_upper, goc_ok, soc_ok, tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h(m_x: i32, m_t: u32, amplitude: f64, phase: f64) -> Harmonic {
        Harmonic { m_x, m_t, amplitude, phase }
    }

    #[test]
    fn tangential_data_always_passes_soc() {
        let beta = BoundaryData::new(
            1.0,
            WallData { tangential: vec![h(0, 1, 123.0, 0.3), h(2, 0, -4.0, 0.0)], normal: vec![] },
            WallData { tangential: vec![h(-1, 2, 9.0, 1.0)], normal: vec![] },
        )
        .unwrap();
        let cert = check_outflow(&beta, 1e-12);
        assert!(cert.soc_ok);
        assert!(cert.goc_ok);
        assert!(cert.flux_lower.iter().all(|f| *f == 0.0));
    }

    #[test]
    fn opposite_wall_fluxes_pass_goc_but_not_soc() {
        let q = 0.7;
        let beta = BoundaryData::new(
            1.0,
            WallData { tangential: vec![], normal: vec![h(0, 0, q, 0.0)] },
            WallData { tangential: vec![], normal: vec![h(0, 0, -q, 0.0)] },
        )
        .unwrap();
        let cert = check_outflow(&beta, 1e-12);
        assert!(cert.goc_ok);
        assert!(!cert.soc_ok);
    }

    #[test]
    fn same_sign_inflow_fails_goc() {
        // inflow profile with nonzero mean on both walls; flux of the
        // m_x = 0 part is L·amp, verified against direct quadrature
        let amp = 0.25;
        let beta = BoundaryData::new(
            1.0,
            WallData { tangential: vec![], normal: vec![h(0, 0, amp, 0.0), h(1, 0, 0.5, 0.0)] },
            WallData { tangential: vec![], normal: vec![h(0, 0, amp, 0.0)] },
        )
        .unwrap();
        let length_x = 2.0;
        let cert = check_outflow_sampled(&beta, 1e-12, 32, length_x);
        assert!(!cert.goc_ok);
        assert!(!cert.soc_ok);
        // quadrature oracle for the flux of the full profile on the lower wall
        let n = 4096;
        let mut acc = 0.0;
        for i in 0..n {
            let x = length_x * i as f64 / n as f64;
            let profile = amp + 0.5 * (2.0 * std::f64::consts::PI * x / length_x).cos();
            acc += profile * length_x / n as f64;
        }
        assert_abs_diff_eq!(cert.flux_lower[0], acc, epsilon = 1e-10);
    }

    #[test]
    fn trig_sum_calculus_matches_finite_differences() {
        let s = TrigSum::from_harmonics(
            &[h(1, 1, 0.8, 0.2), h(-2, 2, -0.3, 1.1), h(0, 1, 0.5, 0.0)],
            2.0,
            1.5,
        );
        let (x, t) = (0.37, 0.81);
        let e = 1e-6;
        let fd_x = (s.eval(x + e, t) - s.eval(x - e, t)) / (2.0 * e);
        let fd_t = (s.eval(x, t + e) - s.eval(x, t - e)) / (2.0 * e);
        assert_abs_diff_eq!(s.dx().eval(x, t), fd_x, epsilon = 1e-7);
        assert_abs_diff_eq!(s.dt().eval(x, t), fd_t, epsilon = 1e-7);
    }

    #[test]
    fn antiderivative_inverts_dx_and_vanishes_at_origin() {
        let s = TrigSum::from_harmonics(&[h(1, 0, 0.8, 0.0), h(-3, 1, 0.4, 0.6)], 2.0, 1.0);
        let a = s.antiderivative_x().unwrap();
        assert_abs_diff_eq!(a.eval(0.0, 0.77), 0.0, epsilon = 1e-14);
        let (x, t) = (0.41, 0.77);
        assert_abs_diff_eq!(a.dx().eval(x, t), s.eval(x, t), epsilon = 1e-12);
        let mean = TrigSum::from_harmonics(&[h(0, 0, 1.0, 0.0)], 2.0, 1.0);
        assert!(mean.antiderivative_x().is_err());
    }
}
