//! τ-periodic body forcing as a truncated Fourier series in x and t with a
//! polynomial or half-wave profile in y.

use serde::{Deserialize, Serialize};

use crate::basis::StokesBasis;
use crate::domain::{Grid, GridField};
use crate::error::{Error, Result};

/// Wall-normal profile of one forcing harmonic.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YProfile {
    /// Constant 1.
    Uniform,
    /// sin(j π y / wall_gap).
    SinHalfWaves { j: u32 },
    /// Polynomial in y / wall_gap with the given coefficients (ascending).
    Poly { coeffs: Vec<f64> },
}

impl YProfile {
    fn eval(&self, y: f64, wall_gap: f64) -> f64 {
        match self {
            YProfile::Uniform => 1.0,
            YProfile::SinHalfWaves { j } => {
                (*j as f64 * std::f64::consts::PI * y / wall_gap).sin()
            }
            YProfile::Poly { coeffs } => {
                let s = y / wall_gap;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
            }
        }
    }
}

/// Which velocity component a harmonic forces.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    X,
    Y,
}

/// One separable forcing harmonic:
/// amplitude · X_{m_x}(x) · profile(y) · cos(2π m_t t/τ + phase) on `component`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ForcingHarmonic {
    pub component: Component,
    /// Signed x-wavenumber index; negative selects the sine branch.
    pub m_x: i32,
    pub m_t: u32,
    pub amplitude: f64,
    pub phase: f64,
    pub profile: YProfile,
}

/// τ-periodic forcing with cached period norms.
#[derive(Debug, Clone)]
pub struct ForcingSpec {
    pub tau: f64,
    pub harmonics: Vec<ForcingHarmonic>,
    /// sup_t |f|_{L^{n/2}} (n = 2 ⇒ L¹), sampled on the collocation times.
    pub m_sup: f64,
    /// (∫₀^τ |f|² dt)^{1/2}
    pub m0: f64,
    /// (∫₀^τ |∂t f|² dt)^{1/2}
    pub m1: f64,
    /// Collocation samples used for the cached norms.
    pub n_t: usize,
}

impl ForcingSpec {
    pub fn zero(tau: f64) -> Self {
        Self { tau, harmonics: vec![], m_sup: 0.0, m0: 0.0, m1: 0.0, n_t: 0 }
    }

    pub fn new(tau: f64, harmonics: Vec<ForcingHarmonic>, grid: &Grid, n_t: usize) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::NonpositiveCoefficient { name: "tau", value: tau });
        }
        for h in &harmonics {
            if !h.amplitude.is_finite() || !h.phase.is_finite() {
                return Err(Error::InvalidParameter("non-finite forcing coefficient".into()));
            }
        }
        let mut spec = Self { tau, harmonics, m_sup: 0.0, m0: 0.0, m1: 0.0, n_t };
        let mut sup = 0.0f64;
        let mut sq = 0.0;
        let mut sq_t = 0.0;
        let dt = tau / n_t as f64;
        for i in 0..n_t {
            let t = i as f64 * dt;
            let f = spec.sample(grid, t);
            let ft = spec.sample_dt(grid, t);
            sup = sup.max(f.norm_lp(grid, 1.0));
            let l2 = f.norm_l2(grid);
            let l2t = ft.norm_l2(grid);
            sq += l2 * l2 * dt;
            sq_t += l2t * l2t * dt;
        }
        spec.m_sup = sup;
        spec.m0 = sq.sqrt();
        spec.m1 = sq_t.sqrt();
        Ok(spec)
    }

    pub fn max_m_t(&self) -> u32 {
        self.harmonics.iter().map(|h| h.m_t).max().unwrap_or(0)
    }

    pub fn eval(&self, x: f64, y: f64, t: f64, length_x: f64, wall_gap: f64) -> (f64, f64) {
        self.eval_impl(x, y, t, length_x, wall_gap, false)
    }

    pub fn eval_dt(&self, x: f64, y: f64, t: f64, length_x: f64, wall_gap: f64) -> (f64, f64) {
        self.eval_impl(x, y, t, length_x, wall_gap, true)
    }

    fn eval_impl(
        &self,
        x: f64,
        y: f64,
        t: f64,
        length_x: f64,
        wall_gap: f64,
        time_deriv: bool,
    ) -> (f64, f64) {
        let omega = 2.0 * std::f64::consts::PI / self.tau;
        let mut fx = 0.0;
        let mut fy = 0.0;
        for h in &self.harmonics {
            let th = 2.0 * std::f64::consts::PI * h.m_x.unsigned_abs() as f64 / length_x;
            let sx = if h.m_x >= 0 { (th * x).cos() } else { (th * x).sin() };
            let w = omega * h.m_t as f64;
            let st = if time_deriv {
                -w * (w * t + h.phase).sin()
            } else {
                (w * t + h.phase).cos()
            };
            let v = h.amplitude * sx * h.profile.eval(y, wall_gap) * st;
            match h.component {
                Component::X => fx += v,
                Component::Y => fy += v,
            }
        }
        (fx, fy)
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> GridField {
        GridField::from_fn(grid, |x, y| self.eval(x, y, t, grid.length_x, grid.wall_gap))
    }

    pub fn sample_dt(&self, grid: &Grid, t: f64) -> GridField {
        GridField::from_fn(grid, |x, y| self.eval_dt(x, y, t, grid.length_x, grid.wall_gap))
    }

    /// Coefficients (f(t), ω_j) for all retained modes.
    pub fn project(&self, basis: &StokesBasis, t: f64) -> Vec<f64> {
        let f = self.sample(&basis.grid, t);
        basis.project(&f).expect("forcing sampled on the basis grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::domain::DomainSpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_forcing_has_zero_norms() {
        let f = ForcingSpec::zero(1.0);
        assert_eq!(f.m_sup, 0.0);
        assert_eq!(f.m0, 0.0);
        assert_eq!(f.m1, 0.0);
    }

    #[test]
    fn cached_norms_match_closed_forms() {
        let dom = DomainSpec::new(2.0 * std::f64::consts::PI, 1.0, 8, 12).unwrap();
        let grid = dom.grid();
        let tau = 2.0;
        let amp = 0.7;
        // f = amp · cos(x) · cos(2πt/τ) x̂ on a uniform profile
        let f = ForcingSpec::new(
            tau,
            vec![ForcingHarmonic {
                component: Component::X,
                m_x: 1,
                m_t: 1,
                amplitude: amp,
                phase: 0.0,
                profile: YProfile::Uniform,
            }],
            &grid,
            64,
        )
        .unwrap();
        // |f(t)|² = amp²·cos²(ωt)·(L/2)·H; ∫₀^τ cos² = τ/2
        let l = dom.length_x;
        let h = dom.wall_gap;
        let m0_exact = (amp * amp * (l / 2.0) * h * tau / 2.0).sqrt();
        assert_abs_diff_eq!(f.m0, m0_exact, epsilon = 1e-10);
        let omega = 2.0 * std::f64::consts::PI / tau;
        assert_abs_diff_eq!(f.m1, omega * m0_exact, epsilon = 1e-9);

        // |f| of a sign-changing field has kinks, so the L¹ sup is checked on
        // a one-signed profile where quadrature is spectrally accurate:
        // f = amp·sin(πy/H)·cos(ωt) x̂ ⇒ sup_t |f|_{L¹} = amp·L·2H/π.
        let g = ForcingSpec::new(
            tau,
            vec![ForcingHarmonic {
                component: Component::X,
                m_x: 0,
                m_t: 1,
                amplitude: amp,
                phase: 0.0,
                profile: YProfile::SinHalfWaves { j: 1 },
            }],
            &grid,
            64,
        )
        .unwrap();
        let m_exact = amp * l * 2.0 * h / std::f64::consts::PI;
        assert_abs_diff_eq!(g.m_sup, m_exact, epsilon = 1e-9);
    }

    #[test]
    fn projection_decays_for_smooth_forcing() {
        let dom = DomainSpec::new(2.0 * std::f64::consts::PI, 1.0, 8, 12).unwrap();
        let basis = build_basis(&dom, 16).unwrap();
        let f = ForcingSpec::new(
            1.0,
            vec![ForcingHarmonic {
                component: Component::X,
                m_x: 0,
                m_t: 0,
                amplitude: 1.0,
                phase: 0.0,
                profile: YProfile::SinHalfWaves { j: 1 },
            }],
            &basis.grid,
            16,
        )
        .unwrap();
        let p = f.project(&basis, 0.0);
        // dominant coefficient should be the first mean-flow mode
        let (j_max, _) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        assert_eq!(basis.modes[j_max].phase, crate::basis::Phase::Mean);
    }
}
