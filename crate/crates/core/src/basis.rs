//! Discrete Stokes eigenbasis on the channel.
//!
//! Velocity fields are generated from a stream function ψ with
//! u = (∂y ψ, −∂x ψ), so divergence-freeness is structural and the pressure
//! never appears. Per x-wavenumber θ = 2πm/L the eigenproblem
//!
//!   ∫ (φ'' − θ²φ)(χ'' − θ²χ) dy = λ ∫ (φ'χ' + θ²φχ) dy
//!
//! is solved over a clamped polynomial basis (φ = φ' = 0 at the walls);
//! the mean-flow block m = 0 reduces to −v'' = λ v with v = 0 at the walls.
//! Blocks are independent, and eigenvalues across all blocks are merged and
//! sorted ascending.

use nalgebra::{DMatrix, DVector};

use crate::domain::{DomainSpec, Grid, GridField, Tolerances};
use crate::error::{Error, Result};
use crate::legendre::{clamped_basis, dirichlet_basis, gauss_legendre};

/// Which trigonometric factor a mode carries in x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Phase {
    /// Mean-flow mode, no x-dependence, u = (v(y), 0).
    Mean,
    Cos,
    Sin,
}

/// One eigenpair of the discrete Stokes operator.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BasisMode {
    pub lambda: f64,
    /// x-wavenumber index (θ = 2π m / length_x).
    pub m: usize,
    pub phase: Phase,
    /// Coefficients of the wall-normal profile in the block's polynomial basis.
    pub profile: Vec<f64>,
}

/// Per-mode samples of the velocity field and its gradient on the grid.
#[derive(Debug, Clone)]
pub struct ModeSamples {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub d1x: Vec<f64>,
    pub d1y: Vec<f64>,
    pub d2x: Vec<f64>,
    pub d2y: Vec<f64>,
}

/// The retained Stokes eigenbasis together with its quadrature grid.
#[derive(Debug, Clone)]
pub struct StokesBasis {
    pub domain: DomainSpec,
    pub grid: Grid,
    pub modes: Vec<BasisMode>,
    pub lambda_min: f64,
    samples: Vec<ModeSamples>,
    id: u64,
}

/// The k lowest eigenpairs of the discrete Stokes operator.
pub fn build_basis(domain: &DomainSpec, k: usize) -> Result<StokesBasis> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if k > domain.capacity() {
        return Err(Error::DiscretizationTooSmall { requested: k, capacity: domain.capacity() });
    }

    let mut modes: Vec<BasisMode> = Vec::new();
    for m in 0..=domain.m_max() {
        let (lambdas, profiles) = solve_block(domain, m)?;
        for (q, (&lam, prof)) in lambdas.iter().zip(profiles.iter()).enumerate() {
            if !(lam.is_finite() && lam > 0.0) {
                return Err(Error::EigSolveFailure {
                    block: m,
                    reason: format!("eigenvalue {q} is {lam}"),
                });
            }
            if m == 0 {
                modes.push(BasisMode { lambda: lam, m, phase: Phase::Mean, profile: prof.clone() });
            } else {
                modes.push(BasisMode { lambda: lam, m, phase: Phase::Cos, profile: prof.clone() });
                modes.push(BasisMode { lambda: lam, m, phase: Phase::Sin, profile: prof.clone() });
            }
        }
    }
    // Ascending eigenvalues; deterministic tie-break (block, profile index encoded
    // by position is lost after sort, so order by (lambda, m, phase)).
    modes.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap()
            .then(a.m.cmp(&b.m))
            .then(phase_rank(a.phase).cmp(&phase_rank(b.phase)))
    });
    modes.truncate(k);

    let grid = domain.grid();
    let samples = modes.iter().map(|md| sample_mode(domain, &grid, md)).collect::<Vec<_>>();
    let lambda_min = modes.first().map(|m| m.lambda).unwrap();
    let id = basis_id(domain, &modes);
    Ok(StokesBasis { domain: domain.clone(), grid, modes, lambda_min, samples, id })
}

fn phase_rank(p: Phase) -> u8 {
    match p {
        Phase::Mean => 0,
        Phase::Cos => 1,
        Phase::Sin => 2,
    }
}

fn basis_id(domain: &DomainSpec, modes: &[BasisMode]) -> u64 {
    let mut h = domain.content_hash();
    h = h.wrapping_mul(1_000_003).wrapping_add(modes.len() as u64);
    for m in modes {
        h = h.wrapping_mul(31).wrapping_add(m.lambda.to_bits());
    }
    h
}

/// Symmetric-definite generalized eigensolve K q = λ M q by Cholesky reduction.
fn generalized_symmetric_eig(
    k_mat: &DMatrix<f64>,
    m_mat: &DMatrix<f64>,
    block: usize,
) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let n = k_mat.nrows();
    let chol = nalgebra::Cholesky::new(m_mat.clone()).ok_or(Error::EigSolveFailure {
        block,
        reason: "mass matrix is not positive definite".into(),
    })?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let x = l
        .solve_lower_triangular(k_mat)
        .ok_or(Error::EigSolveFailure { block, reason: "singular Cholesky factor".into() })?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::EigSolveFailure { block, reason: "singular Cholesky factor".into() })?;
    // enforce exact symmetry against roundoff before the QR iteration
    let c = 0.5 * (&c + c.transpose());
    let eig = nalgebra::SymmetricEigen::new(c);
    let lt = l.transpose();
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|j| {
            let q = eig.eigenvectors.column(j).into_owned();
            let phi = lt
                .solve_upper_triangular(&q)
                .expect("triangular back-substitution cannot fail for a PD factor");
            (eig.eigenvalues[j], phi)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok((pairs.iter().map(|p| p.0).collect(), pairs.into_iter().map(|p| p.1).collect()))
}

/// Assemble and solve one wavenumber block; profiles come back L²-normalized
/// as velocity fields.
fn solve_block(domain: &DomainSpec, m: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = domain.n_y;
    let h = domain.wall_gap;
    let len = domain.length_x;
    let jac = 2.0 / h; // d/dy = jac · d/ds
    let nq = n + 8;
    let (s_nodes, s_weights) = gauss_legendre(nq);

    let mut k_mat = DMatrix::<f64>::zeros(n, n);
    let mut m_mat = DMatrix::<f64>::zeros(n, n);

    if m == 0 {
        for (snode, sw) in s_nodes.iter().zip(&s_weights) {
            let tab = dirichlet_basis(n, *snode, 1);
            let w = sw * h / 2.0;
            for a in 0..n {
                for b in a..n {
                    k_mat[(a, b)] += w * (tab[1][a] * jac) * (tab[1][b] * jac);
                    m_mat[(a, b)] += w * tab[0][a] * tab[0][b];
                }
            }
        }
    } else {
        let theta = 2.0 * std::f64::consts::PI * m as f64 / len;
        let th2 = theta * theta;
        for (snode, sw) in s_nodes.iter().zip(&s_weights) {
            let tab = clamped_basis(n, *snode, 2);
            let w = sw * h / 2.0;
            for a in 0..n {
                let la = tab[2][a] * jac * jac - th2 * tab[0][a];
                let da = tab[1][a] * jac;
                for b in a..n {
                    let lb = tab[2][b] * jac * jac - th2 * tab[0][b];
                    let db = tab[1][b] * jac;
                    k_mat[(a, b)] += w * la * lb;
                    m_mat[(a, b)] += w * (da * db + th2 * tab[0][a] * tab[0][b]);
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            k_mat[(a, b)] = k_mat[(b, a)];
            m_mat[(a, b)] = m_mat[(b, a)];
        }
    }

    let (lambdas, vecs) = generalized_symmetric_eig(&k_mat, &m_mat, m)?;
    // eigensolve yields M-orthonormal profiles; rescale to unit L² field norm
    let scale = if m == 0 { 1.0 / len.sqrt() } else { (2.0 / len).sqrt() };
    let profiles = vecs.into_iter().map(|v| v.iter().map(|c| c * scale).collect()).collect();
    Ok((lambdas, profiles))
}

/// Wall-normal profile value and derivatives (up to `nder`) of a mode at y.
pub fn profile_at(domain: &DomainSpec, mode: &BasisMode, y: f64, nder: usize) -> Vec<f64> {
    let s = 2.0 * y / domain.wall_gap - 1.0;
    let jac = 2.0 / domain.wall_gap;
    let tab = if mode.m == 0 {
        dirichlet_basis(domain.n_y, s, nder)
    } else {
        clamped_basis(domain.n_y, s, nder)
    };
    (0..=nder)
        .map(|d| {
            let j = jac.powi(d as i32);
            mode.profile.iter().zip(&tab[d]).map(|(c, v)| c * v * j).sum()
        })
        .collect()
}

/// Sample a mode's velocity and gradient on a grid.
pub fn sample_mode(domain: &DomainSpec, grid: &Grid, mode: &BasisMode) -> ModeSamples {
    let ny = grid.n_y();
    let nlen = grid.len();
    let mut out = ModeSamples {
        u1: vec![0.0; nlen],
        u2: vec![0.0; nlen],
        d1x: vec![0.0; nlen],
        d1y: vec![0.0; nlen],
        d2x: vec![0.0; nlen],
        d2y: vec![0.0; nlen],
    };
    // profile tables at every y
    let profs: Vec<Vec<f64>> = grid.ys.iter().map(|&y| profile_at(domain, mode, y, 2)).collect();
    match mode.phase {
        Phase::Mean => {
            for ix in 0..grid.n_x() {
                for iy in 0..ny {
                    let idx = ix * ny + iy;
                    out.u1[idx] = profs[iy][0];
                    out.d1y[idx] = profs[iy][1];
                }
            }
        }
        Phase::Cos | Phase::Sin => {
            let theta = 2.0 * std::f64::consts::PI * mode.m as f64 / domain.length_x;
            for (ix, &x) in grid.xs.iter().enumerate() {
                let (c, s) = ((theta * x).cos(), (theta * x).sin());
                for iy in 0..ny {
                    let idx = ix * ny + iy;
                    let (p, dp, ddp) = (profs[iy][0], profs[iy][1], profs[iy][2]);
                    match mode.phase {
                        // ψ = φ(y) cos(θx): u = (φ' cos, θ φ sin)
                        Phase::Cos => {
                            out.u1[idx] = dp * c;
                            out.u2[idx] = theta * p * s;
                            out.d1x[idx] = -theta * dp * s;
                            out.d1y[idx] = ddp * c;
                            out.d2x[idx] = theta * theta * p * c;
                            out.d2y[idx] = theta * dp * s;
                        }
                        // ψ = φ(y) sin(θx): u = (φ' sin, −θ φ cos)
                        Phase::Sin => {
                            out.u1[idx] = dp * s;
                            out.u2[idx] = -theta * p * c;
                            out.d1x[idx] = theta * dp * c;
                            out.d1y[idx] = ddp * s;
                            out.d2x[idx] = theta * theta * p * s;
                            out.d2y[idx] = -theta * dp * c;
                        }
                        Phase::Mean => unreachable!(),
                    }
                }
            }
        }
    }
    out
}

impl StokesBasis {
    /// Rebuild a basis from stored eigenpairs (cache path); field samples
    /// are regenerated, so the result is bit-identical to a fresh build.
    pub fn from_modes(domain: DomainSpec, modes: Vec<BasisMode>) -> Self {
        let grid = domain.grid();
        let samples = modes.iter().map(|md| sample_mode(&domain, &grid, md)).collect::<Vec<_>>();
        let lambda_min = modes.first().map(|m| m.lambda).expect("at least one mode");
        let id = basis_id(&domain, &modes);
        Self { domain, grid, modes, lambda_min, samples, id }
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.modes[j].lambda
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn samples(&self, j: usize) -> &ModeSamples {
        &self.samples[j]
    }

    /// Coefficients of the L²-orthogonal projection of a grid field.
    pub fn project(&self, field: &GridField) -> Result<Vec<f64>> {
        if field.grid_id() != self.grid.id() {
            return Err(Error::GridMismatch { expected: self.grid.id(), got: field.grid_id() });
        }
        Ok((0..self.k())
            .map(|j| {
                let s = &self.samples[j];
                self.grid.dot_scalar(&field.ux, &s.u1) + self.grid.dot_scalar(&field.uy, &s.u2)
            })
            .collect())
    }

    /// Velocity field Σ c_j ω_j on the basis grid.
    pub fn reconstruct(&self, coeffs: &[f64]) -> GridField {
        self.reconstruct_on(&self.grid, coeffs, false)
    }

    /// Reconstruct on an arbitrary grid; `gradient` additionally returns ∇u
    /// packed as (∂x u1, ∂y u1) in ux/uy of a second field.
    pub fn reconstruct_on(&self, grid: &Grid, coeffs: &[f64], _gradient: bool) -> GridField {
        assert_eq!(coeffs.len(), self.k());
        let mut f = GridField::zeros(grid);
        let own_grid = grid.id() == self.grid.id();
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let tmp;
            let s = if own_grid {
                &self.samples[j]
            } else {
                tmp = sample_mode(&self.domain, grid, &self.modes[j]);
                &tmp
            };
            for i in 0..grid.len() {
                f.ux[i] += c * s.u1[i];
                f.uy[i] += c * s.u2[i];
            }
        }
        f
    }

    /// Gradient samples of Σ c_j ω_j on the basis grid:
    /// returns (∂x u1, ∂y u1, ∂x u2, ∂y u2).
    pub fn reconstruct_gradient(&self, coeffs: &[f64]) -> [Vec<f64>; 4] {
        assert_eq!(coeffs.len(), self.k());
        let n = self.grid.len();
        let mut g = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let s = &self.samples[j];
            for i in 0..n {
                g[0][i] += c * s.d1x[i];
                g[1][i] += c * s.d1y[i];
                g[2][i] += c * s.d2x[i];
                g[3][i] += c * s.d2y[i];
            }
        }
        g
    }

    /// Gram matrix (ω_i, ω_j) by quadrature.
    pub fn gram(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut g = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let si = &self.samples[i];
                let sj = &self.samples[j];
                let v = self.grid.dot_scalar(&si.u1, &sj.u1) + self.grid.dot_scalar(&si.u2, &sj.u2);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Max deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.gram();
        let k = self.k();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Largest L² norm of the sampled divergence over all modes.
    pub fn divergence_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            let div: Vec<f64> = s.d1x.iter().zip(&s.d2y).map(|(a, b)| a + b).collect();
            worst = worst.max(self.grid.dot_scalar(&div, &div).max(0.0).sqrt());
        }
        worst
    }

    /// Largest wall-trace magnitude over all modes and both walls.
    pub fn wall_trace_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for mode in &self.modes {
            for &y in &[0.0, self.domain.wall_gap] {
                let p = profile_at(&self.domain, mode, y, 1);
                let (u1_amp, u2_amp) = match mode.phase {
                    Phase::Mean => (p[0].abs(), 0.0),
                    _ => {
                        let theta =
                            2.0 * std::f64::consts::PI * mode.m as f64 / self.domain.length_x;
                        (p[1].abs(), (theta * p[0]).abs())
                    }
                };
                worst = worst.max(u1_amp).max(u2_amp);
            }
        }
        worst
    }

    /// Check all structural invariants at the given tolerances.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let ortho = self.orthonormality_defect();
        if ortho > tol.ortho {
            return Err(Error::EigSolveFailure {
                block: usize::MAX,
                reason: format!("orthonormality defect {ortho:e} > {:e}", tol.ortho),
            });
        }
        let div = self.divergence_defect();
        if div > tol.div {
            return Err(Error::EigSolveFailure {
                block: usize::MAX,
                reason: format!("divergence defect {div:e} > {:e}", tol.div),
            });
        }
        let bc = self.wall_trace_defect();
        if bc > tol.bc {
            return Err(Error::EigSolveFailure {
                block: usize::MAX,
                reason: format!("wall trace defect {bc:e} > {:e}", tol.bc),
            });
        }
        for w in self.modes.windows(2) {
            if w[1].lambda < w[0].lambda {
                return Err(Error::EigSolveFailure {
                    block: usize::MAX,
                    reason: "eigenvalues are not sorted".into(),
                });
            }
        }
        Ok(())
    }
}
