//! Assembly of the Galerkin ODE system for the shifted unknowns.
//!
//! Testing the projected momentum/induction equations against each basis
//! field ω_l gives, with u = Σ c_j ω_j and h = Σ d_j ω_j,
//!
//!   α c' + ν λ∘c = Ru(t, c, d),     d' + χ λ∘d = Rd(t, c, d),
//!
//! where Ru/Rd collect the forcing, the quadratic advection terms through
//! the tensor T[i][j][l] = ((ω_i·∇)ω_j, ω_l), and the wall-lift couplings.
//! Every lift coupling is stored either as a k-vector time series or a k×k
//! matrix per temporal harmonic of the lift, so all assembled arrays are
//! exactly τ-periodic.
//!
//! Term table (assembled object per momentum/induction term; signs as in
//! `rhs_into`):
//!
//! | term          | object      | | term          | object      |
//! |---------------|-------------|-|---------------|-------------|
//! | (B₁)_t        | b1t_proj    | | (B₂)_t        | b2t_proj    |
//! | A B₁          | ab1_proj    | | A B₂          | ab2_proj    |
//! | B₁·∇B₁        | b1gb1_proj  | | B₂·∇B₁        | b2gb1_proj  |
//! | B₂·∇B₂        | b2gb2_proj  | | B₁·∇B₂        | b1gb2_proj  |
//! | u·∇B₁         | m_ugb1      | | B₁·∇h         | m_b1gh      |
//! | B₁·∇u         | m_b1gu      | | h·∇B₁         | m_hgb1      |
//! | B₂·∇h         | m_b2gh      | | u·∇B₂         | m_ugb2      |
//! | h·∇B₂         | m_hgb2      | | B₂·∇u         | m_b2gu      |

use std::sync::Arc;

use crate::basis::StokesBasis;
use crate::domain::GridField;
use crate::error::{Error, Result};
use crate::extension::{ExtensionField, TemporalFn};
use crate::forcing::ForcingSpec;
use crate::timefreq::PeriodicSeries;

/// Vector coupling: k-vector per temporal harmonic.
#[derive(Debug, Clone, Default)]
pub struct FourierVec {
    pub terms: Vec<(TemporalFn, Vec<f64>)>,
    /// Raw collocation samples (n_t × k), kept for inspection and tests.
    pub samples: Vec<Vec<f64>>,
}

impl FourierVec {
    pub fn eval_into(&self, t: f64, tau: f64, factor: f64, out: &mut [f64]) {
        for (tf, vec) in &self.terms {
            let w = factor * tf.eval(t, tau);
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(vec) {
                *o += w * v;
            }
        }
    }

    pub fn eval(&self, t: f64, tau: f64, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; k];
        self.eval_into(t, tau, 1.0, &mut out);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, v)| v.iter().all(|x| *x == 0.0))
    }
}

/// Matrix coupling: k×k row-major matrix per temporal harmonic of the lift.
#[derive(Debug, Clone, Default)]
pub struct FourierMat {
    pub terms: Vec<(TemporalFn, Vec<f64>)>,
    k: usize,
}

impl FourierMat {
    /// out += factor · M(t) · v
    pub fn apply_into(&self, t: f64, tau: f64, factor: f64, v: &[f64], out: &mut [f64]) {
        let k = self.k;
        for (tf, mat) in &self.terms {
            let w = factor * tf.eval(t, tau);
            if w == 0.0 {
                continue;
            }
            for l in 0..k {
                let row = &mat[l * k..(l + 1) * k];
                let mut acc = 0.0;
                for (mv, vv) in row.iter().zip(v) {
                    acc += mv * vv;
                }
                out[l] += w * acc;
            }
        }
    }

    pub fn eval_matrix(&self, t: f64, tau: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.k * self.k];
        for (tf, mat) in &self.terms {
            let w = tf.eval(t, tau);
            for (o, m) in out.iter_mut().zip(mat) {
                *o += w * m;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, m)| m.iter().all(|x| *x == 0.0))
    }
}

/// Dense advection tensor with a packed nonzero list for contraction.
#[derive(Debug, Clone)]
pub struct ConvTensor {
    pub k: usize,
    /// T[i][j][l] at index (i·k + j)·k + l.
    pub dense: Vec<f64>,
    triples: Vec<(u32, u32, u32, f64)>,
}

impl ConvTensor {
    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.dense[(i * self.k + j) * self.k + l]
    }

    /// All four quadratic forms in one pass over the nonzeros:
    /// [Q(c,c), Q(d,d), Q(c,d), Q(d,c)] with Q(a,b)_l = Σ a_i b_j T[i][j][l].
    fn quadratics(&self, c: &[f64], d: &[f64]) -> [Vec<f64>; 4] {
        let k = self.k;
        let mut out = [vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]];
        for &(i, j, l, v) in &self.triples {
            let (i, j, l) = (i as usize, j as usize, l as usize);
            out[0][l] += v * c[i] * c[j];
            out[1][l] += v * d[i] * d[j];
            out[2][l] += v * c[i] * d[j];
            out[3][l] += v * d[i] * c[j];
        }
        out
    }
}

/// How the quadratic terms are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearPath {
    /// Precomputed tensor contraction (default for k ≤ 48).
    Tensor,
    /// Reconstruct on the grid, multiply pointwise, re-project.
    PseudoSpectral,
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    /// Collocation samples per period for the time-dependent arrays.
    pub n_t: usize,
    /// Include the quadratic advection terms (off = forced Stokes/heat case).
    pub nonlinear: bool,
    /// Switch to the pseudo-spectral path above this mode count.
    pub tensor_threshold: usize,
    /// Force one evaluation path regardless of k.
    pub force_path: Option<NonlinearPath>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { n_t: 64, nonlinear: true, tensor_threshold: 48, force_path: None }
    }
}

/// Assembled ODE system; immutable and shareable after assembly.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub basis: Arc<StokesBasis>,
    pub alpha: f64,
    pub nu: f64,
    pub chi: f64,
    pub tau: f64,
    pub lambdas: Vec<f64>,
    pub include_nonlinear: bool,
    pub path: NonlinearPath,
    pub conv: Option<ConvTensor>,
    pub n_t: usize,

    pub b1t_proj: FourierVec,
    pub ab1_proj: FourierVec,
    pub b1gb1_proj: FourierVec,
    pub b2gb2_proj: FourierVec,
    pub m_ugb1: FourierMat,
    pub m_b1gu: FourierMat,
    pub m_b2gh: FourierMat,
    pub m_hgb2: FourierMat,

    pub b2t_proj: FourierVec,
    pub ab2_proj: FourierVec,
    pub b2gb1_proj: FourierVec,
    pub b1gb2_proj: FourierVec,
    pub m_b1gh: FourierMat,
    pub m_hgb1: FourierMat,
    pub m_ugb2: FourierMat,
    pub m_b2gu: FourierMat,

    pub f_proj: FourierVec,
}

pub fn assemble(
    basis: Arc<StokesBasis>,
    b1: &ExtensionField,
    b2: &ExtensionField,
    f: &ForcingSpec,
    alpha: f64,
    nu: f64,
    chi: f64,
) -> Result<GalerkinSystem> {
    assemble_with(basis, b1, b2, f, alpha, nu, chi, AssemblyOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn assemble_with(
    basis: Arc<StokesBasis>,
    b1: &ExtensionField,
    b2: &ExtensionField,
    f: &ForcingSpec,
    alpha: f64,
    nu: f64,
    chi: f64,
    opts: AssemblyOptions,
) -> Result<GalerkinSystem> {
    for (name, v) in [("alpha", alpha), ("nu", nu), ("chi", chi)] {
        if !(v > 0.0) {
            return Err(Error::NonpositiveCoefficient { name, value: v });
        }
    }
    let grid_id = basis.grid.id();
    for ext in [b1, b2] {
        if ext.grid_id() != grid_id {
            return Err(Error::GridMismatch { expected: grid_id, got: ext.grid_id() });
        }
    }
    let tau = f.tau;
    if (b1.tau - tau).abs() > 1e-12 * tau || (b2.tau - tau).abs() > 1e-12 * tau {
        return Err(Error::InvalidParameter(format!(
            "period mismatch: forcing τ = {tau}, lifts τ = {}, {}",
            b1.tau, b2.tau
        )));
    }

    let k = basis.k();
    let path = opts.force_path.unwrap_or(if k <= opts.tensor_threshold {
        NonlinearPath::Tensor
    } else {
        NonlinearPath::PseudoSpectral
    });
    let conv = match path {
        NonlinearPath::Tensor => Some(build_conv_tensor(&basis)),
        NonlinearPath::PseudoSpectral => None,
    };

    let sys = GalerkinSystem {
        lambdas: basis.lambdas(),
        alpha,
        nu,
        chi,
        tau,
        include_nonlinear: opts.nonlinear,
        path,
        conv,
        n_t: opts.n_t,

        b1t_proj: project_bt_slices(&basis, b1),
        ab1_proj: project_stiff_slices(&basis, b1),
        b1gb1_proj: project_bilinear(&basis, b1, b1, opts.n_t, tau),
        b2gb2_proj: project_bilinear(&basis, b2, b2, opts.n_t, tau),
        m_ugb1: matrix_state_grad_b(&basis, b1),
        m_b1gu: matrix_b_grad_state(&basis, b1),
        m_b2gh: matrix_b_grad_state(&basis, b2),
        m_hgb2: matrix_state_grad_b(&basis, b2),

        b2t_proj: project_bt_slices(&basis, b2),
        ab2_proj: project_stiff_slices(&basis, b2),
        b2gb1_proj: project_bilinear(&basis, b2, b1, opts.n_t, tau),
        b1gb2_proj: project_bilinear(&basis, b1, b2, opts.n_t, tau),
        m_b1gh: matrix_b_grad_state(&basis, b1),
        m_hgb1: matrix_state_grad_b(&basis, b1),
        m_ugb2: matrix_state_grad_b(&basis, b2),
        m_b2gu: matrix_b_grad_state(&basis, b2),

        f_proj: project_forcing(&basis, f, opts.n_t, tau),
        basis,
    };
    Ok(sys)
}

/// Wavenumber selection: (ω_i·…·ω_j, ω_l) vanishes unless
/// m_l ∈ {m_i + m_j, |m_i − m_j|}.
#[inline]
fn wavenumber_allowed(mi: usize, mj: usize, ml: usize) -> bool {
    ml == mi + mj || ml == mi.max(mj) - mi.min(mj)
}

fn build_conv_tensor(basis: &StokesBasis) -> ConvTensor {
    let k = basis.k();
    let grid = &basis.grid;
    let n = grid.len();
    let mut dense = vec![0.0; k * k * k];
    // (ω_i·∇)ω_j dotted against ω_l; antisymmetric in (j, l), diagonal zero.
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    for i in 0..k {
        let si = basis.samples(i);
        for j in 0..k {
            let sj = basis.samples(j);
            let mut any = false;
            for l in (j + 1)..k {
                if wavenumber_allowed(basis.modes[i].m, basis.modes[j].m, basis.modes[l].m) {
                    any = true;
                    break;
                }
            }
            if !any {
                continue;
            }
            for idx in 0..n {
                w1[idx] = si.u1[idx] * sj.d1x[idx] + si.u2[idx] * sj.d1y[idx];
                w2[idx] = si.u1[idx] * sj.d2x[idx] + si.u2[idx] * sj.d2y[idx];
            }
            for l in (j + 1)..k {
                if !wavenumber_allowed(basis.modes[i].m, basis.modes[j].m, basis.modes[l].m) {
                    continue;
                }
                let sl = basis.samples(l);
                let v = grid.dot_scalar(&w1, &sl.u1) + grid.dot_scalar(&w2, &sl.u2);
                dense[(i * k + j) * k + l] = v;
                dense[(i * k + l) * k + j] = -v;
            }
        }
    }
    let triples = dense
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-14)
        .map(|(idx, v)| {
            let l = idx % k;
            let j = (idx / k) % k;
            let i = idx / (k * k);
            (i as u32, j as u32, l as u32, *v)
        })
        .collect();
    ConvTensor { k, dense, triples }
}

/// Synthesize B and ∇B grids of a lift at time t from its temporal slices.
fn synth_b(ext: &ExtensionField, grid: &crate::domain::Grid, t: f64) -> (GridField, [Vec<f64>; 4]) {
    let n = grid.len();
    let mut bx = vec![0.0; n];
    let mut by = vec![0.0; n];
    let mut g = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for s in &ext.slices {
        let w = s.temporal.eval(t, ext.tau);
        if w == 0.0 {
            continue;
        }
        for i in 0..n {
            bx[i] += w * s.b.ux[i];
            by[i] += w * s.b.uy[i];
        }
        for c in 0..4 {
            for i in 0..n {
                g[c][i] += w * s.grad[c][i];
            }
        }
    }
    (GridField::from_components(grid, bx, by).expect("slice on own grid"), g)
}

/// Modes that can receive a projection of fields with x-wavenumbers in `ms`
/// advected against mode i (or None filter: all wavenumbers in `ms` alone).
fn allowed_targets(basis: &StokesBasis, source_m: Option<usize>, ms: &[u32]) -> Vec<usize> {
    (0..basis.k())
        .filter(|&l| {
            let ml = basis.modes[l].m;
            ms.iter().any(|&mb| match source_m {
                Some(mi) => wavenumber_allowed(mi, mb as usize, ml),
                None => ml == mb as usize,
            })
        })
        .collect()
}

fn lift_wavenumbers(ext: &ExtensionField) -> Vec<u32> {
    // slices carry the x-structure of the data plus the antiderivative's
    // mean term; read the content off the slice grids is unnecessary — the
    // certificate of exactness only needs a superset, so scan the grid peaks
    // conservatively: use all wavenumbers present in the b slices via their
    // trig content bound (max data wavenumber).
    let mut ms: Vec<u32> = ext.x_wavenumbers.clone();
    if ms.is_empty() {
        ms.push(0);
    }
    ms
}

/// Projections of ∂t B onto the basis, per temporal harmonic (exact since
/// d/dt maps the harmonic family to itself).
fn project_bt_slices(basis: &StokesBasis, ext: &ExtensionField) -> FourierVec {
    let tau = ext.tau;
    let targets = allowed_targets(basis, None, &lift_wavenumbers(ext));
    let mut terms = Vec::new();
    for s in &ext.slices {
        if let Some((factor, tf)) = s.temporal.derivative(tau) {
            let mut vec = vec![0.0; basis.k()];
            for &l in &targets {
                let sl = basis.samples(l);
                vec[l] = factor
                    * (basis.grid.dot_scalar(&s.b.ux, &sl.u1)
                        + basis.grid.dot_scalar(&s.b.uy, &sl.u2));
            }
            terms.push((tf, vec));
        }
    }
    let samples = sample_terms(&terms, tau, ext.n_t(), basis.k());
    FourierVec { terms, samples }
}

/// Projections of the Stokes term of the lift, (A B, ω_l) = (∇B, ∇ω_l),
/// per temporal harmonic.
fn project_stiff_slices(basis: &StokesBasis, ext: &ExtensionField) -> FourierVec {
    let tau = ext.tau;
    let targets = allowed_targets(basis, None, &lift_wavenumbers(ext));
    let mut terms = Vec::new();
    for s in &ext.slices {
        let mut vec = vec![0.0; basis.k()];
        for &l in &targets {
            let sl = basis.samples(l);
            vec[l] = basis.grid.dot_scalar(&s.grad[0], &sl.d1x)
                + basis.grid.dot_scalar(&s.grad[1], &sl.d1y)
                + basis.grid.dot_scalar(&s.grad[2], &sl.d2x)
                + basis.grid.dot_scalar(&s.grad[3], &sl.d2y);
        }
        terms.push((s.temporal, vec));
    }
    let samples = sample_terms(&terms, tau, ext.n_t(), basis.k());
    FourierVec { terms, samples }
}

fn sample_terms(
    terms: &[(TemporalFn, Vec<f64>)],
    tau: f64,
    n_t: usize,
    k: usize,
) -> Vec<Vec<f64>> {
    (0..n_t)
        .map(|it| {
            let t = tau * it as f64 / n_t as f64;
            let mut v = vec![0.0; k];
            for (tf, vec) in terms {
                let w = tf.eval(t, tau);
                for (o, x) in v.iter_mut().zip(vec) {
                    *o += w * x;
                }
            }
            v
        })
        .collect()
}

/// Projections of (B_a·∇)B_b sampled on the collocation grid, then converted
/// to the temporal-harmonic form by DFT (exact: the signal is band-limited).
fn project_bilinear(
    basis: &StokesBasis,
    ba: &ExtensionField,
    bb: &ExtensionField,
    n_t: usize,
    tau: f64,
) -> FourierVec {
    let grid = &basis.grid;
    let k = basis.k();
    let n = grid.len();
    if ba.is_zero() || bb.is_zero() {
        return FourierVec { terms: vec![], samples: vec![vec![0.0; k]; n_t] };
    }
    // allowed targets: wavenumber sums/differences of the two lifts
    let msa = lift_wavenumbers(ba);
    let msb = lift_wavenumbers(bb);
    let mut prods: Vec<u32> = Vec::new();
    for &a in &msa {
        for &b in &msb {
            prods.push(a + b);
            prods.push(a.max(b) - a.min(b));
        }
    }
    prods.sort_unstable();
    prods.dedup();
    let targets = allowed_targets(basis, None, &prods);

    let mut samples = Vec::with_capacity(n_t);
    for it in 0..n_t {
        let t = tau * it as f64 / n_t as f64;
        let (fa, _) = synth_b(ba, grid, t);
        let (_, gb) = synth_b(bb, grid, t);
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        for i in 0..n {
            w1[i] = fa.ux[i] * gb[0][i] + fa.uy[i] * gb[1][i];
            w2[i] = fa.ux[i] * gb[2][i] + fa.uy[i] * gb[3][i];
        }
        let mut v = vec![0.0; k];
        for &l in &targets {
            let sl = basis.samples(l);
            v[l] = grid.dot_scalar(&w1, &sl.u1) + grid.dot_scalar(&w2, &sl.u2);
        }
        samples.push(v);
    }
    FourierVec { terms: dft_terms(&samples, tau), samples }
}

fn project_forcing(basis: &StokesBasis, f: &ForcingSpec, n_t: usize, tau: f64) -> FourierVec {
    let k = basis.k();
    if f.harmonics.is_empty() {
        return FourierVec { terms: vec![], samples: vec![vec![0.0; k]; n_t] };
    }
    let samples: Vec<Vec<f64>> = (0..n_t)
        .map(|it| f.project(basis, tau * it as f64 / n_t as f64))
        .collect();
    FourierVec { terms: dft_terms(&samples, tau), samples }
}

/// DFT each coefficient series and keep the nonzero harmonics.
fn dft_terms(samples: &[Vec<f64>], _tau: f64) -> Vec<(TemporalFn, Vec<f64>)> {
    let n_t = samples.len();
    let k = samples[0].len();
    let scale: f64 = samples.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let series: Vec<PeriodicSeries> = (0..k)
        .map(|j| {
            let s: Vec<f64> = samples.iter().map(|row| row[j]).collect();
            PeriodicSeries::from_samples(&s, 1.0)
        })
        .collect();
    let mut terms = Vec::new();
    let half = n_t / 2;
    for m in 0..=half {
        let a: Vec<f64> = series.iter().map(|s| s.coeff_a(m)).collect();
        let b: Vec<f64> = series.iter().map(|s| s.coeff_b(m)).collect();
        if a.iter().any(|v| v.abs() > 1e-13 * scale) {
            terms.push((
                if m == 0 { TemporalFn::Const } else { TemporalFn::Cos(m as u32) },
                a,
            ));
        }
        if m > 0 && b.iter().any(|v| v.abs() > 1e-13 * scale) {
            terms.push((TemporalFn::Sin(m as u32), b));
        }
    }
    terms
}

/// Matrix family M[l][i] = ((ω_i·∇)B, ω_l) per temporal slice of B.
fn matrix_state_grad_b(basis: &StokesBasis, ext: &ExtensionField) -> FourierMat {
    let k = basis.k();
    if ext.is_zero() {
        return FourierMat { terms: vec![], k };
    }
    let grid = &basis.grid;
    let n = grid.len();
    let ms = lift_wavenumbers(ext);
    let mut terms = Vec::new();
    for s in &ext.slices {
        let mut mat = vec![0.0; k * k];
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        for i in 0..k {
            let si = basis.samples(i);
            for idx in 0..n {
                w1[idx] = si.u1[idx] * s.grad[0][idx] + si.u2[idx] * s.grad[1][idx];
                w2[idx] = si.u1[idx] * s.grad[2][idx] + si.u2[idx] * s.grad[3][idx];
            }
            for &l in &allowed_targets(basis, Some(basis.modes[i].m), &ms) {
                let sl = basis.samples(l);
                mat[l * k + i] =
                    grid.dot_scalar(&w1, &sl.u1) + grid.dot_scalar(&w2, &sl.u2);
            }
        }
        terms.push((s.temporal, mat));
    }
    FourierMat { terms, k }
}

/// Matrix family M[l][i] = ((B·∇)ω_i, ω_l) per temporal slice of B.
fn matrix_b_grad_state(basis: &StokesBasis, ext: &ExtensionField) -> FourierMat {
    let k = basis.k();
    if ext.is_zero() {
        return FourierMat { terms: vec![], k };
    }
    let grid = &basis.grid;
    let n = grid.len();
    let ms = lift_wavenumbers(ext);
    let mut terms = Vec::new();
    for s in &ext.slices {
        let mut mat = vec![0.0; k * k];
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        for i in 0..k {
            let si = basis.samples(i);
            for idx in 0..n {
                w1[idx] = s.b.ux[idx] * si.d1x[idx] + s.b.uy[idx] * si.d1y[idx];
                w2[idx] = s.b.ux[idx] * si.d2x[idx] + s.b.uy[idx] * si.d2y[idx];
            }
            for &l in &allowed_targets(basis, Some(basis.modes[i].m), &ms) {
                let sl = basis.samples(l);
                mat[l * k + i] =
                    grid.dot_scalar(&w1, &sl.u1) + grid.dot_scalar(&w2, &sl.u2);
            }
        }
        terms.push((s.temporal, mat));
    }
    FourierMat { terms, k }
}

impl GalerkinSystem {
    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    /// [Q(c,c), Q(d,d), Q(c,d), Q(d,c)] through the configured path.
    pub fn quadratics(&self, c: &[f64], d: &[f64]) -> [Vec<f64>; 4] {
        if !self.include_nonlinear {
            let k = self.k();
            return [vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]];
        }
        match (&self.conv, self.path) {
            (Some(t), NonlinearPath::Tensor) => t.quadratics(c, d),
            _ => self.quadratics_pseudo(c, d),
        }
    }

    /// Pseudo-spectral path: reconstruct, multiply on the grid, re-project.
    fn quadratics_pseudo(&self, c: &[f64], d: &[f64]) -> [Vec<f64>; 4] {
        let basis = &self.basis;
        let grid = &basis.grid;
        let n = grid.len();
        let k = self.k();
        let u = basis.reconstruct(c);
        let h = basis.reconstruct(d);
        let gu = basis.reconstruct_gradient(c);
        let gh = basis.reconstruct_gradient(d);
        let mut out = [vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]];
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        let forms: [(&GridField, &[Vec<f64>; 4]); 4] =
            [(&u, &gu), (&h, &gh), (&u, &gh), (&h, &gu)];
        for (fi, (fld, grad)) in forms.iter().enumerate() {
            for i in 0..n {
                w1[i] = fld.ux[i] * grad[0][i] + fld.uy[i] * grad[1][i];
                w2[i] = fld.ux[i] * grad[2][i] + fld.uy[i] * grad[3][i];
            }
            for l in 0..k {
                let sl = basis.samples(l);
                out[fi][l] = grid.dot_scalar(&w1, &sl.u1) + grid.dot_scalar(&w2, &sl.u2);
            }
        }
        out
    }

    /// Right-hand sides after moving the stiff diagonal to the left:
    /// α c' + ν λ∘c = Ru and d' + χ λ∘d = Rd.
    pub fn rhs_into(&self, t: f64, c: &[f64], d: &[f64], ru: &mut [f64], rd: &mut [f64]) {
        let (alpha, nu, chi, tau) = (self.alpha, self.nu, self.chi, self.tau);
        ru.iter_mut().for_each(|v| *v = 0.0);
        rd.iter_mut().for_each(|v| *v = 0.0);

        if self.include_nonlinear {
            let [quu, qhh, quh, qhu] = self.quadratics(c, d);
            for l in 0..self.k() {
                ru[l] += -alpha * quu[l] + qhh[l];
                rd[l] += -quh[l] + qhu[l];
            }
        }

        // momentum block couplings
        self.f_proj.eval_into(t, tau, alpha, ru);
        self.b1t_proj.eval_into(t, tau, -alpha, ru);
        self.ab1_proj.eval_into(t, tau, -nu, ru);
        self.b1gb1_proj.eval_into(t, tau, -alpha, ru);
        self.b2gb2_proj.eval_into(t, tau, 1.0, ru);
        self.m_ugb1.apply_into(t, tau, -1.0, c, ru);
        self.m_b1gu.apply_into(t, tau, -1.0, c, ru);
        self.m_b2gh.apply_into(t, tau, 1.0, d, ru);
        self.m_hgb2.apply_into(t, tau, 1.0, d, ru);

        // induction block couplings
        self.b2t_proj.eval_into(t, tau, -1.0, rd);
        self.ab2_proj.eval_into(t, tau, -chi, rd);
        self.m_b1gh.apply_into(t, tau, -1.0, d, rd);
        self.m_hgb1.apply_into(t, tau, 1.0, d, rd);
        self.m_ugb2.apply_into(t, tau, -1.0, c, rd);
        self.b2gb1_proj.eval_into(t, tau, 1.0, rd);
        self.m_b2gu.apply_into(t, tau, 1.0, c, rd);
        self.b1gb2_proj.eval_into(t, tau, -1.0, rd);
    }

    /// Allocating wrapper around `rhs_into`.
    pub fn rhs_nonlinear(&self, t: f64, c: &[f64], d: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut ru = vec![0.0; self.k()];
        let mut rd = vec![0.0; self.k()];
        self.rhs_into(t, c, d, &mut ru, &mut rd);
        (ru, rd)
    }

    /// Right-hand side of the linearized problem at frozen fields (v, b):
    /// the state appears only on the stiff left side, and the frozen fields
    /// feed the advection operators
    ///   L₁ = α P(v·∇v) − P(b·∇b),
    ///   L₂ = α(B₁)_t + νAB₁ + αP(B₁·∇B₁) + P(v·∇B₁) + P(B₁·∇v)
    ///        − P(B₂·∇b) − P(b·∇B₂) − P(B₂·∇B₂),
    ///   L₃ = P(v·∇b) − P(b·∇v),
    ///   L₄ = (B₂)_t + χAB₂ + P(B₁·∇b) − P(b·∇B₁) + P(v·∇B₂)
    ///        − P(B₂·∇B₁) − P(B₂·∇v) + P(B₁·∇B₂),
    /// giving (α u_t + νAu, ω_l) = (αf − L₁ − L₂, ω_l) and
    /// (h_t + χAh, ω_l) = (−L₃ − L₄, ω_l). Evaluating at (v, b) = (u, h)
    /// reproduces `rhs_nonlinear` exactly.
    pub fn rhs_linearized(&self, t: f64, v: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.rhs_nonlinear(t, v, b)
    }

    /// Time derivatives (c', d') of the full system.
    pub fn state_derivative(&self, t: f64, c: &[f64], d: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut ru, mut rd) = self.rhs_nonlinear(t, c, d);
        for l in 0..self.k() {
            ru[l] = (ru[l] - self.nu * self.lambdas[l] * c[l]) / self.alpha;
            rd[l] -= self.chi * self.lambdas[l] * d[l];
        }
        (ru, rd)
    }

    /// α-weighted energy norm √(α|c|² + |d|²) of a packed state.
    pub fn energy_norm(&self, c: &[f64], d: &[f64]) -> f64 {
        let ec: f64 = c.iter().map(|v| v * v).sum();
        let ed: f64 = d.iter().map(|v| v * v).sum();
        (self.alpha * ec + ed).sqrt()
    }
}

#[cfg(test)]
mod tests;
