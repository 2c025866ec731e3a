//! Cross-check of the spectral Stokes eigensolve against an independent
//! dense second-order finite-difference discretization.
//!
//! Per x-wavenumber θ the stream formulation is the clamped generalized
//! eigenproblem (D² − θ²)² φ = λ (θ² − D²) φ with φ = φ' = 0 at the walls.
//! The FD path discretizes D⁴ with the classical clamped-plate stencil
//! (ghost reflection for φ' = 0) and D² with the Dirichlet stencil; the
//! mean-flow block is the plain Dirichlet Laplacian. No code is shared
//! with the Legendre-Galerkin path.

use nalgebra::DMatrix;
use taumhd::{build_basis, DomainSpec};

/// Smallest eigenvalue of K φ = λ M φ by Cholesky reduction.
fn smallest_generalized_eig(k_mat: &DMatrix<f64>, m_mat: &DMatrix<f64>) -> f64 {
    let chol = nalgebra::Cholesky::new(m_mat.clone()).expect("mass matrix SPD");
    let l = chol.l();
    let x = l.solve_lower_triangular(k_mat).unwrap();
    let c = l.solve_lower_triangular(&x.transpose()).unwrap();
    let c = 0.5 * (&c + c.transpose());
    let eig = nalgebra::SymmetricEigen::new(c);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Lowest clamped-stream eigenvalue at wavenumber θ on [0, h], n interior nodes.
fn fd_block_lambda1(theta: f64, h: f64, n: usize) -> f64 {
    let dx = h / (n + 1) as f64;
    let mut d2 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        d2[(i, i)] = -2.0;
        if i > 0 {
            d2[(i, i - 1)] = 1.0;
        }
        if i + 1 < n {
            d2[(i, i + 1)] = 1.0;
        }
    }
    d2 /= dx * dx;

    if theta == 0.0 {
        // mean-flow block: −v'' = λ v with Dirichlet walls
        return smallest_generalized_eig(&(-d2.clone()), &DMatrix::identity(n, n));
    }

    // clamped-plate fourth difference: standard stencil with the ghost
    // reflection φ_{-1} = φ_1 at both walls
    let mut d4 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
        for (o, s) in stencil.iter().enumerate() {
            let j = i as isize + o as isize - 2;
            if j >= 0 && (j as usize) < n {
                d4[(i, j as usize)] += s;
            }
        }
    }
    d4[(0, 0)] += 1.0; // ghost reflection at the lower wall
    d4[(n - 1, n - 1)] += 1.0; // and at the upper wall
    d4 /= dx * dx * dx * dx;

    let th2 = theta * theta;
    let k_mat = &d4 - 2.0 * th2 * &d2 + th2 * th2 * DMatrix::identity(n, n);
    let m_mat = th2 * DMatrix::identity(n, n) - d2;
    smallest_generalized_eig(&k_mat, &m_mat)
}

#[test]
fn lambda1_matches_dense_finite_difference_solve() {
    let dom = DomainSpec::new(2.0 * std::f64::consts::PI, 1.0, 8, 16).unwrap();
    let basis = build_basis(&dom, 8).unwrap();

    let n_fd = 400;
    let mut fd_lambda1 = f64::INFINITY;
    for m in 0..=dom.m_max() {
        let theta = 2.0 * std::f64::consts::PI * m as f64 / dom.length_x;
        fd_lambda1 = fd_lambda1.min(fd_block_lambda1(theta, dom.wall_gap, n_fd));
    }

    let rel = (basis.lambda_min - fd_lambda1).abs() / fd_lambda1;
    assert!(
        rel < 0.01,
        "spectral λ₁ = {} vs FD λ₁ = {} (rel {rel:e})",
        basis.lambda_min,
        fd_lambda1
    );
}

#[test]
fn per_block_eigenvalues_match_finite_differences() {
    let dom = DomainSpec::new(2.0 * std::f64::consts::PI, 1.0, 8, 16).unwrap();
    let basis = build_basis(&dom, 20).unwrap();
    // lowest eigenvalue within each represented wavenumber
    for m in 0..=2usize {
        let spectral = basis
            .modes
            .iter()
            .filter(|md| md.m == m)
            .map(|md| md.lambda)
            .fold(f64::INFINITY, f64::min);
        if !spectral.is_finite() {
            continue;
        }
        let theta = 2.0 * std::f64::consts::PI * m as f64 / dom.length_x;
        let fd = fd_block_lambda1(theta, dom.wall_gap, 400);
        let rel = (spectral - fd).abs() / fd;
        assert!(rel < 0.01, "block m={m}: spectral {spectral} vs FD {fd} (rel {rel:e})");
    }
}
