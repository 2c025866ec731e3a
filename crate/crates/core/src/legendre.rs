//! Legendre polynomials, Gauss–Legendre quadrature, and the compact
//! polynomial bases used for the wall-normal direction.
//!
//! Two families, both built from Legendre polynomials on s ∈ [-1, 1]:
//! * `dirichlet_basis`: D_a = L_a − L_{a+2}, vanishing at both endpoints
//!   (used for the mean-flow block).
//! * `clamped_basis`: C_a = L_a − 2(2a+5)/(2a+7) L_{a+2} + (2a+3)/(2a+7) L_{a+4},
//!   vanishing together with its first derivative at both endpoints
//!   (used for the stream function of every nonzero wavenumber block).

/// Values of L_0..=L_n and derivatives up to order `nder` (≤ 3) at `s`.
///
/// Row `d` of the result holds the d-th derivative of L_0..L_n.
pub fn legendre_table(n: usize, s: f64, nder: usize) -> Vec<Vec<f64>> {
    assert!(nder <= 3);
    let mut tab = vec![vec![0.0; n + 1]; nder + 1];
    tab[0][0] = 1.0;
    if n >= 1 {
        tab[0][1] = s;
    }
    for k in 1..n {
        let kf = k as f64;
        tab[0][k + 1] = ((2.0 * kf + 1.0) * s * tab[0][k] - kf * tab[0][k - 1]) / (kf + 1.0);
    }
    // L'_{k+1} = L'_{k-1} + (2k+1) L_k, and likewise for higher derivatives.
    for d in 1..=nder {
        if n >= 1 {
            tab[d][1] = if d == 1 { 1.0 } else { 0.0 };
        }
        for k in 1..n {
            let kf = k as f64;
            tab[d][k + 1] = tab[d][k - 1] + (2.0 * kf + 1.0) * tab[d - 1][k];
        }
    }
    tab
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on L_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi-style initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Endpoint-vanishing basis D_a = L_a − L_{a+2}, a = 0..n_modes.
/// Returns per-node tables `vals[d][a]` for derivative orders d ≤ nder.
pub fn dirichlet_basis(n_modes: usize, s: f64, nder: usize) -> Vec<Vec<f64>> {
    let tab = legendre_table(n_modes + 1, s, nder);
    let mut out = vec![vec![0.0; n_modes]; nder + 1];
    for d in 0..=nder {
        for a in 0..n_modes {
            out[d][a] = tab[d][a] - tab[d][a + 2];
        }
    }
    out
}

/// Clamped basis C_a with C_a(±1) = C_a'(±1) = 0.
pub fn clamped_basis(n_modes: usize, s: f64, nder: usize) -> Vec<Vec<f64>> {
    let tab = legendre_table(n_modes + 3, s, nder);
    let mut out = vec![vec![0.0; n_modes]; nder + 1];
    for d in 0..=nder {
        for a in 0..n_modes {
            let af = a as f64;
            let c1 = -2.0 * (2.0 * af + 5.0) / (2.0 * af + 7.0);
            let c2 = (2.0 * af + 3.0) / (2.0 * af + 7.0);
            out[d][a] = tab[d][a] + c1 * tab[d][a + 2] + c2 * tab[d][a + 4];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is the highest exact degree for 8 nodes
        for deg in 0..=15usize {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(q, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn legendre_derivative_recurrence_matches_finite_differences() {
        let s = 0.3217;
        let h = 1e-6;
        let t0 = legendre_table(10, s, 3);
        let tp = legendre_table(10, s + h, 0);
        let tm = legendre_table(10, s - h, 0);
        for k in 0..=10 {
            let fd = (tp[0][k] - tm[0][k]) / (2.0 * h);
            assert_abs_diff_eq!(t0[1][k], fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn clamped_basis_vanishes_with_derivative_at_endpoints() {
        for &s in &[-1.0, 1.0] {
            let b = clamped_basis(12, s, 1);
            for a in 0..12 {
                assert_abs_diff_eq!(b[0][a], 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(b[1][a], 0.0, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn dirichlet_basis_vanishes_at_endpoints() {
        for &s in &[-1.0, 1.0] {
            let b = dirichlet_basis(12, s, 0);
            for a in 0..12 {
                assert_abs_diff_eq!(b[0][a], 0.0, epsilon = 1e-12);
            }
        }
    }
}
