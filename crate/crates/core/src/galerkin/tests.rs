use std::sync::Arc;

use approx::assert_abs_diff_eq;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::basis::{build_basis, sample_mode};
use crate::boundary::{BoundaryData, Harmonic, WallData};
use crate::domain::DomainSpec;
use crate::extension::build_extension;
use crate::forcing::{Component, ForcingHarmonic, YProfile};

fn fixture_domain() -> DomainSpec {
    DomainSpec::new(2.0 * std::f64::consts::PI, 1.0, 8, 12).unwrap()
}

fn lifted_system(k: usize) -> (Arc<StokesBasis>, GalerkinSystem, ExtensionField, ExtensionField) {
    let basis = Arc::new(build_basis(&fixture_domain(), k).unwrap());
    let beta1 = BoundaryData::new(
        1.0,
        WallData {
            tangential: vec![Harmonic { m_x: 1, m_t: 1, amplitude: 0.3, phase: 0.2 }],
            normal: vec![],
        },
        WallData::default(),
    )
    .unwrap();
    let beta2 = BoundaryData::new(
        1.0,
        WallData::default(),
        WallData {
            tangential: vec![Harmonic { m_x: 0, m_t: 1, amplitude: 0.2, phase: 0.0 }],
            normal: vec![],
        },
    )
    .unwrap();
    let b1 = build_extension(&beta1, 0.2, &basis).unwrap();
    let b2 = build_extension(&beta2, 0.2, &basis).unwrap();
    let f = ForcingSpec::new(
        1.0,
        vec![ForcingHarmonic {
            component: Component::X,
            m_x: 0,
            m_t: 1,
            amplitude: 0.4,
            phase: 0.3,
            profile: YProfile::SinHalfWaves { j: 1 },
        }],
        &basis.grid,
        64,
    )
    .unwrap();
    let sys = assemble(basis.clone(), &b1, &b2, &f, 1.3, 0.7, 0.9).unwrap();
    (basis, sys, b1, b2)
}

fn bare_system(k: usize) -> (Arc<StokesBasis>, GalerkinSystem) {
    let basis = Arc::new(build_basis(&fixture_domain(), k).unwrap());
    let beta = BoundaryData::zero(1.0);
    let b = build_extension(&beta, 0.2, &basis).unwrap();
    let sys = assemble(basis.clone(), &b, &b, &ForcingSpec::zero(1.0), 1.0, 1.0, 1.0).unwrap();
    (basis, sys)
}

#[test]
fn advection_tensor_matches_independent_quadrature() {
    let (basis, sys, _, _) = lifted_system(6);
    let conv = sys.conv.as_ref().unwrap();
    // fine independent grid: modes resampled, quadrature redone from scratch
    let fine = basis.domain.grid_with(2 * basis.grid.n_x(), 2 * basis.grid.n_y());
    let n = fine.len();
    let samples: Vec<_> =
        basis.modes.iter().map(|m| sample_mode(&basis.domain, &fine, m)).collect();
    for i in 0..6 {
        for j in 0..6 {
            for l in 0..6 {
                let mut acc = 0.0;
                let ny = fine.n_y();
                for idx in 0..n {
                    let iy = idx % ny;
                    let w1 = samples[i].u1[idx] * samples[j].d1x[idx]
                        + samples[i].u2[idx] * samples[j].d1y[idx];
                    let w2 = samples[i].u1[idx] * samples[j].d2x[idx]
                        + samples[i].u2[idx] * samples[j].d2y[idx];
                    acc += fine.weight(iy) * (w1 * samples[l].u1[idx] + w2 * samples[l].u2[idx]);
                }
                assert_abs_diff_eq!(conv.get(i, j, l), acc, epsilon = 1e-8);
            }
        }
    }
}

#[test]
fn advection_tensor_is_antisymmetric_in_the_last_two_slots() {
    let (_, sys) = bare_system(16);
    let conv = sys.conv.as_ref().unwrap();
    for i in 0..16 {
        for j in 0..16 {
            for l in 0..16 {
                let a = conv.get(i, j, l);
                let b = conv.get(i, l, j);
                assert!((a + b).abs() < 1e-9, "T[{i}][{j}][{l}] = {a}, T[{i}][{l}][{j}] = {b}");
            }
        }
    }
}

#[test]
fn quadratic_terms_are_energy_orthogonal() {
    let (_, sys) = bare_system(12);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let c: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let [quu, qhh, quh, qhu] = sys.quadratics(&c, &d);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        // (P(u·∇u), u) = 0 and (P(u·∇h), h) = 0
        assert!(dot(&quu, &c).abs() < 1e-9);
        assert!(dot(&quh, &d).abs() < 1e-9);
        // magnetic cross terms cancel in the α-weighted energy balance
        assert!((dot(&qhh, &c) + dot(&qhu, &d)).abs() < 1e-9);
    }
}

#[test]
fn zero_inputs_reduce_to_the_homogeneous_quadratic_system() {
    let (_, sys) = bare_system(8);
    for arr in [&sys.b1t_proj, &sys.ab1_proj, &sys.b1gb1_proj, &sys.b2gb2_proj, &sys.b2t_proj,
        &sys.ab2_proj, &sys.b2gb1_proj, &sys.b1gb2_proj, &sys.f_proj]
    {
        assert!(arr.is_zero());
    }
    for m in [&sys.m_ugb1, &sys.m_b1gu, &sys.m_b2gh, &sys.m_hgb2, &sys.m_b1gh, &sys.m_hgb1,
        &sys.m_ugb2, &sys.m_b2gu]
    {
        assert!(m.is_zero());
    }
    let (ru, rd) = sys.rhs_nonlinear(0.37, &vec![0.0; 8], &vec![0.0; 8]);
    assert!(ru.iter().chain(rd.iter()).all(|v| *v == 0.0));
}

#[test]
fn coupling_terms_match_direct_quadrature_in_isolation() {
    let (basis, sys, b1, b2) = lifted_system(8);
    let grid = &basis.grid;
    let k = 8;
    // pick a collocation time so the stored samples are directly comparable
    let it = 5;
    let t = b1.times[it];

    let project = |fx: &[f64], fy: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|l| {
                let sl = basis.samples(l);
                grid.dot_scalar(fx, &sl.u1) + grid.dot_scalar(fy, &sl.u2)
            })
            .collect()
    };

    // ∂t B₁ projection
    let want = project(&b1.bt_samples[it].ux, &b1.bt_samples[it].uy);
    let got = sys.b1t_proj.eval(t, sys.tau, k);
    for (g, w) in got.iter().zip(&want) {
        assert_abs_diff_eq!(g, w, epsilon = 1e-10);
    }

    // Stokes term of B₂: (∇B₂, ∇ω_l)
    let g2 = &b2.grad_samples[it];
    let want: Vec<f64> = (0..k)
        .map(|l| {
            let sl = basis.samples(l);
            grid.dot_scalar(&g2[0], &sl.d1x)
                + grid.dot_scalar(&g2[1], &sl.d1y)
                + grid.dot_scalar(&g2[2], &sl.d2x)
                + grid.dot_scalar(&g2[3], &sl.d2y)
        })
        .collect();
    let got = sys.ab2_proj.eval(t, sys.tau, k);
    for (g, w) in got.iter().zip(&want) {
        assert_abs_diff_eq!(g, w, epsilon = 1e-10);
    }

    // bilinear lift terms (B_a·∇)B_b for all four pairings
    let pairings: [(&ExtensionField, &ExtensionField, &FourierVec); 4] = [
        (&b1, &b1, &sys.b1gb1_proj),
        (&b2, &b2, &sys.b2gb2_proj),
        (&b2, &b1, &sys.b2gb1_proj),
        (&b1, &b2, &sys.b1gb2_proj),
    ];
    for (ba, bb, arr) in pairings {
        let fa = &ba.b_samples[it];
        let gb = &bb.grad_samples[it];
        let n = grid.len();
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        for i in 0..n {
            w1[i] = fa.ux[i] * gb[0][i] + fa.uy[i] * gb[1][i];
            w2[i] = fa.ux[i] * gb[2][i] + fa.uy[i] * gb[3][i];
        }
        let want = project(&w1, &w2);
        let got = arr.eval(t, sys.tau, k);
        for (g, w) in got.iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-10);
        }
    }

    // state-coupling matrices against quadrature columns
    let n = grid.len();
    for i in 0..k {
        let si = basis.samples(i);
        let g1 = &b1.grad_samples[it];
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        // (ω_i·∇)B₁
        for idx in 0..n {
            w1[idx] = si.u1[idx] * g1[0][idx] + si.u2[idx] * g1[1][idx];
            w2[idx] = si.u1[idx] * g1[2][idx] + si.u2[idx] * g1[3][idx];
        }
        let want = project(&w1, &w2);
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        let mut got = vec![0.0; k];
        sys.m_ugb1.apply_into(t, sys.tau, 1.0, &e, &mut got);
        for (g, w) in got.iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-10);
        }
        // (B₂·∇)ω_i
        let fb = &b2.b_samples[it];
        for idx in 0..n {
            w1[idx] = fb.ux[idx] * si.d1x[idx] + fb.uy[idx] * si.d1y[idx];
            w2[idx] = fb.ux[idx] * si.d2x[idx] + fb.uy[idx] * si.d2y[idx];
        }
        let want = project(&w1, &w2);
        let mut got = vec![0.0; k];
        sys.m_b2gu.apply_into(t, sys.tau, 1.0, &e, &mut got);
        for (g, w) in got.iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-10);
        }
    }
}

#[test]
fn rhs_directional_derivative_matches_finite_differences() {
    let (_, sys, _, _) = lifted_system(8);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let c: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let d: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let t = 0.41;
    for _ in 0..5 {
        let vc: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vd: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // the right-hand side is quadratic in the state, so the unit-step
        // central difference is its exact directional derivative
        let plus = {
            let cp: Vec<f64> = c.iter().zip(&vc).map(|(a, b)| a + b).collect();
            let dp: Vec<f64> = d.iter().zip(&vd).map(|(a, b)| a + b).collect();
            sys.state_derivative(t, &cp, &dp)
        };
        let minus = {
            let cm: Vec<f64> = c.iter().zip(&vc).map(|(a, b)| a - b).collect();
            let dm: Vec<f64> = d.iter().zip(&vd).map(|(a, b)| a - b).collect();
            sys.state_derivative(t, &cm, &dm)
        };
        let exact: Vec<f64> = plus
            .0
            .iter()
            .chain(plus.1.iter())
            .zip(minus.0.iter().chain(minus.1.iter()))
            .map(|(p, m)| (p - m) / 2.0)
            .collect();
        // small-step central difference
        let h = 1e-6;
        let plus_h = {
            let cp: Vec<f64> = c.iter().zip(&vc).map(|(a, b)| a + h * b).collect();
            let dp: Vec<f64> = d.iter().zip(&vd).map(|(a, b)| a + h * b).collect();
            sys.state_derivative(t, &cp, &dp)
        };
        let minus_h = {
            let cm: Vec<f64> = c.iter().zip(&vc).map(|(a, b)| a - h * b).collect();
            let dm: Vec<f64> = d.iter().zip(&vd).map(|(a, b)| a - h * b).collect();
            sys.state_derivative(t, &cm, &dm)
        };
        let scale = exact.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        for (i, e) in exact.iter().enumerate() {
            let fd = (if i < 8 { plus_h.0[i] - minus_h.0[i] } else { plus_h.1[i - 8] - minus_h.1[i - 8] })
                / (2.0 * h);
            assert!((fd - e).abs() / scale < 1e-6, "direction entry {i}: {fd} vs {e}");
        }
    }
}

#[test]
fn magnetic_block_is_invariant_when_b2_and_d_vanish() {
    // with h = 0 and no magnetic wall data the induction equation stays zero
    let basis = Arc::new(build_basis(&fixture_domain(), 8).unwrap());
    let beta1 = BoundaryData::new(
        1.0,
        WallData {
            tangential: vec![Harmonic { m_x: 0, m_t: 1, amplitude: 0.5, phase: 0.0 }],
            normal: vec![],
        },
        WallData::default(),
    )
    .unwrap();
    let b1 = build_extension(&beta1, 0.2, &basis).unwrap();
    let b2 = build_extension(&BoundaryData::zero(1.0), 0.2, &basis).unwrap();
    let sys =
        assemble(basis.clone(), &b1, &b2, &ForcingSpec::zero(1.0), 1.0, 1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let c: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, rd) = sys.rhs_nonlinear(rng.gen_range(0.0..1.0), &c, &vec![0.0; 8]);
        assert!(rd.iter().all(|v| v.abs() < 1e-13), "magnetic leak: {rd:?}");
    }
}

#[test]
fn tensor_and_pseudo_spectral_paths_agree() {
    let basis = Arc::new(build_basis(&fixture_domain(), 10).unwrap());
    let beta = BoundaryData::zero(1.0);
    let b = build_extension(&beta, 0.2, &basis).unwrap();
    let f = ForcingSpec::zero(1.0);
    let tensor = assemble_with(
        basis.clone(),
        &b,
        &b,
        &f,
        1.0,
        1.0,
        1.0,
        AssemblyOptions { force_path: Some(NonlinearPath::Tensor), ..Default::default() },
    )
    .unwrap();
    let pseudo = assemble_with(
        basis.clone(),
        &b,
        &b,
        &f,
        1.0,
        1.0,
        1.0,
        AssemblyOptions { force_path: Some(NonlinearPath::PseudoSpectral), ..Default::default() },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let c: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let qa = tensor.quadratics(&c, &d);
        let qb = pseudo.quadratics(&c, &d);
        for (a, b) in qa.iter().zip(qb.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-8);
            }
        }
    }
}

#[test]
fn linearized_rhs_at_the_state_equals_the_nonlinear_rhs() {
    let (_, sys, _, _) = lifted_system(8);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (a, b) = sys.rhs_nonlinear(0.2, &c, &d);
    let (x, y) = sys.rhs_linearized(0.2, &c, &d);
    assert_eq!(a, x);
    assert_eq!(b, y);
}

#[test]
fn coupling_arrays_wrap_exactly_over_one_period() {
    let (_, sys, _, _) = lifted_system(8);
    let k = 8;
    for &t in &[0.0, 0.31, 0.77] {
        let a = sys.b1t_proj.eval(t, sys.tau, k);
        let b = sys.b1t_proj.eval(t + sys.tau, sys.tau, k);
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let ma = sys.m_ugb1.eval_matrix(t, sys.tau);
        let mb = sys.m_ugb1.eval_matrix(t + sys.tau, sys.tau);
        for (x, y) in ma.iter().zip(&mb) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }
}
