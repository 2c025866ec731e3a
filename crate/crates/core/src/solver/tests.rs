use std::sync::Arc;

use approx::assert_abs_diff_eq;

use super::*;
use crate::basis::build_basis;
use crate::boundary::BoundaryData;
use crate::domain::DomainSpec;
use crate::extension::build_extension;
use crate::forcing::{Component, ForcingHarmonic, ForcingSpec, YProfile};
use crate::galerkin::{assemble_with, AssemblyOptions};

struct Fixture {
    sys: GalerkinSystem,
}

fn forced_system(k: usize, amp: f64, nu: f64, chi: f64, alpha: f64, nonlinear: bool) -> Fixture {
    let dom = DomainSpec::new(2.0 * std::f64::consts::PI, 1.0, 4, 10).unwrap();
    let basis = Arc::new(build_basis(&dom, k).unwrap());
    let beta = BoundaryData::zero(1.0);
    let b = build_extension(&beta, 0.2, &basis).unwrap();
    let f = if amp == 0.0 {
        ForcingSpec::zero(1.0)
    } else {
        ForcingSpec::new(
            1.0,
            vec![ForcingHarmonic {
                component: Component::X,
                m_x: 0,
                m_t: 1,
                amplitude: amp,
                phase: 0.4,
                profile: YProfile::SinHalfWaves { j: 1 },
            }],
            &basis.grid,
            64,
        )
        .unwrap()
    };
    let sys = assemble_with(
        basis,
        &b,
        &b,
        &f,
        alpha,
        nu,
        chi,
        AssemblyOptions { nonlinear, ..Default::default() },
    )
    .unwrap();
    Fixture { sys }
}

#[test]
fn free_decay_of_an_eigenmode_is_exact_for_the_exponential_scheme() {
    // linear case: the stiff diagonal is integrated exactly
    let fx = forced_system(6, 0.0, 0.5, 0.7, 1.3, false);
    let sys = &fx.sys;
    let mut y0 = vec![0.0; 12];
    y0[0] = 1.0;
    let cfg = IntegratorConfig { n_steps: 2048, ..Default::default() };
    let traj = integrate(sys, &y0, 0.0, sys.tau, &cfg).unwrap();
    let expected = (-(sys.nu * sys.lambdas[0] / sys.alpha) * sys.tau).exp();
    assert!((traj.end()[0] - expected).abs() < 1e-6);
    assert!((traj.end()[0] - expected).abs() < 1e-12, "diagonal part should be exact");
}

#[test]
fn zero_data_zero_forcing_stays_at_rest() {
    let fx = forced_system(6, 0.0, 0.5, 0.7, 1.0, true);
    let cfg = IntegratorConfig { n_steps: 64, ..Default::default() };
    let traj = integrate(&fx.sys, &vec![0.0; 12], 0.0, fx.sys.tau, &cfg).unwrap();
    assert!(traj.states.iter().flatten().all(|v| *v == 0.0));
}

/// Exact solution of the forced linear system from an arbitrary start.
fn exact_linear_solution(sys: &GalerkinSystem, y0: &[f64], t: f64) -> Vec<f64> {
    let k = sys.k();
    let (resp0, _) = linear_periodic_response(sys, 0.0);
    let (resp_t, _) = linear_periodic_response(sys, t);
    let mut out = vec![0.0; 2 * k];
    for j in 0..k {
        let p = sys.nu * sys.lambdas[j] / sys.alpha;
        out[j] = resp_t[j] + (-p * t).exp() * (y0[j] - resp0[j]);
        let ph = sys.chi * sys.lambdas[j];
        out[k + j] = (-ph * t).exp() * y0[k + j];
    }
    out
}

#[test]
fn second_order_scheme_shows_richardson_ratio_four() {
    let fx = forced_system(4, 0.8, 0.5, 0.5, 1.0, false);
    let sys = &fx.sys;
    let mut y0 = vec![0.0; 8];
    y0[0] = 0.3;
    y0[4] = 0.2;
    let exact = exact_linear_solution(sys, &y0, sys.tau);
    let mut errs = Vec::new();
    for n_steps in [64usize, 128] {
        let cfg = IntegratorConfig { n_steps, scheme: TimeScheme::Etd2, ..Default::default() };
        let traj = integrate(sys, &y0, 0.0, sys.tau, &cfg).unwrap();
        let err: f64 = traj
            .end()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        errs.push(err);
    }
    let ratio = errs[0] / errs[1];
    assert!((ratio - 4.0).abs() < 0.5, "Richardson ratio {ratio} not ≈ 4 ({errs:?})");
}

#[test]
fn fourth_order_scheme_shows_richardson_ratio_sixteen() {
    let fx = forced_system(4, 0.8, 0.5, 0.5, 1.0, false);
    let sys = &fx.sys;
    let mut y0 = vec![0.0; 8];
    y0[0] = 0.3;
    let exact = exact_linear_solution(sys, &y0, sys.tau);
    let mut errs = Vec::new();
    for n_steps in [32usize, 64] {
        let cfg = IntegratorConfig { n_steps, scheme: TimeScheme::Etdrk4, ..Default::default() };
        let traj = integrate(sys, &y0, 0.0, sys.tau, &cfg).unwrap();
        let err: f64 = traj
            .end()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        errs.push(err);
    }
    let ratio = errs[0] / errs[1];
    assert!(ratio > 10.0 && ratio < 24.0, "Richardson ratio {ratio} not ≈ 16 ({errs:?})");
}

#[test]
fn poincare_map_of_the_autonomous_rest_state_is_rest() {
    let fx = forced_system(6, 0.0, 0.5, 0.7, 1.0, true);
    let cfg = IntegratorConfig { n_steps: 64, ..Default::default() };
    let p = poincare_map(&fx.sys, &vec![0.0; 12], &cfg).unwrap();
    assert!(p.iter().all(|v| *v == 0.0));
}

#[test]
fn poincare_map_is_lipschitz_with_jacobian_bound() {
    let fx = forced_system(4, 0.2, 0.5, 0.5, 1.0, true);
    let sys = &fx.sys;
    let cfg = IntegratorConfig { n_steps: 128, ..Default::default() };
    let s: Vec<f64> = (0..8).map(|i| 0.05 * ((i as f64) * 0.7).sin()).collect();
    let ps = poincare_map(sys, &s, &cfg).unwrap();
    // finite-difference Jacobian of the flow map
    let delta = 1e-6;
    let mut jac = nalgebra::DMatrix::<f64>::zeros(8, 8);
    for col in 0..8 {
        let mut sp = s.clone();
        sp[col] += delta;
        let pc = poincare_map(sys, &sp, &cfg).unwrap();
        for row in 0..8 {
            jac[(row, col)] = (pc[row] - ps[row]) / delta;
        }
    }
    let bound = jac.norm(); // Frobenius dominates the operator norm
    let gap = 1e-4;
    let s2: Vec<f64> = s.iter().enumerate().map(|(i, v)| v + gap * ((i as f64) - 3.0) / 8.0).collect();
    let p2 = poincare_map(sys, &s2, &cfg).unwrap();
    let dp: f64 = p2.iter().zip(&ps).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let ds: f64 = s2.iter().zip(&s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    assert!(dp <= bound * ds * (1.0 + 1e-3), "dp = {dp}, bound·ds = {}", bound * ds);
}

#[test]
fn all_three_strategies_match_the_closed_form_linear_response() {
    let fx = forced_system(8, 0.9, 0.8, 0.6, 1.0, false);
    let sys = &fx.sys;
    let cfg = IntegratorConfig { n_steps: 512, ..Default::default() };
    let (c_exact, _) = linear_periodic_response(sys, 0.0);
    let scale = c_exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for strategy in [SolveStrategy::march(), SolveStrategy::newton(), SolveStrategy::picard()] {
        let orbit = solve_periodic(sys, &strategy, &cfg).unwrap();
        assert!(orbit.periodicity_residual <= 1e-9 * (1.0 + scale), "{}", strategy.name());
        for j in 0..sys.k() {
            assert!(
                (orbit.states[0][j] - c_exact[j]).abs() <= 1e-7 * scale.max(1e-12),
                "{}: mode {j}: {} vs {}",
                strategy.name(),
                orbit.states[0][j],
                c_exact[j]
            );
        }
    }
}

#[test]
fn zero_input_orbit_is_identically_zero_for_all_strategies() {
    let fx = forced_system(6, 0.0, 0.5, 0.7, 1.0, true);
    let cfg = IntegratorConfig { n_steps: 128, ..Default::default() };
    for strategy in [SolveStrategy::march(), SolveStrategy::newton(), SolveStrategy::picard()] {
        let orbit = solve_periodic(&fx.sys, &strategy, &cfg).unwrap();
        assert!(orbit.states.iter().flatten().all(|v| v.abs() < 1e-14));
        assert_eq!(orbit.periodicity_residual, 0.0);
    }
}

#[test]
fn strategies_agree_on_a_small_amplitude_nonlinear_run() {
    let fx = forced_system(8, 0.1, 0.6, 0.5, 1.0, true);
    let sys = &fx.sys;
    let cfg = IntegratorConfig { n_steps: 512, ..Default::default() };
    let march = solve_periodic(sys, &SolveStrategy::march(), &cfg).unwrap();
    let newton = solve_periodic(sys, &SolveStrategy::newton(), &cfg).unwrap();
    let picard = solve_periodic(sys, &SolveStrategy::picard(), &cfg).unwrap();
    assert!(march.sup_energy_gap(&newton, sys.alpha) < 1e-6);
    assert!(march.sup_energy_gap(&picard, sys.alpha) < 1e-6);
    // re-integration over one period reproduces the orbit end
    let re = integrate(sys, &march.states[0], 0.0, sys.tau, &cfg).unwrap();
    let diff: Vec<f64> =
        re.end().iter().zip(&march.states[0]).map(|(a, b)| a - b).collect();
    assert!(energy_norm_flat(sys, &diff) <= 2e-9);
}

#[test]
fn march_reports_not_converged_with_smallness_hint() {
    let fx = forced_system(6, 0.5, 0.5, 0.5, 1.0, true);
    let cfg = IntegratorConfig { n_steps: 128, ..Default::default() };
    let strategy = SolveStrategy::March { tol_fp: 1e-16, max_periods: 2 };
    match solve_periodic(&fx.sys, &strategy, &cfg) {
        Err(Error::NotConverged { strategy: "march", hint, .. }) => {
            assert!(hint.contains("smallness"));
        }
        other => panic!("expected NotConverged, got {other:?}"),
    }
}

#[test]
fn contraction_probe_with_zero_perturbation_reports_zero_distance() {
    let fx = forced_system(6, 0.1, 0.5, 0.5, 1.0, true);
    let cfg = IntegratorConfig { n_steps: 256, ..Default::default() };
    let orbit = solve_periodic(&fx.sys, &SolveStrategy::march(), &cfg).unwrap();
    let rep = contraction_probe(&fx.sys, &orbit, 0.0, 4).unwrap();
    assert!(rep.per_period_dist2.iter().all(|d| *d == 0.0));
    assert_eq!(rep.q_emp, 0.0);
}

#[test]
fn linear_decay_rate_matches_the_modal_oracle() {
    // slow dissipation so ten periods stay well above underflow
    let fx = forced_system(6, 0.3, 0.05, 0.09, 1.5, false);
    let sys = &fx.sys;
    let cfg = IntegratorConfig { n_steps: 256, ..Default::default() };
    let orbit = solve_periodic(sys, &SolveStrategy::newton(), &cfg).unwrap();
    let rep = contraction_probe(sys, &orbit, 1e-3, 12).unwrap();
    // squared-distance decay rate: slowest of the modal exponents, doubled
    let q_oracle = 2.0
        * sys
            .lambdas
            .iter()
            .map(|l| (sys.nu * l / sys.alpha).min(sys.chi * l))
            .fold(f64::INFINITY, f64::min);
    assert!(
        (rep.q_emp - q_oracle).abs() / q_oracle < 0.05,
        "q_emp = {}, oracle = {q_oracle}",
        rep.q_emp
    );
    assert!(rep.monotone_after_first);
    assert!(rep.l_emp > 0.0);
}

#[test]
fn small_amplitude_nonlinear_distances_decay_monotonically() {
    let fx = forced_system(6, 0.1, 0.4, 0.3, 1.0, true);
    let sys = &fx.sys;
    let cfg = IntegratorConfig { n_steps: 256, ..Default::default() };
    let orbit = solve_periodic(sys, &SolveStrategy::march(), &cfg).unwrap();
    let rep = contraction_probe(sys, &orbit, 1e-4, 10).unwrap();
    assert!(rep.monotone_after_first, "distances: {:?}", rep.per_period_dist2);
    assert!(rep.q_emp > 0.0);
}

#[test]
fn integrator_rejects_spans_that_are_not_whole_steps() {
    let fx = forced_system(4, 0.0, 0.5, 0.5, 1.0, false);
    let cfg = IntegratorConfig { n_steps: 64, ..Default::default() };
    assert!(integrate(&fx.sys, &vec![0.0; 8], 0.0, 0.37 * fx.sys.tau / 64.0, &cfg).is_err());
}

#[test]
fn phi_functions_match_reference_values() {
    // smooth across the series/closed-form switch
    for &z in &[-2.0, -0.9, -0.5001, -0.4999, -0.1, -1e-8, 0.0] {
        let (p1, p2, p3) = phi123(z);
        if z.abs() < 1e-4 {
            // the naive quotients cancel catastrophically here; compare
            // against the leading Taylor terms instead
            assert_abs_diff_eq!(p1, 1.0 + z / 2.0 + z * z / 6.0, epsilon = 1e-13);
            assert_abs_diff_eq!(p2, 0.5 + z / 6.0 + z * z / 24.0, epsilon = 1e-13);
            assert_abs_diff_eq!(p3, 1.0 / 6.0 + z / 24.0 + z * z / 120.0, epsilon = 1e-13);
        } else {
            let ez = z.exp();
            assert_abs_diff_eq!(p1, (ez - 1.0) / z, epsilon = 1e-12);
            assert_abs_diff_eq!(p2, (ez - 1.0 - z) / (z * z), epsilon = 1e-10);
            assert_abs_diff_eq!(p3, (ez - 1.0 - z - 0.5 * z * z) / (z * z * z), epsilon = 1e-9);
        }
    }
}
