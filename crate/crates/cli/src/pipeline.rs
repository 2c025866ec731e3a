//! Orchestration: basis (with cache) → lifts → assembly → periodic solve →
//! estimate verification, plus the convergence sweep and the pure
//! Navier-Stokes reduction mode.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use taumhd::extension::ExtensionOptions;
use taumhd::{
    assemble_with, build_basis, build_extension_with, contraction_probe, linear_periodic_response,
    run_estimate_suite, solve_periodic, AssemblyOptions, BoundaryData, EstimateReport,
    ExtensionField, ForcingSpec, GalerkinSystem, PeriodicOrbit, StokesBasis, SuiteInput,
    Tolerances,
};

use crate::config::RunConfig;
use crate::files::{
    self, certificate_summary, load_basis_cache, load_boundary, load_forcing, save_basis_cache,
    write_certificate_csv, write_orbit_csv, BoundaryFile,
};

pub struct Pipeline {
    pub config: RunConfig,
    pub config_hash: String,
    pub basis: Arc<StokesBasis>,
    pub beta1: BoundaryData,
    pub beta2: BoundaryData,
    pub b1: ExtensionField,
    pub b2: ExtensionField,
    pub forcing: ForcingSpec,
    pub sys: GalerkinSystem,
    pub boundary_file: BoundaryFile,
}

pub fn build_pipeline(config: &RunConfig) -> Result<Pipeline> {
    let config_hash = config.content_hash();
    let domain = config.domain_spec();
    let cache_dir = config.cache_dir();

    let basis = match load_basis_cache(&cache_dir, &domain, config.k)
        .context("stage basis: reading cache")?
    {
        Some(b) => b,
        None => {
            let b = build_basis(&domain, config.k).context("stage basis")?;
            save_basis_cache(&cache_dir, &b).context("stage basis: writing cache")?;
            b
        }
    };
    basis.validate(&Tolerances::default()).context("stage basis: validation")?;
    let basis = Arc::new(basis);

    let (beta1, beta2, boundary_file) =
        load_boundary(config.boundary_file.as_deref(), config.tau).context("stage boundary")?;
    let ext_opts = ExtensionOptions {
        n_t: config.solver.n_t,
        probe_seed: config.seed,
        ..Default::default()
    };
    let b1 = build_extension_with(&beta1, config.epsilon, &basis, ext_opts)
        .context("stage extension: velocity lift")?;
    let b2 = build_extension_with(&beta2, config.epsilon, &basis, ext_opts)
        .context("stage extension: magnetic lift")?;

    let forcing = load_forcing(
        config.forcing_file.as_deref(),
        config.tau,
        &basis.grid,
        config.solver.n_t,
    )
    .context("stage forcing")?;

    let sys = assemble_with(
        basis.clone(),
        &b1,
        &b2,
        &forcing,
        config.alpha,
        config.nu,
        config.chi,
        AssemblyOptions {
            n_t: config.solver.n_t,
            nonlinear: !config.linear,
            ..Default::default()
        },
    )
    .context("stage assembly")?;

    Ok(Pipeline {
        config: config.clone(),
        config_hash,
        basis,
        beta1,
        beta2,
        b1,
        b2,
        forcing,
        sys,
        boundary_file,
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub strategy: String,
    pub scheme: String,
    pub k: usize,
    pub n_steps: usize,
    pub tol_fp: f64,
    pub lambda_min: f64,
    pub hopf_ratio_b1: f64,
    pub hopf_ratio_b2: f64,
    pub periodicity_residual: f64,
    pub iterations: usize,
    pub all_checks_pass: bool,
    pub n_checks: usize,
    pub closed_form_error: Option<f64>,
    pub magnetic_to_velocity_ratio: Option<f64>,
    pub wall_time_s: f64,
    pub output_hashes: Vec<(String, String)>,
}

pub struct SolveOutcome {
    pub orbit: PeriodicOrbit,
    pub report: EstimateReport,
    pub manifest_path: PathBuf,
    pub orbit_path: PathBuf,
    pub certificate_path: PathBuf,
    pub all_checks_pass: bool,
}

fn sha256_file(path: &std::path::Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher.finalize()[..16].iter().map(|b| format!("{b:02x}")).collect())
}

/// Max relative deviation of a linear run from the closed-form periodic
/// response; None unless the run is linear with homogeneous walls.
fn closed_form_error(pl: &Pipeline, orbit: &PeriodicOrbit) -> Option<f64> {
    if !pl.config.linear || !pl.b1.is_zero() || !pl.b2.is_zero() {
        return None;
    }
    let mut scale = 0.0f64;
    let mut err = 0.0f64;
    for (i, &t) in orbit.times.iter().enumerate() {
        let (c, _) = linear_periodic_response(&pl.sys, t);
        let norm: f64 = c.iter().map(|v| v * v).sum::<f64>();
        scale = scale.max(norm.sqrt());
        let e: f64 = orbit.states[i][..orbit.k]
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let eh: f64 =
            orbit.states[i][orbit.k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        err = err.max(e + eh);
    }
    Some(if scale > 0.0 { err / scale } else { err })
}

pub fn solve_with_pipeline(pl: &Pipeline, command: &str) -> Result<SolveOutcome> {
    let started = Instant::now();
    let cfg = pl.config.integrator()?;
    let strategy = pl.config.strategy()?;
    let orbit = solve_periodic(&pl.sys, &strategy, &cfg).context("stage solve")?;

    let decay = if pl.config.verify.contraction_probe {
        Some(
            contraction_probe(
                &pl.sys,
                &orbit,
                pl.config.verify.probe_perturbation,
                pl.config.verify.probe_periods,
            )
            .context("stage verify: contraction probe")?,
        )
    } else {
        None
    };
    let report = run_estimate_suite(&SuiteInput {
        orbit: &orbit,
        sys: &pl.sys,
        b1: &pl.b1,
        b2: &pl.b2,
        forcing: &pl.forcing,
        gamma: pl.config.gamma,
        gm_trials: pl.config.verify.gm_trials,
        seed: pl.config.seed,
        alt_orbit: None,
        decay: decay.as_ref(),
    })
    .context("stage verify")?;

    std::fs::create_dir_all(&pl.config.out_dir)?;
    let orbit_path = pl.config.out_dir.join("orbit.csv");
    let certificate_path = pl.config.out_dir.join("certificate.csv");
    let summary_path = pl.config.out_dir.join("certificate.txt");
    let manifest_path = pl.config.out_dir.join("manifest.json");
    write_orbit_csv(&orbit_path, &orbit, &pl.config_hash)?;
    write_certificate_csv(&certificate_path, &report, &pl.config_hash)?;
    std::fs::write(&summary_path, certificate_summary(&report, &pl.config_hash))?;

    let all_pass = files::all_checks_pass(&report.checks);
    let manifest = Manifest {
        command: command.to_string(),
        config_hash: pl.config_hash.clone(),
        seed: pl.config.seed,
        strategy: orbit.strategy.to_string(),
        scheme: pl.config.solver.scheme.clone(),
        k: pl.config.k,
        n_steps: pl.config.solver.n_steps,
        tol_fp: pl.config.solver.tol_fp,
        lambda_min: pl.basis.lambda_min,
        hopf_ratio_b1: pl.b1.hopf_ratio,
        hopf_ratio_b2: pl.b2.hopf_ratio,
        periodicity_residual: orbit.periodicity_residual,
        iterations: orbit.iterations,
        all_checks_pass: all_pass,
        n_checks: report.checks.len(),
        closed_form_error: closed_form_error(pl, &orbit),
        magnetic_to_velocity_ratio: None,
        wall_time_s: started.elapsed().as_secs_f64(),
        output_hashes: vec![
            ("orbit.csv".into(), sha256_file(&orbit_path)?),
            ("certificate.csv".into(), sha256_file(&certificate_path)?),
        ],
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(SolveOutcome {
        orbit,
        report,
        manifest_path,
        orbit_path,
        certificate_path,
        all_checks_pass: all_pass,
    })
}

pub fn cmd_solve(config: &RunConfig) -> Result<SolveOutcome> {
    let pl = build_pipeline(config)?;
    solve_with_pipeline(&pl, "solve")
}

/// Per-k summary of the convergence sweep.
#[derive(Debug, Serialize)]
pub struct SweepEntry {
    pub k: usize,
    pub status: String,
    pub periodicity_residual: Option<f64>,
    pub iterations: Option<usize>,
    pub sup_energy: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SweepResult {
    pub config_hash: String,
    pub entries: Vec<SweepEntry>,
    /// sup-energy gaps between consecutive resolutions.
    pub gaps: Vec<f64>,
    pub pass: bool,
    pub wall_time_s: f64,
}

pub fn cmd_converge(config: &RunConfig, k_list: &[usize]) -> Result<SweepResult> {
    if k_list.is_empty() {
        bail!("k list must not be empty");
    }
    if !k_list.windows(2).all(|w| w[0] < w[1]) {
        bail!("k list must be strictly increasing, got {k_list:?}");
    }
    let started = Instant::now();
    let mut entries = Vec::new();
    let mut orbits: Vec<Option<PeriodicOrbit>> = Vec::new();
    for &k in k_list {
        let mut cfg_k = config.clone();
        cfg_k.k = k;
        cfg_k.out_dir = config.out_dir.join(format!("k{k}"));
        let outcome = build_pipeline(&cfg_k).and_then(|pl| solve_with_pipeline(&pl, "converge"));
        match outcome {
            Ok(out) => {
                entries.push(SweepEntry {
                    k,
                    status: "ok".into(),
                    periodicity_residual: Some(out.orbit.periodicity_residual),
                    iterations: Some(out.orbit.iterations),
                    sup_energy: Some(out.orbit.sup_energy(config.alpha)),
                });
                orbits.push(Some(out.orbit));
            }
            Err(e) => {
                entries.push(SweepEntry {
                    k,
                    status: format!("error: {e:#}"),
                    periodicity_residual: None,
                    iterations: None,
                    sup_energy: None,
                });
                orbits.push(None);
            }
        }
    }
    let mut gaps = Vec::new();
    let mut all_ok = orbits.iter().all(Option::is_some);
    if all_ok {
        // gaps at round-off level count as zero, otherwise the factor-4
        // rule below turns measurement noise into a failure once the
        // forcing is fully resolved
        let scale = orbits
            .iter()
            .flatten()
            .map(|o| o.sup_energy(config.alpha))
            .fold(0.0f64, f64::max);
        let floor = 1e-13 * (1.0 + scale);
        for pair in orbits.windows(2) {
            let (a, b) = (pair[0].as_ref().unwrap(), pair[1].as_ref().unwrap());
            let g = a.sup_energy_gap(b, config.alpha);
            gaps.push(if g <= floor { 0.0 } else { g });
        }
    }
    // nonincreasing from the second gap onward, and a factor-4 overall drop
    if all_ok && gaps.len() >= 2 {
        let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
        let drop_ok = *gaps.last().unwrap() <= gaps[0] / 4.0;
        all_ok = monotone && drop_ok;
    }
    let result = SweepResult {
        config_hash: config.content_hash(),
        entries,
        gaps,
        pass: all_ok,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    std::fs::create_dir_all(&config.out_dir)?;
    std::fs::write(
        config.out_dir.join("sweep.json"),
        serde_json::to_string_pretty(&result)?,
    )?;
    Ok(result)
}

/// Pure Navier-Stokes reduction: no magnetic wall data, zero magnetic start;
/// the induction block must stay at numerical zero.
pub fn cmd_ns_mode(config: &RunConfig) -> Result<SolveOutcome> {
    let pl = build_pipeline(config)?;
    if !pl.boundary_file.magnetic.is_empty() {
        bail!("ns-mode requires empty magnetic wall data (found nonzero magnetic section)");
    }
    let mut out = solve_with_pipeline(&pl, "ns-mode")?;
    let k = out.orbit.k;
    let sup_u = out
        .orbit
        .states
        .iter()
        .map(|s| s[..k].iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let sup_h = out
        .orbit
        .states
        .iter()
        .map(|s| s[k..].iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    if sup_h > 1e-12 * (1.0 + sup_u) {
        return Err(taumhd::Error::MagneticLeak {
            sup_h,
            bound: 1e-12 * (1.0 + sup_u),
        })
        .context("ns-mode magnetic invariant");
    }
    // record the measured ratio in the manifest
    let text = std::fs::read_to_string(&out.manifest_path)?;
    let mut manifest: serde_json::Value = serde_json::from_str(&text)?;
    manifest["magnetic_to_velocity_ratio"] =
        serde_json::json!(if sup_u > 0.0 { sup_h / (1.0 + sup_u) } else { sup_h });
    std::fs::write(&out.manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    out.all_checks_pass = out.all_checks_pass && sup_h <= 1e-12 * (1.0 + sup_u);
    Ok(out)
}

/// Re-run the certificate suite on a saved orbit.
pub fn cmd_verify(config: &RunConfig, orbit_path: &std::path::Path) -> Result<EstimateReport> {
    let pl = build_pipeline(config)?;
    let (mut orbit, stored_hash) = files::read_orbit_csv(orbit_path)?;
    if stored_hash != pl.config_hash {
        bail!(
            "orbit {} was produced by config {stored_hash}, not the given config {}",
            orbit_path.display(),
            pl.config_hash
        );
    }
    // recompute the residual against this system
    let diff: Vec<f64> = orbit
        .states
        .last()
        .unwrap()
        .iter()
        .zip(&orbit.states[0])
        .map(|(a, b)| a - b)
        .collect();
    orbit.periodicity_residual =
        pl.sys.energy_norm(&diff[..orbit.k], &diff[orbit.k..]);
    let report = run_estimate_suite(&SuiteInput {
        orbit: &orbit,
        sys: &pl.sys,
        b1: &pl.b1,
        b2: &pl.b2,
        forcing: &pl.forcing,
        gamma: pl.config.gamma,
        gm_trials: pl.config.verify.gm_trials,
        seed: pl.config.seed,
        alt_orbit: None,
        decay: None,
    })?;
    std::fs::create_dir_all(&pl.config.out_dir)?;
    write_certificate_csv(&pl.config.out_dir.join("certificate.csv"), &report, &pl.config_hash)?;
    std::fs::write(
        pl.config.out_dir.join("certificate.txt"),
        certificate_summary(&report, &pl.config_hash),
    )?;
    Ok(report)
}

/// Warm the basis cache and report the eigenvalue range.
pub fn cmd_basis(config: &RunConfig) -> Result<PathBuf> {
    let domain = config.domain_spec();
    let basis = build_basis(&domain, config.k)?;
    basis.validate(&Tolerances::default())?;
    let path = save_basis_cache(&config.cache_dir(), &basis)?;
    println!(
        "basis ready: k = {}, lambda in [{:.6e}, {:.6e}], cache {}",
        basis.k(),
        basis.lambda_min,
        basis.lambda(basis.k() - 1),
        path.display()
    );
    Ok(path)
}
