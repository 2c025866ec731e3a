//! File formats: wall-data and forcing harmonic lists (TOML), orbit CSV,
//! certificate CSV + text summary, manifest JSON, and the basis cache.
//!
//! Every output carries the config hash so artifacts from different
//! configurations cannot be mixed silently.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use taumhd::basis::BasisMode;
use taumhd::forcing::ForcingHarmonic;
use taumhd::{
    BoundaryData, CheckRecord, DomainSpec, EstimateReport, ForcingSpec, Grid, Harmonic,
    PeriodicOrbit, StokesBasis, WallData,
};

/// Wall-data file: per wall and per field, harmonic lists plus τ.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryFile {
    pub tau: f64,
    #[serde(default)]
    pub velocity: WallsSection,
    #[serde(default)]
    pub magnetic: WallsSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallsSection {
    #[serde(default)]
    pub lower: WallSpec,
    #[serde(default)]
    pub upper: WallSpec,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    #[serde(default)]
    pub tangential: Vec<Harmonic>,
    #[serde(default)]
    pub normal: Vec<Harmonic>,
}

impl WallsSection {
    fn to_boundary(&self, tau: f64) -> Result<BoundaryData> {
        Ok(BoundaryData::new(
            tau,
            WallData {
                tangential: self.lower.tangential.clone(),
                normal: self.lower.normal.clone(),
            },
            WallData {
                tangential: self.upper.tangential.clone(),
                normal: self.upper.normal.clone(),
            },
        )?)
    }

    pub fn is_empty(&self) -> bool {
        self.lower.tangential.is_empty()
            && self.lower.normal.is_empty()
            && self.upper.tangential.is_empty()
            && self.upper.normal.is_empty()
    }
}

/// Load wall data for both fields; `expected_tau` comes from the run config.
pub fn load_boundary(
    path: Option<&Path>,
    expected_tau: f64,
) -> Result<(BoundaryData, BoundaryData, BoundaryFile)> {
    let file = match path {
        None => BoundaryFile { tau: expected_tau, ..Default::default() },
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading wall data {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing wall data {}", p.display()))?
        }
    };
    if (file.tau - expected_tau).abs() > 1e-12 * expected_tau {
        bail!("wall-data τ = {} does not match the configured τ = {}", file.tau, expected_tau);
    }
    let beta1 = file.velocity.to_boundary(expected_tau)?;
    let beta2 = file.magnetic.to_boundary(expected_tau)?;
    Ok((beta1, beta2, file))
}

/// Forcing file: harmonic list plus τ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingFile {
    pub tau: f64,
    #[serde(default, rename = "harmonic")]
    pub harmonics: Vec<ForcingHarmonic>,
}

pub fn load_forcing(
    path: Option<&Path>,
    expected_tau: f64,
    grid: &Grid,
    n_t: usize,
) -> Result<ForcingSpec> {
    match path {
        None => Ok(ForcingSpec::zero(expected_tau)),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading forcing {}", p.display()))?;
            let file: ForcingFile =
                toml::from_str(&text).with_context(|| format!("parsing forcing {}", p.display()))?;
            if (file.tau - expected_tau).abs() > 1e-12 * expected_tau {
                bail!("forcing τ = {} does not match the configured τ = {}", file.tau, expected_tau);
            }
            Ok(ForcingSpec::new(expected_tau, file.harmonics, grid, n_t.max(16))?)
        }
    }
}

/// Orbit CSV: a hash comment, a header, then t, c_1..c_k, d_1..d_k rows.
/// Floats use the shortest round-trip representation, so identical runs
/// produce identical bytes and parsing is exact.
pub fn write_orbit_csv(path: &Path, orbit: &PeriodicOrbit, config_hash: &str) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# config_hash={config_hash}\n"));
    out.push('t');
    for j in 1..=orbit.k {
        out.push_str(&format!(",c_{j}"));
    }
    for j in 1..=orbit.k {
        out.push_str(&format!(",d_{j}"));
    }
    out.push('\n');
    for (i, t) in orbit.times.iter().enumerate() {
        out.push_str(&format!("{t}"));
        for v in &orbit.states[i] {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Parse an orbit CSV back; returns (orbit, config_hash).
pub fn read_orbit_csv(path: &Path) -> Result<(PeriodicOrbit, String)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let hash_line = lines.next().context("empty orbit file")?;
    let config_hash = hash_line
        .strip_prefix("# config_hash=")
        .context("orbit file lacks the config-hash comment")?
        .to_string();
    let header = lines.next().context("orbit file lacks a header")?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.is_empty() || cols[0] != "t" || (cols.len() - 1) % 2 != 0 {
        bail!("malformed orbit header");
    }
    let k = (cols.len() - 1) / 2;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let t: f64 = parts.next().context("missing t")?.parse()?;
        let state: Vec<f64> =
            parts.map(|p| p.parse::<f64>()).collect::<std::result::Result<_, _>>()?;
        if state.len() != 2 * k {
            bail!("row width {} does not match header k = {k}", state.len());
        }
        times.push(t);
        states.push(state);
    }
    if times.len() < 2 {
        bail!("orbit file has fewer than two samples");
    }
    let orbit = PeriodicOrbit {
        times,
        states,
        k,
        periodicity_residual: f64::NAN, // recomputed by the caller against its system
        strategy: "loaded",
        iterations: 0,
        iteration_log: vec![],
    };
    Ok((orbit, config_hash))
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Certificate CSV: one row per check.
pub fn write_certificate_csv(
    path: &Path,
    report: &EstimateReport,
    config_hash: &str,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# config_hash={config_hash}\n"));
    out.push_str("name,anchor,lhs,rhs,margin,pass,detail\n");
    for c in &report.checks {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_quote(&c.name),
            c.anchor,
            c.lhs,
            c.rhs,
            c.margin,
            c.pass,
            csv_quote(&c.detail)
        ));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Human-readable certificate summary.
pub fn certificate_summary(report: &EstimateReport, config_hash: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("certificate summary (config {config_hash})\n"));
    for note in &report.header_notes {
        out.push_str(&format!("note: {note}\n"));
    }
    out.push('\n');
    for c in &report.checks {
        out.push_str(&format!(
            "[{}] {:<42} lhs = {:<13.6e} rhs = {:<13.6e} margin = {:+.6e}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.lhs,
            c.rhs,
            c.margin,
        ));
        if !c.detail.is_empty() {
            out.push_str(&format!("       {}\n", c.detail));
        }
    }
    let k = &report.constants;
    out.push_str("\nempirical constants\n");
    for (name, v) in [
        ("M", k.m_sup),
        ("M0", k.m0),
        ("M1", k.m1),
        ("d0", k.d0),
        ("d1", k.d1),
        ("d2", k.d2),
        ("d3", k.d3),
        ("d4", k.d4),
        ("d5", k.d5),
        ("d6", k.d6),
        ("z", k.z),
        ("E", k.e_bound),
        ("P1", k.p1),
        ("P2", k.p2),
        ("C_hat", k.c_hat),
        ("C1_bilinear", k.gm_c1),
        ("L1B", k.l1b),
        ("L2B", k.l2b),
        ("lambda_min", k.lambda_min),
        ("gamma", k.gamma),
    ] {
        out.push_str(&format!("  {name:<12} = {v:.6e}\n"));
    }
    out
}

pub fn all_checks_pass(checks: &[CheckRecord]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Basis cache: eigenpairs keyed by the domain hash.
#[derive(Debug, Serialize, Deserialize)]
pub struct BasisCache {
    pub domain_hash: u64,
    pub k: usize,
    pub modes: Vec<BasisMode>,
}

pub fn basis_cache_path(dir: &Path, domain: &DomainSpec, k: usize) -> std::path::PathBuf {
    dir.join(format!("basis-{:016x}-k{k}.json", domain.content_hash()))
}

pub fn save_basis_cache(dir: &Path, basis: &StokesBasis) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = basis_cache_path(dir, &basis.domain, basis.k());
    let cache = BasisCache {
        domain_hash: basis.domain.content_hash(),
        k: basis.k(),
        modes: basis.modes.clone(),
    };
    std::fs::write(&path, serde_json::to_string(&cache)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Load a cached basis when the domain hash matches; eigenfields are
/// re-sampled from the stored profiles.
pub fn load_basis_cache(
    dir: &Path,
    domain: &DomainSpec,
    k: usize,
) -> Result<Option<StokesBasis>> {
    let path = basis_cache_path(dir, domain, k);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    let cache: BasisCache = serde_json::from_str(&text)
        .with_context(|| format!("parsing basis cache {}", path.display()))?;
    if cache.domain_hash != domain.content_hash() || cache.k != k {
        return Ok(None);
    }
    Ok(Some(taumhd::basis::StokesBasis::from_modes(domain.clone(), cache.modes)))
}
