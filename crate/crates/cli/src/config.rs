//! Run configuration: one TOML file plus `key=value` overrides, hashed for
//! reproducibility.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use taumhd::{DomainSpec, IntegratorConfig, SolveStrategy, TimeScheme};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub length_x: f64,
    pub wall_gap: f64,
    pub n_x: usize,
    pub n_y: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    /// march | newton | picard
    pub strategy: String,
    pub tol_fp: f64,
    pub max_iterations: usize,
    pub n_steps: usize,
    /// etdrk4 | etd2
    pub scheme: String,
    /// Collocation samples per period for time-dependent couplings.
    pub n_t: usize,
    /// Forward-difference step of the Newton Jacobian.
    pub fd_eps: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            strategy: "march".into(),
            tol_fp: 1e-9,
            max_iterations: 200,
            n_steps: 1024,
            scheme: "etdrk4".into(),
            n_t: 64,
            fd_eps: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub gm_trials: usize,
    pub contraction_probe: bool,
    pub probe_periods: usize,
    pub probe_perturbation: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            gm_trials: 100,
            contraction_probe: true,
            probe_periods: 10,
            probe_perturbation: 1e-6,
        }
    }
}

/// Full run configuration (units: the channel is length_x × wall_gap, the
/// period is tau; alpha, nu, chi are the independent positive coefficients
/// of the momentum/induction system).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Retained Stokes modes.
    pub k: usize,
    pub tau: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "one")]
    pub chi: f64,
    /// Fractional power used by the estimate checks (n/4 − 1/2 = 0 in 2D).
    #[serde(default)]
    pub gamma: f64,
    /// Convection-smallness target of the wall lifts.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Disable the quadratic terms (forced Stokes/heat case).
    #[serde(default)]
    pub linear: bool,
    /// Wall-data file; omitted = homogeneous walls.
    #[serde(default)]
    pub boundary_file: Option<PathBuf>,
    /// Forcing file; omitted = no forcing.
    #[serde(default)]
    pub forcing_file: Option<PathBuf>,
    /// Basis cache directory; omitted = <out_dir>/../basis-cache.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    pub domain: DomainSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub verify: VerifySection,
}

fn one() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    0.1
}

impl RunConfig {
    /// Load a config file and apply `key=value` overrides (dotted paths).
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut value: toml::Value =
            text.parse().with_context(|| format!("parsing config {}", path.display()))?;
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        let mut config: RunConfig =
            value.try_into().context("config does not match the expected schema")?;
        // resolve data files relative to the config location
        if let Some(dir) = path.parent() {
            for f in [&mut config.boundary_file, &mut config.forcing_file] {
                if let Some(p) = f {
                    if p.is_relative() {
                        *f = Some(dir.join(&p));
                    }
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau", self.tau),
            ("alpha", self.alpha),
            ("nu", self.nu),
            ("chi", self.chi),
            ("epsilon", self.epsilon),
        ] {
            if !(v > 0.0) {
                bail!("{name} must be positive, got {v}");
            }
        }
        if self.gamma < 0.0 {
            bail!("gamma must be nonnegative");
        }
        if self.solver.n_steps == 0 {
            bail!("solver.n_steps must be positive");
        }
        for f in [&self.boundary_file, &self.forcing_file].into_iter().flatten() {
            if !f.exists() {
                bail!("data file {} does not exist", f.display());
            }
        }
        DomainSpec::new(
            self.domain.length_x,
            self.domain.wall_gap,
            self.domain.n_x,
            self.domain.n_y,
        )?;
        self.strategy()?;
        self.scheme()?;
        Ok(())
    }

    pub fn domain_spec(&self) -> DomainSpec {
        DomainSpec::new(
            self.domain.length_x,
            self.domain.wall_gap,
            self.domain.n_x,
            self.domain.n_y,
        )
        .expect("validated")
    }

    pub fn strategy(&self) -> Result<SolveStrategy> {
        Ok(match self.solver.strategy.as_str() {
            "march" => SolveStrategy::March {
                tol_fp: self.solver.tol_fp,
                max_periods: self.solver.max_iterations,
            },
            "newton" => SolveStrategy::NewtonPoincare {
                tol_fp: self.solver.tol_fp,
                max_iters: self.solver.max_iterations,
                fd_eps: self.solver.fd_eps,
            },
            "picard" => SolveStrategy::PicardPhi {
                tol_fp: self.solver.tol_fp,
                max_iters: self.solver.max_iterations,
            },
            other => bail!("unknown strategy {other:?} (march | newton | picard)"),
        })
    }

    pub fn scheme(&self) -> Result<TimeScheme> {
        Ok(match self.solver.scheme.as_str() {
            "etdrk4" => TimeScheme::Etdrk4,
            "etd2" => TimeScheme::Etd2,
            other => bail!("unknown scheme {other:?} (etdrk4 | etd2)"),
        })
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        Ok(IntegratorConfig {
            n_steps: self.solver.n_steps,
            scheme: self.scheme()?,
            ..Default::default()
        })
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| {
            self.out_dir.parent().unwrap_or(Path::new(".")).join("basis-cache")
        })
    }

    /// Content hash covering every field (hex, first 16 bytes of SHA-256).
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Apply one `a.b.c=value` override to a parsed TOML tree.
fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .with_context(|| format!("override {spec:?} is not of the form key=value"))?;
    let parsed: toml::Value = if let Ok(b) = raw.parse::<bool>() {
        toml::Value::Boolean(b)
    } else if let Ok(i) = raw.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = raw.parse::<f64>() {
        toml::Value::Float(f)
    } else {
        toml::Value::String(raw.to_string())
    };
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .with_context(|| format!("override path {path:?} crosses a non-table"))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    unreachable!()
}
