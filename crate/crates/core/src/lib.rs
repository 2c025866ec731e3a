//! Spectral-Galerkin machinery for time-periodic incompressible MHD in an
//! x-periodic channel with inhomogeneous, time-periodic wall data.
//!
//! The crate builds a Stokes eigenbasis on the solenoidal no-slip subspace,
//! lifts wall data into solenoidal periodic extension fields with a small
//! convection constant, assembles the Galerkin ODE system for the shifted
//! unknowns, finds the periodic orbit by contraction marching, Newton on the
//! Poincaré map, or Picard iteration on the linearized problem, and verifies
//! the a priori energy estimates on the computed orbit.

pub mod basis;
pub mod boundary;
pub mod domain;
pub mod error;
pub mod extension;
pub mod field;
pub mod forcing;
pub mod galerkin;
pub mod solver;
pub mod verify;
pub mod legendre;
pub mod timefreq;

pub use basis::{build_basis, BasisMode, Phase, StokesBasis};
pub use boundary::{check_outflow, BoundaryData, Harmonic, OutflowCertificate, WallData};
pub use domain::{DomainSpec, Grid, GridField, Tolerances};
pub use error::{Error, Result};
pub use extension::{
    build_extension, build_extension_with, extension_norm_table, ExtensionField, NormTable,
};
pub use field::{frac_norm, frac_power_apply, leray_project, norms, NormReport, SpectralField};
pub use forcing::ForcingSpec;
pub use galerkin::{assemble, assemble_with, AssemblyOptions, GalerkinSystem, NonlinearPath};
pub use solver::{
    contraction_probe, integrate, linear_periodic_response, poincare_map, solve_periodic,
    DecayReport, IntegratorConfig, PeriodicOrbit, SolveStrategy, State, TimeScheme, Trajectory,
};
pub use verify::{
    coefficient_series, contraction_check, energy_inequality_check, giga_miyakawa_probe,
    gm_ratio, higher_order_report, lift_convection_check, mean_value_time, run_estimate_suite,
    smallness_certificate, uniqueness_gap_check, CheckRecord, ConstantsTable, EstimateReport,
    GmProbe, HigherOrderQuantities, SuiteInput, ANCHORS,
};
