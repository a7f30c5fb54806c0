//! Numerical laboratory for the singularly perturbed Tartar square.
//!
//! Phase fields on periodic grids, exact Fourier-multiplier energies,
//! the infinite-order laminate construction, scaling sweeps, and the
//! frequency-cone bootstrap used in the lower bound.

pub mod cones;
pub mod energy;
pub mod error;
pub mod fft;
pub mod io;
pub mod field;
pub mod laminate;
pub mod oracle;
pub mod scaling;
pub mod square;
pub mod sum;

pub use energy::{
    elastic_energy, elastic_energy_direct, h_minus1_seminorms, minimize_displacement,
    surface_energy, total_energy, EnergyBreakdown, GradientScheme,
};
pub use error::{Error, Result};
pub use field::{DisplacementField, Grid, PhaseField, ScalarField, SpectralField};
pub use square::{
    aux_matrix, chi_diag, dist_to_k, in_qc_hull, phase_matrix, project_to_k, CouplingPolys,
    DiagMatrix, HullRegion, Phase,
};
