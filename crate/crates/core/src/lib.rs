//! Curvelet tight frames on periodic grids, wave propagators acting on them, and
//! tools for measuring how sparse those propagators are in curvelet coordinates.

pub mod distance;
pub mod error;
pub mod fft;
pub mod field;
pub mod flow;
pub mod frame;
pub mod molecule;
pub mod propagators;
pub mod sparsity;
pub mod windows;

pub use distance::{d, omega, PhasePoint};
pub use error::{Error, Result};
pub use fft::Fft2;
pub use field::{read_fields, write_fields, Field2D, VectorField};
pub use flow::{Branch, FlowState, FlowedIndex, VelocityModel};
pub use frame::{build_frame, CoeffSet, CurveletIndex, FrameParams, FrameTable, Wedge};
pub use windows::{build_windows, ScaleKind, Tiling, WindowFamily};
pub use molecule::{molecule_profile, molecule_profile_at, MoleculeReport};
pub use sparsity::{
    build_matrix, curvelet_column, decay_report, truncation_error, DecayReport, OperatorSpec, SparseOperatorMatrix,
};
