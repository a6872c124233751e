pub mod analysis;
pub mod cases;
pub mod error;
pub mod json;
pub mod linalg;
pub mod manifold;
pub mod poly;
pub mod sim;
pub mod spectral;
pub mod stability;
pub mod sysdsl;

pub use nalgebra;

pub use analysis::{analyze, AnalysisOptions, AnalysisReport, BasisSource, Status};
pub use error::{Error, ParseError, Result};
pub use poly::{Monomial, Parity, PolyMap, Polynomial};
pub use spectral::{
    eigen_split, linear_part, split_with_basis, to_eigenbasis, Eigenvalue, LinearPart,
    SpectralSplit, SubspaceKind, TransformedSystem,
};
pub use sysdsl::{parse_system, shift_equilibrium, SystemSpec};
pub use manifold::{
    invariance_residual, parity_check, reduce, solve_centre_manifold, CentreManifoldMap, ParityReport,
    ReducedSystem,
};
pub use stability::{
    angular_dynamics, classify_1d, classify_2d, radial_dynamics, radial_fixed_points, ray_dynamics,
    FixedPointClass, RadialAnalysis, StabilityVerdict, VerdictKind,
};
pub use sim::{amplitude_series, angle_series, integrate, manifold_residual, Trajectory};
