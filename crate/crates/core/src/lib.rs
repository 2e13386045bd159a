//! Phase-type distributions and their inhomogeneous and multivariate
//! extensions.
//!
//! * [`ph`]: homogeneous phase-type laws `PH(π, T)`.
//! * [`iph`]: inhomogeneous phase-type laws `g(Y)` with `Y ~ PH(π, T)` for the
//!   matrix-Pareto, matrix-Weibull, matrix-Gompertz and matrix-GEV families.
//! * [`mph`]: MPH* laws built from a reward matrix, the bivariate block
//!   sub-class with an explicit density, and their transformed versions.
//! * [`em`]: EM fitting of all of the above from exact and censored data.
//! * [`dependence`]: empirical Kendall's tau and upper tail dependence.
//!
//! All matrix exponentials go through [`linalg::expm`], which uses
//! uniformization with scaling and squaring.

// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod dependence;
pub mod em;
pub mod error;
pub mod iph;
pub mod linalg;
pub mod mph;
pub mod ph;
pub mod rng;

pub use error::{Error, Result};
pub use iph::{Family, IphModel, Transform};
pub use linalg::{Matrix, SubIntensity};
pub use mph::{BivariateBlockModel, InhomBase, InhomMph, MphModel};
pub use ph::{PhModel, Trajectory};
