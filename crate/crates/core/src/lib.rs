//! Numerical evaluation of Riesz-type potentials, weighted potential
//! operators, nonlinear fractional derivatives and rough maximal
//! truncations, with checks of the pointwise inequalities relating them.

pub mod error;
pub mod functions;
pub mod geom;
pub mod norms;
pub mod operators;
pub mod quadrature;
pub mod sampling;
pub mod special;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use functions::{AxisBox, Cube, Extent, Family, Field, TestFunction};
pub use norms::{DistributionFunction, ScaleInvariance};
pub use operators::{SphereSymbol, SymbolProfile, TruncationGrid};
pub use quadrature::{QuadResult, QuadratureScheme};
pub use verify::{CheckId, CheckReport, PoincareVariant, Sample, Status};
pub use weights::{BallMassTable, TabulatedWeight, Weight};
