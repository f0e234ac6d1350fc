//! Scalars, truncated series, summation and contour-integral utilities.

pub mod cauchy;
pub mod dd;
pub mod newton;
pub mod scalar;
pub mod series;
pub mod summation;

pub use dd::DoubleDouble;
pub use scalar::{ComplexDD, ComplexScalar, Precision, C64};
pub use series::TruncatedSeries;
