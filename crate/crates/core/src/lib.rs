//! The exponentiated extended Weibull–power series family of lifetime
//! distributions: evaluation, derived properties, maximum-likelihood
//! fitting (direct and EM) and goodness-of-fit statistics.

pub mod data;
pub mod error;
pub mod generators;
pub mod gof;
pub mod inference;
pub mod model;
pub mod optim;
pub mod powerseries;
pub mod properties;
pub mod quad;
pub mod reproduce;
pub mod roots;

pub use error::{Error, Result};
pub use generators::{Generator, GeneratorKind};
pub use model::{EewDistribution, EewpsModel, Family, SpecialCase};
pub use powerseries::PowerSeries;
