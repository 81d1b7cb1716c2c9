//! Exact graded algebra on polynomial data over R^d together with the
//! graph-weight machinery of the chain formality morphism.

pub mod checks;
pub mod error;
pub mod formality;
pub mod graph;
pub mod hochschild;
pub mod lie;
pub mod linfty;
pub mod operators;
pub mod polyvector;
pub mod random;
pub mod span;
pub mod symbolic;
pub mod weights;

pub use error::{Error, Result};
pub use symbolic::{FormalSeries, Poly, Rational};
