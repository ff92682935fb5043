//! Filter-and-verify engines for error-tolerant string and set processing.

pub mod faerie;
pub mod oracle;
pub mod passjoin;
pub mod pivotal;
pub mod setjoin;
pub mod similarity;
pub mod tokenize;

pub use similarity::{SimFn, SimValue, SimilaritySpec};
