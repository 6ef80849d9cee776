//! Exact uniform sampling of contingency tables with fixed marginals, and
//! of loopless multigraphs with a fixed degree sequence.

pub mod brute;
pub mod driver;
pub mod error;
pub mod exactprob;
pub mod marginals;
pub mod gen;
pub mod multigraph;
pub mod multigraphgen;
pub mod oracle;
pub mod params;
pub mod simplegen;

pub use error::{Error, Result};
pub use exactprob::{BitSource, Rational};
pub use marginals::{Marginals, MomentTable};
