pub mod bounds;
pub mod coherence;
pub mod cur;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod recovery;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
