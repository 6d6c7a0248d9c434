pub mod arithmetic;
pub mod cli;
pub mod cocycle;
pub mod error;
pub mod linalg2;
pub mod renorm;
pub mod rotnum;
pub mod spectral;

pub use error::{Error, Result};
