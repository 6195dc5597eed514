pub mod emission;
pub mod error;
pub mod qnm;
pub mod specfun;

pub use error::{Error, Result};
