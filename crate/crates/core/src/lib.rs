pub mod classify;
pub mod error;
pub mod estimate;
pub mod jet;
pub mod kernels;
pub mod mixing;
pub mod polysys;
pub mod quad;
pub mod rates;
pub mod reduce;
pub mod special;
pub mod transport;
pub mod witness;

pub use error::{Error, Result};
