pub mod classic;
pub mod dgp;
pub mod enrich;
pub mod error;
pub mod linalg;
pub mod lrv;
pub mod mc;
pub mod prep;
pub mod rng;
pub mod select;
pub mod stats;
pub mod wlasso;
pub mod zeromean;

pub use error::{Error, Result};
