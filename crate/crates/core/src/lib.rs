pub mod ass;
pub mod atomic;
pub mod bits;
pub mod circuit;
pub mod convert;
pub mod correlated;
pub mod drbg;
pub mod error;
pub mod gc;
pub mod gmw;
pub mod manifest;
pub mod ml;
pub mod ot;
pub mod pools;
pub mod ring;
pub mod session;
pub mod stp;
pub mod transport;

pub use error::{Error, Result};
pub use ring::{FixedPoint, RingElem, RingParams};
