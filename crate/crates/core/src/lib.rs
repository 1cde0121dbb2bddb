pub mod bessel;
pub mod cells;
pub mod error;
pub mod functional;
pub mod mountainpass;
pub mod neutral;
pub mod nonlocal;
pub mod params;
pub mod radial;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
pub use params::PhysicalParams;
pub use radial::{RadialField, RadialGrid};
