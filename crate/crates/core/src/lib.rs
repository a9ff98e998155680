//! Numerics for the su(1|1) long-range spin chain with elliptic, XX and
//! Haldane–Shastry interactions.

pub mod density;
pub mod ed_oracle;
pub mod entanglement;
pub mod error;
pub mod fit;
pub mod model;
pub mod quadrature;
pub mod special_fns;
pub mod thermo;

pub use error::{Error, Result};
