//! Quantum Fisher information of controlled unitary dynamics.
//!
//! The crate covers exact Pauli-string algebra ([`pauli`]), time-ordered
//! propagation and the metrological generator ([`dynamics`]), optimal and
//! restricted controls ([`controls`]) and first-order Floquet engineering
//! ([`floquet`]).

pub mod controls;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod linalg;
pub mod par;
pub mod pauli;

pub use error::{Error, Result};
pub use num_complex::Complex64;
