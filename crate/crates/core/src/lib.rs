//! Structural analysis, instance generation and verification tools for
//! mixed-integer linear programs in MPS format.

pub mod mps;
pub mod numfmt;
pub mod classify;
pub mod mining;
pub mod oracle;
pub mod schema;
pub mod metrics;
pub mod generators;
pub mod inspector;
pub mod error;

pub use error::Error;
