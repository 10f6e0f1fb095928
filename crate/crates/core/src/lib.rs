//! Finite-field list-recovery laboratory.
//!
//! Exact arithmetic over small finite fields, worst-case sumset mixing with
//! rational certificates, list-recovery balls (counting, membership, mixing),
//! c-increasing chain search, random linear codes with fast intersection
//! counters, and seeded Monte Carlo experiments that measure output list
//! sizes of codes sampled near capacity.

pub mod balls;
pub mod chains;
pub mod codes;
pub mod experiments;
pub mod gf;
pub mod info;
pub mod mixing;

pub use gf::{FieldElement, FieldMatrix, FieldSpec, FieldVector};
pub use mixing::SubsetOfField;
