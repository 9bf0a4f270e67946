//! Simulator and analysis toolkit for the Rydberg slow-light
//! storage–Ramsey–retrieval protocol.
//!
//! A probe pulse is stored as a ground–Rydberg coherence under EIT, a π/2
//! microwave pulse splits the Rydberg population into two levels, the
//! resonance dipole-dipole exchange acts during storage, a second π/2 pulse
//! closes the Ramsey sequence, and the retrieved light inherits two-photon
//! correlations set by the interaction and the storage time.
//!
//! The crate computes the photon correlations of the retrieved light two
//! independent ways: exact quantum evolution of small ensembles
//! ([`oracle`]) and the analytic pair treatment valid for dilute Rydberg
//! gases ([`pair`], [`light`]), plus the polariton-loss modification of the
//! pair amplitude ([`loss`]) and the regime diagnostics that guard every
//! run ([`validity`]).

pub mod ensemble;
pub mod error;
pub mod light;
pub mod loss;
pub mod oracle;
pub mod pair;
pub mod quad;
pub mod series;
pub mod units;
pub mod validity;

pub use error::{Error, Result};
