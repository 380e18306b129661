//! Jordan-Stinespring factorizations over finite-dimensional C*-algebras.
//!
//! The crate works with direct sums of full complex matrix blocks. On top of
//! that it builds: bilinear forms and Hilbert-space-valued maps with
//! certified norm estimates, Jordan representation tables (star
//! representations plus star anti-representations), GNS data for states,
//! Grothendieck-type witness states with an adversarial search, and the
//! constructive factorizations that turn a witness into an explicit
//! Jordan-Stinespring representation with a norm bound.
//!
//! Everything is deterministic given a seed: restarts, witness searches and
//! random instance scans all derive their randomness from explicit
//! `ChaCha8` streams.

pub mod algebra;
pub mod error;
pub mod forms;
pub mod gns;
pub mod grothendieck;
pub mod jsrep;
pub mod positive;
pub mod matrix;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
