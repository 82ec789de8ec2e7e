//! Safety proofs for hybrid programs by forward invariant cuts.
//!
//! The crate is organised bottom-up: [`hp`] holds the language, [`icp`] the
//! interval decision procedure, [`sim`] numerical execution, [`certsynth`]
//! certificate construction and [`proof`] the calculus and tactic engine.

pub mod certsynth;
pub mod hp;
pub mod icp;
pub mod linalg;
pub mod poly;
pub mod proof;
pub mod sim;
