//! Stationary classical and quantum processes at desk scale.
//!
//! The crate builds processes from a handful of recipes and measures them:
//!
//! - [`classical`]: Markov extensions of overlapping joint laws, Markov chains
//!   from a stochastic matrix, entropy rates and strong sub-additivity.
//! - [`hmm`]: hidden Markov processes obtained from stochastic extensions of a
//!   transition matrix, exact word enumeration and the Blackwell filter.
//! - [`channels`]: linear maps between matrix algebras in Choi form, group
//!   covariance, and Davies maps.
//! - [`fcs`]: finitely correlated states generated by a compatible pair of
//!   unital CP maps, the SU(2)-covariant qubit families and the optimisation
//!   of nearest-neighbour singlet weight.
//! - [`fermion`]: free-fermionic processes, block Toeplitz correlation
//!   operators, Szegő limits and entropy rates.
//!
//! All entropies are in nats.

pub mod classical;
pub mod channels;
pub mod error;
pub mod fcs;
pub mod fermion;
pub mod hmm;
pub mod json;
pub mod linalg;
pub mod optimize;
pub mod random;

pub use error::{Error, Result};
pub use linalg::{CMatrix, DensityMatrix, HermitianMatrix, ProbVector, C64};
