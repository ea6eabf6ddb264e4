//! Exact finite-volume lattice fermions on Fock space.
//!
//! The crate represents the CAR algebra of a finite site set as dense complex
//! matrices in the Jordan-Wigner picture and builds four families of numerical
//! certificates on top of it:
//!
//! * [`lieb_robinson`]: measured (anti)commutator norms of Heisenberg-evolved
//!   observables against the explicit Lieb-Robinson right-hand side;
//! * [`cond_exp`]: Krauss-form conditional expectations onto local subalgebras
//!   and the local-approximation estimate;
//! * [`gap`]: frustration-freeness, kernel projections, martingale-method gap
//!   lower bounds and gap-protected spectral-projection transport;
//! * [`models`]: the hopping chain, a frustration-free Kitaev-type chain and
//!   flat-band two-band models that exercise everything above.
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration and report
//! formats live in the companion `fermicert` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod cond_exp;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod gap;
pub mod geometry;
pub mod lieb_robinson;
pub mod linalg;
pub mod models;
pub mod random;

pub use error::{Error, Result};
pub use fock::{FermionPoly, FockOperator, Gen, MonoSymbol, MonomialLabel, Parity, Region, Site, SiteSet, Word};
pub use linalg::{CMatrix, C64};
